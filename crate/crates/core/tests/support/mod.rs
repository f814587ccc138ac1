//! Checks shared by the property tests and the acceptance runner. Each check
//! returns `Ok(summary)` or `Err(reason)` so callers can either assert or report.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vfie::discrete::{DiscreteSystem, StateVector};
use vfie::expr::{BinOp, Expr, Func, Var};
use vfie::problem::{example_4_1, from_expressions, ExpressionSources};
use vfie::quadrature::{build_grid, build_scheme, Rule, VolterraConvention};

pub type Check = Result<String, String>;

pub const SEED: u64 = 20_190_417;

pub const EX41_SOURCES: ExpressionSources<'static> = ExpressionSources {
    k1: "5*t*s*cos(x)",
    k2: "(11/2)*t^2*s^2*x",
    g: "11/8*t^2 - 4*t + 5*t*cos(t) + 5*t^2*sin(t)",
    exact: Some("t"),
};

pub fn ex41(cells: usize, convention: VolterraConvention) -> DiscreteSystem {
    DiscreteSystem::build(example_4_1(), Rule::Midpoint, cells, convention).expect("example system")
}

pub fn random_state(rng: &mut ChaCha8Rng, dim: usize, half_width: f64) -> StateVector {
    (0..dim)
        .map(|_| rng.gen_range(-half_width..=half_width))
        .collect()
}

fn deterministic_runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

// ---------------------------------------------------------------- expressions

fn arb_const() -> impl Strategy<Value = f64> {
    prop_oneof![
        -10.0..10.0f64,
        (0i32..20).prop_map(f64::from),
        prop::num::f64::NORMAL,
        Just(0.0),
        Just(1e-7),
    ]
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_const().prop_map(Expr::Const),
        prop_oneof![Just(Var::T), Just(Var::S), Just(Var::X)].prop_map(Expr::Var),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        let func = prop::sample::select(Func::ALL.to_vec());
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::Binary(
                op,
                Box::new(l),
                Box::new(r)
            )),
            (func, inner).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = (f64, f64, f64)> {
    (-2.0..2.0f64, -2.0..2.0f64, -5.0..5.0f64)
}

/// Printing then re-parsing preserves evaluation bit for bit (or the error).
pub fn expression_round_trip(cases: u32) -> Check {
    let mut runner = deterministic_runner(cases);
    let strategy = (arb_expr(), prop::collection::vec(arb_point(), 10));
    runner
        .run(&strategy, |(expr, points)| {
            let printed = expr.to_string();
            let reparsed: Expr = printed
                .parse()
                .map_err(|e| TestCaseError::fail(format!("{printed:?} does not parse: {e}")))?;
            for (t, s, x) in points {
                match (expr.eval(t, s, x), reparsed.eval(t, s, x)) {
                    (Ok(a), Ok(b)) if a.to_bits() == b.to_bits() => {}
                    (Err(_), Err(_)) => {}
                    (a, b) => {
                        return Err(TestCaseError::fail(format!(
                            "{printed} at ({t}, {s}, {x}): {a:?} vs {b:?}"
                        )))
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{cases} generated expressions"))
}

/// Evaluation never yields a non-finite value.
pub fn expression_totality(cases: u32) -> Check {
    let mut runner = deterministic_runner(cases);
    runner
        .run(&(arb_expr(), arb_point()), |(expr, (t, s, x))| {
            if let Ok(v) = expr.eval(t, s, x) {
                prop_assert!(v.is_finite(), "{expr} gave {v}");
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{cases} generated expressions"))
}

type Reference = fn(f64, f64, f64) -> f64;

pub const CORPUS: [(&str, Reference); 20] = [
    ("5*t*s*cos(x)", |t, s, x| 5.0 * t * s * x.cos()),
    ("(11/2)*t^2*s^2*x", |t, s, x| 5.5 * t * t * s * s * x),
    ("11/8*t^2 - 4*t + 5*t*cos(t) + 5*t^2*sin(t)", |t, _, _| {
        1.375 * t * t - 4.0 * t + 5.0 * t * t.cos() + 5.0 * t * t * t.sin()
    }),
    ("exp(-t*s)*x", |t, s, x| (-(t * s)).exp() * x),
    ("sin(x)^2 + cos(x)^2", |_, _, x| {
        x.sin() * x.sin() + x.cos() * x.cos()
    }),
    ("sqrt(1 + x^2)", |_, _, x| (1.0 + x * x).sqrt()),
    ("ln(2 + sin(t*s*x))", |t, s, x| {
        (2.0 + (t * s * x).sin()).ln()
    }),
    ("abs(x - t) * s", |t, s, x| (x - t).abs() * s),
    ("t^3 - 2*t^2 + t - 1", |t, _, _| {
        t * t * t - 2.0 * t * t + t - 1.0
    }),
    ("-x^2", |_, _, x| -(x * x)),
    ("2^-t", |t, _, _| (-t).exp2()),
    ("x / (1 + t^2 + s^2)", |t, s, x| x / (1.0 + t * t + s * s)),
    ("tan(0.5*x*t)", |t, _, x| (0.5 * x * t).tan()),
    ("exp(sin(t)) - 1e-3*x", |t, _, x| t.sin().exp() - 0.001 * x),
    ("(t - s)^2 * exp(-x^2)", |t, s, x| {
        (t - s) * (t - s) * (-(x * x)).exp()
    }),
    ("2^3^t", |t, _, _| 2f64.powf(3f64.powf(t))),
    ("1/(1 + exp(-x))", |_, _, x| 1.0 / (1.0 + (-x).exp())),
    ("sqrt(abs(x)) * cos(3.5*s)", |_, s, x| {
        x.abs().sqrt() * (3.5 * s).cos()
    }),
    ("t*s*x - t/(s + 1)", |t, s, x| t * s * x - t / (s + 1.0)),
    ("ln(exp(x)) + 2.5e-1*t", |t, _, x| x.exp().ln() + 0.25 * t),
];

/// Parsed corpus against hand-written closures, relative error `1e-12`.
pub fn expression_corpus(points: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for (src, reference) in CORPUS {
        let expr: Expr = src.parse().map_err(|e| format!("{src}: {e}"))?;
        for _ in 0..points {
            let t = rng.gen_range(0.0..=1.0);
            let s = rng.gen_range(0.0..=1.0);
            let x = rng.gen_range(-2.0..=2.0);
            let got = expr.eval(t, s, x).map_err(|e| format!("{src}: {e}"))?;
            let want = reference(t, s, x);
            let rel = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
            let rel = if got == want { 0.0 } else { rel };
            worst = worst.max(rel);
            if rel > 1e-12 {
                return Err(format!("{src} at ({t}, {s}, {x}): {got} vs {want}"));
            }
        }
    }
    Ok(format!(
        "{} expressions x {points} points, max rel err {worst:.2e}",
        CORPUS.len()
    ))
}

/// Expression-built example against the native closures at random points.
pub fn expression_problem_matches_builtin(points: usize) -> Check {
    let native = example_4_1();
    let parsed = from_expressions(0.0, 1.0, &EX41_SOURCES, native.m_const, native.l_const)
        .map_err(|e| e.to_string())?;
    let (exact_p, exact_n) = (parsed.exact.unwrap(), native.exact.unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x41);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let t = rng.gen_range(0.0..=1.0);
        let s = rng.gen_range(0.0..=1.0);
        let x = rng.gen_range(-4.0..=4.0);
        let pairs = [
            ((parsed.k1)(t, s, x), (native.k1)(t, s, x)),
            ((parsed.k2)(t, s, x), (native.k2)(t, s, x)),
            ((parsed.g)(t), (native.g)(t)),
            (exact_p(t), exact_n(t)),
        ];
        for (a, b) in pairs {
            let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
            let rel = (a - b).abs() / b.abs().max(1.0);
            worst = worst.max(rel);
            if rel > 1e-12 {
                return Err(format!("mismatch at ({t}, {s}, {x}): {a} vs {b}"));
            }
        }
    }
    Ok(format!("{points} points, max rel err {worst:.2e}"))
}

// ---------------------------------------------------------------- quadrature

/// Global weights sum to `b − a`, Volterra rows to `t_i − a`, for every rule and cell count.
pub fn weight_sums(max_cells: usize) -> Check {
    let mut cases = 0;
    for (a, b) in [(0.0, 1.0), (-1.0, 2.5)] {
        for rule in [Rule::Midpoint, Rule::Trapezoid, Rule::Simpson] {
            for n in 1..=max_cells {
                if rule == Rule::Simpson && n % 2 == 1 {
                    continue;
                }
                let grid = build_grid(a, b, n, rule).map_err(|e| e.to_string())?;
                let scheme = build_scheme(&grid, rule).map_err(|e| e.to_string())?;
                let total: f64 = scheme.global_weights.iter().sum();
                if (total - (b - a)).abs() > 1e-12 {
                    return Err(format!("{rule} n={n}: global sum {total}"));
                }
                for (i, &t) in grid.nodes.iter().enumerate() {
                    let row: f64 = scheme.volterra_row(i).iter().sum();
                    if (row - (t - a)).abs() > 1e-12 {
                        return Err(format!("{rule} n={n} row {i}: {row} vs {}", t - a));
                    }
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} (interval, rule, cells) cases"))
}

/// Error ratios under halving `h` for `∫_0^1 e^s ds`.
pub fn quadrature_order() -> Check {
    let exact = std::f64::consts::E - 1.0;
    let mut summary = Vec::new();
    for (rule, lo, hi) in [
        (Rule::Midpoint, 3.5, 4.5),
        (Rule::Trapezoid, 3.5, 4.5),
        (Rule::Simpson, 14.0, 18.0),
    ] {
        let errors = [4usize, 8, 16, 32]
            .iter()
            .map(|&n| {
                let grid = build_grid(0.0, 1.0, n, rule).map_err(|e| e.to_string())?;
                let scheme = build_scheme(&grid, rule).map_err(|e| e.to_string())?;
                let samples: Vec<f64> = grid.nodes.iter().map(|s| s.exp()).collect();
                let q = scheme.integrate(&samples).map_err(|e| e.to_string())?;
                Ok((q - exact).abs())
            })
            .collect::<Result<Vec<f64>, String>>()?;
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            if !(lo..=hi).contains(&ratio) {
                return Err(format!("{rule}: ratio {ratio:.3} outside [{lo}, {hi}]"));
            }
        }
        summary.push(format!("{rule} {:.2}", errors[2] / errors[3]));
    }
    Ok(format!("final ratios: {}", summary.join(", ")))
}

// ---------------------------------------------------------------- discrete operators

/// Sampled Lipschitz ratio of the Fredholm part stays below `L`.
pub fn fredholm_lipschitz(sys: &DiscreteSystem, pairs: usize) -> Check {
    let l = sys.problem().l_const;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let half = vfie::problem::default_x_box(sys);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let u = random_state(&mut rng, sys.dim(), half);
        let v = random_state(&mut rng, sys.dim(), half);
        let df = sys.fred(&u).unwrap().sub(&sys.fred(&v).unwrap());
        worst = worst.max(sys.norm(&df) / sys.norm(&u.sub(&v)));
    }
    if worst <= l * (1.0 + 1e-9) {
        Ok(format!("max ratio {worst:.6} <= L = {l}"))
    } else {
        Err(format!("max ratio {worst:.6} > L = {l}"))
    }
}

/// `⟨F(u) − F(v), u − v⟩ > 0` on random distinct pairs.
pub fn fredholm_monotone(sys: &DiscreteSystem, pairs: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let half = vfie::problem::default_x_box(sys);
    let mut least = f64::INFINITY;
    for _ in 0..pairs {
        let u = random_state(&mut rng, sys.dim(), half);
        let v = random_state(&mut rng, sys.dim(), half);
        let diff = u.sub(&v);
        let df = sys.fred(&u).unwrap().sub(&sys.fred(&v).unwrap());
        let ip = sys.inner(&df, &diff).unwrap();
        least = least.min(ip / sys.inner(&diff, &diff).unwrap());
        if ip <= 0.0 {
            return Err(format!("<F(u)-F(v), u-v> = {ip:e}"));
        }
    }
    Ok(format!("min normalized inner product {least:.4e}"))
}

fn phi_power(sys: &DiscreteSystem, xi: &StateVector, m: usize) -> StateVector {
    (0..m).fold(xi.clone(), |acc, _| sys.phi(&acc).unwrap())
}

/// `‖Φ^m(u) − Φ^m(v)‖ ≤ M^m/√((m−1)!) ‖u − v‖`.
pub fn volterra_power_contraction(sys: &DiscreteSystem, m: usize, pairs: usize) -> Check {
    let m_const = sys.problem().m_const;
    let factorial: f64 = (1..m).map(|k| k as f64).product();
    let bound = m_const.powi(m as i32) / factorial.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let half = vfie::problem::default_x_box(sys);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let u = random_state(&mut rng, sys.dim(), half);
        let v = random_state(&mut rng, sys.dim(), half);
        let d = phi_power(sys, &u, m).sub(&phi_power(sys, &v, m));
        worst = worst.max(sys.norm(&d) / sys.norm(&u.sub(&v)));
    }
    if worst <= bound * (1.0 + 1e-6) {
        Ok(format!("max ratio {worst:.4e} <= {bound:.4e}"))
    } else {
        Err(format!("max ratio {worst:.4e} > {bound:.4e}"))
    }
}

/// Positivity, homogeneity, triangle and Cauchy-Schwarz for the weighted norm.
pub fn norm_axioms(sys: &DiscreteSystem, cases: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let dim = sys.dim();
    if sys.norm(&StateVector::zeros(dim)) != 0.0 {
        return Err("norm of zero is not zero".into());
    }
    for k in 0..cases {
        let u = random_state(&mut rng, dim, 10.0);
        let v = random_state(&mut rng, dim, 10.0);
        let c: f64 = rng.gen_range(-5.0..=5.0);
        let (nu, nv) = (sys.norm(&u), sys.norm(&v));
        let scaled: StateVector = u.iter().map(|x| c * x).collect();
        let ip = sys.inner(&u, &v).unwrap();
        let fail = |what: &str| Err(format!("{what} fails in case {k}"));
        if nu <= 0.0 {
            return fail("positivity");
        }
        if (sys.norm(&scaled) - c.abs() * nu).abs() > 1e-12 * nu.max(1.0) * c.abs().max(1.0) {
            return fail("homogeneity");
        }
        if sys.norm(&u.add(&v)) > (nu + nv) * (1.0 + 1e-12) {
            return fail("triangle inequality");
        }
        if ip.abs() > nu * nv * (1.0 + 1e-12) {
            return fail("Cauchy-Schwarz");
        }
        if (sys.inner(&u, &u).unwrap() - nu * nu).abs() > 1e-12 * nu * nu {
            return fail("inner/norm consistency");
        }
    }
    Ok(format!("{cases} random cases"))
}

/// The shifted system has the same residual as the original at every state.
pub fn shift_identity(sys: &DiscreteSystem, cases: usize) -> Check {
    let shifted = sys.shifted().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let half = vfie::problem::default_x_box(sys);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let xi = random_state(&mut rng, sys.dim(), half);
        let gap = (sys.residual(&xi).unwrap() - shifted.residual(&xi).unwrap()).abs();
        worst = worst.max(gap);
    }
    if worst <= 1e-14 {
        Ok(format!("max residual gap {worst:.2e}"))
    } else {
        Err(format!("max residual gap {worst:.2e} > 1e-14"))
    }
}
