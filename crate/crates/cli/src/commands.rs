use std::path::{Path, PathBuf};

use vfie::continuation::{inner_bound, ContinuationConfig};
use vfie::discrete::DiscreteSystem;
use vfie::hybrid::{derive_for_system, solve as hybrid_solve, Overrides, SolverParams};
use vfie::oracle::{newton_solve, NewtonConfig};
use vfie::problem::{builtin, check_assumptions, default_x_box, example_4_1_reference};
use vfie::quadrature::{Rule, VolterraConvention};

use crate::config::{Method, RunConfig};
use crate::csv::{significant, Table};
use crate::CliError;

/// Appends one `key=value` line to a report buffer.
macro_rules! kv {
    ($out:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        let _ = writeln!($out, $($arg)*);
    }};
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    match stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush())
    {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Write {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

/// Random pairs drawn by the assumption audit.
const AUDIT_PAIRS: usize = 1000;

const REFERENCE_CELLS: usize = 50;
const REFERENCE_STEPS: usize = 2;
const REFERENCE_N0: usize = 55;
const REFERENCE_EPS: f64 = 1e-3;

pub fn solve(
    config: &Path,
    out_path: Option<PathBuf>,
    method: Option<Method>,
) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let sys = cfg.system()?;
    let method = method.unwrap_or(cfg.solver.method);
    let digits = cfg.output.precision;
    let mut out = String::new();

    if cfg.solver.audit {
        let report = check_assumptions(&sys, AUDIT_PAIRS, default_x_box(&sys), cfg.solver.seed)?;
        kv!(out, "audit_pairs={}", report.samples);
        kv!(out, "audit_lipschitz_f={:e}", report.lipschitz_f_ratio_max);
        kv!(out, "audit_monotonicity_min={:e}", report.monotonicity_min);
        kv!(
            out,
            "audit_lipschitz_phi={:e}",
            report.lipschitz_phi_ratio_max
        );
        if !report.passed() {
            emit(&out)?;
            return Err(CliError::Audit(report.violations()));
        }
    }

    let xi = match method {
        Method::Continuation => {
            let params = derive_for_system(&sys, cfg.solver.eps, &cfg.solver.overrides())?;
            let sol = hybrid_solve(&sys, &params)?;
            kv!(out, "method=continuation");
            print_params(&mut out, &params);
            kv!(out, "iteration_bound={:e}", sol.budget.iteration_bound);
            kv!(out, "detailed_bound={:e}", sol.budget.detailed_bound);
            kv!(out, "inner_error={:e}", sol.budget.inner_bound_value);
            kv!(out, "op_count={}", sol.budget.op_count);
            kv!(out, "op_budget={}", sol.budget.op_bound);
            kv!(out, "residual={:e}", sol.residual);
            kv!(out, "discretization={}", sol.budget.discretization_note);
            sol.xi
        }
        Method::Newton => {
            let outcome = newton_solve(&sys, &NewtonConfig::default(), sys.g_vec())?;
            kv!(out, "method=newton");
            kv!(out, "iterations={}", outcome.iterations);
            kv!(out, "residual={:e}", outcome.residual);
            outcome.xi
        }
    };

    let exact = sys.problem().exact.clone();
    let mut table = match exact {
        Some(_) => Table::new(&["t", "exact", "approx", "abs_error"]),
        None => Table::new(&["t", "approx"]),
    };
    for (i, (&t, &v)) in sys.nodes().iter().zip(xi.iter()).enumerate() {
        match &exact {
            Some(exact) => {
                let e = exact(t)
                    .map_err(|source| vfie::discrete::DiscreteError::Forcing { i, source })?;
                table.push_row([
                    significant(t, digits),
                    significant(e, digits),
                    significant(v, digits),
                    significant((v - e).abs(), digits),
                ]);
            }
            None => table.push_row([significant(t, digits), significant(v, digits)]),
        }
    }
    let path = out_path.unwrap_or(cfg.output.path);
    std::fs::write(&path, table.as_str()).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    kv!(out, "output={}", path.display());
    emit(&out)
}

fn print_params(out: &mut String, p: &SolverParams) {
    kv!(out, "N={}", p.n_steps);
    kv!(out, "q={:e}", p.q);
    kv!(out, "n_prime={}", p.n_prime);
    kv!(out, "gamma={:e}", p.gamma);
    kv!(out, "m={}", p.m);
    kv!(out, "alpha={:e}", p.alpha);
    kv!(out, "d={}", p.d);
    kv!(out, "h0={}", p.h0);
    kv!(out, "n0={}", p.n0);
    kv!(out, "beta={:e}", p.beta);
    kv!(out, "c_nprime={:e}", p.c_nprime);
    kv!(out, "c_m={:e}", p.c_m);
    kv!(out, "c1={:e}", p.c1);
    kv!(out, "c2={:e}", p.c2);
    kv!(out, "g_norm={:e}", p.g_norm);
    kv!(out, "eps={:e}", p.eps);
}

pub fn bound(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let sys = cfg.system()?;
    let params = derive_for_system(&sys, cfg.solver.eps, &cfg.solver.overrides())?;
    let continuation = ContinuationConfig::new(params.l_const, params.n_steps, params.n0)
        .map_err(vfie::hybrid::SolveError::from)?;
    let continuation_bound =
        inner_bound(&continuation, params.g_norm).map_err(vfie::hybrid::SolveError::from)?;
    let mut out = String::new();
    print_params(&mut out, &params);
    kv!(out, "continuation_bound={continuation_bound:e}");
    kv!(out, "inner_error={:e}", params.inner_error());
    kv!(out, "detailed_bound={:e}", params.detailed_bound());
    kv!(out, "iteration_bound={:e}", params.iteration_bound());
    kv!(out, "op_budget={}", params.op_budget());
    emit(&out)
}

/// Published approximate values for a built-in problem, if any.
fn reference_values(name: &str) -> Option<Vec<(f64, f64)>> {
    (name == "example4_1").then(example_4_1_reference)
}

pub fn table(name: &str) -> Result<(), CliError> {
    let problem = builtin(name)?;
    let sys = DiscreteSystem::build(
        problem,
        Rule::Midpoint,
        REFERENCE_CELLS,
        VolterraConvention::FullCell,
    )?;
    let overrides = Overrides {
        n_steps: Some(REFERENCE_STEPS),
        n0: Some(REFERENCE_N0),
        ..Default::default()
    };
    let params = derive_for_system(&sys, REFERENCE_EPS, &overrides)?;
    let sol = hybrid_solve(&sys, &params)?;
    let reference = reference_values(name);
    let exact = sys.problem().exact.clone();
    let digits = 10;
    let mut csv = Table::new(&[
        "node",
        "exact",
        "approx",
        "reference_approx",
        "delta_vs_reference",
    ]);
    let mut worst: Option<f64> = None;
    for (i, (&t, &v)) in sys.nodes().iter().zip(sol.xi.iter()).enumerate() {
        let exact_cell = match &exact {
            Some(f) => significant(
                f(t).map_err(|source| vfie::discrete::DiscreteError::Forcing { i, source })?,
                digits,
            ),
            None => String::new(),
        };
        let published = reference
            .as_ref()
            .and_then(|r| r.get(i))
            .filter(|(tr, _)| (tr - t).abs() < 1e-12)
            .map(|&(_, a)| a);
        let (published_cell, delta_cell) = match published {
            Some(a) => {
                let delta = (v - a).abs();
                worst = Some(worst.map_or(delta, |w| w.max(delta)));
                (significant(a, digits), significant(delta, digits))
            }
            None => (String::new(), String::new()),
        };
        csv.push_row([
            significant(t, digits),
            exact_cell,
            significant(v, digits),
            published_cell,
            delta_cell,
        ]);
    }
    match worst {
        Some(w) => eprintln!("max delta_vs_reference={w:e}"),
        None => eprintln!("no reference values for {name}"),
    }
    emit(csv.as_str())
}

pub fn convergence(name: &str, levels: usize, base: usize) -> Result<(), CliError> {
    if levels < 2 {
        return Err(CliError::Usage(format!(
            "--levels must be at least 2, got {levels}"
        )));
    }
    if base == 0 {
        return Err(CliError::Usage("--base must be at least 1".into()));
    }
    let problem = builtin(name)?;
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| CliError::Usage(format!("{name} declares no exact solution")))?;
    let mut out = Table::new(&["cells", "h", "max_error", "ratio"]);
    let mut previous: Option<f64> = None;
    for k in 0..levels {
        let cells = base
            .checked_mul(1 << k)
            .ok_or_else(|| CliError::Usage("grid size overflows".into()))?;
        let sys = DiscreteSystem::build(
            problem.clone(),
            Rule::Midpoint,
            cells,
            VolterraConvention::HalfCell,
        )?;
        let outcome = newton_solve(&sys, &NewtonConfig::default(), sys.g_vec())?;
        let mut max_error = 0.0f64;
        for (i, (&t, &v)) in sys.nodes().iter().zip(outcome.xi.iter()).enumerate() {
            let e =
                exact(t).map_err(|source| vfie::discrete::DiscreteError::Forcing { i, source })?;
            max_error = max_error.max((v - e).abs());
        }
        let ratio = previous.map_or(String::new(), |p| significant(p / max_error, 6));
        out.push_row([
            cells.to_string(),
            significant(sys.grid().h, 10),
            significant(max_error, 10),
            ratio,
        ]);
        previous = Some(max_error);
    }
    emit(out.as_str())
}
