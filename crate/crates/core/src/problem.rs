//! Problem instances of
//!
//! ```text
//! x(t) + ∫_a^t K1(t, s, x(s)) ds + ∫_a^b K2(t, s, x(s)) ds = g(t),   a <= t <= b
//! ```
//!
//! Kernels and forcing are expected to be `C^ν` (`ν >= 2`) on
//! `[a,b] × [a,b] × R`; the solver's error theory relies on it but nothing
//! here checks it.
//!
//! `M` is the power-contraction constant of the Volterra part and `L` the
//! Lipschitz constant of the Fredholm part. Both are declared by the caller;
//! [`check_assumptions`] audits them empirically on the discrete system.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::discrete::{DiscreteError, DiscreteSystem, StateVector};
use crate::expr::{EvalError, Expr, ParseError};

pub type KernelFn = Arc<dyn Fn(f64, f64, f64) -> Result<f64, EvalError> + Send + Sync>;
pub type ForcingFn = Arc<dyn Fn(f64) -> Result<f64, EvalError> + Send + Sync>;

pub const DEFAULT_SEED: u64 = 0x5eed_2019;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("interval is empty or reversed: a = {a}, b = {b}")]
    EmptyInterval { a: f64, b: f64 },
    #[error("constant {name} must be finite and nonnegative, got {value}")]
    BadConstant { name: &'static str, value: f64 },
    #[error("in `{field}`: {source}")]
    Parse {
        field: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("`g` may only depend on t")]
    ForcingDependsOnSx,
    #[error("unknown builtin problem `{0}`")]
    UnknownBuiltin(String),
    #[error("assumption audit needs at least 100 pairs, got {0}")]
    TooFewPairs(usize),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
}

#[derive(Clone)]
pub struct VFProblem {
    pub name: String,
    pub a: f64,
    pub b: f64,
    /// Volterra kernel K1(t, s, x).
    pub k1: KernelFn,
    /// Fredholm kernel K2(t, s, x).
    pub k2: KernelFn,
    pub g: ForcingFn,
    /// Power-contraction constant `M` of the Volterra part.
    pub m_const: f64,
    /// Lipschitz constant `L` of the Fredholm part.
    pub l_const: f64,
    pub exact: Option<ForcingFn>,
}

impl fmt::Debug for VFProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VFProblem")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("M", &self.m_const)
            .field("L", &self.l_const)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl VFProblem {
    fn validate(self) -> Result<Self, ProblemError> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(ProblemError::EmptyInterval {
                a: self.a,
                b: self.b,
            });
        }
        for (name, value) in [("M", self.m_const), ("L", self.l_const)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ProblemError::BadConstant { name, value });
            }
        }
        Ok(self)
    }
}

/// Names accepted by [`builtin`].
pub const BUILTINS: &[&str] = &["example4_1"];

pub fn builtin(name: &str) -> Result<VFProblem, ProblemError> {
    match name {
        "example4_1" => Ok(example_4_1()),
        other => Err(ProblemError::UnknownBuiltin(other.to_string())),
    }
}

/// `x(t) + 5∫_0^t ts cos x(s) ds + 11/2 ∫_0^1 t²s² x(s) ds = g(t)` on `[0, 1]`,
/// with exact solution `x(t) = t`.
pub fn example_4_1() -> VFProblem {
    VFProblem {
        name: "example4_1".into(),
        a: 0.0,
        b: 1.0,
        k1: Arc::new(|t, s, x| Ok(5.0 * t * s * x.cos())),
        k2: Arc::new(|t, s, x| Ok(5.5 * t * t * s * s * x)),
        g: Arc::new(|t| {
            Ok(11.0 / 8.0 * t * t - 4.0 * t + 5.0 * t * t.cos() + 5.0 * t * t * t.sin())
        }),
        m_const: (25.0f64 / 18.0).sqrt(),
        l_const: (121.0f64 / 100.0).sqrt(),
        exact: Some(Arc::new(Ok)),
    }
}

/// Approximate values published for Example 4.1 (midpoint rule, h = 1/50,
/// N = 2, n0 = 55), as `(t, approx)` pairs in node order.
pub fn example_4_1_reference() -> Vec<(f64, f64)> {
    include_str!("../data/table1.csv")
        .lines()
        .skip(1)
        .map(|line| {
            let mut cols = line.split(',').map(|c| c.parse::<f64>().expect("fixture"));
            let t = cols.next().expect("t column");
            let _exact = cols.next();
            (t, cols.next().expect("approx column"))
        })
        .collect()
}

/// Source strings for a problem given in the expression language.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionSources<'a> {
    pub k1: &'a str,
    pub k2: &'a str,
    pub g: &'a str,
    pub exact: Option<&'a str>,
}

pub fn from_expressions(
    a: f64,
    b: f64,
    sources: &ExpressionSources<'_>,
    m_const: f64,
    l_const: f64,
) -> Result<VFProblem, ProblemError> {
    let parse = |field, src: &str| {
        src.parse::<Expr>()
            .map(Arc::new)
            .map_err(|source| ProblemError::Parse { field, source })
    };
    let k1 = parse("k1", sources.k1)?;
    let k2 = parse("k2", sources.k2)?;
    let g = parse("g", sources.g)?;
    let exact = sources.exact.map(|src| parse("exact", src)).transpose()?;
    for e in std::iter::once(&g).chain(exact.as_ref()) {
        if e.depends_on(crate::expr::Var::S) || e.depends_on(crate::expr::Var::X) {
            return Err(ProblemError::ForcingDependsOnSx);
        }
    }
    let forcing = |e: Arc<Expr>| -> ForcingFn { Arc::new(move |t| e.eval(t, 0.0, 0.0)) };
    let kernel = |e: Arc<Expr>| -> KernelFn { Arc::new(move |t, s, x| e.eval(t, s, x)) };
    VFProblem {
        name: "expressions".into(),
        a,
        b,
        k1: kernel(k1),
        k2: kernel(k2),
        g: forcing(g),
        m_const,
        l_const,
        exact: exact.map(forcing),
    }
    .validate()
}

/// Empirical audit of the Lipschitz / monotonicity assumptions on a discrete system.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// max ‖F(ξ) − F(ξ̄)‖ / ‖ξ − ξ̄‖
    pub lipschitz_f_ratio_max: f64,
    /// min ⟨F(ξ) − F(ξ̄), ξ − ξ̄⟩ / ‖ξ − ξ̄‖²
    pub monotonicity_min: f64,
    /// max ‖Φ(ξ) − Φ(ξ̄)‖ / ‖ξ − ξ̄‖
    pub lipschitz_phi_ratio_max: f64,
    pub samples: usize,
    pub declared_m: f64,
    pub declared_l: f64,
}

impl AssumptionReport {
    /// Human-readable list of the assumptions the samples contradict.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.lipschitz_f_ratio_max > self.declared_l * (1.0 + 1e-9) {
            out.push(format!(
                "Fredholm part: sampled Lipschitz ratio {:.6e} exceeds declared L = {:.6e}",
                self.lipschitz_f_ratio_max, self.declared_l
            ));
        }
        if self.monotonicity_min <= 0.0 {
            out.push(format!(
                "Fredholm part is not monotone: min <F(u)-F(v), u-v>/|u-v|^2 = {:.6e}",
                self.monotonicity_min
            ));
        }
        if self.lipschitz_phi_ratio_max > self.declared_m * (1.0 + 1e-9) {
            out.push(format!(
                "Volterra part: sampled Lipschitz ratio {:.6e} exceeds declared M = {:.6e}",
                self.lipschitz_phi_ratio_max, self.declared_m
            ));
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Default half-width of the sampling box: twice the largest |g| on the grid.
pub fn default_x_box(sys: &DiscreteSystem) -> f64 {
    let max_g = sys.g_vec().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_g > 0.0 {
        2.0 * max_g
    } else {
        1.0
    }
}

pub fn check_assumptions(
    sys: &DiscreteSystem,
    pairs: usize,
    x_box: f64,
    seed: u64,
) -> Result<AssumptionReport, ProblemError> {
    if pairs < 100 {
        return Err(ProblemError::TooFewPairs(pairs));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = sys.dim();
    let sample = |rng: &mut ChaCha8Rng| -> StateVector {
        (0..dim)
            .map(|_| rng.gen_range(-x_box..=x_box))
            .collect::<Vec<_>>()
            .into()
    };
    let mut report = AssumptionReport {
        lipschitz_f_ratio_max: 0.0,
        monotonicity_min: f64::INFINITY,
        lipschitz_phi_ratio_max: 0.0,
        samples: 0,
        declared_m: sys.problem().m_const,
        declared_l: sys.problem().l_const,
    };
    while report.samples < pairs {
        let u = sample(&mut rng);
        let v = sample(&mut rng);
        let diff = u.sub(&v);
        let dist2 = sys.inner(&diff, &diff)?;
        if dist2 == 0.0 {
            continue;
        }
        let dist = dist2.sqrt();
        let df = sys.fred(&u)?.sub(&sys.fred(&v)?);
        let dphi = sys.phi(&u)?.sub(&sys.phi(&v)?);
        report.lipschitz_f_ratio_max = report.lipschitz_f_ratio_max.max(sys.norm(&df) / dist);
        report.monotonicity_min = report.monotonicity_min.min(sys.inner(&df, &diff)? / dist2);
        report.lipschitz_phi_ratio_max = report.lipschitz_phi_ratio_max.max(sys.norm(&dphi) / dist);
        report.samples += 1;
    }
    Ok(report)
}
