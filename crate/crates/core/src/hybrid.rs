//! The outer solver: contraction iteration on `z = −Φ(P⁻¹(z)) + g` with
//! [`continuation`](crate::continuation) as the inner `P⁻¹`, plus the
//! parameter selection and a-priori error budget that go with it.
//!
//! Every scheme runs the same number of steps `n0`:
//!
//! ```text
//! z⁽⁰⁾ = g,   z⁽ᵗ⁺¹⁾ = −Φ(P⁻¹(z⁽ᵗ⁾)) + g,   ξ(n0, N) = P⁻¹(z⁽ⁿ⁰⁾)
//! ```
//!
//! The system is shifted first so that `Φ(0) = F(0) = 0`; constants use `‖g₁‖`.

use thiserror::Error;

use crate::continuation::{
    continuation_factor, p_inverse, smallest_steps, ContinuationConfig, ContinuationError,
};
use crate::discrete::{DiscreteError, DiscreteSystem, StateVector};

/// Upper limit on `d` when searching for the iteration count.
pub const DEFAULT_D_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver parameter: {0}")]
    InvalidParams(String),
    #[error("tolerance {eps:e} needs d > {cap}")]
    TooManyIterations { eps: f64, cap: usize },
    #[error("non-finite outer iterate at step {step}")]
    NonFinite { step: usize },
    #[error("measured {count} elementary operations exceed the budget {budget}")]
    BudgetExceeded { count: u64, budget: u128 },
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
}

/// Optional user overrides of the derived schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub n_steps: Option<usize>,
    pub m: Option<usize>,
    pub n_prime: Option<usize>,
    pub n0: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Declared power-contraction constant of Φ.
    pub m_const: f64,
    /// Declared Lipschitz constant of F.
    pub l_const: f64,
    /// Continuation steps `N`.
    pub n_steps: usize,
    pub q: f64,
    /// Power `m` with `Φ^m` contracting.
    pub m: usize,
    pub alpha: f64,
    pub n_prime: usize,
    pub gamma: f64,
    pub d: usize,
    pub h0: usize,
    pub n0: usize,
    pub c_nprime: f64,
    pub c_m: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub g_norm: f64,
    pub eps: f64,
}

/// `M^k / sqrt((k−1)!)` for `k >= 1`, computed as a running product.
fn power_term(m_const: f64, k: usize) -> f64 {
    (1..k).fold(m_const, |acc, j| acc * m_const / (j as f64).sqrt())
}

fn power_sum(m_const: f64, upto: usize) -> f64 {
    (1..=upto).map(|k| power_term(m_const, k)).sum()
}

pub fn derive_params(
    m_const: f64,
    l_const: f64,
    g_norm: f64,
    eps: f64,
) -> Result<SolverParams, SolveError> {
    derive_params_with(m_const, l_const, g_norm, eps, &Overrides::default())
}

pub fn derive_params_with(
    m_const: f64,
    l_const: f64,
    g_norm: f64,
    eps: f64,
    overrides: &Overrides,
) -> Result<SolverParams, SolveError> {
    let bad = |msg: String| Err(SolveError::InvalidParams(msg));
    if !(m_const.is_finite() && m_const >= 0.0) {
        return bad(format!("M must be finite and nonnegative, got {m_const}"));
    }
    if !(l_const.is_finite() && l_const >= 0.0) {
        return bad(format!("L must be finite and nonnegative, got {l_const}"));
    }
    if !(g_norm.is_finite() && g_norm >= 0.0) {
        return bad(format!("|g| must be finite and nonnegative, got {g_norm}"));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return bad(format!("eps must be positive, got {eps}"));
    }

    let n_steps = overrides.n_steps.unwrap_or_else(|| smallest_steps(l_const));
    if n_steps == 0 {
        return bad("N must be at least 1".into());
    }
    let q = l_const / n_steps as f64;
    if q >= 1.0 {
        return bad(format!("q = L/N = {q} is not < 1"));
    }

    // smallest n' with γ = M/√n' <= 1/2
    let n_prime = match overrides.n_prime {
        Some(n) => n,
        None => {
            let mut n = ((4.0 * m_const * m_const).ceil() as usize).max(2) - 1;
            while m_const / (n as f64).sqrt() > 0.5 {
                n += 1;
            }
            n
        }
    };
    if n_prime == 0 {
        return bad("n' must be at least 1".into());
    }
    let gamma = m_const / (n_prime as f64).sqrt();
    if gamma >= 1.0 {
        return bad(format!("gamma = M/sqrt(n') = {gamma} is not < 1"));
    }

    // smallest m >= 2 with α = M^m / √((m−1)!) <= 0.1
    let m = match overrides.m {
        Some(m) => m,
        None => {
            let mut m = 2;
            while power_term(m_const, m) > 0.1 {
                m += 1;
                if m > 10_000 {
                    return bad(format!("no m found with alpha <= 0.1 for M = {m_const}"));
                }
            }
            m
        }
    };
    if m == 0 {
        return bad("m must be at least 1".into());
    }
    let alpha = power_term(m_const, m);
    if alpha >= 1.0 {
        return bad(format!("alpha = M^m/sqrt((m-1)!) = {alpha} is not < 1"));
    }

    let c_nprime =
        gamma / (1.0 - gamma) * power_term(m_const, n_prime) + power_sum(m_const, n_prime) + 1.0;
    let c_m = power_sum(m_const, m);
    let c1 = (1.0 + m_const) * q / (1.0 - q) * continuation_factor(q, n_steps) * c_nprime * g_norm;
    let c2 = c_m / (1.0 - alpha) * g_norm;
    let beta = q.powi(m as i32).max(alpha);

    let (d, h0, n0) = match overrides.n0 {
        Some(n0) => {
            if n0 == 0 {
                return bad("n0 must be at least 1".into());
            }
            (n0 / m, n0 % m, n0)
        }
        None => {
            let total = c1 + c2;
            let mut d = 1;
            while total * beta.powi(d as i32) > eps {
                d += 1;
                if d > DEFAULT_D_CAP {
                    return Err(SolveError::TooManyIterations {
                        eps,
                        cap: DEFAULT_D_CAP,
                    });
                }
            }
            (d, m - 1, m * d + m - 1)
        }
    };

    Ok(SolverParams {
        m_const,
        l_const,
        n_steps,
        q,
        m,
        alpha,
        n_prime,
        gamma,
        d,
        h0,
        n0,
        c_nprime,
        c_m,
        c1,
        c2,
        beta,
        g_norm,
        eps,
    })
}

/// Derives parameters from a system's declared constants and its shifted forcing `‖g₁‖`.
pub fn derive_for_system(
    sys: &DiscreteSystem,
    eps: f64,
    overrides: &Overrides,
) -> Result<SolverParams, SolveError> {
    let g_norm = sys.norm(sys.shifted()?.g1());
    let p = sys.problem();
    derive_params_with(p.m_const, p.l_const, g_norm, eps, overrides)
}

impl SolverParams {
    /// `(C1 + C2) β^d`
    pub fn iteration_bound(&self) -> f64 {
        (self.c1 + self.c2) * self.beta.powi(self.d as i32)
    }

    /// Error of each inner `P⁻¹` evaluation:
    /// `Δ(n0) = q^{n0+1}/(1−q) · (e^{qN}−1)/(e^q−1) · C_{n'} ‖g‖`.
    pub fn inner_error(&self) -> f64 {
        self.q.powi(self.n0 as i32 + 1) / (1.0 - self.q)
            * continuation_factor(self.q, self.n_steps)
            * self.c_nprime
            * self.g_norm
    }

    /// The sharper two-term estimate
    /// `(1+M) Δ(n0) + α^{(n0−h0)/m}/(1−α) · C_m ‖g‖`.
    pub fn detailed_bound(&self) -> f64 {
        let outer_exp = ((self.n0 - self.h0) / self.m) as i32;
        (1.0 + self.m_const) * self.inner_error()
            + self.alpha.powi(outer_exp) / (1.0 - self.alpha) * self.c_m * self.g_norm
    }

    /// `(n0+1)^{N+1}` elementary operations; saturates at `u128::MAX`.
    pub fn op_budget(&self) -> u128 {
        op_budget(self.n0, self.n_steps)
    }
}

pub fn iteration_bound(params: &SolverParams) -> f64 {
    params.iteration_bound()
}

pub fn op_budget(n0: usize, n_steps: usize) -> u128 {
    u32::try_from(n_steps + 1)
        .ok()
        .and_then(|e| (n0 as u128 + 1).checked_pow(e))
        .unwrap_or(u128::MAX)
}

/// Error after `k` steps of an iteration whose `m`-th power contracts with factor `alpha`:
/// `α^{(k−h0)/m}/(1−α) · ‖x_{m+h0} − x_{h0}‖`, `h0 = k mod m`.
pub fn fixed_point_error(
    alpha: f64,
    m: usize,
    k: usize,
    anchor_gap: f64,
) -> Result<f64, SolveError> {
    if m == 0 || k < m {
        return Err(SolveError::InvalidParams(format!(
            "need k >= m >= 1, got k = {k}, m = {m}"
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(SolveError::InvalidParams(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let h0 = k % m;
    Ok(alpha.powi(((k - h0) / m) as i32) / (1.0 - alpha) * anchor_gap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    /// `(C1 + C2) β^d`
    pub iteration_bound: f64,
    /// `(1+M) Δ(n0) + α^d/(1−α) C_m ‖g‖`
    pub detailed_bound: f64,
    /// `Δ(n0)`
    pub inner_bound_value: f64,
    pub discretization_note: String,
    pub op_count: u64,
    pub op_bound: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub xi: StateVector,
    pub budget: ErrorBudget,
    pub params: SolverParams,
    /// Weighted norm of `ξ + Φ(ξ) + F(ξ) − g`.
    pub residual: f64,
    /// `ξ_i − x(t_i)` when the problem declares an exact solution.
    pub per_node_error: Option<Vec<f64>>,
    /// Outer iterates `z⁽⁰⁾ ... z⁽ⁿ⁰⁾` of the shifted system.
    pub outer_iterates: Vec<StateVector>,
}

pub fn solve(sys: &DiscreteSystem, params: &SolverParams) -> Result<Solution, SolveError> {
    let shifted = sys.shifted()?;
    let g1 = shifted.g1().clone();
    let f1 = |x: &[f64]| shifted.fred(x);
    let mut cfg = ContinuationConfig::new(params.l_const, params.n_steps, params.n0)?;

    let mut z = g1.clone();
    let mut outer_iterates = Vec::with_capacity(params.n0 + 1);
    outer_iterates.push(z.clone());
    for step in 0..params.n0 {
        let xi = p_inverse(&f1, &z, &mut cfg)?;
        let phi = shifted.phi(&xi)?;
        cfg.op_count += 1;
        z = g1.sub(&phi);
        if !z.is_finite() {
            return Err(SolveError::NonFinite { step: step + 1 });
        }
        outer_iterates.push(z.clone());
    }
    let xi = p_inverse(&f1, &z, &mut cfg)?;

    let op_bound = params.op_budget();
    if u128::from(cfg.op_count) > op_bound {
        return Err(SolveError::BudgetExceeded {
            count: cfg.op_count,
            budget: op_bound,
        });
    }
    let residual = sys.residual(&xi)?;
    let per_node_error = match &sys.problem().exact {
        Some(exact) => Some(
            sys.nodes()
                .iter()
                .zip(xi.iter())
                .enumerate()
                .map(|(i, (&t, &v))| {
                    exact(t)
                        .map(|e| v - e)
                        .map_err(|source| DiscreteError::Forcing { i, source })
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let order = sys.scheme().order;
    let budget = ErrorBudget {
        iteration_bound: params.iteration_bound(),
        detailed_bound: params.detailed_bound(),
        inner_bound_value: params.inner_error(),
        discretization_note: format!(
            "discretization error of the {} rule is O(h^{order}) (h = {}) and vanishes as h -> 0; \
             no numeric constant is available",
            sys.scheme().rule,
            sys.grid().h
        ),
        op_count: cfg.op_count,
        op_bound,
    };
    Ok(Solution {
        xi,
        budget,
        params: params.clone(),
        residual,
        per_node_error,
        outer_iterates,
    })
}
