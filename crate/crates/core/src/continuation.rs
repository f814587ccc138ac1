//! Parameter continuation for `ξ + F(ξ) = z` with `F` Lipschitz (constant `L`) and monotone.
//!
//! The parameter interval `[0, 1]` is cut into `N` steps of `ε₀ = 1/N` with
//! `q = L ε₀ < 1`. Level `k` solves `w + ε₀ F(G₁⁻¹ ⋯ G_{k−1}⁻¹(w)) = target`
//! by fixed-point iteration, which is a `q`-contraction; every `G_j⁻¹`
//! inside it is itself a level-`j` solve. Each level runs exactly `n0` steps
//! from the level's own target, and nothing is memoized, so the number of
//! `F` evaluations per [`p_inverse`] call is `(n0+1)^N − 1`.

use thiserror::Error;

use crate::discrete::{DiscreteError, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuationError {
    #[error("q = L/N = {q} must be < 1")]
    NotContractive { q: f64 },
    #[error("continuation needs at least one parameter step and one iteration per level")]
    EmptySchedule,
    #[error("level {level} out of range 1..={n_steps}")]
    BadLevel { level: usize, n_steps: usize },
    #[error("Lipschitz constant must be finite and nonnegative, got {0}")]
    BadLipschitz(f64),
    #[error("non-finite iterate at level {level}; the operator is likely not monotone or L is too small")]
    NonFinite { level: usize },
    #[error(transparent)]
    Operator(#[from] DiscreteError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationConfig {
    /// Number of parameter sub-steps `N`.
    pub n_steps: usize,
    /// `ε₀ = 1/N`
    pub eps0: f64,
    /// `q = L ε₀`
    pub q: f64,
    /// Iterations per level.
    pub n0: usize,
    /// Number of `F` evaluations performed through this config.
    pub op_count: u64,
}

impl ContinuationConfig {
    pub fn new(lipschitz: f64, n_steps: usize, n0: usize) -> Result<Self, ContinuationError> {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(ContinuationError::BadLipschitz(lipschitz));
        }
        if n_steps == 0 || n0 == 0 {
            return Err(ContinuationError::EmptySchedule);
        }
        let eps0 = 1.0 / n_steps as f64;
        let q = lipschitz * eps0;
        if q >= 1.0 {
            return Err(ContinuationError::NotContractive { q });
        }
        Ok(ContinuationConfig {
            n_steps,
            eps0,
            q,
            n0,
            op_count: 0,
        })
    }

    /// Smallest `N` with `L/N < 1`.
    pub fn for_lipschitz(lipschitz: f64, n0: usize) -> Result<Self, ContinuationError> {
        if !(lipschitz.is_finite() && lipschitz >= 0.0) {
            return Err(ContinuationError::BadLipschitz(lipschitz));
        }
        Self::new(lipschitz, smallest_steps(lipschitz), n0)
    }
}

/// `floor(L) + 1`, the smallest natural `N` with `L/N < 1`.
pub fn smallest_steps(lipschitz: f64) -> usize {
    lipschitz.floor() as usize + 1
}

/// `(e^{qN} − 1)/(e^q − 1)`, continuous at `q = 0` where it equals `N`.
pub fn continuation_factor(q: f64, n_steps: usize) -> f64 {
    if q == 0.0 {
        n_steps as f64
    } else {
        (q * n_steps as f64).exp_m1() / q.exp_m1()
    }
}

/// A-priori error of the continuation solve: `q^{n0+1}/(1−q) · (e^{qN}−1)/(e^q−1) · ‖z‖`.
pub fn inner_bound(cfg: &ContinuationConfig, z_norm: f64) -> Result<f64, ContinuationError> {
    if cfg.q >= 1.0 {
        return Err(ContinuationError::NotContractive { q: cfg.q });
    }
    Ok(cfg.q.powi(cfg.n0 as i32 + 1) / (1.0 - cfg.q)
        * continuation_factor(cfg.q, cfg.n_steps)
        * z_norm)
}

pub fn level_solve<F>(
    f: &F,
    level: usize,
    target: &StateVector,
    cfg: &mut ContinuationConfig,
) -> Result<StateVector, ContinuationError>
where
    F: Fn(&[f64]) -> Result<StateVector, DiscreteError>,
{
    check_level(level, cfg)?;
    run_level(f, level, target, cfg, None)
}

/// Like [`level_solve`] but returns every iterate `w_0 = target, w_1, ..., w_{n0}`.
pub fn level_iterates<F>(
    f: &F,
    level: usize,
    target: &StateVector,
    cfg: &mut ContinuationConfig,
) -> Result<Vec<StateVector>, ContinuationError>
where
    F: Fn(&[f64]) -> Result<StateVector, DiscreteError>,
{
    check_level(level, cfg)?;
    let mut trace = Vec::with_capacity(cfg.n0 + 1);
    run_level(f, level, target, cfg, Some(&mut trace))?;
    Ok(trace)
}

/// Approximates `P⁻¹(z)` for `P(ξ) = ξ + F(ξ)`.
pub fn p_inverse<F>(
    f: &F,
    z: &StateVector,
    cfg: &mut ContinuationConfig,
) -> Result<StateVector, ContinuationError>
where
    F: Fn(&[f64]) -> Result<StateVector, DiscreteError>,
{
    let top = cfg.n_steps;
    let y = run_level(f, top, z, cfg, None)?;
    compose_down(f, y, top - 1, cfg)
}

fn check_level(level: usize, cfg: &ContinuationConfig) -> Result<(), ContinuationError> {
    if level == 0 || level > cfg.n_steps {
        return Err(ContinuationError::BadLevel {
            level,
            n_steps: cfg.n_steps,
        });
    }
    Ok(())
}

fn run_level<F>(
    f: &F,
    level: usize,
    target: &StateVector,
    cfg: &mut ContinuationConfig,
    mut trace: Option<&mut Vec<StateVector>>,
) -> Result<StateVector, ContinuationError>
where
    F: Fn(&[f64]) -> Result<StateVector, DiscreteError>,
{
    let mut w = target.clone();
    if let Some(t) = trace.as_deref_mut() {
        t.push(w.clone());
    }
    for _ in 0..cfg.n0 {
        let below = compose_down(f, w, level - 1, cfg)?;
        let fw = f(&below)?;
        cfg.op_count += 1;
        w = target.axpy(-cfg.eps0, &fw);
        if !w.is_finite() {
            return Err(ContinuationError::NonFinite { level });
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(w.clone());
        }
    }
    Ok(w)
}

/// `G₁⁻¹(G₂⁻¹(⋯ G_k⁻¹(w)))`
fn compose_down<F>(
    f: &F,
    w: StateVector,
    k: usize,
    cfg: &mut ContinuationConfig,
) -> Result<StateVector, ContinuationError>
where
    F: Fn(&[f64]) -> Result<StateVector, DiscreteError>,
{
    (1..=k)
        .rev()
        .try_fold(w, |v, j| run_level(f, j, &v, cfg, None))
}
