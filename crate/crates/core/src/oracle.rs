//! Dense Newton solver for the discrete system, used as the reference
//! solution when checking the hybrid iteration and its error bounds.
//!
//! The Jacobian of `ξ ↦ ξ + Φ(ξ) + F(ξ) − g` is formed by forward differences
//! column by column and factored with partial-pivoting LU. No line search.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::discrete::{DiscreteError, DiscreteSystem, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("invalid Newton configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("system dimension {dim} exceeds the dense cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("singular Jacobian at iteration {iteration}")]
    Singular { iteration: usize },
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Discrete(#[from] DiscreteError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub max_iter: usize,
    /// Target for the weighted residual norm.
    pub residual_tol: f64,
    pub fd_step: f64,
    /// Largest dimension accepted by the dense solver.
    pub dim_cap: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iter: 50,
            residual_tol: 1e-12,
            fd_step: 1e-7,
            dim_cap: 1000,
        }
    }
}

impl NewtonConfig {
    fn validate(&self) -> Result<(), OracleError> {
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(OracleError::InvalidConfig("residual_tol must be positive"));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(OracleError::InvalidConfig("fd_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub xi: StateVector,
    pub iterations: usize,
    pub residual: f64,
}

/// Forward-difference Jacobian of the defect map at `at`.
///
/// Perturbing `ξ_j` only moves the `j`-th term of each quadrature sum, so
/// entry `(i, j)` is `δ_ij + w_{i_j} ΔK1/Δx + w_j ΔK2/Δx` with the kernel
/// differences taken at `(t_i, s_j)`.
pub fn fd_jacobian(
    sys: &DiscreteSystem,
    at: &[f64],
    step: f64,
) -> Result<DMatrix<f64>, DiscreteError> {
    let dim = sys.dim();
    if at.len() != dim {
        return Err(DiscreteError::DimMismatch {
            expected: dim,
            got: at.len(),
        });
    }
    let nodes = sys.nodes();
    let scheme = sys.scheme();
    let problem = sys.problem();
    let mut jac = DMatrix::identity(dim, dim);
    for j in 0..dim {
        let x = at[j];
        let bumped = x + step * x.abs().max(1.0);
        let dx = bumped - x;
        let s = nodes[j];
        for i in 0..dim {
            let t = nodes[i];
            let kernel_err = |source| DiscreteError::Kernel { i, j, source };
            let dk2 = (problem.k2)(t, s, bumped).map_err(kernel_err)?
                - (problem.k2)(t, s, x).map_err(kernel_err)?;
            let mut entry = scheme.global_weights[j] * dk2 / dx;
            if j <= i {
                let dk1 = (problem.k1)(t, s, bumped).map_err(kernel_err)?
                    - (problem.k1)(t, s, x).map_err(kernel_err)?;
                entry += scheme.volterra_row(i)[j] * dk1 / dx;
            }
            jac[(i, j)] += entry;
        }
    }
    Ok(jac)
}

pub fn newton_solve(
    sys: &DiscreteSystem,
    cfg: &NewtonConfig,
    start: &StateVector,
) -> Result<NewtonOutcome, OracleError> {
    cfg.validate()?;
    let dim = sys.dim();
    if dim > cfg.dim_cap {
        return Err(OracleError::TooLarge {
            dim,
            cap: cfg.dim_cap,
        });
    }
    let mut xi = start.clone();
    for iteration in 0..=cfg.max_iter {
        let defect = sys.defect(&xi)?;
        let residual = sys.norm(&defect);
        if residual <= cfg.residual_tol {
            return Ok(NewtonOutcome {
                xi,
                iterations: iteration,
                residual,
            });
        }
        if iteration == cfg.max_iter || !residual.is_finite() {
            return Err(OracleError::NoConvergence {
                iterations: iteration,
                residual,
            });
        }
        let jac = fd_jacobian(sys, &xi, cfg.fd_step)?;
        let rhs = -DVector::from_column_slice(&defect);
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(OracleError::Singular { iteration })?;
        xi.as_mut_slice()
            .iter_mut()
            .zip(delta.iter())
            .for_each(|(x, d)| *x += d);
    }
    unreachable!("loop returns on its last iteration")
}

/// Largest entry-wise gap between forward-difference Jacobians at steps
/// `fd_step` and `fd_step / 2`.
pub fn jacobian_check(
    sys: &DiscreteSystem,
    at: &[f64],
    cfg: &NewtonConfig,
) -> Result<f64, OracleError> {
    cfg.validate()?;
    if sys.dim() > 60 {
        return Err(OracleError::TooLarge {
            dim: sys.dim(),
            cap: 60,
        });
    }
    let coarse = fd_jacobian(sys, at, cfg.fd_step)?;
    let fine = fd_jacobian(sys, at, cfg.fd_step / 2.0)?;
    Ok((coarse - fine).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{example_4_1, VFProblem};
    use crate::quadrature::{Rule, VolterraConvention};
    use std::sync::Arc;

    fn ex41(cells: usize) -> DiscreteSystem {
        DiscreteSystem::build(
            example_4_1(),
            Rule::Midpoint,
            cells,
            VolterraConvention::HalfCell,
        )
        .unwrap()
    }

    #[test]
    fn zero_kernels_converge_in_one_step() {
        let p = VFProblem {
            k1: Arc::new(|_, _, _| Ok(0.0)),
            k2: Arc::new(|_, _, _| Ok(0.0)),
            ..example_4_1()
        };
        let sys =
            DiscreteSystem::build(p, Rule::Midpoint, 20, VolterraConvention::HalfCell).unwrap();
        let out = newton_solve(&sys, &NewtonConfig::default(), &StateVector::zeros(20)).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.xi.max_abs_diff(sys.g_vec()) < 1e-15);
    }

    #[test]
    fn example_converges_fast() {
        let sys = ex41(50);
        let out = newton_solve(&sys, &NewtonConfig::default(), sys.g_vec()).unwrap();
        assert!(out.residual <= 1e-12);
        assert!(out.iterations <= 10, "{} iterations", out.iterations);
        let err = sys
            .nodes()
            .iter()
            .zip(out.xi.iter())
            .fold(0.0f64, |m, (t, x)| m.max((t - x).abs()));
        assert!(err <= 2.3e-2);
    }

    #[test]
    fn jacobian_consistency() {
        let linear = VFProblem {
            k1: Arc::new(|_, _, _| Ok(0.0)),
            ..example_4_1()
        };
        let sys = DiscreteSystem::build(linear, Rule::Midpoint, 25, VolterraConvention::HalfCell)
            .unwrap();
        let gap = jacobian_check(&sys, &[0.3; 25], &NewtonConfig::default()).unwrap();
        assert!(gap <= 1e-9, "{gap:e}");

        let sys = ex41(25);
        let gap = jacobian_check(&sys, &[0.0; 25], &NewtonConfig::default()).unwrap();
        assert!(gap <= 1e-6, "{gap:e}");
    }

    #[test]
    fn config_errors() {
        let sys = ex41(10);
        let cfg = NewtonConfig {
            fd_step: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            jacobian_check(&sys, &[0.0; 10], &cfg),
            Err(OracleError::InvalidConfig(_))
        ));
        let big = ex41(61);
        assert!(matches!(
            jacobian_check(&big, &[0.0; 61], &NewtonConfig::default()),
            Err(OracleError::TooLarge { .. })
        ));
        let capped = NewtonConfig {
            dim_cap: 5,
            ..Default::default()
        };
        assert!(matches!(
            newton_solve(&sys, &capped, sys.g_vec()),
            Err(OracleError::TooLarge { .. })
        ));
        let starved = NewtonConfig {
            max_iter: 1,
            ..Default::default()
        };
        assert!(matches!(
            newton_solve(&sys, &starved, &StateVector::zeros(10)),
            Err(OracleError::NoConvergence { iterations: 1, .. })
        ));
    }
}
