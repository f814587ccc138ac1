//! The perturbed nonlinear system `ξ + Φ(ξ) + F(ξ) = g` on a grid.
//!
//! `Φ_i(ξ) = Σ_{j<=i} w_{i_j} K1(t_i, s_j, ξ_j)` and
//! `F_i(ξ) = Σ_r w_r K2(t_i, s_r, ξ_r)`, with the weighted inner product
//! `⟨u, v⟩ = Σ w_i u_i v_i` as the discrete analogue of L².

use std::ops::Deref;

use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::VFProblem;
use crate::quadrature::{
    build_grid, build_scheme_with, Grid, QuadScheme, QuadratureError, Rule, VolterraConvention,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiscreteError {
    #[error("kernel evaluation failed at (i={i}, j={j}): {source}")]
    Kernel {
        i: usize,
        j: usize,
        #[source]
        source: EvalError,
    },
    #[error("forcing evaluation failed at node {i}: {source}")]
    Forcing {
        i: usize,
        #[source]
        source: EvalError,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("problem interval [{pa}, {pb}] does not match grid interval [{ga}, {gb}]")]
    IntervalMismatch { pa: f64, pb: f64, ga: f64, gb: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Nodal values `ξ = (ξ_0, ..., ξ_n)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &StateVector) -> StateVector {
        self.zip_with(other, |a, b| a + alpha * b)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    fn zip_with(&self, other: &StateVector, f: impl Fn(f64, f64) -> f64) -> StateVector {
        debug_assert_eq!(self.len(), other.len());
        StateVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

impl FromIterator<f64> for StateVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        StateVector(iter.into_iter().collect())
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    grid: Grid,
    scheme: QuadScheme,
    problem: VFProblem,
    g_vec: StateVector,
}

impl DiscreteSystem {
    pub fn new(problem: VFProblem, grid: Grid, scheme: QuadScheme) -> Result<Self, DiscreteError> {
        if problem.a != grid.a || problem.b != grid.b {
            return Err(DiscreteError::IntervalMismatch {
                pa: problem.a,
                pb: problem.b,
                ga: grid.a,
                gb: grid.b,
            });
        }
        if scheme.len() != grid.len() || scheme.rule != grid.rule {
            return Err(QuadratureError::RuleMismatch {
                grid: grid.rule,
                scheme: scheme.rule,
            }
            .into());
        }
        let g_vec = grid
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &t)| (problem.g)(t).map_err(|source| DiscreteError::Forcing { i, source }))
            .collect::<Result<StateVector, _>>()?;
        Ok(DiscreteSystem {
            grid,
            scheme,
            problem,
            g_vec,
        })
    }

    /// Grid and scheme in one step.
    pub fn build(
        problem: VFProblem,
        rule: Rule,
        cells: usize,
        convention: VolterraConvention,
    ) -> Result<Self, DiscreteError> {
        let grid = build_grid(problem.a, problem.b, cells, rule)?;
        let scheme = build_scheme_with(&grid, rule, convention)?;
        Self::new(problem, grid, scheme)
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> &QuadScheme {
        &self.scheme
    }

    pub fn problem(&self) -> &VFProblem {
        &self.problem
    }

    pub fn g_vec(&self) -> &StateVector {
        &self.g_vec
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), DiscreteError> {
        if v.len() != self.dim() {
            return Err(DiscreteError::DimMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Discrete Volterra operator Φ.
    pub fn phi(&self, xi: &[f64]) -> Result<StateVector, DiscreteError> {
        self.check_dim(xi)?;
        let nodes = &self.grid.nodes;
        let k1 = &self.problem.k1;
        (0..self.dim())
            .map(|i| {
                let t = nodes[i];
                self.scheme
                    .volterra_row(i)
                    .iter()
                    .enumerate()
                    .try_fold(0.0, |acc, (j, &w)| {
                        k1(t, nodes[j], xi[j])
                            .map(|k| acc + w * k)
                            .map_err(|source| DiscreteError::Kernel { i, j, source })
                    })
            })
            .collect()
    }

    /// Discrete Fredholm operator F.
    pub fn fred(&self, xi: &[f64]) -> Result<StateVector, DiscreteError> {
        self.check_dim(xi)?;
        let nodes = &self.grid.nodes;
        let k2 = &self.problem.k2;
        let weights = &self.scheme.global_weights;
        (0..self.dim())
            .map(|i| {
                let t = nodes[i];
                weights.iter().enumerate().try_fold(0.0, |acc, (r, &w)| {
                    k2(t, nodes[r], xi[r])
                        .map(|k| acc + w * k)
                        .map_err(|source| DiscreteError::Kernel { i, j: r, source })
                })
            })
            .collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64, DiscreteError> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        Ok(weighted_inner(&self.scheme.global_weights, u, v))
    }

    /// Weighted norm; panics on a dimension mismatch.
    pub fn norm(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.dim(), "state vector has the wrong dimension");
        weighted_inner(&self.scheme.global_weights, u, u).sqrt()
    }

    /// `ξ + Φ(ξ) + F(ξ) − g`
    pub fn defect(&self, xi: &[f64]) -> Result<StateVector, DiscreteError> {
        let phi = self.phi(xi)?;
        let fred = self.fred(xi)?;
        Ok((0..self.dim())
            .map(|i| xi[i] + phi[i] + fred[i] - self.g_vec[i])
            .collect())
    }

    pub fn residual(&self, xi: &[f64]) -> Result<f64, DiscreteError> {
        Ok(self.norm(&self.defect(xi)?))
    }

    /// The equivalent system with `Φ₁(0) = F₁(0) = 0`.
    pub fn shifted(&self) -> Result<ShiftedSystem<'_>, DiscreteError> {
        let zero = StateVector::zeros(self.dim());
        let phi0 = self.phi(&zero)?;
        let f0 = self.fred(&zero)?;
        let g1 = (0..self.dim())
            .map(|i| self.g_vec[i] - phi0[i] - f0[i])
            .collect();
        Ok(ShiftedSystem {
            sys: self,
            phi0,
            f0,
            g1,
        })
    }
}

pub(crate) fn weighted_inner(w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
}

/// `ξ + Φ₁(ξ) + F₁(ξ) = g₁` with `Φ₁ = Φ − Φ(0)`, `F₁ = F − F(0)`, `g₁ = g − Φ(0) − F(0)`.
#[derive(Debug, Clone)]
pub struct ShiftedSystem<'a> {
    sys: &'a DiscreteSystem,
    phi0: StateVector,
    f0: StateVector,
    g1: StateVector,
}

impl ShiftedSystem<'_> {
    pub fn system(&self) -> &DiscreteSystem {
        self.sys
    }

    pub fn g1(&self) -> &StateVector {
        &self.g1
    }

    pub fn phi(&self, xi: &[f64]) -> Result<StateVector, DiscreteError> {
        Ok(self.sys.phi(xi)?.sub(&self.phi0))
    }

    pub fn fred(&self, xi: &[f64]) -> Result<StateVector, DiscreteError> {
        Ok(self.sys.fred(xi)?.sub(&self.f0))
    }

    pub fn residual(&self, xi: &[f64]) -> Result<f64, DiscreteError> {
        let phi = self.phi(xi)?;
        let fred = self.fred(xi)?;
        let defect: Vec<f64> = (0..xi.len())
            .map(|i| xi[i] + phi[i] + fred[i] - self.g1[i])
            .collect();
        Ok(self.sys.norm(&defect))
    }
}
