//! Equidistant partitions and composite Newton–Cotes weights.
//!
//! A [`QuadScheme`] carries two weight sets over the same nodes: global
//! weights `w_r` for integrals over `[a, b]`, and a lower-triangular table
//! `w_{i_j}` (row `i`, `j = 0..=i`) for the Volterra integrals over `[a, t_i]`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("interval is empty or reversed: a = {a}, b = {b}")]
    EmptyInterval { a: f64, b: f64 },
    #[error("at least one cell is required")]
    NoCells,
    #[error("simpson rule needs an even number of cells, got {0}")]
    OddSimpson(usize),
    #[error("grid was built for {grid} but scheme requested {scheme}")]
    RuleMismatch { grid: Rule, scheme: Rule },
    #[error("{convention} Volterra weights are only defined for the midpoint rule")]
    ConventionMismatch { convention: VolterraConvention },
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown quadrature rule `{0}` (expected midpoint, trapezoid or simpson)")]
    UnknownRule(String),
    #[error("unknown Volterra convention `{0}` (expected half-cell or full-cell)")]
    UnknownConvention(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Midpoint,
    Trapezoid,
    Simpson,
}

impl Rule {
    /// Convergence order of the composite rule on smooth integrands.
    pub fn order(self) -> u32 {
        match self {
            Rule::Midpoint | Rule::Trapezoid => 2,
            Rule::Simpson => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Midpoint => "midpoint",
            Rule::Trapezoid => "trapezoid",
            Rule::Simpson => "simpson",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = QuadratureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(Rule::Midpoint),
            "trapezoid" => Ok(Rule::Trapezoid),
            "simpson" => Ok(Rule::Simpson),
            other => Err(QuadratureError::UnknownRule(other.to_string())),
        }
    }
}

/// How the midpoint rule closes a Volterra row at the mid-cell node `t_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolterraConvention {
    /// `w_{i_j} = h` for `j < i`, `w_{i_i} = h/2`: the row integrates exactly over `[a, t_i]`.
    #[default]
    HalfCell,
    /// `w_{i_j} = h` for all `j <= i`: the row covers `[a, t_i + h/2]`.
    /// First order, but it is the convention behind the published Example 4.1 table.
    FullCell,
}

impl fmt::Display for VolterraConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VolterraConvention::HalfCell => "half-cell",
            VolterraConvention::FullCell => "full-cell",
        })
    }
}

impl FromStr for VolterraConvention {
    type Err = QuadratureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "half-cell" => Ok(VolterraConvention::HalfCell),
            "full-cell" => Ok(VolterraConvention::FullCell),
            other => Err(QuadratureError::UnknownConvention(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n_cells: usize,
    pub h: f64,
    pub rule: Rule,
    pub nodes: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn build_grid(a: f64, b: f64, n_cells: usize, rule: Rule) -> Result<Grid, QuadratureError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadratureError::EmptyInterval { a, b });
    }
    if n_cells == 0 {
        return Err(QuadratureError::NoCells);
    }
    if rule == Rule::Simpson && !n_cells.is_multiple_of(2) {
        return Err(QuadratureError::OddSimpson(n_cells));
    }
    let h = (b - a) / n_cells as f64;
    let nodes = match rule {
        Rule::Midpoint => (0..n_cells).map(|i| a + (i as f64 + 0.5) * h).collect(),
        Rule::Trapezoid | Rule::Simpson => {
            let mut nodes: Vec<f64> = (0..=n_cells).map(|i| a + i as f64 * h).collect();
            nodes[n_cells] = b;
            nodes
        }
    };
    Ok(Grid {
        a,
        b,
        n_cells,
        h,
        rule,
        nodes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadScheme {
    pub rule: Rule,
    pub convention: VolterraConvention,
    pub order: u32,
    pub global_weights: Vec<f64>,
    volterra: Vec<Vec<f64>>,
}

impl QuadScheme {
    pub fn len(&self) -> usize {
        self.global_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_weights.is_empty()
    }

    /// Weights `w_{i_0}, ..., w_{i_i}` for the integral over `[a, t_i]`.
    pub fn volterra_row(&self, i: usize) -> &[f64] {
        &self.volterra[i]
    }

    pub fn integrate(&self, samples: &[f64]) -> Result<f64, QuadratureError> {
        if samples.len() != self.len() {
            return Err(QuadratureError::LengthMismatch {
                expected: self.len(),
                got: samples.len(),
            });
        }
        Ok(self
            .global_weights
            .iter()
            .zip(samples)
            .map(|(w, f)| w * f)
            .sum())
    }
}

pub fn build_scheme(grid: &Grid, rule: Rule) -> Result<QuadScheme, QuadratureError> {
    build_scheme_with(grid, rule, VolterraConvention::HalfCell)
}

pub fn build_scheme_with(
    grid: &Grid,
    rule: Rule,
    convention: VolterraConvention,
) -> Result<QuadScheme, QuadratureError> {
    if grid.rule != rule {
        return Err(QuadratureError::RuleMismatch {
            grid: grid.rule,
            scheme: rule,
        });
    }
    if rule != Rule::Midpoint && convention == VolterraConvention::FullCell {
        return Err(QuadratureError::ConventionMismatch { convention });
    }
    let h = grid.h;
    let (global_weights, volterra) = match rule {
        Rule::Midpoint => {
            let tail = match convention {
                VolterraConvention::HalfCell => 0.5 * h,
                VolterraConvention::FullCell => h,
            };
            let rows = (0..grid.len())
                .map(|i| {
                    let mut row = vec![h; i + 1];
                    row[i] = tail;
                    row
                })
                .collect();
            (vec![h; grid.len()], rows)
        }
        Rule::Trapezoid => (
            trapezoid_weights(grid.n_cells, h),
            (0..grid.len()).map(|i| trapezoid_weights(i, h)).collect(),
        ),
        Rule::Simpson => (
            simpson_weights(grid.n_cells, h),
            (0..grid.len())
                .map(|i| {
                    if i % 2 == 0 {
                        simpson_weights(i, h)
                    } else {
                        trapezoid_weights(i, h)
                    }
                })
                .collect(),
        ),
    };
    Ok(QuadScheme {
        rule,
        convention,
        order: rule.order(),
        global_weights,
        volterra,
    })
}

/// Composite trapezoid over `cells` cells (`cells + 1` nodes); zero cells gives `[0]`.
fn trapezoid_weights(cells: usize, h: f64) -> Vec<f64> {
    if cells == 0 {
        return vec![0.0];
    }
    let mut w = vec![h; cells + 1];
    w[0] = 0.5 * h;
    w[cells] = 0.5 * h;
    w
}

/// Composite Simpson over an even number of cells.
fn simpson_weights(cells: usize, h: f64) -> Vec<f64> {
    debug_assert!(cells.is_multiple_of(2));
    if cells == 0 {
        return vec![0.0];
    }
    let mut w: Vec<f64> = (0..=cells)
        .map(|k| {
            if k % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            }
        })
        .collect();
    w[0] = h / 3.0;
    w[cells] = h / 3.0;
    w
}
