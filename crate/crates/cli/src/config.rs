//! Run configuration read from a TOML file.
//!
//! ```toml
//! [problem]
//! builtin = "example4_1"          # or a, b, k1, k2, g, M, L and optionally exact
//!
//! [quadrature]
//! rule = "midpoint"
//! cells = 50
//! volterra = "full-cell"
//!
//! [solver]
//! eps = 1e-3
//! method = "continuation"
//! n0 = 55
//!
//! [output]
//! path = "solution.csv"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use vfie::discrete::DiscreteSystem;
use vfie::hybrid::Overrides;
use vfie::problem::{builtin, from_expressions, ExpressionSources, VFProblem, DEFAULT_SEED};
use vfie::quadrature::{Rule, VolterraConvention};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Continuation,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub builtin: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub k1: Option<String>,
    pub k2: Option<String>,
    pub g: Option<String>,
    #[serde(rename = "M")]
    pub m_const: Option<f64>,
    #[serde(rename = "L")]
    pub l_const: Option<f64>,
    pub exact: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "default_rule")]
    pub rule: String,
    pub cells: usize,
    #[serde(default = "default_volterra")]
    pub volterra: String,
}

fn default_rule() -> String {
    "midpoint".into()
}

fn default_volterra() -> String {
    "half-cell".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub method: Method,
    #[serde(rename = "N")]
    pub n_steps: Option<usize>,
    pub m: Option<usize>,
    pub n_prime: Option<usize>,
    pub n0: Option<usize>,
    #[serde(default)]
    pub audit: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_eps() -> f64 {
    1e-3
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            eps: default_eps(),
            method: Method::default(),
            n_steps: None,
            m: None,
            n_prime: None,
            n0: None,
            audit: false,
            seed: default_seed(),
        }
    }
}

impl SolverSection {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            n_steps: self.n_steps,
            m: self.m,
            n_prime: self.n_prime,
            n0: self.n0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_path")]
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

fn default_path() -> PathBuf {
    PathBuf::from("solution.csv")
}

fn default_format() -> String {
    "csv".into()
}

fn default_precision() -> usize {
    10
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: default_path(),
            format: default_format(),
            precision: default_precision(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.quadrature.cells == 0 {
            return bad("[quadrature] cells must be at least 1".into());
        }
        if !(self.solver.eps > 0.0 && self.solver.eps.is_finite()) {
            return bad(format!(
                "[solver] eps must be positive, got {}",
                self.solver.eps
            ));
        }
        if self.output.format != "csv" {
            return bad(format!(
                "[output] format must be \"csv\", got {:?}",
                self.output.format
            ));
        }
        if !(1..=17).contains(&self.output.precision) {
            return bad(format!(
                "[output] precision must lie in 1..=17, got {}",
                self.output.precision
            ));
        }
        self.rule()?;
        self.convention()?;
        self.problem.check_shape()
    }

    pub fn rule(&self) -> Result<Rule, CliError> {
        self.quadrature
            .rule
            .parse()
            .map_err(|e: vfie::quadrature::QuadratureError| CliError::Config(e.to_string()))
    }

    pub fn convention(&self) -> Result<VolterraConvention, CliError> {
        self.quadrature
            .volterra
            .parse()
            .map_err(|e: vfie::quadrature::QuadratureError| CliError::Config(e.to_string()))
    }

    pub fn problem(&self) -> Result<VFProblem, CliError> {
        self.problem.build()
    }

    pub fn system(&self) -> Result<DiscreteSystem, CliError> {
        Ok(DiscreteSystem::build(
            self.problem()?,
            self.rule()?,
            self.quadrature.cells,
            self.convention()?,
        )?)
    }
}

impl ProblemSection {
    fn expression_fields(&self) -> [(&'static str, bool); 8] {
        [
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("k1", self.k1.is_some()),
            ("k2", self.k2.is_some()),
            ("g", self.g.is_some()),
            ("M", self.m_const.is_some()),
            ("L", self.l_const.is_some()),
            ("exact", self.exact.is_some()),
        ]
    }

    fn check_shape(&self) -> Result<(), CliError> {
        let given: Vec<&str> = self
            .expression_fields()
            .iter()
            .filter(|(_, set)| *set)
            .map(|(name, _)| *name)
            .collect();
        match (&self.builtin, given.is_empty()) {
            (Some(_), false) => Err(CliError::Config(format!(
                "[problem] sets both `builtin` and expression fields ({})",
                given.join(", ")
            ))),
            (None, true) => Err(CliError::Config(
                "[problem] needs either `builtin` or the expression fields a, b, k1, k2, g, M, L"
                    .into(),
            )),
            (None, false) => {
                let missing = self
                    .expression_fields()
                    .iter()
                    .take(7)
                    .find(|(_, set)| !set)
                    .map(|(name, _)| *name);
                match missing {
                    Some(name) => Err(CliError::Config(format!("[problem] is missing `{name}`"))),
                    None => Ok(()),
                }
            }
            (Some(_), true) => Ok(()),
        }
    }

    fn build(&self) -> Result<VFProblem, CliError> {
        self.check_shape()?;
        if let Some(name) = &self.builtin {
            return Ok(builtin(name)?);
        }
        let sources = ExpressionSources {
            k1: self.k1.as_deref().unwrap_or_default(),
            k2: self.k2.as_deref().unwrap_or_default(),
            g: self.g.as_deref().unwrap_or_default(),
            exact: self.exact.as_deref(),
        };
        // check_shape guarantees the numeric fields are present
        let num = |v: Option<f64>| v.unwrap_or(f64::NAN);
        Ok(from_expressions(
            num(self.a),
            num(self.b),
            &sources,
            num(self.m_const),
            num(self.l_const),
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[problem]
a = 0.0
b = 1.0
k1 = "5*t*s*cos(x)"
k2 = "(11/2)*t^2*s^2*x"
g = "11/8*t^2 - 4*t + 5*t*cos(t) + 5*t^2*sin(t)"
M = 1.1785113019775793
L = 1.1
exact = "t"

[quadrature]
rule = "trapezoid"
cells = 40
volterra = "half-cell"

[solver]
eps = 1e-4
method = "newton"
N = 3
m = 9
n_prime = 7
n0 = 60
audit = true
seed = 42

[output]
path = "out.csv"
format = "csv"
precision = 12
"#;

    #[test]
    fn every_documented_field_is_read() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.problem.k1.as_deref(), Some("5*t*s*cos(x)"));
        assert_eq!(cfg.problem.m_const, Some(1.1785113019775793));
        assert_eq!(cfg.problem.l_const, Some(1.1));
        assert_eq!(cfg.problem.exact.as_deref(), Some("t"));
        assert_eq!(cfg.rule().unwrap(), Rule::Trapezoid);
        assert_eq!(cfg.quadrature.cells, 40);
        assert_eq!(cfg.convention().unwrap(), VolterraConvention::HalfCell);
        assert_eq!(cfg.solver.eps, 1e-4);
        assert_eq!(cfg.solver.method, Method::Newton);
        assert_eq!(
            cfg.solver.overrides(),
            Overrides {
                n_steps: Some(3),
                m: Some(9),
                n_prime: Some(7),
                n0: Some(60)
            }
        );
        assert!(cfg.solver.audit);
        assert_eq!(cfg.solver.seed, 42);
        assert_eq!(cfg.output.path, PathBuf::from("out.csv"));
        assert_eq!(cfg.output.precision, 12);
        assert_eq!(cfg.system().unwrap().dim(), 41);
    }

    #[test]
    fn defaults() {
        let cfg =
            RunConfig::parse("[problem]\nbuiltin = \"example4_1\"\n[quadrature]\ncells = 10\n")
                .unwrap();
        assert_eq!(cfg.rule().unwrap(), Rule::Midpoint);
        assert_eq!(cfg.convention().unwrap(), VolterraConvention::HalfCell);
        assert_eq!(cfg.solver, SolverSection::default());
        assert_eq!(cfg.output, OutputSection::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        for text in [
            "[problem]\nbuiltin = \"example4_1\"\nbulitin = 1\n[quadrature]\ncells = 10\n",
            "[problem]\nbuiltin = \"example4_1\"\n[quadrature]\ncells = 10\n[solver]\nepsilon = 1.0\n",
            "[problem]\nbuiltin = \"example4_1\"\n[quadrature]\ncells = 10\n[extra]\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn problem_shape_errors() {
        let missing_m = FULL.replace("M = 1.1785113019775793\n", "");
        match RunConfig::parse(&missing_m) {
            Err(CliError::Config(msg)) => assert!(msg.contains("`M`"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let both = FULL.replace("[problem]\n", "[problem]\nbuiltin = \"example4_1\"\n");
        assert!(matches!(RunConfig::parse(&both), Err(CliError::Config(_))));
        let neither = "[problem]\n[quadrature]\ncells = 10\n";
        assert!(matches!(
            RunConfig::parse(neither),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn value_errors() {
        let base = "[problem]\nbuiltin = \"example4_1\"\n[quadrature]\n";
        for tail in [
            "cells = 0\n",
            "cells = 4\n[solver]\neps = 0.0\n",
            "cells = 4\nrule = \"gauss\"\n",
            "cells = 4\nvolterra = \"quarter\"\n",
            "cells = 4\n[output]\nformat = \"json\"\n",
            "cells = 4\n[output]\nprecision = 0\n",
            "cells = 4\n[solver]\nmethod = \"bisection\"\n",
        ] {
            let text = format!("{base}{tail}");
            assert!(
                matches!(RunConfig::parse(&text), Err(CliError::Config(_))),
                "{tail}"
            );
        }
    }
}
