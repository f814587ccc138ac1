//! Numerical solution of nonlinear Volterra–Fredholm integral equations of the
//! second kind,
//!
//! ```text
//! x(t) + ∫_a^t K1(t, s, x(s)) ds + ∫_a^b K2(t, s, x(s)) ds = g(t),
//! ```
//!
//! by Newton–Cotes discretization followed by a hybrid of contraction-mapping
//! iteration (for the Volterra part) and parameter continuation (for the
//! monotone Fredholm part).
//!
//! ```no_run
//! use vfie::discrete::DiscreteSystem;
//! use vfie::hybrid::{derive_for_system, solve, Overrides};
//! use vfie::problem::example_4_1;
//! use vfie::quadrature::{Rule, VolterraConvention};
//!
//! let sys = DiscreteSystem::build(example_4_1(), Rule::Midpoint, 50, VolterraConvention::HalfCell)?;
//! let params = derive_for_system(&sys, 1e-3, &Overrides::default())?;
//! let sol = solve(&sys, &params)?;
//! println!("residual {:e}, bound {:e}", sol.residual, sol.budget.iteration_bound);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod continuation;
pub mod discrete;
pub mod expr;
pub mod hybrid;
pub mod oracle;
pub mod problem;
pub mod quadrature;

pub use discrete::{DiscreteSystem, StateVector};
pub use hybrid::{Solution, SolverParams};
pub use problem::VFProblem;
