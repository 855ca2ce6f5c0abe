//! Iterative solver for zeros of full-domain maximal monotone operators on R^d.
//!
//! The solver follows the regularization path p_μ (the solution of
//! θ_μ p + A p ∋ 0) with a certified radius: every iterate satisfies
//! |x_n − p_μ| ≤ r_n. As θ_μ → 0 the iterates converge to the minimum-norm
//! zero of A when one exists; otherwise |x_n| → ∞ while θ_μ x_n → −a⁰.
//!
//! - [`engine`]: the iteration, its step primitives and [`solve`].
//! - [`operators`]: affine, constant and subgradient maps, plus combinators.
//! - [`oracle`]: reference p_μ, resolvents, Yosida approximations.
//! - [`geometry`]: local sup-norm bounds and the angle inequality.
//! - [`catalog`]: fixtures with known analytic structure.

pub mod catalog;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod oracle;
pub mod schedule;
pub mod trace;
mod vector;

pub use engine::{
    epoch_reset, init_radius, radius_update, solve, solve_observed, step_lambda, step_update, Event, SolveConfig,
    SolveReport, SolverState, Status, StepRecord,
};
pub use error::{Error, Result};
pub use nalgebra;
pub use operators::{MonotoneMap, Op, ZeroSet};
pub use schedule::{Schedule, ScheduleViolation, ViolationKind};
pub use trace::{Trace, TraceRow};
pub use vector::{dist, vector, zeros, Vector};
