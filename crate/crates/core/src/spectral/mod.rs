//! Sparse trigonometric polynomials, uniform torus grids, and transforms
//! between coefficients and samples.

mod eval;
mod grid;
mod poly;
mod separable;

pub use eval::{coefficients_from_grid, evaluate_on_grid, EvalOptions, DEFAULT_MEMORY_BUDGET};
pub use grid::Grid;
pub use poly::{PointEvaluator, TrigPoly, DEFAULT_SUPPORT_CAP, PRUNE_THRESHOLD};
pub use separable::{IntervalUnion, SeparablePoly, TensorTerm};
