//! Hyperbolic-cross trigonometric polynomials on the torus, the kernels built
//! from them, and exact computations of Remez and Nikol'skii type ratios on
//! uniform grids.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod discretize;
pub mod error;
pub mod fuzz;
pub mod indexsets;
pub mod kernels;
pub mod measure;
pub mod nikolskii;
pub mod remez;
pub mod riesz2d;
pub mod sample;
pub mod scaling;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use indexsets::{IndexSet, MultiIndex};
pub use measure::{GridFunction, GridSet};
pub use scalar::Real;
pub use spectral::{Grid, SeparablePoly, TrigPoly};

pub use num_complex::Complex;

pub type TrigPoly64 = TrigPoly<f64>;
pub type TrigPoly32 = TrigPoly<f32>;
pub type GridFunction64 = GridFunction<f64>;
pub type SeparablePoly64 = SeparablePoly<f64>;
