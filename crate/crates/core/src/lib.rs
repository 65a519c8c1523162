//! Adaptive multiresolution finite-volume solver for the three-dimensional ideal
//! GLM-MHD equations.
//!
//! The solver stores cell averages on a graded octree, evolves them with MC-limited
//! reconstruction, the HLLD Riemann solver and a two-stage Runge-Kutta scheme, and
//! adapts the tree after every step by thresholding multiresolution details.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/` directory.

pub mod cases;
pub mod config;
pub mod error;
pub mod evolution;
pub mod flux;
pub mod mesh;
pub mod output;
pub mod state;
pub mod uniform;

pub use error::{Error, Result};
pub use state::{ConservedState, Direction, FluxVector, GasGamma, PrimitiveState};
