//! Numerical laboratory for the geodesic flow of the Bolza surface: exact
//! frame flows, fiber-Fourier calculus, symmetric tensor calculus, the closed
//! geodesic census, X-ray transforms and Monte-Carlo estimators for the
//! damped-correlation operator Π and its normal operators.

pub mod census;
pub mod disk;
pub mod error;
pub mod experiments;
pub mod fiber;
pub mod fields;
pub mod group;
pub mod phase;
pub mod pi;
pub mod quadrature;
pub mod sampling;
pub mod stats;
pub mod surface;
pub mod tensor;
pub mod xray;

pub use error::{LabError, Result};
pub use fiber::FiberField;
pub use group::{Flow, GroupElement};
pub use num_complex::Complex64;
pub use phase::PhasePoint;
pub use surface::{build_bolza, SurfaceGroup};
pub use tensor::SymmetricTensor;
