//! Nonlinear dynamics of shear- and torsion-free Kirchhoff rods discretized
//! with smooth B-splines.
//!
//! The rod configuration is represented only by spline control points; the
//! director is the normalized tangent. Static problems are solved by load
//! stepping with Newton–Raphson, transient problems by a hybrid
//! midpoint/trapezoidal implicit scheme that conserves linear momentum
//! exactly and angular momentum and energy approximately. Spurious
//! high-frequency (outlier) modes can be removed by strongly imposing extra
//! boundary constraints through a constant extraction operator.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod extraction;
pub mod forces;
pub mod kinematics;
pub mod linalg;
pub mod pendulum;
pub mod quadrature;
pub mod spline;
pub mod statics;

pub use error::{Error, Result};

/// 3-vector used for all pointwise rod quantities.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrix used for pointwise operators.
pub type Mat3 = nalgebra::Matrix3<f64>;
/// Dynamically sized global vector (coefficients, residuals).
pub type DVec = nalgebra::DVector<f64>;
/// Dynamically sized dense matrix.
pub type DMat = nalgebra::DMatrix<f64>;
