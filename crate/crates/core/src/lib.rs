//! Exact Veech-group algebra, the balanced Kontsevich–Zorich cocycle, tremor
//! deformations and horocycle experiments over the regular octagon locus in
//! the stratum H(2).

pub mod cocycle;
pub mod error;
pub mod experiments;
pub mod field;
pub mod matrix;
pub mod report;
pub mod scalar;
pub mod surface;
pub mod locus;
pub mod veech;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Embedding, QSqrt2, Sign};
pub use matrix::{ConjClass, Mat2, Svd2};
pub use scalar::Scalar;

/// 2×2 matrix over ℚ(√2).
pub type ExactMat = Mat2<QSqrt2>;
/// 2×2 matrix of doubles.
pub type RealMat = Mat2<f64>;
