//! Design-matrix abstraction and incremental triangular factors.

mod design;
mod factor;
mod response;

pub use design::{CscMatrix, DenseMatrix, RawMatrix, StandardizedDesign};
pub use factor::TriangularFactor;
pub use response::CenteredResponse;
