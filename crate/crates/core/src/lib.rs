//! Quadratic relations between periods of meromorphic connections on the
//! Riemann sphere, computed exactly where possible and to certified high
//! precision otherwise.

pub mod betti;
pub mod connection;
pub mod derham;
pub mod error;
pub mod exact;
pub mod expr;
pub mod formal;
pub mod numeric;
pub mod relations;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
pub use exact::{Laurent, Matrix, Point, Poly, RatFun, Scalar};
