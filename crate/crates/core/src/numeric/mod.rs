//! High-precision numerics: transport of flat sections and period integrals.

pub mod cmat;
pub mod local;
pub mod mp;
pub mod path;
pub mod periods;
pub mod policy;
pub mod transport;

pub use cmat::CMat;
pub use local::LocalFrame;
pub use mp::Complex;
pub use path::Path;
pub use policy::PrecisionPolicy;
pub use transport::{NumRat, NumSystem, Until, Walk};
