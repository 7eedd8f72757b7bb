//! Exact and asymptotic analysis of the p-tensor Curie-Weiss Potts model.

pub mod error;
pub mod model;
pub mod phase;
pub mod exact;
pub mod quad;
pub mod sampler;
pub mod limits;
pub mod inference;
mod roots;

pub use error::{Error, Result};
pub use model::{ModelSpec, ProbVector};
pub use roots::{bisect_increasing, BisectResult};
