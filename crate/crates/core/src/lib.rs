pub mod collapse;
pub mod constants;
pub mod experiment;
pub mod error;
pub mod grid;
pub mod measure;
pub mod propagator;
pub mod protective;
pub mod sampler;
pub mod spectrum;

pub use error::{DqmError, Result};
