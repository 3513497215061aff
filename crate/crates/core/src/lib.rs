pub mod cli;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grammar;
pub mod gtrender;
pub mod learning;
pub mod sampler;
pub mod scene;

pub use error::{Error, Result};
