pub mod baselines;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod project;
pub mod stats;
pub mod train;
pub mod transform;

pub use error::{Error, Result};
