pub mod config;
pub mod error;
pub mod extraction;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod network;
pub mod optimizer;
pub mod pipeline;
pub mod real;
pub mod sampling;
pub mod trainer;

pub use error::{Error, Result};
