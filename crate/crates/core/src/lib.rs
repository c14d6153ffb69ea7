pub mod classify;
pub mod cli;
pub mod data;
pub mod error;
pub mod factor;
pub mod features;
pub mod grbf;
pub mod infer;
pub mod manifold;
pub mod pipeline;

pub use error::{Error, Result};
