pub mod cli;
pub mod domain;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod sampling;
pub mod sml;
pub mod war;

pub use error::{Error, Result};
