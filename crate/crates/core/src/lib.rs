pub mod catalog;
pub mod cohort;
pub mod error;
pub mod graph;
pub mod precedence;
pub mod scalar;
pub mod scoring;

pub use error::{Error, Result};
pub type Real = f64;
