pub mod cli;
pub mod data;
pub mod error;
pub mod formula;
pub mod model;
pub mod plot;
pub mod predscor;

pub use error::{Error, Result};
pub mod stats;
pub mod terms;
