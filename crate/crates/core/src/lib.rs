pub mod backbone;
pub mod cli;
pub mod dataset;
pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod nn;
pub mod norm;
pub mod pipeline;
pub mod predictor;
pub mod trainer;
pub mod wavelet;

pub use error::{Result, WdanError};
