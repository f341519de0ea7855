pub mod causal;
pub mod config;
pub mod crosscheck;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod grid;
pub mod hjb;
pub mod ladder;
pub mod norm;
pub mod output;
pub mod reach;
pub mod sampler;
pub mod scenarios;
pub mod wind;

pub use error::{Error, Result};
