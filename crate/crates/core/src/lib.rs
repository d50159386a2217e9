//! Utility-shaped games with a public index: response curves, shaped
//! utilities, decentralized dynamics, centralized benchmarks, quantization
//! and KPI analysis.

pub mod curve;
pub mod discrete;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod model;
pub mod analysis;
pub mod benchmarks;
pub mod optim;

pub use error::{Error, Result};
