pub mod calibration;
pub mod error;
pub mod inference;
pub mod models;
pub mod pipeline;
pub mod priors;
pub mod special;

pub use error::{Error, Result, Stage};
pub use models::{DomainParams, FrechetParams, GumbelParams, Model, WeibullParams};
