//! Automated univariate forecasting.
//!
//! The crate walks a series through quality repair, temporal profiling,
//! candidate model search on a validation split, performance-weighted
//! ensembling and report rendering. Every stage is a plain function over
//! owned data so the pipeline can be replayed from its log.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advisor;
pub mod ensemble;
pub mod error;
pub mod models;
pub mod par;
pub mod pipeline;
pub mod planner;
pub mod preprocess;
pub mod profile;
pub mod reporter;
pub mod series;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use series::Series;
