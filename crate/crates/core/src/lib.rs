//! Discrete-time survival analysis toolkit.
//!
//! Censoring-aware interval targets, a logistic-hazard feedforward network
//! trained by hand-derived backpropagation, Spearman and random-forest
//! selection of clinical variables, and time-dependent evaluation
//! (concordance, cumulative/dynamic AUC, survival curves and violin
//! summaries).

pub mod cohort;
pub mod config;
pub mod curves;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod select;
pub mod survnet;
pub mod timegrid;

pub use error::{Error, Result};
pub use exec::Exec;
