//! Bias correction of daily rainfall with two-state Markov-chain aware
//! occurrence thresholds.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod conventional;
pub mod crossval;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod markov;
pub mod params;
pub mod plot;
pub mod qc;
pub mod seasonal;
pub mod series;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
