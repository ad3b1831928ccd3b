//! Online Bayesian passive-aggressive learning for max-margin topic models:
//! classic PA, online MedLDA and truncation-free online MedHDP, with
//! test-time prediction, evaluation and a run layer for the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod corpus;
pub mod error;
pub mod medhdp;
pub mod medlda;
pub mod model;
pub mod numerics;
pub mod pa;
pub mod predict;
pub mod run;
pub mod snapshot;
pub mod synthetic;

pub use error::{Error, Result};
