//! File formats, batch execution and the command-line front end for the
//! `faultsim_core` closed-loop simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod error;
pub mod report;
pub mod run;
pub mod svg;

pub use error::{ConfigError, HarnessError, Result};
