//! Simulation core for hierarchical fault-tolerant pitch control.
//!
//! `no_std` with `alloc`. Holds the plant, estimator, splitter, controller
//! and closed-loop runner; file formats and the CLI live in `faultsim`.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod allocator;
pub mod controller;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod metrics;
pub mod ode;
pub mod plant;
pub mod scenario;
pub mod wind;

pub use error::{Error, Result};
