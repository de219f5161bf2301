//! Penalized multiphase tumor-growth simulator on a uniform Cartesian grid.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod kinetics;
pub mod levelset;
pub mod momentum;
pub mod nutrient;
pub mod penalty;
pub mod state;
pub mod transport;

pub use error::{ConfigError, Error, Result};
