// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod classical;
pub mod config;
pub mod error;
pub mod flux;
pub mod invariants;
pub mod io;
pub mod lattice;
pub mod potential;
pub mod projectors;
pub mod propagators;
pub mod recipes;
pub mod runner;
mod spectral;

pub use error::{Result, ZenoError};
