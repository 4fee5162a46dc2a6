//! Exact-rational toolkit for profit maximization when a seller with random
//! production costs sells to buyers with independent item values.
//!
//! Everything here is `no_std` (with `alloc`); file formats, the command line
//! and Monte-Carlo sampling live in the `profitlab-harness` crate.

#![no_std]
extern crate alloc;

pub mod analysis;
pub mod benchmark;
pub mod check;
pub mod error;
pub mod lp;
pub mod mechanisms;
pub mod model;
pub mod myerson;
pub mod ocrs;
pub mod oracles;
pub mod properties;
pub mod rational;
pub mod valuation;

pub use error::{Error, Result};
pub use rational::Q;
