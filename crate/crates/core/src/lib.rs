//! Numerical toolkit for suspension semiflows over expanding Markov interval maps.
//!
//! The crate discretises twisted transfer operators, measures the
//! non-integrability of the roof and estimates correlation decay of the
//! suspension flow.

pub mod catalogue;
pub mod config;
pub mod decay;
pub mod error;
pub mod grid;
pub mod markov_map;
pub mod observable;
pub mod quad;
pub mod renewal;
pub mod roof;
pub mod spectral;
pub mod suspension;
pub mod system;
pub mod transfer;
pub mod uni;

pub use error::{Error, Result};
pub use grid::{BNormContext, Grid, GridFunction};
pub use markov_map::{BranchWord, Interval, MapSpec, MarkovMap};
pub use num_complex::Complex64;
pub use observable::SuspensionObservable;
pub use config::ExperimentConfig;
pub use roof::{RoofFunction, RoofSpec};
pub use system::System;
