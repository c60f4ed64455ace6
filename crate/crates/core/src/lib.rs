//! Physical-layer authentication of satellite transmitters from raw IQ
//! samples.
//!
//! Bursts are read from CSV or synthesized ([`synth`]), grouped and drawn as
//! bivariate-histogram images ([`imaging`]), then classified by a compact
//! CNN ([`cnn`]) or authenticated one satellite at a time by a sparse
//! autoencoder ([`autoenc`]). [`eval`] holds the metrics and experiment
//! drivers, [`cli`] the command-line front end.

pub mod autoenc;
pub mod cli;
pub mod cnn;
pub mod config;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod iqcore;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use iqcore::{Dataset, IqFrame, IqSample, SatId};
