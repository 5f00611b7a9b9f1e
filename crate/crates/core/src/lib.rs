//! Transmit beamforming, power allocation and power-splitting design for
//! multi-user interference channels with simultaneous wireless information
//! and power transfer.
//!
//! Pipelines live in [`programs`]; [`campaign`] runs Monte-Carlo experiments
//! over random channel draws.

pub mod beamform;
pub mod campaign;
pub mod channel;
pub mod error;
pub mod model;
pub mod programs;

pub use beamform::{BeamformerWeights, MrtZfCoefficients, Scheme};
pub use channel::{generate_channels, ChannelSet};
pub use error::{BeamError, Result};
pub use model::{LinkGains, OutcomeStatus, SolveOutcome, SystemConfig, Tolerance};
