//! Joint active and passive beamforming for mmWave downlinks assisted by
//! several intelligent reflecting surfaces (IRSs) with low-resolution phase
//! shifters.
//!
//! - [`channel`]: array responses, 28 GHz path loss and channel realizations.
//! - [`beamformer`]: the closed-form phase alignment + quantization + MRT
//!   solution, and the brute-force / upper-bound oracles used to audit it.
//! - [`analysis`]: closed-form quantization loss and power scaling law.
//! - [`sim`]: seeded Monte Carlo experiments.

pub mod analysis;
pub mod beamformer;
pub mod channel;
pub mod config;
pub mod error;
pub mod sim;

pub use config::{PhaseResolution, ScenarioGeometry, SystemConfig};
pub use error::{Error, Result};
