//! Simulation and decoding core for a PON monitoring scheme in which each
//! customer branch is tagged by a single FBG of unique spectral bandwidth and
//! read out through dispersive wavelength-to-time mapping.
//!
//! The crate covers the whole monitoring chain: probe pulse synthesis,
//! chromatic dispersion, grating reflection, link budget, photodetection and
//! digitization into an OTDR-like trace, and the recognition algorithm that
//! turns measured pulse widths back into branch identities and health.
//!
//! All numerics are generic over the scalar type (see [`scalar::Float`]);
//! concrete `f64` aliases live at the crate root.

pub mod decoder;
pub mod encoder;
pub mod error;
pub mod optics;
mod profiles;
pub mod pulse;
pub mod scalar;
pub mod sim;
pub mod spectrum;
pub mod trace;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use scalar::Float;

/// `f64` aliases for the main domain types.
pub type FiberParams64 = optics::FiberParams<f64>;
pub type DispersionBudget64 = optics::DispersionBudget<f64>;
pub type SpectralGrid64 = spectrum::SpectralGrid<f64>;
pub type SpectralField64 = spectrum::SpectralField<f64>;
pub type Waveform64 = waveform::Waveform<f64>;
pub type ProbePulseSpec64 = pulse::ProbePulseSpec<f64>;
pub type FbgEncoder64 = encoder::FbgEncoder<f64>;
pub type Codebook64 = encoder::Codebook<f64>;
pub type Branch64 = sim::Branch<f64>;
pub type PonTopology64 = sim::PonTopology<f64>;
pub type MonitoringModuleConfig64 = sim::MonitoringModuleConfig<f64>;
pub type ReceiverConfig64 = sim::ReceiverConfig<f64>;
pub type DecoderConfig64 = decoder::DecoderConfig<f64>;
pub type DetectionEvent64 = decoder::DetectionEvent<f64>;
pub type DecodedUser64 = decoder::DecodedUser<f64>;
