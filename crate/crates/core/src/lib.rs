//! Simulation and signal-analysis toolkit for a Bragg-pulse Mach-Zehnder
//! atom-interferometer gravimeter.
//!
//! The crate models the instrument end to end:
//!
//! - [`physics`] — closed-form relations of the vertical Bragg lattice:
//!   photon-recoil frequency, free-fall resonance chirp, Mach-Zehnder phase.
//! - [`sensitivity`] — the interferometer's response to an instantaneous
//!   laser phase step and its frequency-domain transfer weighting.
//! - [`noise`] — synthesis of the heterodyne beat note with tonal, shaped,
//!   additive and multiplicative noise channels.
//! - [`spectral`] — lock-in (I/Q) demodulation, Welch PSD estimation, dBm
//!   conversion and transfer-weighted noise integration.
//! - [`fringe`] — Monte-Carlo fringe scans with projection noise, sinusoidal
//!   fringe fitting and gravity extraction from multi-`T` scans.
//! - [`stability`] — Allan deviation, white-noise extrapolation and the
//!   projection-noise sensitivity floor.
//!
//! Everything is deterministic for a fixed seed; see [`seeding`] for how
//! independent sub-streams are derived.

pub mod fringe;
pub mod noise;
pub mod physics;
pub mod seeding;
pub mod sensitivity;
pub mod series;
pub mod spectral;
pub mod stability;

pub use fringe::{FringeFit, FringeScan, GravityEstimate, ScanParams};
pub use noise::{BeatConfig, NoiseSpec, ShapedBand, Tone};
pub use physics::{AtomSpecies, BraggConfig, PulseSequence};
pub use sensitivity::TransferGrid;
pub use series::TimeSeries;
pub use spectral::{Demodulated, PsdEstimate, PsdUnit};
pub use stability::{AllanResult, ShotSeries};
