//! Physical constants and closed-form relations of the vertical Bragg
//! lattice: photon-recoil frequency, lattice resonance under free fall,
//! Doppler-compensating chirp, Mach-Zehnder phase, and two-photon Rabi
//! coupling.
//!
//! Public interfaces report frequencies in Hz and chirps in Hz/s; angular
//! rates (rad/s) are used only for Rabi and recoil frequencies.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical constants (CODATA 2018).
pub mod constants {
    /// Reduced Planck constant (J·s).
    pub const HBAR: f64 = 1.054571817e-34;
    /// Mass of ⁸⁷Rb (kg).
    pub const RB87_MASS_KG: f64 = 1.44316060e-25;
    /// D2-line lattice wavelength for ⁸⁷Rb (m).
    pub const RB87_WAVELENGTH_M: f64 = 780.24e-9;
}

#[derive(Debug, Error)]
pub enum PhysicsError {
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("Bragg order must be at least 1")]
    ZeroOrder,
    #[error("detuning must be nonzero")]
    ZeroDetuning,
    #[error("alignment factor must lie in (0, 1] (got {0})")]
    BadAlignment(f64),
    #[error("reading species file: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing species JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn require_positive(field: &'static str, value: f64) -> Result<(), PhysicsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(PhysicsError::NonPositive { field, value })
    }
}

/// An atomic species and the lattice light addressing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpecies {
    /// Atomic mass (kg).
    pub mass_kg: f64,
    /// Lattice wavelength (m).
    pub wavelength_m: f64,
    pub label: String,
}

impl AtomSpecies {
    pub fn new(mass_kg: f64, wavelength_m: f64, label: impl Into<String>) -> Result<Self, PhysicsError> {
        let species = Self { mass_kg, wavelength_m, label: label.into() };
        species.validate()?;
        Ok(species)
    }

    /// ⁸⁷Rb on the D2 line, the compiled-in default.
    pub fn rb87() -> Self {
        Self {
            mass_kg: constants::RB87_MASS_KG,
            wavelength_m: constants::RB87_WAVELENGTH_M,
            label: "Rb87".into(),
        }
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        require_positive("mass_kg", self.mass_kg)?;
        require_positive("wavelength_m", self.wavelength_m)
    }

    /// Lattice wavenumber k = 2π/λ (rad/m).
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_m
    }

    pub fn from_json_str(json: &str) -> Result<Self, PhysicsError> {
        let species: Self = serde_json::from_str(json)?;
        species.validate()?;
        Ok(species)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, PhysicsError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Bragg-lattice configuration: species, diffraction order, and beam geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BraggConfig {
    pub species: AtomSpecies,
    /// Diffraction order n (2nħk momentum transfer).
    pub order: u32,
    /// Single-photon detuning Δ (rad/s); informational.
    #[serde(rename = "detuning_rad_s", default)]
    pub detuning: f64,
    /// Cosine of the beam-vertical misalignment entering every k·g product.
    /// 1.0 for perfectly vertical beams.
    #[serde(default = "default_alignment")]
    pub alignment: f64,
}

fn default_alignment() -> f64 {
    1.0
}

impl BraggConfig {
    pub fn new(species: AtomSpecies, order: u32) -> Result<Self, PhysicsError> {
        let cfg = Self { species, order, detuning: 0.0, alignment: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        self.species.validate()?;
        if self.order == 0 {
            return Err(PhysicsError::ZeroOrder);
        }
        if !(self.alignment > 0.0 && self.alignment <= 1.0) {
            return Err(PhysicsError::BadAlignment(self.alignment));
        }
        Ok(())
    }

    /// Projection of the lattice wavevector onto gravity: k·g (rad/s per s,
    /// i.e. rad/s²) for acceleration `g`.
    pub fn kg(&self, g: f64) -> f64 {
        self.species.wavenumber() * g * self.alignment
    }
}

/// Mach-Zehnder pulse timing and Rabi coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    /// Effective two-photon Rabi frequency Ω (rad/s).
    #[serde(rename = "rabi_rad_s")]
    pub rabi: f64,
    /// Beamsplitter (π/2) pulse duration τ (s); the mirror pulse lasts 2τ.
    #[serde(rename = "beamsplitter_s")]
    pub beamsplitter: f64,
    /// Free-evolution time T between pulses (s).
    #[serde(rename = "interrogation_s")]
    pub interrogation: f64,
    /// Full experimental cycle time (s), one shot per cycle.
    #[serde(rename = "cycle_s")]
    pub cycle_time: f64,
}

/// Pulse-area deviations beyond this are no longer "nominal π/2".
pub const PI_HALF_TOLERANCE: f64 = 1e-6;

impl PulseSequence {
    pub fn new(rabi: f64, beamsplitter: f64, interrogation: f64, cycle_time: f64) -> Result<Self, PhysicsError> {
        let seq = Self { rabi, beamsplitter, interrogation, cycle_time };
        seq.validate()?;
        Ok(seq)
    }

    /// Sequence with the beamsplitter duration chosen so Ω·τ = π/2 exactly.
    pub fn nominal(rabi: f64, interrogation: f64, cycle_time: f64) -> Result<Self, PhysicsError> {
        Self::new(rabi, FRAC_PI_2 / rabi, interrogation, cycle_time)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        require_positive("rabi_rad_s", self.rabi)?;
        require_positive("beamsplitter_s", self.beamsplitter)?;
        require_positive("interrogation_s", self.interrogation)?;
        require_positive("cycle_s", self.cycle_time)
    }

    /// Ω·τ − π/2, the beamsplitter pulse-area error.
    pub fn pulse_area_deviation(&self) -> f64 {
        self.rabi * self.beamsplitter - FRAC_PI_2
    }

    /// Whether the beamsplitter satisfies the π/2 condition to within
    /// [`PI_HALF_TOLERANCE`]. Off-nominal sequences are accepted everywhere
    /// but flagged, since the closed-form response assumes π/2 pulses.
    pub fn is_nominal_pi_half(&self) -> bool {
        self.pulse_area_deviation().abs() <= PI_HALF_TOLERANCE
    }

    /// Half-width of the sensitivity support: T + 2τ (s).
    pub fn half_support(&self) -> f64 {
        self.interrogation + 2.0 * self.beamsplitter
    }
}

/// Photon-recoil angular frequency ħk²/2m (rad/s).
pub fn recoil_frequency(species: &AtomSpecies) -> f64 {
    let k = species.wavenumber();
    constants::HBAR * k * k / (2.0 * species.mass_kg)
}

/// Lattice frequency difference resonant with order-n diffraction at time
/// `t` after release (Hz): (4nω_r + 2 k·g t) / 2π. Linear in `t` with slope
/// [`chirp_for_gravity`].
pub fn bragg_resonance_offset(cfg: &BraggConfig, g: f64, t: f64) -> f64 {
    (4.0 * cfg.order as f64 * recoil_frequency(&cfg.species) + 2.0 * cfg.kg(g) * t) / (2.0 * PI)
}

/// Chirp of the lattice frequency difference that cancels the free-fall
/// Doppler shift: k·g/π (Hz/s).
pub fn chirp_for_gravity(cfg: &BraggConfig, g: f64) -> Result<f64, PhysicsError> {
    require_positive("g", g)?;
    Ok(cfg.kg(g) / PI)
}

/// Inverse of [`chirp_for_gravity`]: the acceleration a given chirp cancels.
pub fn gravity_from_chirp(cfg: &BraggConfig, chirp: f64) -> Result<f64, PhysicsError> {
    require_positive("chirp", chirp)?;
    Ok(PI * chirp / (cfg.species.wavenumber() * cfg.alignment))
}

/// Mach-Zehnder phase n(2 k·g T² − 2πχT²) for sweep rate `chirp` (rad).
/// Zero exactly when the chirp matches [`chirp_for_gravity`].
pub fn mz_phase(cfg: &BraggConfig, seq: &PulseSequence, g: f64, chirp: f64) -> f64 {
    let t2 = seq.interrogation * seq.interrogation;
    cfg.order as f64 * (2.0 * cfg.kg(g) * t2 - 2.0 * PI * chirp * t2)
}

/// Two-photon Rabi frequency Ω₁Ω₂/2Δ for single-photon couplings Ω₁, Ω₂
/// and detuning Δ (all rad/s).
pub fn effective_rabi(omega1: f64, omega2: f64, detuning: f64) -> Result<f64, PhysicsError> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(PhysicsError::ZeroDetuning);
    }
    Ok(omega1 * omega2 / (2.0 * detuning))
}
