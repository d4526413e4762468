//! Scenario files: a versioned JSON document holding one block per pipeline
//! stage. Unknown keys anywhere are rejected, and every block re-validates
//! against its module's invariants with the offending field path in the
//! error.

use braggsim_core::fringe::{ScanAxis, ScanParams};
use braggsim_core::noise::{BeatConfig, NoiseSpec};
use braggsim_core::physics::{chirp_for_gravity, AtomSpecies, BraggConfig, PulseSequence};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCENARIO_VERSION: u32 = 1;

/// Bundled scenarios compiled into the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("single-aom", include_str!("../scenarios/single-aom.json")),
    ("dual-aom", include_str!("../scenarios/dual-aom.json")),
    ("dual-aom-single-fiber", include_str!("../scenarios/dual-aom-single-fiber.json")),
    ("fig2-transfer", include_str!("../scenarios/fig2-transfer.json")),
    ("fringe-T10ms", include_str!("../scenarios/fringe-T10ms.json")),
    ("allan-white", include_str!("../scenarios/allan-white.json")),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BraggBlock {
    pub order: u32,
    #[serde(default)]
    pub detuning_rad_s: f64,
    #[serde(default = "one")]
    pub alignment: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemodBlock {
    /// Defaults to carrier/4 when absent.
    #[serde(default)]
    pub lp_cutoff_hz: Option<f64>,
    pub rbw_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationBlock {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferBlock {
    pub f_lo_hz: f64,
    pub f_hi_hz: f64,
    pub points: usize,
}

impl Default for TransferBlock {
    fn default() -> Self {
        Self { f_lo_hz: 1.0, f_hi_hz: 50_000.0, points: 2000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum FringeMode {
    SweepRate,
    PulsePhase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeBlock {
    pub g_true_ms2: f64,
    pub mode: FringeMode,
    /// Grid centre; defaults to the resonance chirp (sweep-rate mode) or 0
    /// (pulse-phase mode).
    #[serde(default)]
    pub center_hz_per_s: Option<f64>,
    #[serde(default)]
    pub center_rad: Option<f64>,
    /// Scan span in fringe periods.
    pub span_periods: f64,
    pub points: usize,
    pub atoms: u64,
    pub contrast: f64,
    pub shots_per_point: u32,
    #[serde(default)]
    pub phase_kick_rms_rad: f64,
    #[serde(default)]
    pub detection_noise_rms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityBlock {
    pub cycle_time_s: f64,
    pub shots: usize,
    /// White per-shot sigma in µGal.
    pub sigma_ugal: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoBlock {
    /// Scenario to run alongside for a suppression-ratio printout.
    #[serde(default)]
    pub compare_to: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub species: Option<AtomSpecies>,
    #[serde(default)]
    pub bragg: Option<BraggBlock>,
    #[serde(default)]
    pub sequence: Option<PulseSequence>,
    #[serde(default)]
    pub beat: Option<BeatConfig>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub demod: Option<DemodBlock>,
    #[serde(default)]
    pub integration: Option<IntegrationBlock>,
    #[serde(default)]
    pub transfer: Option<TransferBlock>,
    #[serde(default)]
    pub fringe: Option<FringeBlock>,
    #[serde(default)]
    pub stability: Option<StabilityBlock>,
    #[serde(default)]
    pub demo: Option<DemoBlock>,
}

impl Scenario {
    /// Parses and fully validates a scenario document.
    pub fn from_json(json: &str) -> Result<Self, CliError> {
        let scenario: Scenario =
            serde_json::from_str(json).map_err(|e| CliError::invalid("scenario", e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Resolves `name_or_path` as a file path first, then as a bundled name.
    pub fn load(name_or_path: &str) -> Result<Self, CliError> {
        let path = std::path::Path::new(name_or_path);
        if path.is_file() {
            return Self::from_json(&std::fs::read_to_string(path)?);
        }
        for (name, json) in BUNDLED {
            if *name == name_or_path {
                return Self::from_json(json);
            }
        }
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        Err(CliError::invalid(
            "scenario",
            format!("{name_or_path:?} is neither a file nor a bundled scenario {names:?}"),
        ))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != SCENARIO_VERSION {
            return Err(CliError::invalid(
                "version",
                format!("unsupported scenario version {} (expected {SCENARIO_VERSION})", self.version),
            ));
        }
        if self.name.is_empty() {
            return Err(CliError::invalid("name", "must not be empty"));
        }
        if let Some(species) = &self.species {
            species.validate().map_err(|e| CliError::invalid("species", e))?;
        }
        if let Some(bragg) = &self.bragg {
            if bragg.order == 0 {
                return Err(CliError::invalid("bragg.order", "must be at least 1"));
            }
            if !(bragg.alignment > 0.0 && bragg.alignment <= 1.0) {
                return Err(CliError::invalid("bragg.alignment", "must lie in (0, 1]"));
            }
        }
        if let Some(sequence) = &self.sequence {
            sequence.validate().map_err(|e| CliError::invalid("sequence", e))?;
        }
        if let Some(beat) = &self.beat {
            beat.validate().map_err(|e| CliError::invalid("beat", e))?;
            if let Some(noise) = &self.noise {
                noise.validate(beat.fs).map_err(|e| CliError::invalid("noise", e))?;
            }
        }
        if let Some(demod) = &self.demod {
            if demod.rbw_hz <= 0.0 {
                return Err(CliError::invalid("demod.rbw_hz", "must be positive"));
            }
            if let (Some(lp), Some(beat)) = (demod.lp_cutoff_hz, &self.beat) {
                if !(lp > 0.0 && lp < beat.carrier) {
                    return Err(CliError::invalid(
                        "demod.lp_cutoff_hz",
                        "must be positive and below the beat carrier",
                    ));
                }
            }
        }
        if let Some(integration) = &self.integration {
            if !(integration.f_lo_hz >= 0.0 && integration.f_lo_hz < integration.f_hi_hz) {
                return Err(CliError::invalid("integration", "needs 0 <= f_lo_hz < f_hi_hz"));
            }
        }
        if let Some(transfer) = &self.transfer {
            if !(transfer.f_lo_hz > 0.0 && transfer.f_lo_hz < transfer.f_hi_hz) {
                return Err(CliError::invalid("transfer", "needs 0 < f_lo_hz < f_hi_hz"));
            }
            if transfer.points < 2 {
                return Err(CliError::invalid("transfer.points", "needs at least 2"));
            }
        }
        if let Some(fringe) = &self.fringe {
            if fringe.g_true_ms2 <= 0.0 {
                return Err(CliError::invalid("fringe.g_true_ms2", "must be positive"));
            }
            if !(0.0..=1.0).contains(&fringe.contrast) {
                return Err(CliError::invalid("fringe.contrast", "must lie in [0, 1]"));
            }
            if fringe.points < 2 {
                return Err(CliError::invalid("fringe.points", "needs at least 2"));
            }
            if fringe.span_periods <= 0.0 {
                return Err(CliError::invalid("fringe.span_periods", "must be positive"));
            }
            match fringe.mode {
                FringeMode::SweepRate if fringe.center_rad.is_some() => {
                    return Err(CliError::invalid(
                        "fringe.center_rad",
                        "not applicable in sweep-rate mode (use center_hz_per_s)",
                    ));
                }
                FringeMode::PulsePhase if fringe.center_hz_per_s.is_some() => {
                    return Err(CliError::invalid(
                        "fringe.center_hz_per_s",
                        "not applicable in pulse-phase mode (use center_rad)",
                    ));
                }
                _ => {}
            }
        }
        if let Some(stability) = &self.stability {
            if stability.cycle_time_s <= 0.0 {
                return Err(CliError::invalid("stability.cycle_time_s", "must be positive"));
            }
            if stability.shots < 16 {
                return Err(CliError::invalid("stability.shots", "needs at least 16"));
            }
            if stability.sigma_ugal < 0.0 {
                return Err(CliError::invalid("stability.sigma_ugal", "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn species_or_default(&self) -> AtomSpecies {
        self.species.clone().unwrap_or_else(AtomSpecies::rb87)
    }

    pub fn bragg_config(&self) -> Result<BraggConfig, CliError> {
        let block = self
            .bragg
            .as_ref()
            .ok_or_else(|| CliError::invalid("bragg", "block required for this command"))?;
        Ok(BraggConfig {
            species: self.species_or_default(),
            order: block.order,
            detuning: block.detuning_rad_s,
            alignment: block.alignment,
        })
    }

    pub fn require<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        block
            .as_ref()
            .ok_or_else(|| CliError::invalid(name, "block required for this command"))
    }

    /// Builds the Monte-Carlo scan parameters, resolving the grid centre.
    pub fn scan_params(&self, seed: u64) -> Result<ScanParams, CliError> {
        let fringe = self.require(&self.fringe, "fringe")?;
        let sequence = self.require(&self.sequence, "sequence")?;
        let cfg = self.bragg_config()?;
        let t = sequence.interrogation;
        let axis = match fringe.mode {
            FringeMode::SweepRate => {
                let period = 1.0 / (cfg.order as f64 * t * t);
                let center = match fringe.center_hz_per_s {
                    Some(c) => c,
                    None => chirp_for_gravity(&cfg, fringe.g_true_ms2)?,
                };
                ScanAxis::SweepRate(grid(center, period, fringe.span_periods, fringe.points))
            }
            FringeMode::PulsePhase => {
                let period = std::f64::consts::TAU / cfg.order as f64;
                let center = fringe.center_rad.unwrap_or(0.0);
                ScanAxis::PulsePhase(grid(center, period, fringe.span_periods, fringe.points))
            }
        };
        Ok(ScanParams {
            g_true: fringe.g_true_ms2,
            axis,
            atoms: fringe.atoms,
            contrast: fringe.contrast,
            shots_per_point: fringe.shots_per_point,
            seed,
            phase_kick_rms: fringe.phase_kick_rms_rad,
            detection_noise_rms: fringe.detection_noise_rms,
        })
    }
}

fn grid(center: f64, period: f64, periods: f64, points: usize) -> Vec<f64> {
    let span = periods * period;
    let lo = center - 0.5 * span;
    (0..points).map(|i| lo + span * i as f64 / (points - 1) as f64).collect()
}
