//! The demo analysis chain: synthesize the beat note, demodulate it, take
//! the phase PSD, and integrate it against the interferometer weighting.

use braggsim_core::noise::synth_beat;
use braggsim_core::physics::PulseSequence;
use braggsim_core::spectral::{demodulate, estimate_psd, integrated_phase_noise, PsdEstimate};
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Debug, Serialize)]
pub struct PipelineOutcome {
    pub scenario: String,
    pub seed: u64,
    /// Per-shot integrated phase noise (rad).
    pub sigma_phi_rad: f64,
    pub sigma_phi_mrad: f64,
    pub band_hz: (f64, f64),
    pub rbw_hz: f64,
    pub lp_cutoff_hz: f64,
    pub wrap_corrections: usize,
    #[serde(skip)]
    pub psd: PsdEstimate,
}

/// Runs synth → demodulate → PSD → weighted integration for a scenario.
pub fn run_noise_pipeline(scenario: &Scenario, seed: u64) -> Result<PipelineOutcome, CliError> {
    let beat = scenario.require(&scenario.beat, "beat")?;
    let mut noise = scenario.require(&scenario.noise, "noise")?.clone();
    let demod_block = scenario.require(&scenario.demod, "demod")?;
    let integration = scenario.require(&scenario.integration, "integration")?;
    let sequence: &PulseSequence = scenario.require(&scenario.sequence, "sequence")?;
    noise.seed = seed;

    let series = synth_beat(beat, &noise)?;
    let lp = demod_block.lp_cutoff_hz.unwrap_or(beat.carrier / 4.0);
    let demod = demodulate(&series, beat.carrier, lp)?;
    if demod.degenerate {
        return Err(CliError::Numerical(
            "demodulated amplitude is degenerate; phase is undefined".into(),
        ));
    }
    let psd = estimate_psd(&demod.settled_phase(), demod_block.rbw_hz)?.into_phase_units();
    let sigma =
        integrated_phase_noise(&psd, sequence, integration.f_lo_hz, integration.f_hi_hz)?;

    Ok(PipelineOutcome {
        scenario: scenario.name.clone(),
        seed,
        sigma_phi_rad: sigma,
        sigma_phi_mrad: sigma * 1e3,
        band_hz: (integration.f_lo_hz, integration.f_hi_hz),
        rbw_hz: psd.rbw,
        lp_cutoff_hz: lp,
        wrap_corrections: demod.wrap_corrections,
        psd,
    })
}
