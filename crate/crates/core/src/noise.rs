//! Synthesis of the heterodyne beat note and its noise channels.
//!
//! The detected signal model is
//!
//! ```text
//! S(t) = A·[1 + n_m(t)]·[1 + C·cos(2π f_c t + n_p(t) + φ0)] + n_a(t)
//! ```
//!
//! with a phase channel `n_p` (discrete tones plus spectrally shaped
//! Gaussian bands), a multiplicative channel `n_m` and an additive channel
//! `n_a` (both white Gaussian). Shaped noise is generated in the frequency
//! domain — Gaussian bin amplitudes masked to the requested one-sided PSD
//! level, inverse-transformed to a real record — so band edges are exact.
//! All channels draw from independent sub-streams of the spec seed and the
//! output is reproducible bit for bit.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::stream_rng;
use crate::series::TimeSeries;

/// Sub-stream labels for the noise channels.
mod stream {
    pub const TONES: u64 = 0x10;
    pub const BANDS: u64 = 0x11;
    pub const ADDITIVE: u64 = 0x12;
    pub const MULTIPLICATIVE: u64 = 0x13;
}

/// Minimum record length accepted by the synthesizers.
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("{field} must be finite and non-negative (got {value})")]
    NegativeRms { field: &'static str, value: f64 },
    #[error("tone {index}: frequency {freq} Hz outside (0, fs/2) for fs = {fs} Hz")]
    ToneOutOfRange { index: usize, freq: f64, fs: f64 },
    #[error("band {index}: edges ({f_lo}, {f_hi}) must satisfy 0 < f_lo < f_hi < fs/2 = {nyquist}")]
    BadBandEdges { index: usize, f_lo: f64, f_hi: f64, nyquist: f64 },
    #[error("band {index}: PSD level must be non-negative (got {level})")]
    NegativePsdLevel { index: usize, level: f64 },
    #[error("record of {got} samples is too short (minimum {MIN_SAMPLES})")]
    RecordTooShort { got: usize },
    #[error("fs·duration = {product} is not an integer sample count")]
    NonIntegerSampleCount { product: f64 },
    #[error("carrier {carrier} Hz must lie below Nyquist {nyquist} Hz")]
    CarrierAboveNyquist { carrier: f64, nyquist: f64 },
    #[error("contrast must lie in [0, 1] (got {0})")]
    BadContrast(f64),
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
}

/// A discrete phase modulation line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tone {
    /// Tone frequency (Hz).
    #[serde(rename = "freq_hz")]
    pub frequency: f64,
    /// RMS phase excursion (rad); the sinusoid amplitude is rms·√2.
    #[serde(rename = "rms_rad")]
    pub rms_phase: f64,
}

/// A flat-topped band of Gaussian phase noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapedBand {
    #[serde(rename = "f_lo_hz")]
    pub f_lo: f64,
    #[serde(rename = "f_hi_hz")]
    pub f_hi: f64,
    /// One-sided PSD level inside the band (rad²/Hz).
    #[serde(rename = "psd_rad2_per_hz")]
    pub psd_level: f64,
}

/// Declarative description of all noise channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub tones: Vec<Tone>,
    #[serde(default)]
    pub shaped_bands: Vec<ShapedBand>,
    /// RMS of the additive channel (signal units).
    #[serde(default)]
    pub additive_rms: f64,
    /// RMS of the multiplicative channel (dimensionless).
    #[serde(default)]
    pub multiplicative_rms: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseSpec {
    /// A noiseless spec with the given seed.
    pub fn quiet(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Validates the spec against a sampling rate.
    pub fn validate(&self, fs: f64) -> Result<(), NoiseError> {
        let nyquist = fs / 2.0;
        for (index, tone) in self.tones.iter().enumerate() {
            if !(tone.frequency > 0.0 && tone.frequency < nyquist) {
                return Err(NoiseError::ToneOutOfRange { index, freq: tone.frequency, fs });
            }
            if !(tone.rms_phase >= 0.0 && tone.rms_phase.is_finite()) {
                return Err(NoiseError::NegativeRms { field: "tone rms_rad", value: tone.rms_phase });
            }
        }
        for (index, band) in self.shaped_bands.iter().enumerate() {
            if !(band.f_lo > 0.0 && band.f_lo < band.f_hi && band.f_hi < nyquist) {
                return Err(NoiseError::BadBandEdges {
                    index,
                    f_lo: band.f_lo,
                    f_hi: band.f_hi,
                    nyquist,
                });
            }
            if !(band.psd_level >= 0.0 && band.psd_level.is_finite()) {
                return Err(NoiseError::NegativePsdLevel { index, level: band.psd_level });
            }
        }
        for (field, value) in [
            ("additive_rms", self.additive_rms),
            ("multiplicative_rms", self.multiplicative_rms),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(NoiseError::NegativeRms { field, value });
            }
        }
        Ok(())
    }

    /// Scales every noise amplitude (tone rms, band rms level, additive,
    /// multiplicative) by `factor`; band PSD levels scale by factor².
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            tones: self
                .tones
                .iter()
                .map(|t| Tone { frequency: t.frequency, rms_phase: t.rms_phase * factor })
                .collect(),
            shaped_bands: self
                .shaped_bands
                .iter()
                .map(|b| ShapedBand { psd_level: b.psd_level * factor * factor, ..*b })
                .collect(),
            additive_rms: self.additive_rms * factor,
            multiplicative_rms: self.multiplicative_rms * factor,
            seed: self.seed,
        }
    }
}

/// Acquisition settings of the heterodyne record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeatConfig {
    /// Carrier amplitude A (signal units).
    pub amplitude: f64,
    /// Fringe contrast C in [0, 1].
    pub contrast: f64,
    /// Heterodyne frequency f_c = f1 − f2 (Hz).
    #[serde(rename = "carrier_hz")]
    pub carrier: f64,
    /// Static phase offset (rad).
    #[serde(rename = "phase0_rad")]
    pub phase0: f64,
    /// Sampling rate (Hz).
    #[serde(rename = "fs_hz")]
    pub fs: f64,
    /// Record duration (s); fs·duration must be an integer.
    #[serde(rename = "duration_s")]
    pub duration: f64,
}

impl BeatConfig {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(NoiseError::NonPositive { field: "fs_hz", value: self.fs });
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(NoiseError::NonPositive { field: "duration_s", value: self.duration });
        }
        if !(self.carrier > 0.0 && self.carrier < self.fs / 2.0) {
            return Err(NoiseError::CarrierAboveNyquist { carrier: self.carrier, nyquist: self.fs / 2.0 });
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(NoiseError::BadContrast(self.contrast));
        }
        let product = self.fs * self.duration;
        if (product - product.round()).abs() > 1e-6 {
            return Err(NoiseError::NonIntegerSampleCount { product });
        }
        if (product.round() as usize) < MIN_SAMPLES {
            return Err(NoiseError::RecordTooShort { got: product.round() as usize });
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        (self.fs * self.duration).round() as usize
    }
}

/// Synthesizes the phase channel n_p (rad) at rate `fs` for `duration`.
///
/// Tones get independent uniform initial phases; shaped bands get Gaussian
/// bin amplitudes at the requested one-sided PSD level, zero out of band.
/// Deterministic for a fixed spec (including seed).
pub fn generate_phase_noise(spec: &NoiseSpec, fs: f64, duration: f64) -> Result<TimeSeries, NoiseError> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(NoiseError::NonPositive { field: "fs", value: fs });
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(NoiseError::NonPositive { field: "duration", value: duration });
    }
    spec.validate(fs)?;
    let n = (fs * duration).round() as usize;
    if n < MIN_SAMPLES {
        return Err(NoiseError::RecordTooShort { got: n });
    }

    let mut samples = vec![0.0f64; n];

    if !spec.tones.is_empty() {
        let mut rng = stream_rng(spec.seed, stream::TONES);
        for tone in &spec.tones {
            let phase0: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let amp = tone.rms_phase * std::f64::consts::SQRT_2;
            let step = std::f64::consts::TAU * tone.frequency / fs;
            for (i, s) in samples.iter_mut().enumerate() {
                *s += amp * (step * i as f64 + phase0).sin();
            }
        }
    }

    if spec.shaped_bands.iter().any(|b| b.psd_level > 0.0) {
        let mut rng = stream_rng(spec.seed, stream::BANDS);
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
        let bin_hz = fs / n as f64;
        for band in &spec.shaped_bands {
            if band.psd_level == 0.0 {
                continue;
            }
            // E|X_k|² = S·fs·n/2 reproduces a one-sided PSD of S in-band.
            let sigma = (band.psd_level * fs * n as f64 / 2.0).sqrt();
            let k_lo = (band.f_lo / bin_hz).ceil() as usize;
            let k_hi = (band.f_hi / bin_hz).floor() as usize;
            let k_hi = k_hi.min((n - 1) / 2); // strictly below Nyquist
            for k in k_lo.max(1)..=k_hi {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                spectrum[k] += Complex64::new(re, im) * (sigma / std::f64::consts::SQRT_2);
            }
        }
        for k in 1..n.div_ceil(2) {
            spectrum[n - k] = spectrum[k].conj();
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
        let scale = 1.0 / n as f64;
        for (s, x) in samples.iter_mut().zip(&spectrum) {
            *s += x.re * scale;
        }
    }

    TimeSeries::new(fs, 0.0, samples).map_err(|_| NoiseError::RecordTooShort { got: n })
}

/// Synthesizes the full beat-note record for `cfg` with noise per `spec`.
pub fn synth_beat(cfg: &BeatConfig, spec: &NoiseSpec) -> Result<TimeSeries, NoiseError> {
    cfg.validate()?;
    let phase = generate_phase_noise(spec, cfg.fs, cfg.duration)?;
    let n = cfg.sample_count();

    let mut multiplicative = vec![0.0f64; n];
    if spec.multiplicative_rms > 0.0 {
        let mut rng = stream_rng(spec.seed, stream::MULTIPLICATIVE);
        let normal = Normal::new(0.0, spec.multiplicative_rms).expect("rms checked");
        for v in &mut multiplicative {
            *v = normal.sample(&mut rng);
        }
    }
    let mut additive = vec![0.0f64; n];
    if spec.additive_rms > 0.0 {
        let mut rng = stream_rng(spec.seed, stream::ADDITIVE);
        let normal = Normal::new(0.0, spec.additive_rms).expect("rms checked");
        for v in &mut additive {
            *v = normal.sample(&mut rng);
        }
    }

    let step = std::f64::consts::TAU * cfg.carrier / cfg.fs;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let beat = 1.0 + cfg.contrast * (step * i as f64 + phase.samples[i] + cfg.phase0).cos();
            cfg.amplitude * (1.0 + multiplicative[i]) * beat + additive[i]
        })
        .collect();

    TimeSeries::new(cfg.fs, 0.0, samples).map_err(|_| NoiseError::RecordTooShort { got: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beat_cfg() -> BeatConfig {
        BeatConfig {
            amplitude: 1.0,
            contrast: 1.0,
            carrier: 15e3,
            phase0: 0.0,
            fs: 1e6,
            duration: 0.05,
        }
    }

    #[test]
    fn empty_spec_gives_zero_series() {
        let series = generate_phase_noise(&NoiseSpec::quiet(7), 1e5, 0.01).unwrap();
        assert!(series.samples.iter().all(|s| *s == 0.0));
        assert_eq!(series.len(), 1000);
    }

    #[test]
    fn single_tone_has_requested_rms() {
        let spec = NoiseSpec {
            tones: vec![Tone { frequency: 800.0, rms_phase: 0.010 }],
            seed: 3,
            ..Default::default()
        };
        let series = generate_phase_noise(&spec, 1e5, 1.0).unwrap();
        let rms = series.rms();
        assert!((rms - 0.010).abs() < 0.0002, "rms = {rms}");
    }

    #[test]
    fn shaped_band_variance_matches_psd_integral() {
        // Parseval: var ≈ S0·(f_hi − f_lo), averaged over seeds.
        let s0 = 1e-9;
        let mut total = 0.0;
        let seeds = 24;
        for seed in 0..seeds {
            let spec = NoiseSpec {
                shaped_bands: vec![ShapedBand { f_lo: 100.0, f_hi: 10_000.0, psd_level: s0 }],
                seed,
                ..Default::default()
            };
            total += generate_phase_noise(&spec, 1e5, 0.2).unwrap().variance();
        }
        let mean = total / seeds as f64;
        let expect = s0 * (10_000.0 - 100.0);
        assert!((mean - expect).abs() < 0.05 * expect, "var = {mean}, expect {expect}");
    }

    #[test]
    fn rejects_bad_specs() {
        let nyq_band = NoiseSpec {
            shaped_bands: vec![ShapedBand { f_lo: 100.0, f_hi: 6e4, psd_level: 1e-9 }],
            ..Default::default()
        };
        assert!(matches!(
            generate_phase_noise(&nyq_band, 1e5, 0.1),
            Err(NoiseError::BadBandEdges { .. })
        ));
        assert!(matches!(
            generate_phase_noise(&NoiseSpec::quiet(0), 1e5, 1e-4),
            Err(NoiseError::RecordTooShort { .. })
        ));
        let bad_tone = NoiseSpec {
            tones: vec![Tone { frequency: -5.0, rms_phase: 0.1 }],
            ..Default::default()
        };
        assert!(matches!(
            generate_phase_noise(&bad_tone, 1e5, 0.1),
            Err(NoiseError::ToneOutOfRange { .. })
        ));
    }

    #[test]
    fn noiseless_beat_is_raised_cosine_with_mean_a() {
        let cfg = beat_cfg();
        let series = synth_beat(&cfg, &NoiseSpec::quiet(0)).unwrap();
        assert_eq!(series.len(), 50_000);
        assert!((series.mean() - cfg.amplitude).abs() < 1e-3 * cfg.amplitude);
        let max = series.samples.iter().cloned().fold(f64::MIN, f64::max);
        let min = series.samples.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max <= 2.0 + 1e-12 && min >= -1e-12);
    }

    #[test]
    fn zero_contrast_leaves_dc_plus_noise() {
        let cfg = BeatConfig { contrast: 0.0, ..beat_cfg() };
        let spec = NoiseSpec { additive_rms: 0.01, seed: 5, ..Default::default() };
        let series = synth_beat(&cfg, &spec).unwrap();
        assert!((series.mean() - 1.0).abs() < 1e-3);
        assert!((series.variance().sqrt() - 0.01).abs() < 5e-4);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = beat_cfg();
        let spec = NoiseSpec {
            tones: vec![Tone { frequency: 800.0, rms_phase: 0.01 }],
            shaped_bands: vec![ShapedBand { f_lo: 50.0, f_hi: 5e3, psd_level: 1e-10 }],
            additive_rms: 1e-4,
            multiplicative_rms: 1e-4,
            seed: 99,
        };
        let a = synth_beat(&cfg, &spec).unwrap();
        let b = synth_beat(&cfg, &spec).unwrap();
        assert_eq!(a.samples, b.samples);

        let other = synth_beat(&cfg, &NoiseSpec { seed: 100, ..spec.clone() }).unwrap();
        assert_ne!(a.samples, other.samples);
    }

    #[test]
    fn config_validation() {
        let mut cfg = beat_cfg();
        cfg.carrier = 6e5;
        assert!(matches!(cfg.validate(), Err(NoiseError::CarrierAboveNyquist { .. })));
        let mut cfg = beat_cfg();
        cfg.contrast = 1.5;
        assert!(matches!(cfg.validate(), Err(NoiseError::BadContrast(_))));
        let mut cfg = beat_cfg();
        cfg.duration = 0.0500000501;
        assert!(matches!(cfg.validate(), Err(NoiseError::NonIntegerSampleCount { .. })));
    }

    #[test]
    fn scaled_spec_scales_amplitudes() {
        let spec = NoiseSpec {
            tones: vec![Tone { frequency: 800.0, rms_phase: 0.01 }],
            shaped_bands: vec![ShapedBand { f_lo: 50.0, f_hi: 5e3, psd_level: 1e-10 }],
            additive_rms: 1e-4,
            multiplicative_rms: 2e-4,
            seed: 7,
        };
        let scaled = spec.scaled(4.7);
        assert!((scaled.tones[0].rms_phase - 0.047).abs() < 1e-15);
        assert!((scaled.shaped_bands[0].psd_level - 1e-10 * 4.7 * 4.7).abs() < 1e-22);
        assert_eq!(scaled.seed, spec.seed);
    }
}
