//! Lock-in demodulation and spectral estimation.
//!
//! [`demodulate`] mixes a record with quadrature references at the carrier,
//! low-passes both arms with a linear-phase FIR (group delay compensated)
//! and returns the unwrapped phase. [`estimate_psd`] is a Welch estimator —
//! Hann window, 50% overlap, one-sided, per-segment mean removal — whose
//! segment length is chosen so the effective noise bandwidth matches the
//! requested resolution. [`integrated_phase_noise`] folds a phase PSD with
//! the interferometer weighting to the per-shot phase variance
//! σ² = ∫ |H(2πf)|² S(f) df.

use std::fmt;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::PulseSequence;
use crate::sensitivity::transfer_weight;
use crate::series::TimeSeries;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("carrier {carrier} Hz must lie below Nyquist {nyquist} Hz")]
    CarrierAboveNyquist { carrier: f64, nyquist: f64 },
    #[error("low-pass cutoff {cutoff} Hz must be positive and below the carrier {carrier} Hz")]
    CutoffNotBelowCarrier { cutoff: f64, carrier: f64 },
    #[error("record of {got} samples is too short ({needed} needed)")]
    RecordTooShort { needed: usize, got: usize },
    #[error("resolution bandwidth must be positive (got {0})")]
    BadRbw(f64),
    #[error("rbw {requested} Hz not representable within 1% (nearest achievable {achievable} Hz)")]
    RbwNotRepresentable { requested: f64, achievable: f64 },
    #[error("expected a PSD in {expected}, got {got}")]
    UnitMismatch { expected: PsdUnit, got: PsdUnit },
    #[error("impedance must be positive (got {0})")]
    NonPositiveImpedance(f64),
    #[error("band [{f_lo}, {f_hi}] Hz outside PSD support [{min}, {max}] Hz")]
    BandOutsidePsd { f_lo: f64, f_hi: f64, min: f64, max: f64 },
}

/// Unit tag carried by a PSD estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsdUnit {
    /// Raw signal power per Hz (signal units squared / Hz).
    SignalSqPerHz,
    /// Phase power per Hz (rad²/Hz).
    RadSqPerHz,
    /// Power within one resolution bandwidth, in dBm.
    DbmPerRbw,
}

impl fmt::Display for PsdUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsdUnit::SignalSqPerHz => "signal^2/Hz",
            PsdUnit::RadSqPerHz => "rad^2/Hz",
            PsdUnit::DbmPerRbw => "dBm",
        })
    }
}

impl std::str::FromStr for PsdUnit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "signal^2/Hz" => Ok(PsdUnit::SignalSqPerHz),
            "rad^2/Hz" => Ok(PsdUnit::RadSqPerHz),
            "dBm" => Ok(PsdUnit::DbmPerRbw),
            other => Err(format!("unknown PSD unit {other:?}")),
        }
    }
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Bin centre frequencies (Hz), strictly increasing from DC.
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    /// Effective noise bandwidth per bin (Hz).
    pub rbw: f64,
    pub window: String,
    /// Number of averaged segments.
    pub segments: usize,
    pub unit: PsdUnit,
}

impl PsdEstimate {
    /// Bin spacing of the uniform grid (Hz).
    pub fn bin_spacing(&self) -> f64 {
        if self.frequencies.len() >= 2 {
            (self.frequencies[self.frequencies.len() - 1] - self.frequencies[0])
                / (self.frequencies.len() - 1) as f64
        } else {
            self.rbw
        }
    }

    /// Σ S(f)·Δf over bins whose centre lies in [f_lo, f_hi].
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> f64 {
        let df = self.bin_spacing();
        self.frequencies
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(_, v)| v * df)
            .sum()
    }

    /// Total integrated power, Σ S(f)·Δf.
    pub fn total_power(&self) -> f64 {
        self.band_power(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Relabels a raw-signal PSD as a phase PSD (rad²/Hz). Values are
    /// unchanged; use when the analysed record is itself a phase in rad.
    pub fn into_phase_units(mut self) -> Self {
        self.unit = PsdUnit::RadSqPerHz;
        self
    }
}

/// Output of [`demodulate`]: baseband quadratures and unwrapped phase.
#[derive(Debug, Clone)]
pub struct Demodulated {
    /// Unwrapped phase (rad), aligned sample-for-sample with the input.
    pub phase: TimeSeries,
    pub in_phase: TimeSeries,
    pub quadrature: TimeSeries,
    /// Reference frequency used for mixing (Hz).
    pub carrier: f64,
    /// Low-pass cutoff (Hz).
    pub lp_cutoff: f64,
    /// Samples at each record edge still inside the filter transient;
    /// exclude them from statistics.
    pub settling: usize,
    /// Set when the baseband amplitude is too small for the phase to mean
    /// anything (e.g. zero contrast).
    pub degenerate: bool,
    /// Number of 2π corrections applied while unwrapping.
    pub wrap_corrections: usize,
}

impl Demodulated {
    /// Phase with the filter transients trimmed from both ends.
    pub fn settled_phase(&self) -> TimeSeries {
        let n = self.phase.len();
        let lo = self.settling.min(n / 4);
        let hi = n - lo;
        TimeSeries {
            fs: self.phase.fs,
            t0: self.phase.time(lo),
            samples: self.phase.samples[lo..hi].to_vec(),
        }
    }
}

/// Low-pass filter design: Kaiser-windowed sinc, ~100 dB stopband.
const STOPBAND_DB: f64 = 100.0;

fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-16 {
            return sum;
        }
        k += 1.0;
    }
}

/// Linear-phase lowpass passing [0, pass] and rejecting beyond `stop`.
fn kaiser_lowpass(fs: f64, pass: f64, stop: f64) -> Vec<f64> {
    let beta = 0.1102 * (STOPBAND_DB - 8.7);
    let delta_w = std::f64::consts::TAU * (stop - pass) / fs;
    let mut taps = ((STOPBAND_DB - 7.95) / (2.285 * delta_w)).ceil() as usize + 1;
    if taps % 2 == 0 {
        taps += 1;
    }
    let cutoff = 0.5 * (pass + stop) / fs; // cycles per sample
    let mid = (taps - 1) as f64 / 2.0;
    let i0_beta = bessel_i0(beta);
    (0..taps)
        .map(|i| {
            let x = i as f64 - mid;
            let ideal = if x == 0.0 {
                2.0 * cutoff
            } else {
                (std::f64::consts::TAU * cutoff * x).sin() / (std::f64::consts::PI * x)
            };
            let r = 2.0 * (i as f64) / (taps - 1) as f64 - 1.0;
            ideal * bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta
        })
        .collect()
}

/// Linear convolution, centre part (delay-compensated), via overlap-save.
fn convolve_same(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = taps.len();
    let delay = (m - 1) / 2;
    let block = (4 * m).next_power_of_two().max(4096);
    let step = block - m + 1;

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(block);
    let inv = planner.plan_fft_inverse(block);

    let mut h = vec![Complex64::new(0.0, 0.0); block];
    for (hk, t) in h.iter_mut().zip(taps) {
        hk.re = *t;
    }
    fwd.process(&mut h);

    let full = n + m - 1;
    let mut out = vec![0.0f64; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); block];
    let scale = 1.0 / block as f64;

    let mut pos = 0usize;
    while pos < full {
        for (i, b) in buf.iter_mut().enumerate() {
            let src = pos as isize - (m as isize - 1) + i as isize;
            b.re = if src >= 0 && (src as usize) < n { x[src as usize] } else { 0.0 };
            b.im = 0.0;
        }
        fwd.process(&mut buf);
        for (b, hk) in buf.iter_mut().zip(&h) {
            *b *= hk;
        }
        inv.process(&mut buf);
        for j in 0..step {
            let k = pos + j;
            if k >= full {
                break;
            }
            // keep the centre part: y_same[i] = y_full[i + delay]
            if k >= delay && k - delay < n {
                out[k - delay] = buf[m - 1 + j].re * scale;
            }
        }
        pos += step;
    }
    out
}

/// Quadrature demodulation of `s` at `carrier`, low-passed at `lp_cutoff`.
///
/// The DC term of the beat model mixes up to the carrier and is rejected by
/// the filter along with the 2f_c images. The returned phase is
/// atan2(Q, I), unwrapped by nearest-multiple-of-2π continuation.
pub fn demodulate(s: &TimeSeries, carrier: f64, lp_cutoff: f64) -> Result<Demodulated, SpectralError> {
    let nyquist = s.fs / 2.0;
    if !(carrier > 0.0 && carrier < nyquist) {
        return Err(SpectralError::CarrierAboveNyquist { carrier, nyquist });
    }
    if !(lp_cutoff > 0.0 && lp_cutoff < carrier) {
        return Err(SpectralError::CutoffNotBelowCarrier { cutoff: lp_cutoff, carrier });
    }

    // Stopband must open before the carrier so the mixed-up DC term dies.
    let stop = lp_cutoff + 0.95 * (carrier - lp_cutoff);
    let taps = kaiser_lowpass(s.fs, lp_cutoff, stop);
    let needed = 3 * taps.len();
    if s.len() < needed {
        return Err(SpectralError::RecordTooShort { needed, got: s.len() });
    }

    let n = s.len();
    let step = std::f64::consts::TAU * carrier / s.fs;
    let phase0 = std::f64::consts::TAU * carrier * s.t0;
    let mut mixed_i = Vec::with_capacity(n);
    let mut mixed_q = Vec::with_capacity(n);
    for (i, &v) in s.samples.iter().enumerate() {
        let (sin, cos) = (phase0 + step * i as f64).sin_cos();
        mixed_i.push(2.0 * v * cos);
        mixed_q.push(-2.0 * v * sin);
    }
    let i_arm = convolve_same(&mixed_i, &taps);
    let q_arm = convolve_same(&mixed_q, &taps);

    let settling = taps.len();
    let mut amp_sum = 0.0;
    let mut amp_count = 0usize;
    for k in settling..n.saturating_sub(settling) {
        amp_sum += i_arm[k].hypot(q_arm[k]);
        amp_count += 1;
    }
    let mean_amp = if amp_count > 0 { amp_sum / amp_count as f64 } else { 0.0 };
    let degenerate = mean_amp < 1e-3 * s.rms();

    let mut phase = Vec::with_capacity(n);
    let mut wrap_corrections = 0usize;
    let mut prev_raw = 0.0f64;
    let mut offset = 0.0f64;
    for k in 0..n {
        let raw = q_arm[k].atan2(i_arm[k]);
        if k == 0 {
            phase.push(raw);
        } else {
            let d = raw - prev_raw;
            let wraps = (d / std::f64::consts::TAU).round();
            if wraps != 0.0 {
                wrap_corrections += 1;
                offset -= wraps * std::f64::consts::TAU;
            }
            phase.push(raw + offset);
        }
        prev_raw = raw;
    }

    Ok(Demodulated {
        phase: TimeSeries { fs: s.fs, t0: s.t0, samples: phase },
        in_phase: TimeSeries { fs: s.fs, t0: s.t0, samples: i_arm },
        quadrature: TimeSeries { fs: s.fs, t0: s.t0, samples: q_arm },
        carrier,
        lp_cutoff,
        settling,
        degenerate,
        wrap_corrections,
    })
}

/// Welch PSD with the segment length chosen so the Hann effective noise
/// bandwidth equals `rbw` (within 1%); one-sided, per-segment mean removed.
pub fn estimate_psd(s: &TimeSeries, rbw: f64) -> Result<PsdEstimate, SpectralError> {
    if !(rbw > 0.0 && rbw.is_finite()) {
        return Err(SpectralError::BadRbw(rbw));
    }
    // Periodic Hann: ENBW = 1.5·fs/N exactly.
    let ideal = 1.5 * s.fs / rbw;
    let n_seg = ideal.round().max(1.0) as usize;
    if n_seg < 16 {
        return Err(SpectralError::RbwNotRepresentable { requested: rbw, achievable: 1.5 * s.fs / 16.0 });
    }
    let achieved = 1.5 * s.fs / n_seg as f64;
    if (achieved - rbw).abs() > 0.01 * rbw {
        return Err(SpectralError::RbwNotRepresentable { requested: rbw, achievable: achieved });
    }
    if s.len() < n_seg {
        return Err(SpectralError::RecordTooShort { needed: n_seg, got: s.len() });
    }

    let window: Vec<f64> = (0..n_seg)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n_seg as f64).cos()))
        .collect();
    let wsum2: f64 = window.iter().map(|w| w * w).sum();

    let hop = (n_seg / 2).max(1);
    let segments = 1 + (s.len() - n_seg) / hop;
    let fft = FftPlanner::new().plan_fft_forward(n_seg);
    let half = n_seg / 2;
    let mut acc = vec![0.0f64; half + 1];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_seg];

    for seg in 0..segments {
        let start = seg * hop;
        let chunk = &s.samples[start..start + n_seg];
        let mean = chunk.iter().sum::<f64>() / n_seg as f64;
        for ((b, &x), w) in buf.iter_mut().zip(chunk).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(buf.iter().take(half + 1)) {
            *a += b.norm_sqr();
        }
    }

    let base = 1.0 / (segments as f64 * s.fs * wsum2);
    let values: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (n_seg % 2 == 0 && k == half) { 1.0 } else { 2.0 };
            a * base * one_sided
        })
        .collect();
    let frequencies = (0..=half).map(|k| k as f64 * s.fs / n_seg as f64).collect();

    Ok(PsdEstimate {
        frequencies,
        values,
        rbw: achieved,
        window: "hann".into(),
        segments,
        unit: PsdUnit::SignalSqPerHz,
    })
}

/// Converts a voltage-denominated PSD into per-bin power in dBm across a
/// load of `impedance` ohms: 10·log10((S·rbw/R) / 1 mW).
pub fn psd_to_dbm(p: &PsdEstimate, impedance: f64) -> Result<PsdEstimate, SpectralError> {
    if p.unit != PsdUnit::SignalSqPerHz {
        return Err(SpectralError::UnitMismatch { expected: PsdUnit::SignalSqPerHz, got: p.unit });
    }
    if !(impedance > 0.0 && impedance.is_finite()) {
        return Err(SpectralError::NonPositiveImpedance(impedance));
    }
    let values = p
        .values
        .iter()
        .map(|v| 10.0 * ((v * p.rbw / impedance).max(1e-30) / 1e-3).log10())
        .collect();
    Ok(PsdEstimate { values, unit: PsdUnit::DbmPerRbw, ..p.clone() })
}

/// Per-shot RMS interferometer phase from a phase-noise PSD:
/// σ = sqrt(∫ |H(2πf)|² S(f) df) over [f_lo, f_hi] (rad).
///
/// PSD bins are treated as piecewise-constant; the weighting is averaged
/// over 8 sub-points per bin since it oscillates faster than coarse grids.
pub fn integrated_phase_noise(
    psd: &PsdEstimate,
    seq: &PulseSequence,
    f_lo: f64,
    f_hi: f64,
) -> Result<f64, SpectralError> {
    if psd.unit != PsdUnit::RadSqPerHz {
        return Err(SpectralError::UnitMismatch { expected: PsdUnit::RadSqPerHz, got: psd.unit });
    }
    let (min, max) = match (psd.frequencies.first(), psd.frequencies.last()) {
        (Some(&min), Some(&max)) => (min, max),
        _ => (0.0, 0.0),
    };
    let df = psd.bin_spacing();
    if !(f_lo < f_hi) || f_lo < min - 0.5 * df || f_hi > max + 0.5 * df {
        return Err(SpectralError::BandOutsidePsd { f_lo, f_hi, min, max });
    }

    let mut variance = 0.0;
    for (k, (&fc, &s)) in psd.frequencies.iter().zip(&psd.values).enumerate() {
        let lo = if k == 0 { fc } else { (fc - 0.5 * df).max(f_lo) };
        let hi = (fc + 0.5 * df).min(f_hi);
        let lo = lo.max(f_lo);
        if hi <= lo || s == 0.0 {
            continue;
        }
        let width = hi - lo;
        let mean_w: f64 = (0..8)
            .map(|j| transfer_weight(seq, lo + width * (2 * j + 1) as f64 / 16.0))
            .sum::<f64>()
            / 8.0;
        variance += s * mean_w * width;
    }
    Ok(variance.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{synth_beat, BeatConfig, NoiseSpec, Tone};
    use crate::physics::PulseSequence;
    use std::f64::consts::TAU;

    fn beat(contrast: f64, phase0: f64, spec: &NoiseSpec, duration: f64) -> TimeSeries {
        let cfg = BeatConfig {
            amplitude: 1.0,
            contrast,
            carrier: 15e3,
            phase0,
            fs: 1e6,
            duration,
        };
        synth_beat(&cfg, spec).unwrap()
    }

    fn fig_seq() -> PulseSequence {
        PulseSequence::nominal(TAU * 5e3, 0.010, 17.98).unwrap()
    }

    #[test]
    fn small_convolution_matches_direct() {
        let x: Vec<f64> = (0..500).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let taps: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0) / 10.0).collect();
        let fast = convolve_same(&x, &taps);
        let delay = 4usize;
        for i in 0..x.len() {
            let mut direct = 0.0;
            for (j, t) in taps.iter().enumerate() {
                let k = i as isize + delay as isize - j as isize;
                if k >= 0 && (k as usize) < x.len() {
                    direct += t * x[k as usize];
                }
            }
            assert!((fast[i] - direct).abs() < 1e-10, "i = {i}");
        }
    }

    #[test]
    fn noiseless_phase_offset_recovered() {
        let series = beat(1.0, 0.3, &NoiseSpec::quiet(0), 0.05);
        let d = demodulate(&series, 15e3, 3.75e3).unwrap();
        assert!(!d.degenerate);
        let settled = d.settled_phase();
        for &p in &settled.samples {
            assert!((p - 0.3).abs() < 1e-4, "phase = {p}");
        }
    }

    #[test]
    fn injected_tone_round_trips_through_demodulation() {
        let spec = NoiseSpec {
            tones: vec![Tone { frequency: 800.0, rms_phase: 0.010 }],
            seed: 11,
            ..Default::default()
        };
        let series = beat(0.8, 0.1, &spec, 0.2);
        let d = demodulate(&series, 15e3, 3.75e3).unwrap();
        let injected = crate::noise::generate_phase_noise(&spec, 1e6, 0.2).unwrap();

        // Sample-by-sample agreement with the injected phase after settling.
        let lo = d.settling;
        let hi = series.len() - d.settling;
        let mut err2 = 0.0;
        let mut sig2 = 0.0;
        for k in lo..hi {
            let e = d.phase.samples[k] - 0.1 - injected.samples[k];
            err2 += e * e;
            sig2 += injected.samples[k] * injected.samples[k];
        }
        let rel = (err2 / sig2).sqrt();
        assert!(rel < 0.02, "relative residual {rel}");

        let rms = {
            let s = d.settled_phase();
            s.variance().sqrt()
        };
        assert!((rms - 0.010).abs() < 0.0003, "tone rms {rms}");
    }

    #[test]
    fn zero_contrast_flags_degenerate_phase() {
        let series = beat(0.0, 0.0, &NoiseSpec::quiet(1), 0.05);
        let d = demodulate(&series, 15e3, 3.75e3).unwrap();
        assert!(d.degenerate);
    }

    #[test]
    fn demodulate_validates_arguments() {
        let series = beat(1.0, 0.0, &NoiseSpec::quiet(0), 0.05);
        assert!(matches!(
            demodulate(&series, 6e5, 1e3),
            Err(SpectralError::CarrierAboveNyquist { .. })
        ));
        assert!(matches!(
            demodulate(&series, 15e3, 20e3),
            Err(SpectralError::CutoffNotBelowCarrier { .. })
        ));
    }

    #[test]
    fn sinusoid_power_is_recovered() {
        let fs = 50_000.0;
        let n = 30_000usize;
        let a = 0.35;
        // Bin-centred: f0 multiple of fs/n_seg; rbw 25 -> n_seg = 3000.
        let f0 = 1000.0;
        let samples: Vec<f64> = (0..n).map(|i| a * (TAU * f0 * i as f64 / fs).sin()).collect();
        let s = TimeSeries::new(fs, 0.0, samples).unwrap();
        let psd = estimate_psd(&s, 25.0).unwrap();
        let power = psd.band_power(f0 - 100.0, f0 + 100.0);
        assert!((power - a * a / 2.0).abs() < 0.01 * a * a / 2.0, "power = {power}");
    }

    #[test]
    fn white_noise_psd_is_flat_at_two_sigma_sq_over_fs() {
        use rand_distr::{Distribution, Normal};
        let fs = 100_000.0;
        let sigma = 0.7;
        let mut rng = crate::seeding::stream_rng(5, 77);
        let normal = Normal::new(0.0, sigma).unwrap();
        let samples: Vec<f64> = (0..200_000).map(|_| normal.sample(&mut rng)).collect();
        let s = TimeSeries::new(fs, 0.0, samples).unwrap();
        let psd = estimate_psd(&s, 150.0).unwrap();
        let expect = 2.0 * sigma * sigma / fs;
        // Average level over the interior of the band.
        let interior: Vec<f64> = psd
            .frequencies
            .iter()
            .zip(&psd.values)
            .filter(|(f, _)| **f > 2e3 && **f < 45e3)
            .map(|(_, v)| *v)
            .collect();
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        assert!((mean - expect).abs() < 0.05 * expect, "mean {mean} vs {expect}");
        // Parseval within 2%.
        let total = psd.total_power();
        assert!((total - s.variance()).abs() < 0.02 * s.variance());
    }

    #[test]
    fn zero_series_gives_zero_psd() {
        let s = TimeSeries::new(1e4, 0.0, vec![0.0; 4096]).unwrap();
        let psd = estimate_psd(&s, 15.0).unwrap();
        assert!(psd.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn psd_validates_record_and_rbw() {
        let s = TimeSeries::new(1e4, 0.0, vec![1.0; 128]).unwrap();
        assert!(matches!(estimate_psd(&s, 1.0), Err(SpectralError::RecordTooShort { .. })));
        assert!(matches!(estimate_psd(&s, -5.0), Err(SpectralError::BadRbw(_))));
        // 1.5*fs/rbw = 10.7 -> below the 16-sample floor.
        assert!(matches!(
            estimate_psd(&s, 1400.0),
            Err(SpectralError::RbwNotRepresentable { .. })
        ));
    }

    #[test]
    fn dbm_conversion_definitions() {
        // S·rbw/R with rbw = 1 Hz, R = 50 Ω: 0.05 V² -> 1 mW, 5e-10 V² -> 10 pW.
        let p = PsdEstimate {
            frequencies: vec![0.0, 1.0, 2.0],
            values: vec![0.05, 5e-10, 0.0],
            rbw: 1.0,
            window: "hann".into(),
            segments: 1,
            unit: PsdUnit::SignalSqPerHz,
        };
        let dbm = psd_to_dbm(&p, 50.0).unwrap();
        assert!((dbm.values[0] - 0.0).abs() < 1e-9);
        assert!((dbm.values[1] + 80.0).abs() < 1e-9);

        let half_r = psd_to_dbm(&p, 25.0).unwrap();
        assert!((half_r.values[0] - 3.0103).abs() < 1e-4);

        assert!(matches!(psd_to_dbm(&p, 0.0), Err(SpectralError::NonPositiveImpedance(_))));
        let wrong = PsdEstimate { unit: PsdUnit::RadSqPerHz, ..p };
        assert!(matches!(psd_to_dbm(&wrong, 50.0), Err(SpectralError::UnitMismatch { .. })));
    }

    #[test]
    fn integrated_noise_is_zero_for_zero_psd() {
        let psd = PsdEstimate {
            frequencies: (0..2001).map(|k| k as f64 * 10.0).collect(),
            values: vec![0.0; 2001],
            rbw: 15.0,
            window: "hann".into(),
            segments: 4,
            unit: PsdUnit::RadSqPerHz,
        };
        let sigma = integrated_phase_noise(&psd, &fig_seq(), 50.0, 10_000.0).unwrap();
        assert_eq!(sigma, 0.0);
    }

    #[test]
    fn single_bin_tone_integrates_to_weighted_rms() {
        // A tone of rms `a` concentrated in one narrow bin integrates to
        // a·|H(2πf)|.
        let seq = fig_seq();
        let a = 0.010;
        let df = 1.0;
        let f_tone = 841.0; // mid-lobe, away from the weighting zeros
        let mut values = vec![0.0; 20_001];
        let frequencies: Vec<f64> = (0..=20_000).map(|k| k as f64 * df).collect();
        values[841] = a * a / df;
        let psd = PsdEstimate {
            frequencies,
            values,
            rbw: df,
            window: "hann".into(),
            segments: 1,
            unit: PsdUnit::RadSqPerHz,
        };
        let sigma = integrated_phase_noise(&psd, &seq, 50.0, 10_000.0).unwrap();
        let expect = a * transfer_weight(&seq, f_tone).sqrt();
        assert!((sigma - expect).abs() < 0.03 * expect, "sigma {sigma} vs {expect}");
    }

    #[test]
    fn integration_validates_units_and_band() {
        let psd = PsdEstimate {
            frequencies: vec![0.0, 10.0, 20.0],
            values: vec![0.0; 3],
            rbw: 15.0,
            window: "hann".into(),
            segments: 1,
            unit: PsdUnit::SignalSqPerHz,
        };
        assert!(matches!(
            integrated_phase_noise(&psd, &fig_seq(), 0.0, 20.0),
            Err(SpectralError::UnitMismatch { .. })
        ));
        let psd = PsdEstimate { unit: PsdUnit::RadSqPerHz, ..psd };
        assert!(matches!(
            integrated_phase_noise(&psd, &fig_seq(), 5.0, 500.0),
            Err(SpectralError::BandOutsidePsd { .. })
        ));
    }
}
