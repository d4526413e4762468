//! Response of the Mach-Zehnder interferometer to laser phase fluctuations.
//!
//! `sensitivity_value` is the dimensionless weight a laser phase step
//! receives as a function of when it occurs inside the π/2–π–π/2 sequence
//! (time origin at the centre of the mirror pulse, odd in `t`). Its Fourier
//! transform `sensitivity_transform` and the derived weighting
//! `transfer_weight(f) = |2πf·G(2πf)|²` map a phase-noise PSD onto
//! interferometer phase variance.
//!
//! The transform is evaluated from the exact integral of the piecewise
//! definition, regrouped so every removable singularity (ω → 0, ω → ±Ω)
//! reduces to `sin(x)/x` terms; it is finite and smooth for all ω.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::PulseSequence;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("frequencies must be positive and strictly increasing (index {0})")]
    BadGrid(usize),
}

/// sin(x)/x with the small-argument series; accurate to f64 everywhere.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Dimensionless sensitivity of the interferometer phase to an instantaneous
/// laser phase step at time `t` (s), with t = 0 at the mirror-pulse centre.
///
/// For t > 0 the weight ramps as sin(Ωt) through the second half of the
/// mirror pulse, holds at 1 during free evolution, ramps back through the
/// closing beamsplitter, and vanishes for |t| ≥ T + 2τ. Negative times are
/// the odd extension.
pub fn sensitivity_value(seq: &PulseSequence, t: f64) -> f64 {
    let tau = seq.beamsplitter;
    let t_free = seq.interrogation;
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    let u = t.abs();
    if u >= t_free + 2.0 * tau {
        0.0
    } else if u < tau {
        sign * (seq.rabi * u).sin()
    } else if u <= t_free + tau {
        sign
    } else {
        sign * -(seq.rabi * (t_free - u)).sin()
    }
}

/// Fourier transform G(ω) = ∫ g(t)·e^{−iωt} dt of [`sensitivity_value`]
/// (purely imaginary and odd in ω; units of seconds).
///
/// Evaluated from the branchwise integrals in `sinc` form, so ω = 0 and
/// ω = ±Ω need no special casing and off-nominal pulse areas are handled
/// exactly.
pub fn sensitivity_transform(seq: &PulseSequence, omega: f64) -> Complex64 {
    let tau = seq.beamsplitter;
    let t_free = seq.interrogation;
    let rabi = seq.rabi;
    let w = omega;

    let wm = w - rabi;
    let wp = w + rabi;
    // ∫₀^τ sin(Ωt)·sin(wt) dt
    let ramp_up = 0.5 * tau * (sinc(wm * tau) - sinc(wp * tau));
    // ∫_τ^{T+τ} sin(wt) dt
    let hold = t_free * (0.5 * w * (t_free + 2.0 * tau)).sin() * sinc(0.5 * w * t_free);
    // ∫_{T+τ}^{T+2τ} sin(Ω(t−T))·sin(wt) dt
    let ramp_down = 0.5
        * tau
        * ((1.5 * wm * tau + w * t_free).cos() * sinc(0.5 * wm * tau)
            - (1.5 * wp * tau + w * t_free).cos() * sinc(0.5 * wp * tau));

    Complex64::new(0.0, -2.0 * (ramp_up + hold + ramp_down))
}

/// Noise weighting |H(2πf)|² = |2πf·G(2πf)|² applied to a one-sided phase
/// PSD in Hz (dimensionless).
pub fn transfer_weight(seq: &PulseSequence, f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    (w * sensitivity_transform(seq, w)).norm_sqr()
}

/// Structural frequencies of the weighting within a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMarkers {
    /// Frequencies n/(T + 2τ) where the weighting vanishes (Hz).
    pub zeros: Vec<f64>,
    /// Low-pass corner √3·Ω/6π of the pulse-duration rolloff (Hz).
    pub cutoff: f64,
}

/// Zeros of the weighting up to `band` Hz plus the rolloff cutoff.
pub fn characteristic_frequencies(seq: &PulseSequence, band: f64) -> TransferMarkers {
    let spacing = 1.0 / seq.half_support();
    let count = if band > 0.0 { (band / spacing).floor() as usize } else { 0 };
    TransferMarkers {
        zeros: (1..=count).map(|n| n as f64 * spacing).collect(),
        cutoff: 3f64.sqrt() * seq.rabi / (6.0 * std::f64::consts::PI),
    }
}

/// The weighting sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferGrid {
    /// Strictly increasing frequencies (Hz).
    pub frequencies: Vec<f64>,
    /// |H(2πf)|² at each frequency.
    pub weights: Vec<f64>,
    pub sequence: PulseSequence,
}

impl TransferGrid {
    pub fn from_frequencies(seq: &PulseSequence, frequencies: Vec<f64>) -> Result<Self, SensitivityError> {
        if frequencies.is_empty() {
            return Err(SensitivityError::EmptyGrid);
        }
        for (i, pair) in frequencies.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(SensitivityError::BadGrid(i + 1));
            }
        }
        if frequencies[0] <= 0.0 {
            return Err(SensitivityError::BadGrid(0));
        }
        let weights = frequencies.iter().map(|&f| transfer_weight(seq, f)).collect();
        Ok(Self { frequencies, weights, sequence: seq.clone() })
    }

    /// `points` log-spaced frequencies across [f_lo, f_hi].
    pub fn log_spaced(seq: &PulseSequence, f_lo: f64, f_hi: f64, points: usize) -> Result<Self, SensitivityError> {
        if points == 0 {
            return Err(SensitivityError::EmptyGrid);
        }
        if !(f_lo > 0.0 && f_hi > f_lo) {
            return Err(SensitivityError::BadGrid(0));
        }
        let (la, lb) = (f_lo.ln(), f_hi.ln());
        let frequencies = (0..points)
            .map(|i| {
                if points == 1 {
                    f_lo
                } else {
                    (la + (lb - la) * i as f64 / (points - 1) as f64).exp()
                }
            })
            .collect();
        Self::from_frequencies(seq, frequencies)
    }
}
