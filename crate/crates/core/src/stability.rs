//! Allan-deviation stability analysis and the projection-noise floor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// m/s² per µGal.
pub const MS2_PER_UGAL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("shot series needs at least 2 values (got {0})")]
    TooFewShots(usize),
    #[error("cycle time must be positive (got {0})")]
    BadCycleTime(f64),
    #[error("tau {tau} s is not an integer multiple of the cycle time {cycle} s")]
    TauNotMultiple { tau: f64, cycle: f64 },
    #[error("tau {tau} s leaves only {clusters} clusters (3 required)")]
    TooFewClusters { tau: f64, clusters: usize },
    #[error("white-noise fit needs at least 3 tau points (got {0})")]
    TooFewTaus(usize),
}

/// Per-shot measurement record with a fixed cycle time τ0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSeries {
    pub values: Vec<f64>,
    /// Duration of one shot (s).
    pub cycle_time: f64,
}

impl ShotSeries {
    pub fn new(values: Vec<f64>, cycle_time: f64) -> Result<Self, StabilityError> {
        if values.len() < 2 {
            return Err(StabilityError::TooFewShots(values.len()));
        }
        if !(cycle_time > 0.0 && cycle_time.is_finite()) {
            return Err(StabilityError::BadCycleTime(cycle_time));
        }
        Ok(Self { values, cycle_time })
    }

    /// Octave-spaced averaging times from τ0 up to an eighth of the record.
    pub fn octave_taus(&self) -> Vec<f64> {
        let mut taus = Vec::new();
        let mut m = 1usize;
        while m <= self.values.len() / 8 {
            taus.push(m as f64 * self.cycle_time);
            m *= 2;
        }
        taus
    }
}

/// Which two-sample estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllanEstimator {
    /// Disjoint clusters; the plain two-sample variance.
    #[default]
    NonOverlapping,
    /// All cluster start positions; better confidence at long tau.
    Overlapping,
}

/// Allan deviation per requested tau.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllanResult {
    pub taus: Vec<f64>,
    pub adev: Vec<f64>,
    /// Clusters entering each estimate.
    pub counts: Vec<usize>,
    pub estimator: AllanEstimator,
}

/// Two-sample (Allan) deviation of cluster means at each tau.
///
/// Every tau must be an integer multiple m of the cycle time; the series is
/// cut into M = ⌊len/m⌋ cluster means y_i and the variance is
/// Σ(y_{i+1} − y_i)²/(2(M−1)). The overlapping variant slides the cluster
/// start over every shot instead.
pub fn allan_deviation(
    series: &ShotSeries,
    taus: &[f64],
    estimator: AllanEstimator,
) -> Result<AllanResult, StabilityError> {
    let n = series.values.len();
    if n < 2 {
        return Err(StabilityError::TooFewShots(n));
    }
    let mut adev = Vec::with_capacity(taus.len());
    let mut counts = Vec::with_capacity(taus.len());

    // Prefix sums make overlapping cluster means O(1) each.
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in &series.values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let cluster_mean = |start: usize, m: usize| (prefix[start + m] - prefix[start]) / m as f64;

    for &tau in taus {
        let ratio = tau / series.cycle_time;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(StabilityError::TauNotMultiple { tau, cycle: series.cycle_time });
        }
        let m = m as usize;

        let variance = match estimator {
            AllanEstimator::NonOverlapping => {
                let clusters = n / m;
                if clusters < 3 {
                    return Err(StabilityError::TooFewClusters { tau, clusters });
                }
                // Direct per-cluster sums (not the prefix array): identical
                // clusters then produce identical means and exact zeros.
                let means: Vec<f64> = (0..clusters)
                    .map(|i| series.values[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64)
                    .collect();
                let sum: f64 = means.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
                counts.push(clusters);
                sum / (2.0 * (clusters - 1) as f64)
            }
            AllanEstimator::Overlapping => {
                if n / m < 3 {
                    return Err(StabilityError::TooFewClusters { tau, clusters: n / m });
                }
                let pairs = n + 1 - 2 * m;
                let mut sum = 0.0;
                for start in 0..pairs {
                    let d = cluster_mean(start + m, m) - cluster_mean(start, m);
                    sum += d * d;
                }
                counts.push(n + 1 - m);
                sum / (2.0 * pairs as f64)
            }
        };
        adev.push(variance.sqrt());
    }

    Ok(AllanResult { taus: taus.to_vec(), adev, counts, estimator })
}

/// White-noise extrapolation of an Allan curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityFit {
    /// Fitted deviation at τ = 1 s (the τ^(−1/2) amplitude).
    pub at_one_second: f64,
    /// Fit evaluated at the reference tau.
    pub predicted_at_ref: f64,
    pub tau_ref: f64,
    /// Measured point nearest the reference tau: (tau, adev).
    pub raw_nearest: (f64, f64),
    /// Free log-log slope of the curve.
    pub slope: f64,
    /// False when the slope strays more than 0.15 from −1/2, meaning the
    /// white-noise extrapolation is not trustworthy.
    pub white_noise_valid: bool,
}

/// Fits adev = A·τ^(−1/2) in log-log space and reports A together with the
/// extrapolated deviation at `tau_ref`. A free-slope fit guards the
/// extrapolation: slopes off −1/2 by more than 0.15 clear
/// `white_noise_valid`.
pub fn sensitivity_at_tau(result: &AllanResult, tau_ref: f64) -> Result<SensitivityFit, StabilityError> {
    let pts: Vec<(f64, f64)> = result
        .taus
        .iter()
        .zip(&result.adev)
        .filter(|(t, a)| **t > 0.0 && **a > 0.0)
        .map(|(t, a)| (t.ln(), a.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(StabilityError::TooFewTaus(pts.len()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let white_noise_valid = (slope + 0.5).abs() <= 0.15;

    // Amplitude of the fixed-slope model: mean of ln a + ln τ / 2.
    let log_a = pts.iter().map(|(x, y)| y + 0.5 * x).sum::<f64>() / n;
    let at_one_second = log_a.exp();

    let raw_nearest = result
        .taus
        .iter()
        .zip(&result.adev)
        .min_by(|a, b| {
            (a.0 - tau_ref).abs().partial_cmp(&(b.0 - tau_ref).abs()).unwrap()
        })
        .map(|(t, a)| (*t, *a))
        .expect("nonempty");

    Ok(SensitivityFit {
        at_one_second,
        predicted_at_ref: at_one_second / tau_ref.sqrt(),
        tau_ref,
        raw_nearest,
        slope,
        white_noise_valid,
    })
}

/// Single-shot projection-noise floor Δg/g = 1/(C·√N·g·k_eff·T²).
pub fn qpn_limit(contrast: f64, atoms: u64, g: f64, k_eff: f64, t: f64) -> Result<f64, StabilityError> {
    if atoms == 0 {
        return Err(StabilityError::TooFewShots(0));
    }
    for (value, bad) in [
        (contrast, !(contrast > 0.0 && contrast <= 1.0)),
        (g, !(g > 0.0)),
        (k_eff, !(k_eff > 0.0)),
        (t, !(t > 0.0)),
    ] {
        if bad {
            return Err(StabilityError::BadCycleTime(value));
        }
    }
    Ok(1.0 / (contrast * (atoms as f64).sqrt() * g * k_eff * t * t))
}
