//! Fringe-scan simulation, sinusoidal fringe fitting, and gravity
//! extraction.
//!
//! A scan steps the lattice sweep rate (or the closing-pulse phase) across
//! the fringe and records the first-order population per point. Shots draw
//! binomial projection noise from per-shot sub-streams, optionally with a
//! per-shot Gaussian phase kick representing integrated laser phase noise.
//!
//! The fringe period in sweep rate is fixed by geometry at 1/(nT²) and is
//! never fitted; the model `P = b·(1 + C·cos(κ(x − x0)))` is then linear in
//! `(b, b·C·cos κx0, b·C·sin κx0)` and solved exactly by weighted least
//! squares. [`extract_g`] resolves the fringe ambiguity by finding the one
//! candidate centre shared across scans of different `T`.

use nalgebra::{Matrix3, Vector3};
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{gravity_from_chirp, mz_phase, BraggConfig, PulseSequence};
use crate::seeding::stream_rng;

/// Base label for per-shot RNG sub-streams.
const SHOT_STREAM_BASE: u64 = 0x2000_0000;

#[derive(Debug, Error)]
pub enum FringeError {
    #[error("scan axis must be strictly increasing (index {0})")]
    AxisNotMonotone(usize),
    #[error("contrast must lie in [0, 1] (got {0})")]
    BadContrast(f64),
    #[error("scan needs atoms per shot (got 0)")]
    NoAtoms,
    #[error("scan must span one fringe period or carry at least 8 points (span {span:.3} of a period, {points} points)")]
    ScanTooSparse { span: f64, points: usize },
    #[error("fringe fit did not converge: {0}")]
    NoConvergence(String),
    #[error("gravity extraction needs at least two distinct interrogation times")]
    NeedsTwoTimes,
    #[error("gravity extraction requires sweep-rate scans")]
    WrongAxis,
    #[error("no sweep-rate candidate is consistent across interrogation times; candidates per scan: {0:?}")]
    NoConsistentCandidates(Vec<Vec<f64>>),
    #[error("fringe ambiguity unresolved: {} candidate sets are equally consistent: {sets:?}", sets.len())]
    AmbiguousCandidates { sets: Vec<Vec<f64>> },
}

/// What a scan steps over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "values", rename_all = "kebab-case")]
pub enum ScanAxis {
    /// Lattice sweep rates (Hz/s); fringe period 1/(nT²).
    SweepRate(Vec<f64>),
    /// Closing beamsplitter phase (rad); fringe period 2π.
    PulsePhase(Vec<f64>),
}

impl ScanAxis {
    pub fn values(&self) -> &[f64] {
        match self {
            ScanAxis::SweepRate(v) | ScanAxis::PulsePhase(v) => v,
        }
    }

    pub fn is_phase(&self) -> bool {
        matches!(self, ScanAxis::PulsePhase(_))
    }
}

/// Monte-Carlo settings for one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    /// True local acceleration fed to the phase model (m/s²).
    pub g_true: f64,
    pub axis: ScanAxis,
    /// Atoms per shot.
    pub atoms: u64,
    /// Fringe contrast C in [0, 1].
    pub contrast: f64,
    /// Shots averaged per scan point; 0 selects the analytic (infinite-shot)
    /// populations with zero spread.
    pub shots_per_point: u32,
    pub seed: u64,
    /// Per-shot RMS phase kick (rad), e.g. the integrated laser phase noise.
    #[serde(default)]
    pub phase_kick_rms: f64,
    /// Additional Gaussian noise on the detected population fraction.
    #[serde(default)]
    pub detection_noise_rms: f64,
}

/// One simulated (or measured) fringe scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub sequence: PulseSequence,
    /// Bragg order n.
    pub order: u32,
    pub axis: ScanAxis,
    /// Mean detected fraction per point, in [0, 1].
    pub populations: Vec<f64>,
    /// Standard error of each population point (0 for analytic scans).
    pub stderr: Vec<f64>,
    pub shots_per_point: u32,
    pub atoms: u64,
    pub seed: u64,
}

/// Simulates population vs. scan position for the fringe model
/// P = (1 + C·cos Φ)/2 with binomial projection noise.
pub fn simulate_scan(
    cfg: &BraggConfig,
    seq: &PulseSequence,
    params: &ScanParams,
) -> Result<FringeScan, FringeError> {
    let xs = params.axis.values();
    for (i, pair) in xs.windows(2).enumerate() {
        if pair[0] >= pair[1] {
            return Err(FringeError::AxisNotMonotone(i + 1));
        }
    }
    if !(0.0..=1.0).contains(&params.contrast) {
        return Err(FringeError::BadContrast(params.contrast));
    }
    if params.atoms == 0 && params.shots_per_point > 0 {
        return Err(FringeError::NoAtoms);
    }

    let phi_at = |x: f64| -> f64 {
        match params.axis {
            ScanAxis::SweepRate(_) => mz_phase(cfg, seq, params.g_true, x),
            ScanAxis::PulsePhase(_) => cfg.order as f64 * x,
        }
    };

    let mut populations = Vec::with_capacity(xs.len());
    let mut stderr = Vec::with_capacity(xs.len());
    for (point, &x) in xs.iter().enumerate() {
        let phi = phi_at(x);
        if params.shots_per_point == 0 {
            populations.push(0.5 * (1.0 + params.contrast * phi.cos()));
            stderr.push(0.0);
            continue;
        }
        let shots = params.shots_per_point as usize;
        let mut sum = 0.0;
        for shot in 0..shots {
            let stream = SHOT_STREAM_BASE + (point * shots + shot) as u64;
            let mut rng = stream_rng(params.seed, stream);
            let kicked = if params.phase_kick_rms > 0.0 {
                let kick: f64 = Normal::new(0.0, params.phase_kick_rms)
                    .expect("positive rms")
                    .sample(&mut rng);
                phi + kick
            } else {
                phi
            };
            let p = (0.5 * (1.0 + params.contrast * kicked.cos())).clamp(0.0, 1.0);
            let detected = Binomial::new(params.atoms, p).expect("p in [0,1]").sample(&mut rng);
            let mut fraction = detected as f64 / params.atoms as f64;
            if params.detection_noise_rms > 0.0 {
                let extra: f64 = Normal::new(0.0, params.detection_noise_rms)
                    .expect("positive rms")
                    .sample(&mut rng);
                fraction = (fraction + extra).clamp(0.0, 1.0);
            }
            sum += fraction;
        }
        let mean = sum / shots as f64;
        // Binomial standard error at the observed fraction, floored away
        // from the p ∈ {0, 1} degeneracy.
        let trials = (params.atoms as f64) * shots as f64;
        let p_eff = mean.clamp(1.0 / trials, 1.0 - 1.0 / trials);
        let mut var = p_eff * (1.0 - p_eff) / trials;
        var += params.detection_noise_rms.powi(2) / shots as f64;
        populations.push(mean);
        stderr.push(var.sqrt());
    }

    Ok(FringeScan {
        sequence: seq.clone(),
        order: cfg.order,
        axis: params.axis.clone(),
        populations,
        stderr,
        shots_per_point: params.shots_per_point,
        atoms: params.atoms,
        seed: params.seed,
    })
}

/// Axis kind recorded on a fit (the scan itself is not retained).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitAxis {
    SweepRate,
    PulsePhase,
}

/// Least-squares fringe parameters. Covariance rows/columns are ordered
/// (offset, contrast, center, period); the period is fixed by geometry, so
/// its row and column are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub axis: FitAxis,
    /// Baseline b of P = b·(1 + C·cos κ(x − x0)).
    pub offset: f64,
    /// Fitted contrast, clamped to [0, 1].
    pub contrast: f64,
    /// Fringe centre x0 reduced into [0, period).
    pub center: f64,
    /// Fringe period: 1/(nT²) for sweep-rate scans, 2π for phase scans.
    pub period: f64,
    pub residual_rms: f64,
    pub covariance: [[f64; 4]; 4],
    /// Scanned axis range, used to enumerate centre candidates.
    pub scan_window: (f64, f64),
    pub points: usize,
}

impl FringeFit {
    /// 1σ uncertainty of the fitted centre.
    pub fn center_sigma(&self) -> f64 {
        self.covariance[2][2].max(0.0).sqrt()
    }

    /// All centre candidates `center + m·period` inside the scanned window.
    pub fn center_candidates(&self) -> Vec<f64> {
        let (lo, hi) = self.scan_window;
        let m_lo = ((lo - self.center) / self.period).ceil() as i64;
        let m_hi = ((hi - self.center) / self.period).floor() as i64;
        (m_lo..=m_hi).map(|m| self.center + m as f64 * self.period).collect()
    }
}

/// Fits the fixed-period fringe model to a scan by exact linear least
/// squares on (b, b·C·cos κx0, b·C·sin κx0); point weights come from the
/// scan standard errors when available.
pub fn fit_fringe(scan: &FringeScan) -> Result<FringeFit, FringeError> {
    let xs = scan.axis.values();
    let n = xs.len();
    let t2 = scan.sequence.interrogation * scan.sequence.interrogation;
    let kappa = match scan.axis {
        ScanAxis::SweepRate(_) => std::f64::consts::TAU * scan.order as f64 * t2,
        ScanAxis::PulsePhase(_) => scan.order as f64,
    };
    let period = std::f64::consts::TAU / kappa;

    let span = if n >= 2 { (xs[n - 1] - xs[0]) / period } else { 0.0 };
    if n < 8 && span < 1.0 {
        return Err(FringeError::ScanTooSparse { span, points: n });
    }

    let weighted = scan.stderr.iter().all(|s| *s > 0.0);
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for ((&x, &y), &sig) in xs.iter().zip(&scan.populations).zip(&scan.stderr) {
        let w = if weighted { 1.0 / (sig * sig) } else { 1.0 };
        let theta = kappa * x;
        let row = Vector3::new(1.0, theta.cos(), theta.sin());
        ata += w * row * row.transpose();
        aty += w * y * row;
    }
    let inv = ata
        .try_inverse()
        .ok_or_else(|| FringeError::NoConvergence("normal equations are singular".into()))?;
    let beta = inv * aty;
    let (b, p, q) = (beta[0], beta[1], beta[2]);

    let mut rss = 0.0;
    for (&x, &y) in xs.iter().zip(&scan.populations) {
        let theta = kappa * x;
        let r = y - (b + p * theta.cos() + q * theta.sin());
        rss += r * r;
    }
    let residual_rms = (rss / n as f64).sqrt();

    // Parameter covariance: exact for known standard errors, otherwise
    // scaled by the residual variance.
    let cov3 = if weighted {
        inv
    } else {
        inv * (rss / (n.saturating_sub(3)).max(1) as f64)
    };

    if b <= 0.0 {
        return Err(FringeError::NoConvergence(format!("non-positive baseline {b}")));
    }
    let amp = p.hypot(q);
    let amp_var = cov3[(1, 1)] + cov3[(2, 2)];
    if amp * amp <= 4.0 * amp_var {
        return Err(FringeError::NoConvergence(
            "fringe amplitude indistinguishable from noise".into(),
        ));
    }

    let contrast = (amp / b).clamp(0.0, 1.0);
    let theta0 = q.atan2(p);
    let center = (theta0 / kappa).rem_euclid(period);

    // Delta method onto (offset, contrast, center); period is not a
    // parameter.
    let d_contrast = Vector3::new(-amp / (b * b), p / (amp * b), q / (amp * b));
    let d_center = Vector3::new(0.0, -q / (amp * amp * kappa), p / (amp * amp * kappa));
    let d_offset = Vector3::new(1.0, 0.0, 0.0);
    let jac = [d_offset, d_contrast, d_center];
    let mut covariance = [[0.0; 4]; 4];
    for (i, ji) in jac.iter().enumerate() {
        for (j, jj) in jac.iter().enumerate() {
            covariance[i][j] = (ji.transpose() * cov3 * jj)[(0, 0)];
        }
    }

    Ok(FringeFit {
        axis: if scan.axis.is_phase() { FitAxis::PulsePhase } else { FitAxis::SweepRate },
        offset: b,
        contrast,
        center,
        period,
        residual_rms,
        covariance,
        scan_window: (xs[0], xs[n - 1]),
        points: n,
    })
}

/// Result of combining fringe fits at several interrogation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GravityEstimate {
    /// Extracted acceleration (m/s²).
    pub g: f64,
    /// 1σ uncertainty on g (m/s²).
    pub g_sigma: f64,
    /// Common resonance sweep rate (Hz/s).
    pub alpha0: f64,
    pub alpha0_sigma: f64,
    /// (interrogation time, selected candidate centre) per input fit.
    pub selected: Vec<(f64, f64)>,
    /// Spread (max − min) of the selected candidates (Hz/s).
    pub spread: f64,
}

/// Finds the sweep-rate candidate common to all fits and converts it to g.
///
/// Each fit determines its centre only modulo the fringe period; the true
/// resonance is the one candidate consistent across different interrogation
/// times. Zero or multiple consistent sets raise an explicit error listing
/// the candidates.
pub fn extract_g(cfg: &BraggConfig, fits: &[(f64, FringeFit)]) -> Result<GravityEstimate, FringeError> {
    if fits.len() < 2 {
        return Err(FringeError::NeedsTwoTimes);
    }
    let t0 = fits[0].0;
    if !fits.iter().any(|(t, _)| (t - t0).abs() > 1e-12 * t0.abs()) {
        return Err(FringeError::NeedsTwoTimes);
    }
    if fits.iter().any(|(_, f)| f.axis != FitAxis::SweepRate) {
        return Err(FringeError::WrongAxis);
    }

    let candidates: Vec<Vec<f64>> = fits.iter().map(|(_, f)| f.center_candidates()).collect();
    let min_period = fits.iter().map(|(_, f)| f.period).fold(f64::INFINITY, f64::min);
    let (ref_idx, _) = candidates
        .iter()
        .enumerate()
        .min_by_key(|(_, c)| c.len())
        .expect("at least two fits");

    let mut sets: Vec<(Vec<f64>, f64)> = Vec::new();
    'outer: for &r in &candidates[ref_idx] {
        let mut members = vec![0.0; fits.len()];
        members[ref_idx] = r;
        let mut lo = r;
        let mut hi = r;
        for (i, cands) in candidates.iter().enumerate() {
            if i == ref_idx {
                continue;
            }
            let sigma_pair = fits[ref_idx].1.center_sigma().hypot(fits[i].1.center_sigma());
            let eps = (6.0 * sigma_pair).max(1e-6 * min_period).min(fits[i].1.period / 3.0);
            let nearest = cands
                .iter()
                .cloned()
                .min_by(|a, b| (a - r).abs().partial_cmp(&(b - r).abs()).unwrap());
            match nearest {
                Some(c) if (c - r).abs() <= eps => {
                    members[i] = c;
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
                _ => continue 'outer,
            }
        }
        sets.push((members, hi - lo));
    }

    match sets.len() {
        0 => return Err(FringeError::NoConsistentCandidates(candidates)),
        1 => {}
        _ => {
            return Err(FringeError::AmbiguousCandidates {
                sets: sets.into_iter().map(|(m, _)| m).collect(),
            })
        }
    }
    let (members, spread) = sets.pop().expect("one set");

    let floor = 1e-9 * min_period;
    let mut wsum = 0.0;
    let mut mean = 0.0;
    for (i, &c) in members.iter().enumerate() {
        let sigma = fits[i].1.center_sigma().max(floor);
        let w = 1.0 / (sigma * sigma);
        wsum += w;
        mean += w * c;
    }
    let alpha0 = mean / wsum;
    let alpha0_sigma = (1.0 / wsum).sqrt();

    let g = gravity_from_chirp(cfg, alpha0).map_err(|_| {
        FringeError::NoConsistentCandidates(vec![members.clone()])
    })?;
    let g_sigma = g * (alpha0_sigma / alpha0);

    Ok(GravityEstimate {
        g,
        g_sigma,
        alpha0,
        alpha0_sigma,
        selected: fits.iter().map(|(t, _)| *t).zip(members).collect(),
        spread,
    })
}
