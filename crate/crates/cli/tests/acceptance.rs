//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line (run with `--nocapture` to see them) and holding the
//! stated runtime budget.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use braggsim_core::fringe::{extract_g, fit_fringe, simulate_scan, ScanAxis, ScanParams};
use braggsim_core::noise::{synth_beat, BeatConfig, NoiseSpec, Tone};
use braggsim_core::physics::{chirp_for_gravity, AtomSpecies, BraggConfig, PulseSequence};
use braggsim_core::sensitivity::{characteristic_frequencies, sensitivity_transform, transfer_weight};
use braggsim_core::spectral::{demodulate, estimate_psd, integrated_phase_noise};
use braggsim_core::stability::{allan_deviation, qpn_limit, sensitivity_at_tau, AllanEstimator, ShotSeries};

const TAU2: f64 = 2.0 * std::f64::consts::PI;

fn fig_seq() -> PulseSequence {
    PulseSequence::nominal(TAU2 * 5e3, 0.010, 17.98).unwrap()
}

fn finish(criterion: &str, budget: Duration, start: Instant, detail: String) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "[acceptance] {criterion}: FAIL — runtime {elapsed:?} exceeds {budget:?}"
    );
    println!("[acceptance] {criterion}: PASS — {detail} ({elapsed:.2?})");
}

#[test]
fn criterion_1_transfer_structure() {
    let start = Instant::now();
    let seq = fig_seq();
    let markers = characteristic_frequencies(&seq, 10_000.0);
    let spacing = 99.00990099009901; // 1/(T + 2τ) for T = 10 ms, τ = 50 µs

    assert_eq!(markers.zeros.len(), 101);
    for (n, z) in markers.zeros.iter().enumerate() {
        let expected = (n + 1) as f64 * spacing;
        assert!(
            (z - expected).abs() <= 1e-9 * expected,
            "zero {n}: {z} vs {expected}"
        );
    }
    assert!(
        (markers.cutoff - 2886.8).abs() <= 0.1,
        "cutoff {} vs 2886.8 ± 0.1",
        markers.cutoff
    );

    // Weighting suppressed below 1e-8 of the in-band maximum at every zero.
    let max_w = (0..20_000)
        .map(|i| transfer_weight(&seq, 0.5 + i as f64 * 0.5))
        .fold(0.0, f64::max);
    for z in &markers.zeros {
        let w = transfer_weight(&seq, *z);
        assert!(w < 1e-8 * max_w, "weighting {w} at zero {z} (max {max_w})");
    }
    finish(
        "criterion 1 (transfer structure)",
        Duration::from_secs(1),
        start,
        format!("101 zeros at n x {spacing:.4} Hz, cutoff {:.1} Hz", markers.cutoff),
    );
}

mod quadrature_oracle {
    //! Independent Fourier quadrature of the piecewise sensitivity function.
    use super::TAU2;

    const GL_NODES: [f64; 5] = [
        0.1488743389816312,
        0.4333953941292472,
        0.6794095682990244,
        0.8650633666889845,
        0.9739065285171717,
    ];
    const GL_WEIGHTS: [f64; 5] = [
        0.2955242247147529,
        0.2692667193099963,
        0.2190863625159820,
        0.1494513491505806,
        0.0666713443086881,
    ];

    fn gauss10(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            sum += w * (f(mid + half * x) + f(mid - half * x));
        }
        sum * half
    }

    fn piece(a: f64, b: f64, omega: f64, f: impl Fn(f64) -> f64 + Copy) -> f64 {
        let panels = (((b - a) * omega / TAU2 * 4.0).ceil() as usize).max(4);
        let h = (b - a) / panels as f64;
        (0..panels).map(|i| gauss10(a + i as f64 * h, a + (i + 1) as f64 * h, f)).sum()
    }

    /// Im G(ω) from the printed branches sin(Ωt) / 1 / −sin(Ω(T−t)).
    pub fn imag_transform(rabi: f64, tau: f64, t_free: f64, omega: f64) -> f64 {
        let up = piece(0.0, tau, omega, |t| (rabi * t).sin() * (omega * t).sin());
        let hold = piece(tau, t_free + tau, omega, |t| (omega * t).sin());
        let down = piece(t_free + tau, t_free + 2.0 * tau, omega, |t| {
            -(rabi * (t_free - t)).sin() * (omega * t).sin()
        });
        -2.0 * (up + hold + down)
    }
}

#[test]
fn criterion_2_transform_vs_quadrature() {
    let start = Instant::now();
    let seq = fig_seq();
    let points = 500;
    let (la, lb) = (1f64.ln(), 50_000f64.ln());
    let freqs: Vec<f64> = (0..points)
        .map(|i| (la + (lb - la) * i as f64 / (points - 1) as f64).exp())
        .collect();
    let zeros = characteristic_frequencies(&seq, 51_000.0).zeros;
    let peak = freqs
        .iter()
        .map(|&f| sensitivity_transform(&seq, TAU2 * f).norm())
        .fold(0.0, f64::max);

    let mut worst = 0.0f64;
    let mut excluded = 0usize;
    for (i, &f) in freqs.iter().enumerate() {
        let omega = TAU2 * f;
        let expected =
            quadrature_oracle::imag_transform(seq.rabi, seq.beamsplitter, seq.interrogation, omega);
        let got = sensitivity_transform(&seq, omega).im;
        let bin = match (i.checked_sub(1), freqs.get(i + 1)) {
            (Some(lo), Some(&hi)) => 0.5 * (hi - freqs[lo]),
            _ => f * 0.03,
        };
        if zeros.iter().any(|z| (f - z).abs() <= bin) {
            excluded += 1;
            assert!(
                (got - expected).abs() <= 1e-9 * peak,
                "f = {f} (near zero): {got} vs {expected}"
            );
        } else {
            let rel = (got - expected).abs() / expected.abs();
            worst = worst.max(rel);
            assert!(rel < 1e-6, "f = {f}: rel err {rel}");
        }
    }
    finish(
        "criterion 2 (closed form vs quadrature)",
        Duration::from_secs(10),
        start,
        format!("500 frequencies, max rel err {worst:.2e}, {excluded} near-zero points at abs tol"),
    );
}

#[test]
fn criterion_3_tone_round_trip() {
    let start = Instant::now();
    let seq = fig_seq();
    let cfg = BeatConfig {
        amplitude: 1.0,
        contrast: 0.5,
        carrier: 15e3,
        phase0: 0.2,
        fs: 1e6,
        duration: 2.0,
    };
    let spec = NoiseSpec {
        tones: vec![Tone { frequency: 800.0, rms_phase: 0.010 }],
        seed: 42,
        ..Default::default()
    };
    let series = synth_beat(&cfg, &spec).unwrap();
    let demod = demodulate(&series, cfg.carrier, cfg.carrier / 4.0).unwrap();
    assert!(!demod.degenerate);
    let psd = estimate_psd(&demod.settled_phase(), 1.0).unwrap().into_phase_units();
    let sigma = integrated_phase_noise(&psd, &seq, 50.0, 10_000.0).unwrap();

    let expect = 0.010 * transfer_weight(&seq, 800.0).sqrt();
    let rel = (sigma - expect).abs() / expect;
    assert!(
        rel <= 0.05,
        "sigma {sigma:.6e} vs 0.010·|H(2π·800)| = {expect:.6e} (rel {rel:.4})"
    );
    finish(
        "criterion 3 (tone round trip)",
        Duration::from_secs(30),
        start,
        format!("sigma {:.4} mrad vs expected {:.4} mrad (rel {rel:.3})", sigma * 1e3, expect * 1e3),
    );
}

fn braggsim_bin(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_braggsim"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .arg("--no-svg")
        .output()
        .expect("spawn braggsim")
}

#[test]
fn criterion_4_integrated_noise_comparison() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    let out = braggsim_bin(dir.path(), &["demo", "--scenario", "single-aom"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let single: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo-single-aom.json")).unwrap())
            .unwrap();
    let sigma_single = single["sigma_phi_mrad"].as_f64().unwrap();
    assert!(
        (sigma_single - 10.0).abs() <= 0.5,
        "single-AOM-like sigma {sigma_single} outside 10 ± 0.5 mrad"
    );

    let out = braggsim_bin(dir.path(), &["demo", "--scenario", "dual-aom"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dual: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo-dual-aom.json")).unwrap())
            .unwrap();
    let sigma_dual = dual["sigma_phi_mrad"].as_f64().unwrap();
    let ratio = dual["suppression_ratio"].as_f64().unwrap();
    assert!(
        (sigma_dual - 47.0).abs() <= 2.5,
        "dual-AOM-like sigma {sigma_dual} outside 47 ± 2.5 mrad"
    );
    assert!((ratio - 4.7).abs() <= 0.1, "printed ratio {ratio} outside 4.7 ± 0.1");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ratio"), "demo prints the ratio: {stdout}");

    finish(
        "criterion 4 (integrated-noise comparison)",
        Duration::from_secs(60),
        start,
        format!("{sigma_single:.2} and {sigma_dual:.2} mrad/shot, ratio {ratio:.2}"),
    );
}

#[test]
fn criterion_5_fringe_gravity_pipeline() {
    let start = Instant::now();
    let g_true = 9.7833;
    let cfg = BraggConfig::new(AtomSpecies::rb87(), 1).unwrap();
    let times = [0.0034, 0.007, 0.010];

    let make_params = |t: f64, shots: u32, seed: u64| -> ScanParams {
        let period = 1.0 / (t * t);
        let center = chirp_for_gravity(&cfg, g_true).unwrap();
        let points = 40;
        let lo = center - 1.25 * period;
        let axis: Vec<f64> = (0..points)
            .map(|i| lo + 2.5 * period * i as f64 / (points - 1) as f64)
            .collect();
        ScanParams {
            g_true,
            axis: ScanAxis::SweepRate(axis),
            atoms: 50_000,
            contrast: 0.5,
            shots_per_point: shots,
            seed,
            phase_kick_rms: 0.0,
            detection_noise_rms: 0.0,
        }
    };

    // Noiseless: g recovered to 1e-9 relative.
    let fits: Vec<_> = times
        .iter()
        .map(|&t| {
            let seq = PulseSequence::nominal(TAU2 * 5e3, t, 17.98).unwrap();
            let scan = simulate_scan(&cfg, &seq, &make_params(t, 0, 0)).unwrap();
            (t, fit_fringe(&scan).unwrap())
        })
        .collect();
    let noiseless = extract_g(&cfg, &fits).unwrap();
    let rel = (noiseless.g - g_true).abs() / g_true;
    assert!(rel <= 1e-9, "noiseless g {} deviates rel {rel:.2e}", noiseless.g);

    // Projection noise: 3-sigma coverage in at least 95 of 100 seeded runs.
    let mut covered = 0;
    for run in 0..100u64 {
        let fits: Vec<_> = times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let seq = PulseSequence::nominal(TAU2 * 5e3, t, 17.98).unwrap();
                let scan =
                    simulate_scan(&cfg, &seq, &make_params(t, 5, 7919 * run + i as u64)).unwrap();
                (t, fit_fringe(&scan).unwrap())
            })
            .collect();
        if let Ok(est) = extract_g(&cfg, &fits) {
            if (est.g - g_true).abs() <= 3.0 * est.g_sigma {
                covered += 1;
            }
        }
    }
    assert!(covered >= 95, "3-sigma coverage in only {covered} of 100 runs");
    finish(
        "criterion 5 (fringe/g pipeline)",
        Duration::from_secs(120),
        start,
        format!("noiseless rel err {rel:.2e}; QPN coverage {covered}/100"),
    );
}

#[test]
fn criterion_6_qpn_limit() {
    let start = Instant::now();
    let k = TAU2 / 780.24e-9;
    let limit = qpn_limit(0.5, 50_000, 9.78, 2.0 * k, 0.010).unwrap();
    let expect = 56.7e-8;
    let rel = (limit - expect).abs() / expect;
    assert!(rel <= 0.01, "limit {limit:.4e} vs {expect:.4e} (rel {rel:.4})");
    finish(
        "criterion 6 (projection-noise limit)",
        Duration::from_secs(1),
        start,
        format!("dg/g = {limit:.3e} within 1% of 56.7e-8"),
    );
}

#[test]
fn criterion_7_allan_suite() {
    let start = Instant::now();

    // Exact equivalence with the defining sum on short series.
    let mut state = 0x1234_5678_u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    for len in [9usize, 16, 31, 47, 64] {
        let values: Vec<f64> = (0..len).map(|_| next()).collect();
        let series = ShotSeries::new(values.clone(), 1.0).unwrap();
        for m in 1..=len / 3 {
            let result = allan_deviation(&series, &[m as f64], AllanEstimator::NonOverlapping).unwrap();
            // Brute force straight from the definition.
            let clusters = len / m;
            let means: Vec<f64> = (0..clusters)
                .map(|i| values[i * m..(i + 1) * m].iter().sum::<f64>() / m as f64)
                .collect();
            let brute = (means
                .windows(2)
                .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
                .sum::<f64>()
                / (2.0 * (clusters - 1) as f64))
                .sqrt();
            assert!(
                (result.adev[0] - brute).abs() <= 1e-15 * brute.max(1e-300),
                "len {len}, m {m}: {} vs {brute}",
                result.adev[0]
            );
        }
    }

    // White-noise slope −0.50 ± 0.05 over two decades (50 seeds).
    use rand_distr::Distribution;
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut slope_sum = 0.0;
    for seed in 0..50 {
        let mut rng = braggsim_core::seeding::stream_rng(seed, 0xACC);
        let values: Vec<f64> = (0..4096).map(|_| normal.sample(&mut rng)).collect();
        let series = ShotSeries::new(values, 17.98).unwrap();
        let taus = series.octave_taus();
        let result = allan_deviation(&series, &taus, AllanEstimator::NonOverlapping).unwrap();
        slope_sum += sensitivity_at_tau(&result, 1.0).unwrap().slope;
    }
    let mean_slope = slope_sum / 50.0;
    assert!(
        (mean_slope + 0.50).abs() <= 0.05,
        "white-noise slope {mean_slope:.3} outside −0.50 ± 0.05"
    );

    // Calibrated bundled series: 1360 µGal/√Hz at 1 s within 5%, and the
    // τ^(−1/2) prediction at 200 s stays below 110 µGal, flagged as an
    // extrapolation.
    let dir = tempfile::tempdir().unwrap();
    let out = braggsim_bin(dir.path(), &["allan", "--scenario", "allan-white", "--tau-ref", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("allan-allan-white-fit.json")).unwrap(),
    )
    .unwrap();
    let at_1s = report["fit"]["at_one_second"].as_f64().unwrap();
    let at_200s = report["fit"]["predicted_at_ref"].as_f64().unwrap();
    let valid = report["fit"]["white_noise_valid"].as_bool().unwrap();
    let flagged = report["white_noise_extrapolation"].as_bool().unwrap();
    assert!(
        (at_1s - 1360.0).abs() <= 0.05 * 1360.0,
        "sigma(1 s) = {at_1s} µGal outside 1360 ± 5%"
    );
    assert!(at_200s <= 110.0, "predicted {at_200s} µGal at 200 s exceeds 110");
    assert!(valid && flagged, "white-noise extrapolation must be flagged");

    finish(
        "criterion 7 (Allan suite)",
        Duration::from_secs(60),
        start,
        format!("slope {mean_slope:.3}, sigma(1 s) {at_1s:.0} µGal, predicted {at_200s:.1} µGal at 200 s"),
    );
}

#[test]
fn criterion_8_deterministic_artifacts() {
    let start = Instant::now();
    let runs: &[&[&str]] = &[
        &["transfer", "--scenario", "fig2-transfer"],
        &["fringe", "--scenario", "fringe-T10ms"],
        &["allan", "--scenario", "allan-white"],
        &["demo", "--scenario", "dual-aom"],
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for args in runs {
        for dir in [&a, &b] {
            let out = braggsim_bin(dir.path(), args);
            assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        let ext = entry.path().extension().map(|e| e.to_string_lossy().into_owned());
        if !matches!(ext.as_deref(), Some("csv") | Some("json")) {
            continue;
        }
        let first = std::fs::read(entry.path()).unwrap();
        let second = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(first, second, "artifact {name:?} differs between identical runs");
        compared += 1;
    }
    assert!(compared >= 8, "expected at least 8 artifacts, compared {compared}");
    finish(
        "criterion 8 (deterministic artifacts)",
        Duration::from_secs(60),
        start,
        format!("{compared} CSV/JSON artifacts byte-identical across reruns"),
    );
}
