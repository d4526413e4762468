//! `braggsim`: reproducible simulation and signal-analysis pipelines for a
//! Bragg-pulse Mach-Zehnder atom gravimeter.

mod artifacts;
mod error;
mod pipeline;
mod scenario;
mod svg;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use braggsim_core::fringe::{extract_g, fit_fringe, simulate_scan};
use braggsim_core::physics::{AtomSpecies, BraggConfig, PulseSequence};
use braggsim_core::sensitivity::{characteristic_frequencies, TransferGrid};
use braggsim_core::series::TimeSeries;
use braggsim_core::spectral::{estimate_psd, psd_to_dbm, PsdUnit};
use braggsim_core::stability::{
    allan_deviation, qpn_limit, sensitivity_at_tau, AllanEstimator, ShotSeries,
};

use error::CliError;
use scenario::Scenario;

#[derive(Parser)]
#[command(
    name = "braggsim",
    version,
    about = "Phase-noise and fringe analysis pipelines for a Bragg-lattice atom gravimeter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for artifacts (default: $BRAGGSIM_OUT or '.').
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip SVG artifacts.
    #[arg(long, global = true)]
    no_svg: bool,
    /// Omit the timestamp from SVG output (byte-identical reruns).
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Suppress the one-line summaries.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer-function weighting |H(2πf)|² on a log grid, with zeros and
    /// cutoff.
    Transfer {
        #[arg(long)]
        scenario: String,
    },
    /// Synthesize the heterodyne beat record for a scenario.
    Synth {
        #[arg(long)]
        scenario: String,
        /// Write the raw binary record instead of CSV.
        #[arg(long)]
        binary: bool,
    },
    /// Welch PSD of a time-series file (.csv or .bin).
    Psd {
        #[arg(long)]
        input: PathBuf,
        /// Resolution bandwidth in Hz.
        #[arg(long)]
        rbw: f64,
        /// Tag the input as a phase record (rad), yielding rad²/Hz.
        #[arg(long)]
        phase: bool,
        /// Also emit the per-bin power in dBm (volt-denominated input).
        #[arg(long)]
        dbm: bool,
        /// Load impedance for the dBm view (Ω).
        #[arg(long, default_value_t = 50.0)]
        impedance: f64,
        /// Also emit the dBc/Hz view of a phase PSD (requires --phase).
        #[arg(long)]
        dbc: bool,
    },
    /// Integrate a phase PSD against the interferometer weighting.
    IntegrateNoise {
        /// PSD CSV in rad²/Hz (e.g. from `psd --phase`).
        #[arg(long)]
        input: PathBuf,
        /// Interrogation time T (s).
        #[arg(long)]
        t: f64,
        /// Beamsplitter pulse duration τ (s).
        #[arg(long = "tau-r")]
        tau_r: f64,
        /// Rabi frequency Ω (rad/s).
        #[arg(long)]
        rabi: f64,
        #[arg(long = "f-lo", default_value_t = 50.0)]
        f_lo: f64,
        #[arg(long = "f-hi", default_value_t = 10_000.0)]
        f_hi: f64,
        /// Cycle time recorded in the report (s).
        #[arg(long, default_value_t = 17.98)]
        cycle: f64,
    },
    /// Simulate a fringe scan (population vs sweep rate or pulse phase).
    Fringe {
        #[arg(long)]
        scenario: String,
    },
    /// Fit the fixed-period fringe model to a fringe CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Extract g from fringe CSVs taken at different interrogation times.
    ExtractG {
        /// Fringe CSV files (repeat the flag per file).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        /// Species JSON (mass_kg, wavelength_m, label); default ⁸⁷Rb.
        #[arg(long)]
        species: Option<PathBuf>,
    },
    /// Allan deviation of a shot series, with white-noise extrapolation.
    Allan {
        /// Scenario with a stability block (synthesizes the series).
        #[arg(long, conflicts_with = "input")]
        scenario: Option<String>,
        /// CSV of shot_index,value rows.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Cycle time of the input series (s); required with --input.
        #[arg(long = "cycle-time")]
        cycle_time: Option<f64>,
        /// Use the overlapping estimator.
        #[arg(long)]
        overlapping: bool,
        /// Unit of the series values.
        #[arg(long, value_enum, default_value_t = UnitArg::Ugal)]
        unit: UnitArg,
        /// Reference tau for the extrapolated sensitivity (s).
        #[arg(long = "tau-ref", default_value_t = 1.0)]
        tau_ref: f64,
    },
    /// Projection-noise sensitivity floor Δg/g.
    Limit {
        #[arg(long)]
        contrast: f64,
        #[arg(long)]
        atoms: u64,
        /// Interrogation time T (s).
        #[arg(long)]
        t: f64,
        #[arg(long)]
        g: f64,
        /// Effective wavenumber (rad/m); default 2·(2π/wavelength).
        #[arg(long = "k-eff")]
        k_eff: Option<f64>,
        /// Lattice wavelength used when --k-eff is absent (m).
        #[arg(long, default_value_t = 780.24e-9)]
        wavelength: f64,
    },
    /// Full noise pipeline: synth → demodulate → PSD → integrate.
    Demo {
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    Ugal,
    Ms2,
}

impl UnitArg {
    fn label(self) -> &'static str {
        match self {
            UnitArg::Ugal => "uGal",
            UnitArg::Ms2 => "m/s^2",
        }
    }
}

struct Ctx {
    out: PathBuf,
    seed: Option<u64>,
    no_svg: bool,
    no_timestamp: bool,
    quiet: bool,
}

impl Ctx {
    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&self, msg: String) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn timestamp(&self) -> Option<String> {
        if self.no_timestamp {
            None
        } else {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            Some(format!("unix {secs} s"))
        }
    }

    fn write_svg(&self, path: &Path, plot: &svg::Plot) -> Result<(), CliError> {
        if self.no_svg {
            return Ok(());
        }
        let rendered = plot.render(self.timestamp().as_deref())?;
        std::fs::write(path, rendered)?;
        Ok(())
    }
}

fn main() {
    let cli = Cli::parse();
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("BRAGGSIM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = Ctx {
        out,
        seed: cli.seed,
        no_svg: cli.no_svg,
        no_timestamp: cli.no_timestamp,
        quiet: cli.quiet,
    };
    if let Err(e) = run(&ctx, cli.command) {
        eprintln!("braggsim: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(ctx: &Ctx, command: Command) -> Result<(), CliError> {
    std::fs::create_dir_all(&ctx.out)?;
    match command {
        Command::Transfer { scenario } => cmd_transfer(ctx, &scenario),
        Command::Synth { scenario, binary } => cmd_synth(ctx, &scenario, binary),
        Command::Psd { input, rbw, phase, dbm, impedance, dbc } => {
            cmd_psd(ctx, &input, rbw, phase, dbm, impedance, dbc)
        }
        Command::IntegrateNoise { input, t, tau_r, rabi, f_lo, f_hi, cycle } => {
            cmd_integrate_noise(ctx, &input, t, tau_r, rabi, f_lo, f_hi, cycle)
        }
        Command::Fringe { scenario } => cmd_fringe(ctx, &scenario),
        Command::Fit { input } => cmd_fit(ctx, &input),
        Command::ExtractG { inputs, species } => cmd_extract_g(ctx, &inputs, species.as_deref()),
        Command::Allan { scenario, input, cycle_time, overlapping, unit, tau_ref } => {
            cmd_allan(ctx, scenario.as_deref(), input.as_deref(), cycle_time, overlapping, unit, tau_ref)
        }
        Command::Limit { contrast, atoms, t, g, k_eff, wavelength } => {
            cmd_limit(ctx, contrast, atoms, t, g, k_eff, wavelength)
        }
        Command::Demo { scenario } => cmd_demo(ctx, &scenario),
    }
}

fn effective_seed(ctx: &Ctx, scenario: &Scenario) -> u64 {
    ctx.seed.unwrap_or(scenario.seed)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn read_series(path: &Path) -> Result<TimeSeries, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::invalid(path.display(), e))?;
    if path.extension().is_some_and(|e| e == "bin") {
        Ok(TimeSeries::read_binary(BufReader::new(file))?)
    } else {
        Ok(TimeSeries::read_csv(BufReader::new(file))?)
    }
}

fn cmd_transfer(ctx: &Ctx, scenario_name: &str) -> Result<(), CliError> {
    let sc = Scenario::load(scenario_name)?;
    let seq: &PulseSequence = sc.require(&sc.sequence, "sequence")?;
    let block = sc.transfer.clone().unwrap_or_default();
    let grid = TransferGrid::log_spaced(seq, block.f_lo_hz, block.f_hi_hz, block.points)?;
    let markers = characteristic_frequencies(seq, block.f_hi_hz);

    let csv_path = ctx.artifact(&format!("transfer-{}.csv", sc.name));
    let mut w = BufWriter::new(File::create(&csv_path)?);
    artifacts::write_transfer_csv(&mut w, &grid.frequencies, &grid.weights)?;
    w.flush()?;

    #[derive(Serialize)]
    struct TransferReport<'a> {
        scenario: &'a str,
        sequence: &'a PulseSequence,
        band_hz: (f64, f64),
        zeros_hz: &'a [f64],
        cutoff_hz: f64,
    }
    artifacts::write_json(
        &ctx.artifact(&format!("transfer-{}.json", sc.name)),
        &TransferReport {
            scenario: &sc.name,
            sequence: seq,
            band_hz: (block.f_lo_hz, block.f_hi_hz),
            zeros_hz: &markers.zeros,
            cutoff_hz: markers.cutoff,
        },
    )?;

    let points: Vec<(f64, f64)> = grid.frequencies.iter().copied().zip(grid.weights.iter().copied()).collect();
    let plot = svg::Plot::loglog("Transfer-function weighting", "f (Hz)", "|H(2pi f)|^2")
        .with_series("|H|^2", points)
        .with_caption(format!("scenario {}, T = {} s", sc.name, seq.interrogation));
    ctx.write_svg(&ctx.artifact(&format!("transfer-{}.svg", sc.name)), &plot)?;

    ctx.say(format!(
        "transfer {}: {} points over {}-{} Hz, zero spacing {:.4} Hz, cutoff {:.1} Hz",
        sc.name,
        grid.frequencies.len(),
        block.f_lo_hz,
        block.f_hi_hz,
        1.0 / seq.half_support(),
        markers.cutoff
    ));
    Ok(())
}

fn cmd_synth(ctx: &Ctx, scenario_name: &str, binary: bool) -> Result<(), CliError> {
    let sc = Scenario::load(scenario_name)?;
    let beat = sc.require(&sc.beat, "beat")?;
    let mut noise = sc.require(&sc.noise, "noise")?.clone();
    noise.seed = effective_seed(ctx, &sc);
    let series = braggsim_core::noise::synth_beat(beat, &noise)?;

    let path = if binary {
        let path = ctx.artifact(&format!("synth-{}.bin", sc.name));
        series.write_binary(BufWriter::new(File::create(&path)?))?;
        path
    } else {
        let path = ctx.artifact(&format!("synth-{}.csv", sc.name));
        series.write_csv(BufWriter::new(File::create(&path)?))?;
        path
    };
    ctx.say(format!(
        "synth {}: {} samples at {} Hz (rms {:.4}) -> {}",
        sc.name,
        series.len(),
        series.fs,
        series.rms(),
        path.display()
    ));
    Ok(())
}

fn cmd_psd(
    ctx: &Ctx,
    input: &Path,
    rbw: f64,
    phase: bool,
    dbm: bool,
    impedance: f64,
    dbc: bool,
) -> Result<(), CliError> {
    if dbc && !phase {
        return Err(CliError::Validation("--dbc requires --phase (rad²/Hz input)".into()));
    }
    let series = read_series(input)?;
    let mut psd = estimate_psd(&series, rbw)?;
    if phase {
        psd = psd.into_phase_units();
    }
    let name = stem(input);

    let csv_path = ctx.artifact(&format!("psd-{name}.csv"));
    artifacts::write_psd_csv(BufWriter::new(File::create(&csv_path)?), &psd)?;

    let mut extra = String::new();
    if dbm {
        let converted = psd_to_dbm(&psd, impedance)?;
        let path = ctx.artifact(&format!("psd-{name}-dbm.csv"));
        artifacts::write_psd_csv(BufWriter::new(File::create(&path)?), &converted)?;
        let points: Vec<(f64, f64)> =
            converted.frequencies.iter().copied().zip(converted.values.iter().copied()).collect();
        let mut plot = svg::Plot::line("Power spectrum", "f (Hz)", "power in rbw (dBm)")
            .with_series("dBm", points)
            .with_caption(format!("{name}: rbw {} Hz, {} Ω load", converted.rbw, impedance));
        plot.log_x = true;
        ctx.write_svg(&ctx.artifact(&format!("psd-{name}-dbm.svg")), &plot)?;
        extra.push_str(", dBm view written");
    }
    if dbc {
        let path = ctx.artifact(&format!("psd-{name}-dbc.csv"));
        artifacts::write_dbc_csv(BufWriter::new(File::create(&path)?), &psd)?;
        extra.push_str(", dBc/Hz view written");
    }

    let points: Vec<(f64, f64)> =
        psd.frequencies.iter().copied().zip(psd.values.iter().copied()).collect();
    let plot = svg::Plot::loglog("Power spectral density", "f (Hz)", &format!("S ({})", psd.unit))
        .with_series("psd", points)
        .with_caption(format!("{name}: rbw {} Hz, {} segments", psd.rbw, psd.segments));
    ctx.write_svg(&ctx.artifact(&format!("psd-{name}.svg")), &plot)?;

    ctx.say(format!(
        "psd {name}: {} bins, rbw {} Hz, {} segments, total power {:.4e}{extra}",
        psd.frequencies.len(),
        psd.rbw,
        psd.segments,
        psd.total_power()
    ));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_integrate_noise(
    ctx: &Ctx,
    input: &Path,
    t: f64,
    tau_r: f64,
    rabi: f64,
    f_lo: f64,
    f_hi: f64,
    cycle: f64,
) -> Result<(), CliError> {
    let psd = artifacts::read_psd_csv(BufReader::new(File::open(input)?))?;
    if psd.unit != PsdUnit::RadSqPerHz {
        return Err(CliError::Validation(format!(
            "integrate-noise needs a rad²/Hz PSD (got {}); produce one with `psd --phase`",
            psd.unit
        )));
    }
    let seq = PulseSequence::new(rabi, tau_r, t, cycle)?;
    let sigma = braggsim_core::spectral::integrated_phase_noise(&psd, &seq, f_lo, f_hi)?;

    #[derive(Serialize)]
    struct IntegrateReport {
        input: String,
        sequence: PulseSequence,
        band_hz: (f64, f64),
        sigma_phi_rad: f64,
        sigma_phi_mrad: f64,
        nominal_pi_half: bool,
    }
    let name = stem(input);
    artifacts::write_json(
        &ctx.artifact(&format!("integrate-noise-{name}.json")),
        &IntegrateReport {
            input: input.display().to_string(),
            sequence: seq.clone(),
            band_hz: (f_lo, f_hi),
            sigma_phi_rad: sigma,
            sigma_phi_mrad: sigma * 1e3,
            nominal_pi_half: seq.is_nominal_pi_half(),
        },
    )?;
    ctx.say(format!(
        "integrate-noise {name}: sigma_phi = {:.3} mrad/shot over {f_lo}-{f_hi} Hz",
        sigma * 1e3
    ));
    Ok(())
}

fn cmd_fringe(ctx: &Ctx, scenario_name: &str) -> Result<(), CliError> {
    let sc = Scenario::load(scenario_name)?;
    let seed = effective_seed(ctx, &sc);
    let params = sc.scan_params(seed)?;
    let cfg = sc.bragg_config()?;
    let seq = sc.require(&sc.sequence, "sequence")?;
    let scan = simulate_scan(&cfg, seq, &params)?;

    let csv_path = ctx.artifact(&format!("fringe-{}.csv", sc.name));
    artifacts::write_fringe_csv(BufWriter::new(File::create(&csv_path)?), &scan)?;

    let x_label = if scan.axis.is_phase() { "closing-pulse phase (rad)" } else { "sweep rate (Hz/s)" };
    let points: Vec<(f64, f64)> =
        scan.axis.values().iter().copied().zip(scan.populations.iter().copied()).collect();
    let plot = svg::Plot::line("Fringe scan", x_label, "first-order population fraction")
        .with_series("population", points)
        .with_caption(format!("scenario {}, seed {seed}, T = {} s", sc.name, seq.interrogation));
    ctx.write_svg(&ctx.artifact(&format!("fringe-{}.svg", sc.name)), &plot)?;

    let (lo, hi) = scan
        .populations
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    ctx.say(format!(
        "fringe {}: {} points, population range [{lo:.3}, {hi:.3}] -> {}",
        sc.name,
        scan.populations.len(),
        csv_path.display()
    ));
    Ok(())
}

fn cmd_fit(ctx: &Ctx, input: &Path) -> Result<(), CliError> {
    let scan = artifacts::read_fringe_csv(BufReader::new(File::open(input)?))?;
    let fit = fit_fringe(&scan)?;
    let name = stem(input);
    artifacts::write_json(&ctx.artifact(&format!("fit-{name}.json")), &fit)?;
    ctx.say(format!(
        "fit {name}: contrast {:.4}, center {:.6e} ± {:.2e} (mod {:.6e}), residual rms {:.2e}",
        fit.contrast,
        fit.center,
        fit.center_sigma(),
        fit.period,
        fit.residual_rms
    ));
    Ok(())
}

fn cmd_extract_g(ctx: &Ctx, inputs: &[PathBuf], species: Option<&Path>) -> Result<(), CliError> {
    let species = match species {
        Some(path) => AtomSpecies::from_json_file(path)?,
        None => AtomSpecies::rb87(),
    };
    let mut fits = Vec::new();
    let mut order = None;
    for input in inputs {
        let scan = artifacts::read_fringe_csv(BufReader::new(File::open(input)?))?;
        match order {
            None => order = Some(scan.order),
            Some(o) if o != scan.order => {
                return Err(CliError::Validation(format!(
                    "{}: Bragg order {} differs from previous inputs ({o})",
                    input.display(),
                    scan.order
                )))
            }
            _ => {}
        }
        fits.push((scan.sequence.interrogation, fit_fringe(&scan)?));
    }
    let cfg = BraggConfig::new(species, order.unwrap_or(1))?;
    let estimate = extract_g(&cfg, &fits)?;

    #[derive(Serialize)]
    struct ExtractReport<'a> {
        inputs: Vec<String>,
        estimate: &'a braggsim_core::fringe::GravityEstimate,
        g_ugal_sigma: f64,
    }
    let name = stem(&inputs[0]);
    artifacts::write_json(
        &ctx.artifact(&format!("extract-g-{name}.json")),
        &ExtractReport {
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            estimate: &estimate,
            g_ugal_sigma: estimate.g_sigma / braggsim_core::stability::MS2_PER_UGAL,
        },
    )?;
    ctx.say(format!(
        "extract-g: g = {:.9} ± {:.2e} m/s² (alpha0 = {:.4} MHz/s, spread {:.3} Hz/s over {} scans)",
        estimate.g,
        estimate.g_sigma,
        estimate.alpha0 / 1e6,
        estimate.spread,
        fits.len()
    ));
    Ok(())
}

fn cmd_allan(
    ctx: &Ctx,
    scenario_name: Option<&str>,
    input: Option<&Path>,
    cycle_time: Option<f64>,
    overlapping: bool,
    unit: UnitArg,
    tau_ref: f64,
) -> Result<(), CliError> {
    let (name, series) = match (scenario_name, input) {
        (Some(scenario_name), None) => {
            let sc = Scenario::load(scenario_name)?;
            let block = sc.require(&sc.stability, "stability")?;
            let seed = effective_seed(ctx, &sc);
            let mut rng = braggsim_core::seeding::stream_rng(seed, 0x30);
            use rand_distr::Distribution;
            let normal = rand_distr::Normal::new(0.0, block.sigma_ugal)
                .map_err(|e| CliError::Validation(format!("stability.sigma_ugal: {e}")))?;
            let values: Vec<f64> = (0..block.shots).map(|_| normal.sample(&mut rng)).collect();
            let series = ShotSeries::new(values, block.cycle_time_s)?;
            // Keep the synthesized series next to the analysis artifacts.
            let shots_path = ctx.artifact(&format!("allan-{}-shots.csv", sc.name));
            let mut w = BufWriter::new(File::create(&shots_path)?);
            writeln!(w, "shot_index,value")?;
            for (i, v) in series.values.iter().enumerate() {
                writeln!(w, "{i},{v}")?;
            }
            w.flush()?;
            (sc.name, series)
        }
        (None, Some(input)) => {
            let cycle = cycle_time.ok_or_else(|| {
                CliError::Validation("--cycle-time is required with --input".into())
            })?;
            let values = artifacts::read_shots_csv(BufReader::new(File::open(input)?))?;
            (stem(input), ShotSeries::new(values, cycle)?)
        }
        _ => {
            return Err(CliError::Validation(
                "allan needs exactly one of --scenario or --input".into(),
            ))
        }
    };

    let estimator = if overlapping { AllanEstimator::Overlapping } else { AllanEstimator::NonOverlapping };
    let taus = series.octave_taus();
    if taus.is_empty() {
        return Err(CliError::Validation("series too short for any tau".into()));
    }
    let result = allan_deviation(&series, &taus, estimator)?;
    let fit = sensitivity_at_tau(&result, tau_ref)?;

    let csv_path = ctx.artifact(&format!("allan-{name}.csv"));
    artifacts::write_allan_csv(BufWriter::new(File::create(&csv_path)?), &result)?;

    #[derive(Serialize)]
    struct AllanReport<'a> {
        series: &'a str,
        unit: &'a str,
        shots: usize,
        cycle_time_s: f64,
        estimator: AllanEstimator,
        fit: &'a braggsim_core::stability::SensitivityFit,
        at_one_second_ugal: f64,
        at_one_second_ms2: f64,
        white_noise_extrapolation: bool,
    }
    let (ugal, ms2) = match unit {
        UnitArg::Ugal => (
            fit.at_one_second,
            fit.at_one_second * braggsim_core::stability::MS2_PER_UGAL,
        ),
        UnitArg::Ms2 => (
            fit.at_one_second / braggsim_core::stability::MS2_PER_UGAL,
            fit.at_one_second,
        ),
    };
    artifacts::write_json(
        &ctx.artifact(&format!("allan-{name}-fit.json")),
        &AllanReport {
            series: &name,
            unit: unit.label(),
            shots: series.values.len(),
            cycle_time_s: series.cycle_time,
            estimator,
            fit: &fit,
            at_one_second_ugal: ugal,
            at_one_second_ms2: ms2,
            white_noise_extrapolation: true,
        },
    )?;

    let measured: Vec<(f64, f64)> = result.taus.iter().copied().zip(result.adev.iter().copied()).collect();
    let fit_line: Vec<(f64, f64)> = result
        .taus
        .iter()
        .map(|&t| (t, fit.at_one_second / t.sqrt()))
        .collect();
    let plot = svg::Plot::loglog(
        "Allan deviation",
        "tau (s)",
        &format!("sigma ({})", unit.label()),
    )
    .with_series("measured", measured)
    .with_series("tau^-1/2 fit", fit_line)
    .with_caption(format!("{name}: {} shots, cycle {} s", series.values.len(), series.cycle_time));
    ctx.write_svg(&ctx.artifact(&format!("allan-{name}.svg")), &plot)?;

    let validity = if fit.white_noise_valid {
        String::new()
    } else {
        format!(" [warning: slope {:.2} is not white-noise-like]", fit.slope)
    };
    ctx.say(format!(
        "allan {name}: sigma(1 s) = {:.1} {} (white-noise extrapolation), predicted {:.1} at tau = {} s, slope {:.3}{validity}",
        fit.at_one_second,
        unit.label(),
        fit.predicted_at_ref,
        tau_ref,
        fit.slope
    ));
    Ok(())
}

fn cmd_limit(
    ctx: &Ctx,
    contrast: f64,
    atoms: u64,
    t: f64,
    g: f64,
    k_eff: Option<f64>,
    wavelength: f64,
) -> Result<(), CliError> {
    let k_eff = k_eff.unwrap_or_else(|| 2.0 * std::f64::consts::TAU / wavelength);
    let limit = qpn_limit(contrast, atoms, g, k_eff, t)
        .map_err(|e| CliError::Validation(e.to_string()))?;

    #[derive(Serialize)]
    struct LimitReport {
        contrast: f64,
        atoms: u64,
        interrogation_s: f64,
        g_ms2: f64,
        k_eff_rad_per_m: f64,
        dg_over_g: f64,
        dg_ugal: f64,
    }
    artifacts::write_json(
        &ctx.artifact("limit.json"),
        &LimitReport {
            contrast,
            atoms,
            interrogation_s: t,
            g_ms2: g,
            k_eff_rad_per_m: k_eff,
            dg_over_g: limit,
            dg_ugal: limit * g / braggsim_core::stability::MS2_PER_UGAL,
        },
    )?;
    ctx.say(format!(
        "limit: (dg/g) = {:.3e} per shot (C = {contrast}, N = {atoms}, T = {t} s)",
        limit
    ));
    Ok(())
}

fn cmd_demo(ctx: &Ctx, scenario_name: &str) -> Result<(), CliError> {
    let sc = Scenario::load(scenario_name)?;
    let seed = effective_seed(ctx, &sc);
    let outcome = pipeline::run_noise_pipeline(&sc, seed)?;

    let psd_path = ctx.artifact(&format!("demo-{}-psd.csv", sc.name));
    artifacts::write_psd_csv(BufWriter::new(File::create(&psd_path)?), &outcome.psd)?;

    // Optional comparison run for the suppression ratio.
    let compare = sc.demo.as_ref().and_then(|d| d.compare_to.clone());
    let mut comparison = None;
    if let Some(other_name) = compare {
        let other = Scenario::load(&other_name)?;
        let other_seed = ctx.seed.unwrap_or(other.seed);
        let other_outcome = pipeline::run_noise_pipeline(&other, other_seed)?;
        comparison = Some(other_outcome);
    }

    #[derive(Serialize)]
    struct DemoReport<'a> {
        scenario: &'a str,
        seed: u64,
        sigma_phi_mrad: f64,
        band_hz: (f64, f64),
        rbw_hz: f64,
        lp_cutoff_hz: f64,
        compared_to: Option<&'a str>,
        compared_sigma_phi_mrad: Option<f64>,
        suppression_ratio: Option<f64>,
    }
    let ratio = comparison
        .as_ref()
        .map(|c| outcome.sigma_phi_mrad / c.sigma_phi_mrad);
    artifacts::write_json(
        &ctx.artifact(&format!("demo-{}.json", sc.name)),
        &DemoReport {
            scenario: &sc.name,
            seed,
            sigma_phi_mrad: outcome.sigma_phi_mrad,
            band_hz: outcome.band_hz,
            rbw_hz: outcome.rbw_hz,
            lp_cutoff_hz: outcome.lp_cutoff_hz,
            compared_to: comparison.as_ref().map(|c| c.scenario.as_str()),
            compared_sigma_phi_mrad: comparison.as_ref().map(|c| c.sigma_phi_mrad),
            suppression_ratio: ratio,
        },
    )?;

    let mut plot = svg::Plot::loglog("Phase-noise spectrum", "f (Hz)", "S_phi (rad^2/Hz)")
        .with_series(
            sc.name.clone(),
            outcome.psd.frequencies.iter().copied().zip(outcome.psd.values.iter().copied()).collect(),
        )
        .with_caption(format!("seed {seed}, rbw {} Hz", outcome.rbw_hz));
    if let Some(c) = &comparison {
        plot = plot.with_series(
            c.scenario.clone(),
            c.psd.frequencies.iter().copied().zip(c.psd.values.iter().copied()).collect(),
        );
    }
    ctx.write_svg(&ctx.artifact(&format!("demo-{}.svg", sc.name)), &plot)?;

    let mut line = format!(
        "demo {}: sigma_phi = {:.2} mrad/shot over {}-{} Hz",
        sc.name, outcome.sigma_phi_mrad, outcome.band_hz.0, outcome.band_hz.1
    );
    if let (Some(c), Some(r)) = (&comparison, ratio) {
        line.push_str(&format!(
            " | {} gives {:.2} mrad/shot, suppression ratio {:.2}",
            c.scenario, c.sigma_phi_mrad, r
        ));
    }
    ctx.say(line);
    Ok(())
}
