//! CSV artifact formats. Every file is self-describing: `#`-prefixed
//! metadata lines carry what downstream commands need to re-interpret the
//! columns, so a fringe CSV alone is enough to fit, and a PSD CSV alone is
//! enough to integrate.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use braggsim_core::fringe::{FringeScan, ScanAxis};
use braggsim_core::physics::PulseSequence;
use braggsim_core::spectral::{PsdEstimate, PsdUnit};
use braggsim_core::stability::AllanResult;

use crate::error::CliError;

pub fn write_transfer_csv<W: Write>(
    mut w: W,
    frequencies: &[f64],
    weights: &[f64],
) -> std::io::Result<()> {
    writeln!(w, "# braggsim transfer v1")?;
    writeln!(w, "f_hz,weight")?;
    for (f, wt) in frequencies.iter().zip(weights) {
        writeln!(w, "{f},{wt}")?;
    }
    Ok(())
}

pub fn write_psd_csv<W: Write>(mut w: W, psd: &PsdEstimate) -> std::io::Result<()> {
    writeln!(w, "# braggsim psd v1")?;
    writeln!(
        w,
        "# rbw_hz={} window={} segments={} unit={}",
        psd.rbw, psd.window, psd.segments, psd.unit
    )?;
    writeln!(w, "f_hz,value,unit")?;
    for (f, v) in psd.frequencies.iter().zip(&psd.values) {
        writeln!(w, "{f},{v},{}", psd.unit)?;
    }
    Ok(())
}

/// dBc/Hz view of a phase PSD: L(f) = 10·log10(S/2). Presentation only;
/// no reader consumes these files.
pub fn write_dbc_csv<W: Write>(mut w: W, psd: &PsdEstimate) -> std::io::Result<()> {
    writeln!(w, "# braggsim psd v1")?;
    writeln!(
        w,
        "# rbw_hz={} window={} segments={} unit=dBc/Hz",
        psd.rbw, psd.window, psd.segments
    )?;
    writeln!(w, "f_hz,value,unit")?;
    for (f, v) in psd.frequencies.iter().zip(&psd.values) {
        let dbc = 10.0 * (v.max(1e-30) / 2.0).log10();
        writeln!(w, "{f},{dbc},dBc/Hz")?;
    }
    Ok(())
}

pub fn read_psd_csv<R: BufRead>(r: R) -> Result<PsdEstimate, CliError> {
    let mut meta = HashMap::new();
    let mut frequencies = Vec::new();
    let mut values = Vec::new();
    let mut unit: Option<PsdUnit> = None;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            parse_meta(rest, &mut meta);
            continue;
        }
        if line.starts_with("f_hz") {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 2 {
            return Err(CliError::invalid("psd csv", format!("bad row {line:?}")));
        }
        frequencies.push(parse_f64(cols[0], "f_hz")?);
        values.push(parse_f64(cols[1], "value")?);
        if unit.is_none() {
            if let Some(u) = cols.get(2) {
                unit = Some(u.trim().parse().map_err(|e| CliError::invalid("psd csv unit", e))?);
            }
        }
    }
    if frequencies.is_empty() {
        return Err(CliError::invalid("psd csv", "no data rows"));
    }
    let unit = match (unit, meta.get("unit")) {
        (Some(u), _) => u,
        (None, Some(u)) => u.parse().map_err(|e| CliError::invalid("psd csv unit", e))?,
        (None, None) => PsdUnit::SignalSqPerHz,
    };
    let rbw = match meta.get("rbw_hz") {
        Some(v) => parse_f64(v, "rbw_hz")?,
        None if frequencies.len() >= 2 => frequencies[1] - frequencies[0],
        None => return Err(CliError::invalid("psd csv", "missing rbw_hz metadata")),
    };
    let segments = meta.get("segments").and_then(|s| s.parse().ok()).unwrap_or(1);
    let window = meta.get("window").cloned().unwrap_or_else(|| "unknown".into());
    Ok(PsdEstimate { frequencies, values, rbw, window, segments, unit })
}

pub fn write_fringe_csv<W: Write>(mut w: W, scan: &FringeScan) -> std::io::Result<()> {
    let mode = if scan.axis.is_phase() { "pulse-phase" } else { "sweep-rate" };
    writeln!(w, "# braggsim fringe v1")?;
    writeln!(
        w,
        "# mode={mode} order={} rabi_rad_s={} beamsplitter_s={} interrogation_s={} cycle_s={} atoms={} shots_per_point={} seed={}",
        scan.order,
        scan.sequence.rabi,
        scan.sequence.beamsplitter,
        scan.sequence.interrogation,
        scan.sequence.cycle_time,
        scan.atoms,
        scan.shots_per_point,
        scan.seed,
    )?;
    let column = if scan.axis.is_phase() { "phase_rad" } else { "alpha_hz_per_s" };
    writeln!(w, "{column},population,stderr")?;
    for ((x, p), s) in scan.axis.values().iter().zip(&scan.populations).zip(&scan.stderr) {
        writeln!(w, "{x},{p},{s}")?;
    }
    Ok(())
}

pub fn read_fringe_csv<R: BufRead>(r: R) -> Result<FringeScan, CliError> {
    let mut meta = HashMap::new();
    let mut xs = Vec::new();
    let mut populations = Vec::new();
    let mut stderr = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            parse_meta(rest, &mut meta);
            continue;
        }
        if line.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(CliError::invalid("fringe csv", format!("bad row {line:?}")));
        }
        xs.push(parse_f64(cols[0], "axis")?);
        populations.push(parse_f64(cols[1], "population")?);
        stderr.push(parse_f64(cols[2], "stderr")?);
    }
    if xs.is_empty() {
        return Err(CliError::invalid("fringe csv", "no data rows"));
    }
    let need = |key: &str| -> Result<f64, CliError> {
        meta.get(key)
            .ok_or_else(|| CliError::invalid("fringe csv", format!("missing {key} metadata")))
            .and_then(|v| parse_f64(v, key))
    };
    let sequence = PulseSequence::new(
        need("rabi_rad_s")?,
        need("beamsplitter_s")?,
        need("interrogation_s")?,
        need("cycle_s")?,
    )
    .map_err(|e| CliError::invalid("fringe csv sequence", e))?;
    let axis = match meta.get("mode").map(String::as_str) {
        Some("pulse-phase") => ScanAxis::PulsePhase(xs),
        _ => ScanAxis::SweepRate(xs),
    };
    Ok(FringeScan {
        sequence,
        order: need("order")? as u32,
        axis,
        populations,
        stderr,
        shots_per_point: need("shots_per_point").unwrap_or(0.0) as u32,
        atoms: need("atoms").unwrap_or(0.0) as u64,
        seed: need("seed").unwrap_or(0.0) as u64,
    })
}

pub fn write_allan_csv<W: Write>(mut w: W, result: &AllanResult) -> std::io::Result<()> {
    writeln!(w, "# braggsim allan v1")?;
    writeln!(w, "# estimator={:?}", result.estimator)?;
    writeln!(w, "tau_s,adev,count")?;
    for ((t, a), c) in result.taus.iter().zip(&result.adev).zip(&result.counts) {
        writeln!(w, "{t},{a},{c}")?;
    }
    Ok(())
}

/// Reads `shot_index,value` rows; the index column is ignored beyond
/// ordering.
pub fn read_shots_csv<R: BufRead>(r: R) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(|c: char| c.is_alphabetic()) {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let value = cols.last().ok_or_else(|| CliError::invalid("shots csv", "empty row"))?;
        values.push(parse_f64(value, "value")?);
    }
    if values.is_empty() {
        return Err(CliError::invalid("shots csv", "no data rows"));
    }
    Ok(values)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Validation(format!("serializing report: {e}")))?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

fn parse_meta(rest: &str, meta: &mut HashMap<String, String>) {
    for tok in rest.split_whitespace() {
        if let Some((k, v)) = tok.split_once('=') {
            meta.insert(k.to_string(), v.to_string());
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::invalid(what, format!("not a number: {s:?}")))
}
