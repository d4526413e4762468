//! Uniformly sampled real-valued records and their on-disk formats.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

/// Magic bytes opening the binary record format.
pub const BINARY_MAGIC: &[u8; 8] = b"BSIMTS01";

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("sample rate must be positive (got {0})")]
    InvalidSampleRate(f64),
    #[error("series must contain at least one sample")]
    Empty,
    #[error("bad magic in binary record (expected BSIMTS01)")]
    BadMagic,
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A uniformly sampled real signal: `samples[i]` taken at `t0 + i / fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Sample rate (Hz).
    pub fs: f64,
    /// Time of the first sample (s).
    pub t0: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(fs: f64, t0: f64, samples: Vec<f64>) -> Result<Self, SeriesError> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(SeriesError::InvalidSampleRate(fs));
        }
        if samples.is_empty() {
            return Err(SeriesError::Empty);
        }
        Ok(Self { fs, t0, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length in seconds (`len / fs`).
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    /// Time of sample `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Population variance about the mean.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Writes `t_s,value` rows preceded by a `# fs_hz=... t0_s=...` comment
    /// so readers can recover the exact rate.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# fs_hz={} t0_s={}", self.fs, self.t0)?;
        writeln!(w, "t_s,value")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", self.time(i), v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SeriesError> {
        let mut fs_hint: Option<f64> = None;
        let mut t0_hint: Option<f64> = None;
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                for tok in rest.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("fs_hz=") {
                        fs_hint = v.parse().ok();
                    } else if let Some(v) = tok.strip_prefix("t0_s=") {
                        t0_hint = v.parse().ok();
                    }
                }
                continue;
            }
            if line.starts_with(|c: char| c.is_alphabetic()) {
                continue; // header row
            }
            let mut cols = line.split(',');
            let t: f64 = parse_col(cols.next(), line)?;
            let v: f64 = parse_col(cols.next(), line)?;
            times.push(t);
            samples.push(v);
        }
        if samples.is_empty() {
            return Err(SeriesError::Empty);
        }
        let t0 = t0_hint.unwrap_or(times[0]);
        let fs = match fs_hint {
            Some(fs) => fs,
            None if times.len() >= 2 => {
                let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
                if dt <= 0.0 {
                    return Err(SeriesError::Malformed("time column is not increasing".into()));
                }
                1.0 / dt
            }
            None => {
                return Err(SeriesError::Malformed(
                    "cannot infer sample rate from a single row without fs_hz".into(),
                ))
            }
        };
        Self::new(fs, t0, samples)
    }

    /// Binary layout: 32-byte header (8-byte magic, `fs` f64, sample count
    /// u64, `t0` f64, all little-endian) followed by the samples as f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&self.fs.to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        w.write_all(&self.t0.to_le_bytes())?;
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, SeriesError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(SeriesError::BadMagic);
        }
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        let fs = f64::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let count = u64::from_le_bytes(buf) as usize;
        r.read_exact(&mut buf)?;
        let t0 = f64::from_le_bytes(buf);
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            samples.push(f64::from_le_bytes(buf));
        }
        Self::new(fs, t0, samples)
    }
}

fn parse_col(col: Option<&str>, line: &str) -> Result<f64, SeriesError> {
    col.and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| SeriesError::Malformed(format!("bad row: {line:?}")))
}
