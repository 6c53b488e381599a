//! Acceleration stimuli fed to the modulator.

use std::f64::consts::PI;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Acceleration (g) as a function of time (s).
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Dc(f64),
    Sine { freq: f64, amp: f64 },
    Samples(SampledInput),
}

impl Input {
    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Input::Dc(a) => *a,
            Input::Sine { freq, amp } => amp * (2.0 * PI * freq * t).sin(),
            Input::Samples(s) => s.at(t),
        }
    }

    /// Peak |a| over the signal.
    pub fn peak(&self) -> f64 {
        match self {
            Input::Dc(a) => a.abs(),
            Input::Sine { amp, .. } => amp.abs(),
            Input::Samples(s) => s.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// `dc:<g>`, `sine:<hz>,<g>` or `file:<path>` (CSV of `time,accel`).
impl FromStr for Input {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed input {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        match kind.trim() {
            "dc" => Ok(Input::Dc(num(rest)?)),
            "sine" => {
                let (f, a) = rest.split_once(',').ok_or_else(bad)?;
                let freq = num(f)?;
                if !(freq > 0.0) {
                    return Err(bad());
                }
                Ok(Input::Sine { freq, amp: num(a)? })
            }
            "file" => Ok(Input::Samples(SampledInput::from_path(rest.trim())?)),
            _ => Err(bad()),
        }
    }
}

/// Piecewise-linear acceleration record, held at its end values outside
/// the covered time span.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledInput {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledInput {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::Config("sampled input needs matching, non-empty columns".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sample times must increase strictly".into()));
        }
        Ok(Self { times, values })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Self::from_reader(std::io::BufReader::new(f))
    }

    /// Reads `time,accel` rows; blank lines, `#` comments and a non-numeric
    /// first line (a header) are skipped.
    pub fn from_reader<R: BufRead>(r: R) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line.split_once(',').and_then(|(t, a)| {
                Some((t.trim().parse::<f64>().ok()?, a.trim().parse::<f64>().ok()?))
            });
            match parsed {
                Some((t, a)) => {
                    times.push(t);
                    values.push(a);
                }
                None if i == 0 => continue,
                None => return Err(Error::Config(format!("line {}: expected time,accel", i + 1))),
            }
        }
        Self::new(times, values)
    }

    pub fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&x| x <= t);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}
