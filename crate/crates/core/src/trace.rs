//! Force-extension traces and their CSV representation.
//!
//! The canonical file has the header `t_s,x_m,xdot_m_s,F_N,P1_Pa,P2_Pa`,
//! optionally preceded by `# key=value` metadata lines. The reader also
//! accepts laboratory units (`x_mm`, `xdot_mm_min`, `P1_kPa`, ...) as long as
//! a file does not mix them with SI columns, and files without a velocity
//! column, for which the rate is estimated from `(t, x)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{CM, KPA, MM, MM_PER_MIN};

pub const CSV_HEADER: &str = "t_s,x_m,xdot_m_s,F_N,P1_Pa,P2_Pa";

const RATE_KEY: &str = "rate_nominal_m_s";

/// Default moving-average window for velocity estimation.
pub const DEFAULT_SMOOTHING: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceSample {
    pub t: f64,
    pub x: f64,
    pub x_dot: f64,
    pub force: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForceTrace {
    pub samples: Vec<TraceSample>,
    /// Commanded extension rate magnitude [m/s], when known.
    pub rate_nominal: Option<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl ForceTrace {
    pub fn new(samples: Vec<TraceSample>) -> Result<Self> {
        let trace = Self {
            samples,
            rate_nominal: None,
            metadata: BTreeMap::new(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate_nominal = Some(rate);
        self
    }

    pub fn with_label(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        for (i, s) in self.samples.iter().enumerate() {
            let finite = [s.t, s.x, s.x_dot, s.force, s.p1, s.p2]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!("sample {i} has a non-finite value")));
            }
        }
        if let Some(i) = self.samples.windows(2).position(|w| !(w[1].t > w[0].t)) {
            return Err(Error::invalid(format!(
                "time is not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(())
    }

    /// Replaces the velocity column with central finite differences of
    /// `(t, x)` smoothed by a centred moving average of `window` samples.
    pub fn estimate_velocity(&mut self, window: usize) {
        let t: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let x: Vec<f64> = self.samples.iter().map(|s| s.x).collect();
        for (s, v) in self
            .samples
            .iter_mut()
            .zip(estimate_velocity(&t, &x, window))
        {
            s.x_dot = v;
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(rate) = self.rate_nominal {
            let _ = writeln!(out, "# {RATE_KEY}={rate}");
        }
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t, s.x, s.x_dot, s.force, s.p1, s.p2
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses trace CSV text. `smoothing` is used only when the file has no
    /// velocity column.
    pub fn from_csv_str(text: &str, origin: &str, smoothing: usize) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_string(),
            line,
            msg,
        };
        let mut metadata = BTreeMap::new();
        let mut rate_nominal = None;
        let mut columns: Option<Vec<Column>> = None;
        let mut samples = Vec::new();

        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if columns.is_none() {
                    if let Some((k, v)) = comment.trim().split_once('=') {
                        let (k, v) = (k.trim(), v.trim());
                        if k == RATE_KEY {
                            rate_nominal = Some(v.parse::<f64>().map_err(|_| {
                                parse_err(line_no, format!("bad {RATE_KEY} value `{v}`"))
                            })?);
                        } else {
                            metadata.insert(k.to_string(), v.to_string());
                        }
                    }
                }
                continue;
            }
            let Some(cols) = columns.as_ref() else {
                columns = Some(parse_header(line).map_err(|e| match e {
                    Error::UnitMismatch(m) => Error::UnitMismatch(format!("{origin}: {m}")),
                    other => parse_err(line_no, other.to_string()),
                })?);
                continue;
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(parse_err(
                    line_no,
                    format!("expected {} fields, found {}", cols.len(), fields.len()),
                ));
            }
            let mut sample = TraceSample::default();
            for (col, field) in cols.iter().zip(&fields) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("cannot parse `{field}`")))?;
                let v = v * col.scale;
                match col.quantity {
                    Quantity::T => sample.t = v,
                    Quantity::X => sample.x = v,
                    Quantity::XDot => sample.x_dot = v,
                    Quantity::F => sample.force = v,
                    Quantity::P1 => sample.p1 = v,
                    Quantity::P2 => sample.p2 = v,
                }
            }
            samples.push(sample);
        }

        let Some(cols) = columns else {
            return Err(parse_err(0, "missing header row".into()));
        };
        let mut trace = ForceTrace {
            samples,
            rate_nominal,
            metadata,
        };
        trace.validate().map_err(|e| match e {
            Error::EmptyTrace => Error::EmptyTrace,
            other => parse_err(0, other.to_string()),
        })?;
        if !cols.iter().any(|c| c.quantity == Quantity::XDot) {
            trace.estimate_velocity(smoothing);
        }
        Ok(trace)
    }

    pub fn read_csv(path: &Path, smoothing: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, &path.display().to_string(), smoothing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    T,
    X,
    XDot,
    F,
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UnitSystem {
    Neutral,
    Si,
    Lab,
}

#[derive(Debug, Clone, Copy)]
struct Column {
    quantity: Quantity,
    scale: f64,
}

fn parse_header(line: &str) -> Result<Vec<Column>> {
    let mut cols = Vec::new();
    let mut systems: Vec<(&str, UnitSystem)> = Vec::new();
    for name in line.split(',').map(str::trim) {
        let (quantity, scale, system) = match name {
            "t_s" => (Quantity::T, 1.0, UnitSystem::Neutral),
            "x_m" => (Quantity::X, 1.0, UnitSystem::Si),
            "x_cm" => (Quantity::X, CM, UnitSystem::Lab),
            "x_mm" => (Quantity::X, MM, UnitSystem::Lab),
            "xdot_m_s" => (Quantity::XDot, 1.0, UnitSystem::Si),
            "xdot_mm_min" => (Quantity::XDot, MM_PER_MIN, UnitSystem::Lab),
            "xdot_mm_s" => (Quantity::XDot, MM, UnitSystem::Lab),
            "F_N" => (Quantity::F, 1.0, UnitSystem::Neutral),
            "P1_Pa" => (Quantity::P1, 1.0, UnitSystem::Si),
            "P1_kPa" => (Quantity::P1, KPA, UnitSystem::Lab),
            "P2_Pa" => (Quantity::P2, 1.0, UnitSystem::Si),
            "P2_kPa" => (Quantity::P2, KPA, UnitSystem::Lab),
            other => return Err(Error::invalid(format!("unknown column `{other}`"))),
        };
        if cols.iter().any(|c: &Column| c.quantity == quantity) {
            return Err(Error::invalid(format!("duplicate column `{name}`")));
        }
        cols.push(Column { quantity, scale });
        systems.push((name, system));
    }
    let si = systems.iter().find(|(_, s)| *s == UnitSystem::Si);
    let lab = systems.iter().find(|(_, s)| *s == UnitSystem::Lab);
    if let (Some((a, _)), Some((b, _))) = (si, lab) {
        return Err(Error::UnitMismatch(format!(
            "header mixes SI column `{a}` with laboratory column `{b}`"
        )));
    }
    for required in [
        Quantity::T,
        Quantity::X,
        Quantity::F,
        Quantity::P1,
        Quantity::P2,
    ] {
        if !cols.iter().any(|c| c.quantity == required) {
            return Err(Error::invalid(format!("missing {required:?} column")));
        }
    }
    Ok(cols)
}

/// Central-difference velocity with one-sided ends, smoothed by a centred
/// moving average of `window` samples (`window <= 1` disables smoothing).
pub fn estimate_velocity(t: &[f64], x: &[f64], window: usize) -> Vec<f64> {
    let n = t.len().min(x.len());
    if n < 2 {
        return vec![0.0; n];
    }
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect();
    let half = window / 2;
    if half == 0 {
        return raw;
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            raw[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}
