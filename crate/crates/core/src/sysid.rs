//! Identification of the actuator force model from force-extension traces.
//!
//! The pipeline mirrors the bench procedure: split each trace into
//! extension and contraction passes, keep samples inside the analysis window
//! (away from reversals), average each direction, split the averages into a
//! pressure baseline and a loss, then regress
//!
//! * baseline against `-P1/2` through the origin, giving `A_eff`;
//! * loss against `|x_dot|`, giving `F_yield` (intercept) and `mu_visc`
//!   (slope).

use std::fmt;

use crate::error::{Error, Result};
use crate::trace::{ForceTrace, TraceSample};
use crate::units::CM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Extension,
    Contraction,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Extension => "extension",
            Direction::Contraction => "contraction",
        })
    }
}

/// Extension range used for averaging, plus the distance discarded after
/// every reversal while the rolling fold settles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisWindow {
    pub lo: f64,
    pub hi: f64,
    pub settling: f64,
}

impl Default for AnalysisWindow {
    fn default() -> Self {
        Self {
            lo: 5.0 * CM,
            hi: 50.0 * CM,
            settling: 1.0 * CM,
        }
    }
}

impl AnalysisWindow {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::invalid(format!(
                "analysis window [{}, {}] m is empty",
                self.lo, self.hi
            )));
        }
        if !(self.settling >= 0.0) {
            return Err(Error::invalid("settling margin must be non-negative"));
        }
        Ok(())
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// In-window samples of one monotone pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub direction: Direction,
    pub samples: Vec<TraceSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionStats {
    pub direction: Direction,
    pub mean: f64,
    /// Sample standard deviation (zero for a single sample).
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSplit {
    pub loss: f64,
    pub baseline: f64,
    /// Contraction tension exceeded extension tension.
    pub anomalous: bool,
}

/// One operating point fed to the regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    /// Retraction gauge pressure [Pa].
    pub p1: f64,
    /// Extension rate magnitude [m/s].
    pub rate: f64,
    pub loss: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub a_eff: f64,
    pub f_yield: f64,
    pub mu_visc: f64,
    /// RMS of model minus direction means over the fitted conditions [N].
    pub rms_residual: f64,
    /// Mean absolute relative error of the model against the direction
    /// means (fraction, not percent).
    pub pct_error: f64,
}

impl FitResult {
    /// Model tension for a retraction pressure and signed extension rate.
    pub fn predict(&self, p1: f64, x_dot: f64) -> f64 {
        let loss = if x_dot == 0.0 {
            0.0
        } else {
            x_dot.signum() * (self.f_yield + self.mu_visc * x_dot.abs())
        };
        -0.5 * self.a_eff * p1 + loss
    }
}

/// Splits a trace at velocity sign changes and keeps in-window samples.
pub fn segment_trace(trace: &ForceTrace, window: &AnalysisWindow) -> Result<Vec<Segment>> {
    window.validate()?;
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut segments = Vec::new();
    let mut current: Option<(Direction, f64, Vec<TraceSample>)> = None;
    for s in &trace.samples {
        let dir = if s.x_dot > 0.0 {
            Some(Direction::Extension)
        } else if s.x_dot < 0.0 {
            Some(Direction::Contraction)
        } else {
            None
        };
        let same = matches!((&current, dir), (Some((d, _, _)), Some(nd)) if *d == nd);
        if !same {
            if let Some((d, _, kept)) = current.take() {
                if !kept.is_empty() {
                    segments.push(Segment {
                        direction: d,
                        samples: kept,
                    });
                }
            }
            if let Some(d) = dir {
                current = Some((d, s.x, Vec::new()));
            }
        }
        if let Some((_, start, kept)) = current.as_mut() {
            if window.contains(s.x) && (s.x - *start).abs() >= window.settling {
                kept.push(*s);
            }
        }
    }
    if let Some((d, _, kept)) = current {
        if !kept.is_empty() {
            segments.push(Segment {
                direction: d,
                samples: kept,
            });
        }
    }
    if segments.is_empty() {
        return Err(Error::EmptyWindow {
            lo: window.lo,
            hi: window.hi,
        });
    }
    Ok(segments)
}

fn stats(
    direction: Direction,
    values: impl Iterator<Item = f64> + Clone,
) -> Option<DirectionStats> {
    let n = values.clone().count();
    if n == 0 {
        return None;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(DirectionStats {
        direction,
        mean,
        sd,
        n,
    })
}

fn direction_samples(
    segments: &[Segment],
    direction: Direction,
) -> impl Iterator<Item = &TraceSample> + Clone {
    segments
        .iter()
        .filter(move |s| s.direction == direction)
        .flat_map(|s| s.samples.iter())
}

/// Mean and SD of tension per direction over all in-window samples.
pub fn average_forces(segments: &[Segment]) -> Result<(DirectionStats, DirectionStats)> {
    let pick = |d| {
        stats(d, direction_samples(segments, d).map(|s| s.force)).ok_or(Error::MissingDirection(d))
    };
    Ok((pick(Direction::Extension)?, pick(Direction::Contraction)?))
}

/// Loss is half the extension/contraction gap, baseline is the midpoint.
pub fn compute_losses(ext_mean: f64, con_mean: f64) -> LossSplit {
    LossSplit {
        loss: (ext_mean - con_mean) / 2.0,
        baseline: (ext_mean + con_mean) / 2.0,
        anomalous: ext_mean < con_mean,
    }
}

fn distinct_count(values: impl Iterator<Item = f64>) -> usize {
    let mut sorted: Vec<f64> = values.collect();
    sorted.sort_by(f64::total_cmp);
    let scale = sorted
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut count = 0;
    let mut last: Option<f64> = None;
    for v in sorted {
        if last.is_none_or(|l| (v - l).abs() > 1e-9 * scale) {
            count += 1;
            last = Some(v);
        }
    }
    count
}

/// Ordinary least squares over the condition table.
pub fn fit_model(conditions: &[Condition]) -> Result<FitResult> {
    if conditions.iter().any(|c| {
        ![c.p1, c.rate, c.loss, c.baseline]
            .iter()
            .all(|v| v.is_finite())
    }) {
        return Err(Error::invalid("conditions must be finite"));
    }
    let pressures = distinct_count(conditions.iter().map(|c| c.p1));
    let rates = distinct_count(conditions.iter().map(|c| c.rate.abs()));
    if pressures < 2 {
        return Err(Error::Underdetermined(format!(
            "need at least 2 distinct retraction pressures, found {pressures}"
        )));
    }
    if rates < 2 {
        return Err(Error::Underdetermined(format!(
            "need at least 2 distinct extension rates, found {rates}"
        )));
    }

    // baseline = A_eff * u with u = -P1/2
    let (suu, sub) = conditions.iter().fold((0.0, 0.0), |(suu, sub), c| {
        let u = -0.5 * c.p1;
        (suu + u * u, sub + u * c.baseline)
    });
    if suu == 0.0 {
        return Err(Error::Underdetermined(
            "all retraction pressures are zero".into(),
        ));
    }
    let a_eff = sub / suu;

    // loss = F_yield + mu_visc * r
    let n = conditions.len() as f64;
    let r_mean = conditions.iter().map(|c| c.rate.abs()).sum::<f64>() / n;
    let l_mean = conditions.iter().map(|c| c.loss).sum::<f64>() / n;
    let (srr, srl) = conditions.iter().fold((0.0, 0.0), |(srr, srl), c| {
        let dr = c.rate.abs() - r_mean;
        (srr + dr * dr, srl + dr * (c.loss - l_mean))
    });
    let mu_visc = srl / srr;
    let f_yield = l_mean - mu_visc * r_mean;

    for (name, value) in [("A_eff", a_eff), ("F_yield", f_yield), ("mu_visc", mu_visc)] {
        if value < 0.0 || !value.is_finite() || (name == "A_eff" && value == 0.0) {
            return Err(Error::NonPhysicalFit(format!("{name} = {value}")));
        }
    }

    let mut fit = FitResult {
        a_eff,
        f_yield,
        mu_visc,
        rms_residual: 0.0,
        pct_error: 0.0,
    };
    let mut sq = 0.0;
    let mut pct = 0.0;
    for c in conditions {
        for (sign, data) in [(1.0, c.baseline + c.loss), (-1.0, c.baseline - c.loss)] {
            let model = fit.predict(c.p1, sign * c.rate.abs());
            sq += (model - data).powi(2);
            if data != 0.0 {
                pct += ((model - data) / data).abs();
            }
        }
    }
    fit.rms_residual = (sq / (2.0 * n)).sqrt();
    fit.pct_error = pct / (2.0 * n);
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    /// RMS of model minus data over all in-window samples [N].
    pub rms: f64,
    pub rms_extension: f64,
    pub rms_contraction: f64,
    /// `(model mean - data mean) / |data mean|` per direction and overall.
    pub pct_extension: f64,
    pub pct_contraction: f64,
    pub pct_both: f64,
}

impl ResidualStats {
    pub fn mean_abs_pct(&self) -> f64 {
        (self.pct_extension.abs() + self.pct_contraction.abs()) / 2.0
    }
}

/// Compares a fitted model against the in-window samples of a trace.
pub fn residual_stats(
    fit: &FitResult,
    trace: &ForceTrace,
    window: &AnalysisWindow,
) -> Result<ResidualStats> {
    let segments = segment_trace(trace, window)?;
    let per_direction = |d: Direction| -> Result<(f64, f64, f64, usize)> {
        let (mut sq, mut model_sum, mut data_sum, mut n) = (0.0, 0.0, 0.0, 0usize);
        for s in direction_samples(&segments, d) {
            let model = fit.predict(s.p1, s.x_dot);
            sq += (model - s.force).powi(2);
            model_sum += model;
            data_sum += s.force;
            n += 1;
        }
        if n == 0 {
            return Err(Error::MissingDirection(d));
        }
        Ok((sq, model_sum, data_sum, n))
    };
    let (sq_e, m_e, d_e, n_e) = per_direction(Direction::Extension)?;
    let (sq_c, m_c, d_c, n_c) = per_direction(Direction::Contraction)?;
    let rel = |model: f64, data: f64| {
        if data == 0.0 {
            0.0
        } else {
            (model - data) / data.abs()
        }
    };
    Ok(ResidualStats {
        rms: ((sq_e + sq_c) / (n_e + n_c) as f64).sqrt(),
        rms_extension: (sq_e / n_e as f64).sqrt(),
        rms_contraction: (sq_c / n_c as f64).sqrt(),
        pct_extension: rel(m_e / n_e as f64, d_e / n_e as f64),
        pct_contraction: rel(m_c / n_c as f64, d_c / n_c as f64),
        pct_both: rel(
            (m_e + m_c) / (n_e + n_c) as f64,
            (d_e + d_c) / (n_e + n_c) as f64,
        ),
    })
}

/// Direction statistics and derived operating point of one trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub condition: Condition,
    pub extension: DirectionStats,
    pub contraction: DirectionStats,
    /// Statistics over both directions pooled.
    pub both: DirectionStats,
    pub anomalous: bool,
}

pub fn summarize_trace(trace: &ForceTrace, window: &AnalysisWindow) -> Result<TraceSummary> {
    let segments = segment_trace(trace, window)?;
    let (extension, contraction) = average_forces(&segments)?;
    let all = segments.iter().flat_map(|s| s.samples.iter());
    let both =
        stats(Direction::Extension, all.clone().map(|s| s.force)).expect("segments are non-empty");
    let n = both.n as f64;
    let p1 = all.clone().map(|s| s.p1).sum::<f64>() / n;
    let rate = trace
        .rate_nominal
        .unwrap_or_else(|| all.map(|s| s.x_dot.abs()).sum::<f64>() / n);
    let split = compute_losses(extension.mean, contraction.mean);
    Ok(TraceSummary {
        condition: Condition {
            p1,
            rate,
            loss: split.loss,
            baseline: split.baseline,
        },
        extension,
        contraction,
        both,
        anomalous: split.anomalous,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub summary: TraceSummary,
    pub residuals: ResidualStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyReport {
    pub fit: FitResult,
    pub conditions: Vec<ConditionReport>,
}

impl IdentifyReport {
    /// Mean of the per-direction RMS residuals over all traces.
    pub fn average_rms(&self) -> f64 {
        let n = self.conditions.len() as f64;
        self.conditions
            .iter()
            .map(|c| (c.residuals.rms_extension + c.residuals.rms_contraction) / 2.0)
            .sum::<f64>()
            / n
    }

    /// Mean absolute per-direction relative error over all traces.
    pub fn average_pct(&self) -> f64 {
        let n = self.conditions.len() as f64;
        self.conditions
            .iter()
            .map(|c| c.residuals.mean_abs_pct())
            .sum::<f64>()
            / n
    }
}

/// Full pipeline: summarise every trace, fit, then score each trace.
pub fn identify(traces: &[ForceTrace], window: &AnalysisWindow) -> Result<IdentifyReport> {
    let summaries = traces
        .iter()
        .map(|t| summarize_trace(t, window))
        .collect::<Result<Vec<_>>>()?;
    let conditions: Vec<Condition> = summaries.iter().map(|s| s.condition).collect();
    let fit = fit_model(&conditions)?;
    let conditions = summaries
        .into_iter()
        .zip(traces)
        .map(|(summary, trace)| {
            Ok(ConditionReport {
                summary,
                residuals: residual_stats(&fit, trace, window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentifyReport { fit, conditions })
}
