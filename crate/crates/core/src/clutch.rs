//! Stick-slip clutch force law.
//!
//! While engaged the clutch holds the tendon at a reference extension
//! `x_clutch`. Beyond it the tendon stretches elastically with stiffness
//! `k_tube` until the tension reaches the slip threshold `F_slip`; further
//! extension slides the tendon through the clutch and drags `x_clutch`
//! forward so the tension stays at the threshold.

use std::path::Path;

use crate::error::{Error, Result};
use crate::material::MaterialCurve;
use crate::units::KPA;

/// Monotone table of slip force against clutching pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct SlipCurve {
    points: Vec<(f64, f64)>,
}

/// Result of a slip-threshold lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipLookup {
    pub force: f64,
    /// Set when the pressure lies outside the tabulated range and the value
    /// was clamped to an endpoint.
    pub extrapolated: bool,
}

impl SlipCurve {
    /// Builds a curve from `(P2 [Pa], F_slip [N])` points.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("slip curve needs at least one point"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid(
                    "slip curve pressures must be strictly increasing",
                ));
            }
        }
        if points
            .iter()
            .any(|&(p, f)| !p.is_finite() || !f.is_finite() || f <= 0.0)
        {
            return Err(Error::invalid("slip forces must be positive and finite"));
        }
        Ok(Self { points })
    }

    /// Peak slip tensions measured on the prototype at 10..50 kPa.
    pub fn prototype() -> Self {
        Self::new(
            [
                (10.0, 17.0),
                (20.0, 35.0),
                (30.0, 44.0),
                (40.0, 83.0),
                (50.0, 122.0),
            ]
            .iter()
            .map(|&(p, f)| (p * KPA, f))
            .collect(),
        )
        .expect("valid prototype slip curve")
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Piecewise-linear interpolation, clamped to the end values.
    pub fn interpolate(&self, p2: f64) -> SlipLookup {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if p2 < first.0 {
            return SlipLookup {
                force: first.1,
                extrapolated: true,
            };
        }
        if p2 > last.0 {
            return SlipLookup {
                force: last.1,
                extrapolated: true,
            };
        }
        let i = pts.partition_point(|&(p, _)| p <= p2);
        let force = if i == 0 {
            first.1
        } else if i == pts.len() {
            last.1
        } else {
            let (p0, f0) = pts[i - 1];
            let (p1, f1) = pts[i];
            f0 + (f1 - f0) * (p2 - p0) / (p1 - p0)
        };
        SlipLookup {
            force,
            extrapolated: false,
        }
    }

    /// Parses a two-column `P2_kPa, F_slip_N` table. Columns may be separated
    /// by commas or whitespace; `#` starts a comment and an optional header
    /// row is accepted.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut seen_row = false;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parse_err = |msg: String| Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                msg,
            };
            if cols.len() != 2 {
                return Err(parse_err(format!(
                    "expected 2 columns, found {}",
                    cols.len()
                )));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(p), Ok(f)) => {
                    points.push((p * KPA, f));
                    seen_row = true;
                }
                _ if !seen_row && points.is_empty() => {
                    if cols != ["P2_kPa", "F_slip_N"] {
                        return Err(parse_err(format!(
                            "expected header `P2_kPa,F_slip_N`, found `{line}`"
                        )));
                    }
                    seen_row = true;
                }
                _ => return Err(parse_err(format!("cannot parse row `{line}`"))),
            }
        }
        Self::new(points).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("P2_kPa,F_slip_N\n");
        for &(p, f) in &self.points {
            out.push_str(&format!("{},{}\n", p / KPA, f));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClutchParams {
    /// Linearised tendon stiffness [N/m].
    pub k_tube: f64,
    pub slip_curve: SlipCurve,
    /// Minimum clutching pressure that grips the tendon [Pa].
    pub engage_threshold: f64,
}

impl ClutchParams {
    pub fn new(k_tube: f64, slip_curve: SlipCurve, engage_threshold: f64) -> Result<Self> {
        if !(k_tube > 0.0) || !k_tube.is_finite() {
            return Err(Error::invalid("k_tube must be positive"));
        }
        if !(engage_threshold >= 0.0) {
            return Err(Error::invalid("engage threshold must be non-negative"));
        }
        Ok(Self {
            k_tube,
            slip_curve,
            engage_threshold,
        })
    }

    /// Prototype clutch: default tendon material over a 30 cm free length.
    pub fn prototype() -> Self {
        let k_tube = MaterialCurve::default()
            .tendon_stiffness(0.30)
            .expect("positive free length");
        Self::new(k_tube, SlipCurve::prototype(), 0.0).expect("valid prototype clutch")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClutchState {
    pub engaged: bool,
    /// Engagement time [s].
    pub t_clutch: f64,
    /// Largest extension with zero clutch force [m].
    pub x_clutch: f64,
    pub slipping: bool,
}

impl ClutchState {
    pub fn disengaged() -> Self {
        Self::default()
    }
}

pub fn engage(t_now: f64, x_now: f64) -> ClutchState {
    ClutchState {
        engaged: true,
        t_clutch: t_now,
        x_clutch: x_now,
        slipping: false,
    }
}

pub fn disengage(_state: ClutchState) -> ClutchState {
    ClutchState::disengaged()
}

/// Slip force for clutching pressure `p2`.
pub fn slip_threshold(p2: f64, params: &ClutchParams) -> Result<SlipLookup> {
    if !(p2 >= params.engage_threshold) || p2 <= 0.0 {
        return Err(Error::ClutchNotEngaged);
    }
    Ok(params.slip_curve.interpolate(p2))
}

/// Extension at which an engaged clutch starts to slip.
pub fn slip_extension(state: &ClutchState, f_slip: f64, params: &ClutchParams) -> Result<f64> {
    if !state.engaged {
        return Err(Error::ClutchNotEngaged);
    }
    Ok(f_slip / params.k_tube + state.x_clutch)
}

/// Tension carried by the clutch at extension `x`.
///
/// Beyond `x_slip` the tension is the slip threshold, which is the elastic
/// branch evaluated from a `x_clutch` advanced to keep up with the tendon.
pub fn clutch_force(
    state: &ClutchState,
    x: f64,
    f_slip: f64,
    params: &ClutchParams,
) -> Result<f64> {
    let x_slip = slip_extension(state, f_slip, params)?;
    Ok(if x < state.x_clutch {
        0.0
    } else if x <= x_slip {
        params.k_tube * (x - state.x_clutch)
    } else {
        f_slip
    })
}

/// One explicit-Euler step of the slip-memory integral.
pub fn update_clutch_state(
    state: &ClutchState,
    x: f64,
    x_dot: f64,
    dt: f64,
    f_slip: f64,
    params: &ClutchParams,
) -> Result<ClutchState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let x_slip = slip_extension(state, f_slip, params)?;
    let mut next = *state;
    next.slipping = x >= x_slip && x_dot > 0.0;
    if next.slipping {
        next.x_clutch += x_dot * dt;
    }
    Ok(next)
}

/// Advances the clutch over a motion from `x_from` to `x_to` taking `dt`
/// seconds at constant rate, splitting the step at the slip boundary so the
/// tension stays continuous.
///
/// A threshold lower than the current elastic tension (pressure dropped
/// while loaded) slips the tendon to the new threshold immediately.
pub fn advance(
    state: &ClutchState,
    x_from: f64,
    x_to: f64,
    dt: f64,
    f_slip: f64,
    params: &ClutchParams,
) -> Result<ClutchState> {
    if !state.engaged {
        return Err(Error::ClutchNotEngaged);
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let mut next = *state;
    let reach = f_slip / params.k_tube;
    if x_from - next.x_clutch > reach {
        next.x_clutch = x_from - reach;
    }
    let dx = x_to - x_from;
    if dx <= 0.0 {
        next.slipping = false;
        return Ok(next);
    }
    let x_dot = dx / dt;
    let x_slip = slip_extension(&next, f_slip, params)?;
    if x_to <= x_slip {
        next.slipping = false;
        return Ok(next);
    }
    let x_cross = x_from.max(x_slip);
    let dt_slip = (x_to - x_cross) / x_dot;
    if dt_slip <= 0.0 {
        next.slipping = false;
        return Ok(next);
    }
    update_clutch_state(&next, x_cross, x_dot, dt_slip, f_slip, params)
}
