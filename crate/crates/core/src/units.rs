//! Unit constants and parsing of quantities with explicit unit suffixes.
//!
//! Everything inside the crate is SI. Text inputs carry a unit suffix
//! (`-34 kPa`, `100 mm/min`, `2.49 cm2`) which is checked against the
//! dimension the caller expects.

use std::fmt;

use crate::error::{Error, Result};

/// Standard atmospheric pressure [Pa].
pub const P_ATM: f64 = 101_325.0;

pub const KPA: f64 = 1e3;
pub const CM: f64 = 1e-2;
pub const MM: f64 = 1e-3;
pub const CM2: f64 = 1e-4;
pub const MM2: f64 = 1e-6;
/// One millimetre per minute in m/s.
pub const MM_PER_MIN: f64 = 1e-3 / 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Dimensionless,
    Length,
    Area,
    Force,
    Pressure,
    Velocity,
    Time,
    /// N·s/m
    Damping,
    /// N/m
    Stiffness,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Dimensionless => "dimensionless",
            Dimension::Length => "length",
            Dimension::Area => "area",
            Dimension::Force => "force",
            Dimension::Pressure => "pressure",
            Dimension::Velocity => "velocity",
            Dimension::Time => "time",
            Dimension::Damping => "damping",
            Dimension::Stiffness => "stiffness",
        };
        f.write_str(name)
    }
}

/// Looks up a unit symbol, returning its dimension and SI scale factor.
pub fn unit_info(symbol: &str) -> Option<(Dimension, f64)> {
    use Dimension::*;
    let info = match symbol {
        "m" => (Length, 1.0),
        "cm" => (Length, CM),
        "mm" => (Length, MM),
        "m2" | "m^2" => (Area, 1.0),
        "cm2" | "cm^2" => (Area, CM2),
        "mm2" | "mm^2" => (Area, MM2),
        "N" => (Force, 1.0),
        "Pa" => (Pressure, 1.0),
        "kPa" => (Pressure, KPA),
        "m/s" => (Velocity, 1.0),
        "mm/s" => (Velocity, MM),
        "mm/min" => (Velocity, MM_PER_MIN),
        "s" => (Time, 1.0),
        "ms" => (Time, 1e-3),
        "min" => (Time, 60.0),
        "N*s/m" | "N.s/m" | "Ns/m" | "N/(m/s)" => (Damping, 1.0),
        "N/m" => (Stiffness, 1.0),
        _ => return None,
    };
    Some(info)
}

/// Parses `"<number> <unit>"` (whitespace optional) into SI units.
///
/// Dimensionless quantities take no suffix; every other dimension requires
/// one.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E') && is_exponent(text, i)))
        })
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse number in `{text}`")))?;
    if !value.is_finite() {
        return Err(Error::invalid(format!("non-finite value in `{text}`")));
    }
    let unit = unit.trim();
    if expected == Dimension::Dimensionless {
        if unit.is_empty() {
            return Ok(value);
        }
        return Err(Error::UnitMismatch(format!(
            "`{text}` should be a plain number"
        )));
    }
    if unit.is_empty() {
        return Err(Error::UnitMismatch(format!(
            "`{text}` is missing a {expected} unit"
        )));
    }
    match unit_info(unit) {
        Some((dim, scale)) if dim == expected => Ok(value * scale),
        Some((dim, _)) => Err(Error::UnitMismatch(format!(
            "`{text}` has a {dim} unit, expected {expected}"
        ))),
        None => Err(Error::UnitMismatch(format!("unknown unit `{unit}`"))),
    }
}

// `e` belongs to the number only when followed by a digit or sign.
fn is_exponent(text: &str, i: usize) -> bool {
    if i == 0 {
        return false;
    }
    let rest = &text[i + 1..];
    let prev_digit = text[..i].ends_with(|c: char| c.is_ascii_digit() || c == '.');
    prev_digit
        && rest
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+')
}
