//! Flat `key = value unit` configuration and profile files.
//!
//! ```text
//! # comments start with '#'
//! actuator.a_eff = 2.49 cm2
//! clutch.engage_threshold = 0 kPa
//! ```
//!
//! Every dimensional value must carry a unit. Unknown keys are rejected and a
//! configuration file must define every key except `clutch.slip_curve`,
//! which falls back to the built-in slip table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::actuator::ActuatorParams;
use crate::clutch::{ClutchParams, SlipCurve};
use crate::error::{Error, Result};
use crate::material::MaterialCurve;
use crate::simulator::{DeviceParams, Profile, ProfileSegment};
use crate::sysid::AnalysisWindow;
use crate::trace::DEFAULT_SMOOTHING;
use crate::units::{parse_quantity, Dimension, CM, CM2, KPA, MM2};

/// File name looked up in each directory of the config search path.
pub const CONFIG_FILE_NAME: &str = "invacc.conf";

/// Environment variable holding a `:`-separated list of config directories.
pub const CONFIG_PATH_ENV: &str = "INVACC_CONFIG_PATH";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimDefaults {
    pub dt: f64,
    pub record_interval: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SimDefaults {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            record_interval: 0.1,
            noise_sd: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub actuator: ActuatorParams,
    pub material: MaterialCurve,
    /// Free tendon length governing the clutch stiffness [m].
    pub free_length: f64,
    pub engage_threshold: f64,
    pub slip_curve: SlipCurve,
    pub slip_curve_path: Option<PathBuf>,
    pub window: AnalysisWindow,
    pub smoothing: usize,
    pub sim: SimDefaults,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            actuator: ActuatorParams::prototype(),
            material: MaterialCurve::default(),
            free_length: 30.0 * CM,
            engage_threshold: 0.0,
            slip_curve: SlipCurve::prototype(),
            slip_curve_path: None,
            window: AnalysisWindow::default(),
            smoothing: DEFAULT_SMOOTHING,
            sim: SimDefaults::default(),
        }
    }
}

const KEYS: &[(&str, Dimension)] = &[
    ("actuator.diameter", Dimension::Length),
    ("actuator.a_eff", Dimension::Area),
    ("actuator.f_yield", Dimension::Force),
    ("actuator.mu_visc", Dimension::Damping),
    ("actuator.reinforced_length", Dimension::Length),
    ("actuator.stroke_max", Dimension::Length),
    ("clutch.free_length", Dimension::Length),
    ("clutch.engage_threshold", Dimension::Pressure),
    ("material.area", Dimension::Area),
    ("material.yield_force", Dimension::Force),
    ("material.yield_strain", Dimension::Dimensionless),
    ("material.ultimate_force", Dimension::Force),
    ("material.ultimate_strain", Dimension::Dimensionless),
    ("analysis.window_lo", Dimension::Length),
    ("analysis.window_hi", Dimension::Length),
    ("analysis.settling", Dimension::Length),
    ("sysid.smoothing", Dimension::Dimensionless),
    ("sim.dt", Dimension::Time),
    ("sim.record_interval", Dimension::Time),
    ("sim.noise_sd", Dimension::Force),
    ("sim.seed", Dimension::Dimensionless),
];

const SLIP_CURVE_KEY: &str = "clutch.slip_curve";

struct Entry {
    value: String,
    line: usize,
}

fn parse_entries(text: &str, origin: &str) -> Result<BTreeMap<String, Vec<Entry>>> {
    let mut entries: BTreeMap<String, Vec<Entry>> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: n + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            });
        };
        entries
            .entry(key.trim().to_string())
            .or_default()
            .push(Entry {
                value: value.trim().to_string(),
                line: n + 1,
            });
    }
    Ok(entries)
}

fn single<'a>(
    entries: &'a BTreeMap<String, Vec<Entry>>,
    key: &str,
    origin: &str,
) -> Result<Option<&'a Entry>> {
    match entries.get(key).map(Vec::as_slice) {
        None | Some([]) => Ok(None),
        Some([e]) => Ok(Some(e)),
        Some([_, dup, ..]) => Err(Error::Parse {
            path: origin.to_string(),
            line: dup.line,
            msg: format!("duplicate key `{key}`"),
        }),
    }
}

fn quantity(entry: &Entry, key: &str, dim: Dimension, origin: &str) -> Result<f64> {
    parse_quantity(&entry.value, dim).map_err(|e| match e {
        Error::UnitMismatch(m) => {
            Error::UnitMismatch(format!("{origin}:{}: {key}: {m}", entry.line))
        }
        other => Error::Parse {
            path: origin.to_string(),
            line: entry.line,
            msg: format!("{key}: {other}"),
        },
    })
}

fn integer(entry: &Entry, key: &str, origin: &str) -> Result<u64> {
    entry.value.parse::<u64>().map_err(|_| Error::Parse {
        path: origin.to_string(),
        line: entry.line,
        msg: format!(
            "{key}: expected a non-negative integer, found `{}`",
            entry.value
        ),
    })
}

impl Config {
    /// Parses a complete configuration. Relative slip-curve paths are
    /// resolved against `base_dir`.
    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self> {
        let entries = parse_entries(text, origin)?;
        for key in entries.keys() {
            if key != SLIP_CURVE_KEY && !KEYS.iter().any(|(k, _)| k == key) {
                return Err(Error::UnknownKey(key.clone()));
            }
        }
        let mut values = BTreeMap::new();
        for &(key, dim) in KEYS {
            let entry =
                single(&entries, key, origin)?.ok_or_else(|| Error::MissingKey(key.to_string()))?;
            let v = match key {
                "sysid.smoothing" | "sim.seed" => integer(entry, key, origin)? as f64,
                _ => quantity(entry, key, dim, origin)?,
            };
            values.insert(key, v);
        }
        let get = |k: &str| values[k];

        let actuator = ActuatorParams::new(
            get("actuator.diameter"),
            get("actuator.a_eff"),
            get("actuator.f_yield"),
            get("actuator.mu_visc"),
            get("actuator.reinforced_length"),
            get("actuator.stroke_max"),
        )?;
        let material = MaterialCurve::new(
            get("material.area"),
            get("material.yield_force"),
            get("material.yield_strain"),
            get("material.ultimate_force"),
            get("material.ultimate_strain"),
        )?;
        let free_length = get("clutch.free_length");
        material.tendon_stiffness(free_length)?;
        let engage_threshold = get("clutch.engage_threshold");
        if engage_threshold < 0.0 {
            return Err(Error::invalid(
                "clutch.engage_threshold must be non-negative",
            ));
        }
        let (slip_curve, slip_curve_path) = match single(&entries, SLIP_CURVE_KEY, origin)? {
            Some(e) => {
                let path = base_dir.join(&e.value);
                (SlipCurve::load(&path)?, Some(path))
            }
            None => (SlipCurve::prototype(), None),
        };
        let window = AnalysisWindow {
            lo: get("analysis.window_lo"),
            hi: get("analysis.window_hi"),
            settling: get("analysis.settling"),
        };
        window.validate()?;
        let sim = SimDefaults {
            dt: get("sim.dt"),
            record_interval: get("sim.record_interval"),
            noise_sd: get("sim.noise_sd"),
            seed: get("sim.seed") as u64,
        };
        if !(sim.dt > 0.0) || !(sim.record_interval > 0.0) || !(sim.noise_sd >= 0.0) {
            return Err(Error::invalid(
                "sim.dt and sim.record_interval must be positive, sim.noise_sd non-negative",
            ));
        }
        Ok(Self {
            actuator,
            material,
            free_length,
            engage_threshold,
            slip_curve,
            slip_curve_path,
            window,
            smoothing: get("sysid.smoothing") as usize,
            sim,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    /// Searches `search_path` (`:`-separated directories) for
    /// [`CONFIG_FILE_NAME`].
    pub fn find_in_search_path(search_path: &str) -> Option<PathBuf> {
        search_path
            .split(':')
            .filter(|d| !d.is_empty())
            .map(|d| Path::new(d).join(CONFIG_FILE_NAME))
            .find(|p| p.is_file())
    }

    pub fn clutch_params(&self) -> Result<ClutchParams> {
        ClutchParams::new(
            self.material.tendon_stiffness(self.free_length)?,
            self.slip_curve.clone(),
            self.engage_threshold,
        )
    }

    pub fn device(&self) -> Result<DeviceParams> {
        Ok(DeviceParams {
            actuator: self.actuator,
            clutch: self.clutch_params()?,
        })
    }

    /// Serialises the configuration in the file format, using the units of
    /// the bench protocol.
    pub fn to_text(&self) -> String {
        let a = &self.actuator;
        let m = &self.material;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("actuator.diameter", format!("{} cm", a.diameter / CM));
        kv("actuator.a_eff", format!("{} cm2", a.a_eff / CM2));
        kv("actuator.f_yield", format!("{} N", a.f_yield));
        kv("actuator.mu_visc", format!("{} N*s/m", a.mu_visc));
        kv(
            "actuator.reinforced_length",
            format!("{} cm", a.reinforced_length / CM),
        );
        kv("actuator.stroke_max", format!("{} cm", a.stroke_max / CM));
        kv(
            "clutch.free_length",
            format!("{} cm", self.free_length / CM),
        );
        kv(
            "clutch.engage_threshold",
            format!("{} kPa", self.engage_threshold / KPA),
        );
        if let Some(p) = &self.slip_curve_path {
            kv(SLIP_CURVE_KEY, p.display().to_string());
        }
        kv("material.area", format!("{} mm2", m.area / MM2));
        kv("material.yield_force", format!("{} N", m.yield_force));
        kv("material.yield_strain", format!("{}", m.yield_strain));
        kv("material.ultimate_force", format!("{} N", m.ultimate_force));
        kv("material.ultimate_strain", format!("{}", m.ultimate_strain));
        kv("analysis.window_lo", format!("{} cm", self.window.lo / CM));
        kv("analysis.window_hi", format!("{} cm", self.window.hi / CM));
        kv(
            "analysis.settling",
            format!("{} cm", self.window.settling / CM),
        );
        kv("sysid.smoothing", format!("{}", self.smoothing));
        kv("sim.dt", format!("{} s", self.sim.dt));
        kv(
            "sim.record_interval",
            format!("{} s", self.sim.record_interval),
        );
        kv("sim.noise_sd", format!("{} N", self.sim.noise_sd));
        kv("sim.seed", format!("{}", self.sim.seed));
        out
    }
}

const PROFILE_KEYS: &[&str] = &[
    "dt",
    "record_interval",
    "noise_sd",
    "seed",
    "x0",
    "repeat",
    "segment",
];

/// Parses a profile file:
///
/// ```text
/// dt = 1 ms
/// noise_sd = 0.3 N
/// repeat = 3
/// segment = 330 s, 100 mm/min, -34 kPa, -34 kPa
/// segment = 330 s, -100 mm/min, -34 kPa, -34 kPa
/// ```
///
/// `segment` lines are `duration, rate, P1, P2` and run in file order; the
/// whole list is repeated `repeat` times. Scalar keys fall back to
/// `defaults` when absent.
pub fn parse_profile(text: &str, origin: &str, defaults: &SimDefaults) -> Result<Profile> {
    let entries = parse_entries(text, origin)?;
    for key in entries.keys() {
        if !PROFILE_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownKey(key.clone()));
        }
    }
    let scalar = |key: &str, dim: Dimension, default: f64| -> Result<f64> {
        match single(&entries, key, origin)? {
            Some(e) => quantity(e, key, dim, origin),
            None => Ok(default),
        }
    };
    let dt = scalar("dt", Dimension::Time, defaults.dt)?;
    let record_interval = scalar("record_interval", Dimension::Time, defaults.record_interval)?;
    let noise_sd = scalar("noise_sd", Dimension::Force, defaults.noise_sd)?;
    let x0 = scalar("x0", Dimension::Length, 0.0)?;
    let seed = match single(&entries, "seed", origin)? {
        Some(e) => integer(e, "seed", origin)?,
        None => defaults.seed,
    };
    let repeat = match single(&entries, "repeat", origin)? {
        Some(e) => integer(e, "repeat", origin)? as usize,
        None => 1,
    };
    if !(dt > 0.0) || !(record_interval > 0.0) {
        return Err(Error::invalid("dt and record_interval must be positive"));
    }

    let mut segments = Vec::new();
    for e in entries.get("segment").map(Vec::as_slice).unwrap_or(&[]) {
        let fields: Vec<&str> = e.value.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                path: origin.to_string(),
                line: e.line,
                msg: format!(
                    "segment needs `duration, rate, P1, P2`, found `{}`",
                    e.value
                ),
            });
        }
        let field = |i: usize, dim: Dimension| {
            quantity(
                &Entry {
                    value: fields[i].to_string(),
                    line: e.line,
                },
                "segment",
                dim,
                origin,
            )
        };
        segments.push(ProfileSegment {
            duration: field(0, Dimension::Time)?,
            x_dot: field(1, Dimension::Velocity)?,
            p1: field(2, Dimension::Pressure)?,
            p2: field(3, Dimension::Pressure)?,
        });
    }
    let segments: Vec<ProfileSegment> = std::iter::repeat_n(segments, repeat).flatten().collect();
    let profile = Profile {
        segments,
        dt,
        noise_sd,
        seed,
        x0,
        record_every: ((record_interval / dt).round() as usize).max(1),
    };
    profile.validate()?;
    Ok(profile)
}

pub fn load_profile(path: &Path, defaults: &SimDefaults) -> Result<Profile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profile(&text, &path.display().to_string(), defaults)
}
