//! Force models, quasi-static simulation and parameter identification for an
//! inverting-tube vacuum actuator with a pressure-engaged clutch (InVACC).
//!
//! The crate is organised bottom-up:
//!
//! * [`actuator`]: vacuum retraction force, rolling-fold losses and the
//!   atmospheric force ceiling.
//! * [`clutch`]: stick-slip clutch force law with slip memory.
//! * [`material`]: bilinear tendon stress-strain curve.
//! * [`simulator`]: time-stepped device simulation with the three operating
//!   modes, force envelopes and synthetic trace generation.
//! * [`sysid`]: trace segmentation, loss extraction and least-squares fitting.
//! * [`trace`], [`config`], [`units`]: file formats and unit handling.
//!
//! All quantities are SI internally (Pa, m, N, s). Unit conversion happens
//! only at the file and command-line boundary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod clutch;
pub mod config;
pub mod error;
pub mod material;
pub mod simulator;
pub mod sysid;
pub mod trace;
pub mod units;

pub use actuator::{ActuatorParams, KinematicSample, Pressures};
pub use clutch::{ClutchParams, ClutchState, SlipCurve};
pub use config::Config;
pub use error::{Error, ErrorCategory, Result};
pub use material::MaterialCurve;
pub use simulator::{Command, DeviceParams, Mode, Profile, SimState};
pub use sysid::{Direction, DirectionStats, FitResult};
pub use trace::{ForceTrace, TraceSample};
