//! Quasi-static simulation of the combined actuator and clutch.
//!
//! Pressures take their commanded values instantly and the tendon has no
//! inertia, so each step only moves the tendon end, updates the clutch slip
//! memory and evaluates the force laws. The operating mode follows from the
//! two chamber pressures:
//!
//! | P1  | P2  | mode       |
//! |-----|-----|------------|
//! | 0   | 0   | inactive   |
//! | < 0 | ≤ 0 | tension    |
//! | ≤ 0 | > 0 | clutched   |
//!
//! Total tension in the clutched mode is the sum of the actuator and clutch
//! contributions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::actuator::{actuator_force, ActuatorParams, KinematicSample, Pressures};
use crate::clutch::{self, ClutchParams, ClutchState};
use crate::error::{Error, Result};
use crate::trace::{ForceTrace, TraceSample};
use crate::units::{CM, P_ATM};

/// Clamping below this distance is floating-point drift, not an end-stop hit.
const END_STOP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceParams {
    pub actuator: ActuatorParams,
    pub clutch: ClutchParams,
}

impl DeviceParams {
    pub fn prototype() -> Self {
        Self {
            actuator: ActuatorParams::prototype(),
            clutch: ClutchParams::prototype(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Inactive,
    Tension,
    Clutched,
}

impl Mode {
    pub fn from_pressures(p: Pressures) -> Result<Mode> {
        p.validate()?;
        if p.p1 > 0.0 {
            return Err(Error::InvalidMode(format!(
                "positive retraction pressure P1 = {} Pa",
                p.p1
            )));
        }
        match (p.p1 < 0.0, p.p2) {
            (_, p2) if p2 > 0.0 => Ok(Mode::Clutched),
            (true, _) => Ok(Mode::Tension),
            (false, 0.0) => Ok(Mode::Inactive),
            _ => Err(Error::InvalidMode(format!(
                "P1 = 0 with P2 = {} Pa matches no operating mode",
                p.p2
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub x: f64,
    pub mode: Mode,
    pub pressures: Pressures,
    pub clutch: ClutchState,
    /// Free tendon length not yet taken up [m].
    pub slack: f64,
    /// Set when the last step was clamped at 0 or the stroke limit.
    pub at_end_stop: bool,
}

impl SimState {
    /// Inactive device at rest at extension `x0`.
    pub fn new(x0: f64, actuator: &ActuatorParams) -> Result<Self> {
        if !(x0 >= 0.0 && x0 <= actuator.stroke_max) {
            return Err(Error::invalid(format!(
                "initial extension {x0} m outside stroke [0, {}] m",
                actuator.stroke_max
            )));
        }
        Ok(Self {
            t: 0.0,
            x: x0,
            mode: Mode::Inactive,
            pressures: Pressures::default(),
            clutch: ClutchState::disengaged(),
            slack: 0.0,
            at_end_stop: false,
        })
    }
}

/// Commanded tendon-end velocity and chamber pressures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub x_dot: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutput {
    /// Tendon tension [N].
    pub force: f64,
    pub actuator_force: f64,
    pub clutch_force: f64,
    /// Rate used for the loss terms; zero when the tendon did not move.
    pub x_dot: f64,
    /// Slip threshold in effect, when the clutch grips.
    pub f_slip: Option<f64>,
    /// The slip threshold was clamped outside the tabulated pressures.
    pub extrapolated: bool,
}

/// Advances the device by one time step.
pub fn step(
    state: &SimState,
    cmd: Command,
    dt: f64,
    device: &DeviceParams,
) -> Result<(SimState, StepOutput)> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("time step must be positive"));
    }
    if !cmd.x_dot.is_finite() {
        return Err(Error::invalid("commanded rate must be finite"));
    }
    let pressures = Pressures::new(cmd.p1, cmd.p2)?;
    let mode = Mode::from_pressures(pressures)?;
    let stroke = device.actuator.stroke_max;

    let mut clutch_state = match (mode, state.clutch.engaged) {
        (Mode::Clutched, false) => clutch::engage(state.t, state.x),
        (Mode::Clutched, true) => state.clutch,
        (_, true) => clutch::disengage(state.clutch),
        (_, false) => state.clutch,
    };

    // slack bookkeeping: an inactive device lets slack build up on retraction,
    // any other motion takes slack up first
    let travel = cmd.x_dot * dt;
    let mut slack = state.slack;
    let motion = if mode == Mode::Inactive && travel < 0.0 {
        slack += -travel;
        0.0
    } else {
        let taken = slack.min(travel.abs());
        slack -= taken;
        travel.signum() * (travel.abs() - taken)
    };
    let target = state.x + motion;
    let x = target.clamp(0.0, stroke);
    let at_end_stop = (target - x).abs() > END_STOP_TOLERANCE;
    let x_dot = if x != state.x { cmd.x_dot } else { 0.0 };

    let mut out = StepOutput {
        x_dot,
        ..StepOutput::default()
    };

    if mode == Mode::Clutched {
        let grips = pressures.p2 >= device.clutch.engage_threshold;
        if grips {
            let lookup = clutch::slip_threshold(pressures.p2, &device.clutch)?;
            clutch_state =
                clutch::advance(&clutch_state, state.x, x, dt, lookup.force, &device.clutch)?;
            out.clutch_force =
                clutch::clutch_force(&clutch_state, x, lookup.force, &device.clutch)?;
            out.f_slip = Some(lookup.force);
            out.extrapolated = lookup.extrapolated;
        } else {
            clutch_state.x_clutch = clutch_state.x_clutch.max(x);
            clutch_state.slipping = false;
        }
    }

    if pressures.p1 < 0.0 {
        out.actuator_force =
            actuator_force(pressures, KinematicSample { x, x_dot }, &device.actuator)?;
    }

    out.force = if slack > 0.0 || mode == Mode::Inactive {
        out.actuator_force = 0.0;
        out.clutch_force = 0.0;
        0.0
    } else {
        // the tendon cannot push
        (out.actuator_force + out.clutch_force).max(0.0)
    };

    let next = SimState {
        t: state.t + dt,
        x,
        mode,
        pressures,
        clutch: clutch_state,
        slack,
        at_end_stop,
    };
    Ok((next, out))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSegment {
    pub duration: f64,
    pub x_dot: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub segments: Vec<ProfileSegment>,
    pub dt: f64,
    /// Standard deviation of additive Gaussian force noise [N].
    pub noise_sd: f64,
    pub seed: u64,
    /// Initial extension [m].
    pub x0: f64,
    /// Record one trace sample every this many steps.
    pub record_every: usize,
}

impl Profile {
    /// `cycles` full strokes `0 -> stroke -> 0` at constant rate, with both
    /// chambers held at the given pressures.
    pub fn triangle_cycles(stroke: f64, rate: f64, p1: f64, p2: f64, cycles: usize) -> Self {
        let leg = stroke / rate.abs();
        let mut segments = Vec::with_capacity(2 * cycles);
        for _ in 0..cycles {
            segments.push(ProfileSegment {
                duration: leg,
                x_dot: rate.abs(),
                p1,
                p2,
            });
            segments.push(ProfileSegment {
                duration: leg,
                x_dot: -rate.abs(),
                p1,
                p2,
            });
        }
        Self {
            segments,
            dt: 1e-3,
            noise_sd: 0.0,
            seed: 0,
            x0: 0.0,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("profile dt must be positive"));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::invalid("noise_sd must be non-negative"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be at least 1"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::invalid(format!(
                    "segment {} duration must be positive",
                    i + 1
                )));
            }
            Pressures::new(s.p1, s.p2)?;
            Mode::from_pressures(Pressures { p1: s.p1, p2: s.p2 })?;
        }
        Ok(())
    }

    fn steps(&self, segment: &ProfileSegment) -> usize {
        ((segment.duration / self.dt).round() as usize).max(1)
    }
}

/// Runs a profile and records the resulting trace.
///
/// Output is a deterministic function of the profile (including its seed).
/// Commanded travel beyond the stroke is clamped and noted in the trace
/// metadata under `warning`.
pub fn run_profile(profile: &Profile, device: &DeviceParams) -> Result<ForceTrace> {
    profile.validate()?;
    if profile.segments.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let noise = Normal::new(0.0, profile.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let mut state = SimState::new(profile.x0, &device.actuator)?;
    let mut samples = Vec::new();
    let mut hit_end_stop = false;
    let mut counter = 0usize;
    // initial record: the device at rest under the first segment's pressures
    let first = &profile.segments[0];
    let rest = Command {
        x_dot: 0.0,
        p1: first.p1,
        p2: first.p2,
    };
    let (_, out) = step(&state, rest, profile.dt, device)?;
    let mut force = out.force;
    if profile.noise_sd > 0.0 {
        force += noise.sample(&mut rng);
    }
    samples.push(TraceSample {
        t: state.t,
        x: state.x,
        x_dot: 0.0,
        force,
        p1: first.p1,
        p2: first.p2,
    });
    for segment in &profile.segments {
        let cmd = Command {
            x_dot: segment.x_dot,
            p1: segment.p1,
            p2: segment.p2,
        };
        for _ in 0..profile.steps(segment) {
            let (next, out) = step(&state, cmd, profile.dt, device)?;
            state = next;
            hit_end_stop |= state.at_end_stop;
            counter += 1;
            if counter.is_multiple_of(profile.record_every) {
                let mut force = out.force;
                if profile.noise_sd > 0.0 {
                    force += noise.sample(&mut rng);
                }
                samples.push(TraceSample {
                    t: state.t,
                    x: state.x,
                    x_dot: out.x_dot,
                    force,
                    p1: segment.p1,
                    p2: segment.p2,
                });
            }
        }
    }
    let mut trace = ForceTrace::new(samples)?.with_label("seed", profile.seed.to_string());
    let mut rates = profile
        .segments
        .iter()
        .filter(|s| s.x_dot != 0.0)
        .map(|s| s.x_dot.abs());
    if let Some(first) = rates.next() {
        if rates.all(|r| r == first) {
            trace.rate_nominal = Some(first);
        }
    }
    if hit_end_stop {
        trace = trace.with_label("warning", "commanded travel clamped at the stroke limits");
    }
    Ok(trace)
}

/// Work done by the external puller, `sum F_k (x_k - x_{k-1})` [J].
///
/// Over a closed extension cycle this is the energy dissipated by the device.
pub fn external_work(samples: &[TraceSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| w[1].force * (w[1].x - w[0].x))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub p1: f64,
    /// Tension while the actuator retracts the tendon [N].
    pub retraction: f64,
    /// Tension needed to extend the tendon against the actuator [N].
    pub extension: f64,
    pub p2: f64,
    /// Clutch slip limit [N].
    pub clutch_limit: f64,
    pub extrapolated: bool,
}

/// Samples the force capability of the device: actuator retraction and
/// extension tension over `P1 ∈ [-p1_max_mag, 0]` and the clutch slip limit
/// over `P2 ∈ [0, p2_max]`.
pub fn force_envelope(
    device: &DeviceParams,
    p1_max_mag: f64,
    p2_max: f64,
    rate: f64,
    points: usize,
) -> Result<Vec<EnvelopeRow>> {
    if !(p1_max_mag >= 0.0) || !(p2_max >= 0.0) || !(rate >= 0.0) {
        return Err(Error::invalid(
            "envelope bounds and rate must be non-negative",
        ));
    }
    if p1_max_mag > P_ATM {
        return Err(Error::PressureBound {
            name: "P1",
            value: -p1_max_mag,
            limit: P_ATM,
        });
    }
    if points == 0 {
        return Err(Error::invalid("envelope needs at least one point"));
    }
    let n = if p1_max_mag == 0.0 && p2_max == 0.0 {
        1
    } else {
        points.max(2)
    };
    (0..n)
        .map(|i| {
            let frac = if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            };
            let p1 = -p1_max_mag * frac;
            let p2 = p2_max * frac;
            let row = envelope_point(device, p1, p2, rate)?;
            Ok(row)
        })
        .collect()
}

/// One envelope row at the given pressures.
pub fn envelope_point(device: &DeviceParams, p1: f64, p2: f64, rate: f64) -> Result<EnvelopeRow> {
    let a = &device.actuator;
    let (retraction, extension) = if p1 < 0.0 {
        let base = a.baseline_force(p1);
        let loss = a.loss_force(rate.abs());
        ((base - loss).max(0.0), base + loss)
    } else {
        (0.0, 0.0)
    };
    let (clutch_limit, extrapolated) = if p2 > 0.0 && p2 >= device.clutch.engage_threshold {
        let lookup = clutch::slip_threshold(p2, &device.clutch)?;
        (lookup.force, lookup.extrapolated)
    } else {
        (0.0, false)
    };
    Ok(EnvelopeRow {
        p1,
        retraction,
        extension,
        p2,
        clutch_limit,
        extrapolated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Extension range covered by the trace [m].
    pub lo: f64,
    pub hi: f64,
    pub cycles: usize,
    pub samples_per_pass: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            lo: 5.0 * CM,
            hi: 50.0 * CM,
            cycles: 3,
            samples_per_pass: 450,
        }
    }
}

/// Generates a model trace at one `(P1, rate)` operating point with i.i.d.
/// Gaussian force noise.
pub fn synthesize_trace(
    p1: f64,
    rate: f64,
    params: &ActuatorParams,
    noise_sd: f64,
    seed: u64,
    opts: &SynthesisOptions,
) -> Result<ForceTrace> {
    if rate == 0.0 || !rate.is_finite() {
        return Err(Error::invalid("synthesis rate must be non-zero"));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::invalid("noise_sd must be non-negative"));
    }
    if !(opts.lo < opts.hi) || opts.cycles == 0 || opts.samples_per_pass == 0 {
        return Err(Error::invalid("invalid synthesis options"));
    }
    let pressures = Pressures::new(p1, p1)?;
    let rate = rate.abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
    let span = opts.hi - opts.lo;
    let n = opts.samples_per_pass;
    let dt = span / n as f64 / rate;

    let mut samples = Vec::with_capacity(1 + 2 * n * opts.cycles);
    let mut t = 0.0;
    let mut push = |x: f64, x_dot: f64, t: f64| -> Result<()> {
        let mut force = actuator_force(pressures, KinematicSample { x, x_dot }, params)?;
        if noise_sd > 0.0 {
            force += noise.sample(&mut rng);
        }
        samples.push(TraceSample {
            t,
            x,
            x_dot,
            force,
            p1,
            p2: p1,
        });
        Ok(())
    };
    push(opts.lo, rate, t)?;
    for _ in 0..opts.cycles {
        for i in 1..=n {
            t += dt;
            push(opts.lo + span * i as f64 / n as f64, rate, t)?;
        }
        for i in 1..=n {
            t += dt;
            push(opts.hi - span * i as f64 / n as f64, -rate, t)?;
        }
    }
    Ok(ForceTrace::new(samples)?
        .with_rate(rate)
        .with_label("seed", seed.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutchPullReport {
    pub p2: f64,
    /// Configured slip threshold at `p2` [N].
    pub f_slip: f64,
    /// Largest clutch contribution observed [N].
    pub peak_clutch: f64,
    /// Largest total tendon tension observed [N].
    pub peak_total: f64,
    /// Slope of clutch tension against extension on the elastic branch [N/m].
    pub elastic_slope: f64,
    pub extrapolated: bool,
}

impl ClutchPullReport {
    /// Peak clutch tension per unit clutching pressure [N/kPa].
    pub fn peak_per_kpa(&self) -> f64 {
        self.peak_clutch / (self.p2 / 1e3)
    }
}

/// Forced extension of the clutched device at constant rate, starting from
/// `x0` with the clutch engaged there.
pub fn clutch_pull_test(
    device: &DeviceParams,
    p1: f64,
    p2: f64,
    pull_rate: f64,
    x0: f64,
    dt: f64,
) -> Result<ClutchPullReport> {
    if !(p2 > 0.0) {
        return Err(Error::ClutchNotEngaged);
    }
    if !(pull_rate > 0.0) {
        return Err(Error::invalid("pull rate must be positive"));
    }
    let lookup = clutch::slip_threshold(p2, &device.clutch)?;
    let reach = lookup.force / device.clutch.k_tube;
    let stroke = device.actuator.stroke_max;
    let distance = (2.0 * reach + 1.0 * CM).min(stroke - x0);
    if distance <= reach {
        return Err(Error::invalid(format!(
            "pull from {x0} m cannot reach the slip point {reach} m further within the stroke"
        )));
    }
    let steps = (distance / pull_rate / dt).floor() as usize;
    let cmd = Command {
        x_dot: pull_rate,
        p1,
        p2,
    };
    let mut state = SimState::new(x0, &device.actuator)?;
    let (mut peak_clutch, mut peak_total) = (0.0f64, 0.0f64);
    let mut elastic: Vec<(f64, f64)> = Vec::new();
    for _ in 0..steps {
        let (next, out) = step(&state, cmd, dt, device)?;
        state = next;
        peak_clutch = peak_clutch.max(out.clutch_force);
        peak_total = peak_total.max(out.force);
        if !state.clutch.slipping
            && out.clutch_force > 0.0
            && out.clutch_force < 0.95 * lookup.force
        {
            elastic.push((state.x, out.clutch_force));
        }
    }
    if elastic.len() < 2 {
        return Err(Error::invalid("too few elastic samples; reduce dt"));
    }
    let n = elastic.len() as f64;
    let mx = elastic.iter().map(|p| p.0).sum::<f64>() / n;
    let my = elastic.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = elastic.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        (sxx + (x - mx).powi(2), sxy + (x - mx) * (y - my))
    });
    Ok(ClutchPullReport {
        p2,
        f_slip: lookup.force,
        peak_clutch,
        peak_total,
        elastic_slope: sxy / sxx,
        extrapolated: lookup.extrapolated,
    })
}
