//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails or exceeds its runtime budget.
//!
//! Run with `cargo test -p invacc-cli --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use invacc_cli::{bench_conditions, cmd_clutch};
use invacc_core::actuator::{actuator_force, max_force_atm};
use invacc_core::simulator::{
    external_work, run_profile, step, synthesize_trace, Command, SynthesisOptions,
};
use invacc_core::sysid::{compute_losses, fit_model, identify, AnalysisWindow, Condition};
use invacc_core::units::{CM, CM2, KPA, MM_PER_MIN};
use invacc_core::{
    ActuatorParams, Config, DeviceParams, Error, KinematicSample, Mode, Pressures, Profile,
    SimState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

/// Reference parameters of the characterized prototype.
const A_EFF: f64 = 2.49 * CM2;
const F_YIELD: f64 = 2.45;
const MU_VISC: f64 = 9.70;

/// `(P1 kPa, rate mm/min, ext model, con model, both model)` as tabulated.
const MODEL_FORCES: [(f64, f64, f64, f64, f64); 5] = [
    (-34.0, 100.0, 6.68, 1.75, 4.22),
    (-34.0, 500.0, 6.75, 1.69, 4.22),
    (-34.0, 2500.0, 7.07, 1.36, 4.22),
    (-51.0, 100.0, 8.79, 3.86, 6.32),
    (-81.0, 100.0, 12.59, 7.65, 10.12),
];

/// `(P1 kPa, rate mm/min, ext data mean, con data mean)`.
const DATA_MEANS: [(f64, f64, f64, f64); 5] = [
    (-34.0, 100.0, 6.83, 1.81),
    (-34.0, 500.0, 6.88, 1.76),
    (-34.0, 2500.0, 7.01, 1.31),
    (-51.0, 100.0, 8.34, 3.89),
    (-81.0, 100.0, 12.72, 7.45),
];

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn check_params(a_eff: f64, f_yield: f64, mu_visc: f64) -> Outcome {
    let detail = format!(
        "A_eff {:.4} cm2 ({:+.2} %), F_yield {:.4} N ({:+.2} %), mu_visc {:.4} N*s/m ({:+.2} %)",
        a_eff / CM2,
        100.0 * (a_eff - A_EFF) / A_EFF,
        f_yield,
        100.0 * (f_yield - F_YIELD) / F_YIELD,
        mu_visc,
        100.0 * (mu_visc - MU_VISC) / MU_VISC,
    );
    if rel(a_eff, A_EFF) <= 0.02 && rel(f_yield, F_YIELD) <= 0.05 && rel(mu_visc, MU_VISC) <= 0.10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_max_force() -> Outcome {
    let rows = [
        (0.25, 0.25),
        (0.5, 1.0),
        (1.0, 4.0),
        (2.5, 25.0),
        (5.0, 100.0),
    ];
    let mut worst: f64 = 0.0;
    for (d_cm, f) in rows {
        let got = max_force_atm(d_cm).map_err(|e| e.to_string())?;
        worst = worst.max(rel(got, f));
    }
    let detail = format!("5 rows, worst deviation {:.4} %", 100.0 * worst);
    // float slack only; the nominal deviation sits on the boundary itself
    if worst <= 0.005 + 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_model_forces() -> Outcome {
    let params = ActuatorParams::prototype();
    let mut worst: f64 = 0.0;
    for (p1, rate, ext, con, both) in MODEL_FORCES {
        let p = Pressures::new(p1 * KPA, p1 * KPA).map_err(|e| e.to_string())?;
        let v = rate * MM_PER_MIN;
        let at = |x_dot: f64| {
            actuator_force(p, KinematicSample { x: 0.25, x_dot }, &params)
                .map_err(|e| e.to_string())
        };
        worst = worst
            .max((at(v)? - ext).abs())
            .max((at(-v)? - con).abs())
            .max((at(0.0)? - both).abs());
    }
    let detail = format!("15 entries, worst deviation {worst:.4} N");
    if worst <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_sysid_replication() -> Outcome {
    let conditions: Vec<Condition> = DATA_MEANS
        .iter()
        .map(|&(p1, rate, ext, con)| {
            let split = compute_losses(ext, con);
            Condition {
                p1: p1 * KPA,
                rate: rate * MM_PER_MIN,
                loss: split.loss,
                baseline: split.baseline,
            }
        })
        .collect();
    let fit = fit_model(&conditions).map_err(|e| e.to_string())?;
    check_params(fit.a_eff, fit.f_yield, fit.mu_visc)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_round_trip() -> Outcome {
    let params = ActuatorParams::prototype();
    let window = AnalysisWindow::default();
    let opts = SynthesisOptions::default();
    let (mut a, mut fy, mut mu, mut rms) = (vec![], vec![], vec![], vec![]);
    for dataset in 0..20u64 {
        let traces = bench_conditions()
            .iter()
            .enumerate()
            .map(|(i, &(p1, rate))| {
                synthesize_trace(p1, rate, &params, 0.3, 100 * dataset + i as u64, &opts)
            })
            .collect::<invacc_core::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let report = identify(&traces, &window).map_err(|e| e.to_string())?;
        a.push(report.fit.a_eff);
        fy.push(report.fit.f_yield);
        mu.push(report.fit.mu_visc);
        rms.push(report.average_rms());
    }
    let avg_rms = rms.iter().sum::<f64>() / rms.len() as f64;
    let params_ok = check_params(median(a), median(fy), median(mu));
    let rms_ok = (avg_rms - 0.33).abs() <= 0.05;
    let detail = format!(
        "median {}; average RMS {avg_rms:.4} N",
        params_ok.as_ref().unwrap_or_else(|e| e)
    );
    if params_ok.is_ok() && rms_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_clutch_table() -> Outcome {
    let config = Config::default();
    let pressures = [10.0, 20.0, 30.0, 40.0, 50.0].map(|p| p * KPA);
    let peaks = [17.0, 35.0, 44.0, 83.0, 122.0];
    let ratios = [1.68, 1.77, 1.47, 2.07, 2.45];
    let k = config.clutch_params().map_err(|e| e.to_string())?.k_tube;
    let reports = cmd_clutch(&config, &pressures, 100.0 * MM_PER_MIN, -34.0 * KPA)
        .map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    let mut worst_slope: f64 = 0.0;
    for (i, r) in reports.iter().enumerate() {
        if (r.peak_clutch - peaks[i]).abs() > 1e-9 {
            failures.push(format!("peak {} N at {} kPa", r.peak_clutch, r.p2 / KPA));
        }
        worst_slope = worst_slope.max(rel(r.elastic_slope, k));
        // tabulated ratios come from unrounded peaks, so allow half a newton
        let p2_kpa = r.p2 / KPA;
        if (r.peak_per_kpa() - ratios[i]).abs() > 0.5 / p2_kpa + 0.005 {
            failures.push(format!(
                "ratio {:.3} N/kPa at {p2_kpa} kPa",
                r.peak_per_kpa()
            ));
        }
    }
    if worst_slope > 0.01 {
        failures.push(format!("elastic slope off by {:.3} %", 100.0 * worst_slope));
    }
    let detail = format!(
        "peaks {} N, k_tube {k:.1} N/m, worst slope deviation {:.4} %",
        reports
            .iter()
            .map(|r| format!("{:.6}", r.peak_clutch))
            .collect::<Vec<_>>()
            .join("/"),
        100.0 * worst_slope
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join(", ")))
    }
}

fn criterion_hysteresis_energy() -> Outcome {
    let device = DeviceParams::prototype();
    let rate = 100.0 * MM_PER_MIN;
    let profile = Profile::triangle_cycles(55.0 * CM, rate, -81.0 * KPA, 0.0, 1);
    let trace = run_profile(&profile, &device).map_err(|e| e.to_string())?;
    let work = external_work(&trace.samples);
    let act = &device.actuator;
    let analytic = 2.0 * 0.55 * (act.f_yield + act.mu_visc * rate);
    let detail = format!(
        "dissipated {work:.5} J vs analytic {analytic:.5} J ({:+.4} %)",
        100.0 * (work - analytic) / analytic
    );
    if rel(work, analytic) <= 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Work done on a clamped elastic ramp `clamp(k (x - xc), 0, f)` from 0 to `x`.
fn ramp_energy(x: f64, xc: f64, k: f64, f: f64) -> f64 {
    let reach = f / k;
    let s = x - xc;
    if s <= 0.0 {
        0.0
    } else if s <= reach {
        0.5 * k * s * s
    } else {
        0.5 * f * reach + f * (s - reach)
    }
}

/// Returns the number of steps that slipped.
fn clutch_schedule_holds(seed: u64, device: &DeviceParams) -> std::result::Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = device.clutch.k_tube;
    let mut state =
        SimState::new(rng.random_range(0.0..0.5), &device.actuator).map_err(|e| e.to_string())?;
    let mut absorbed = 0.0;
    let mut slipped = 0;
    let mut p2 = 30.0 * KPA;
    let mut p1 = 0.0;
    for n in 0..400 {
        if n % 20 == 0 {
            p2 = match rng.random_range(0..6) {
                0 => -10.0 * KPA,
                _ => rng.random_range(1.0..60.0) * KPA,
            };
            p1 = if rng.random_bool(0.5) {
                -rng.random_range(0.0..81.0) * KPA
            } else {
                0.0
            };
            if p1 == 0.0 && p2 <= 0.0 {
                p1 = -10.0 * KPA;
            }
        }
        let cmd = Command {
            x_dot: rng.random_range(-5.0..8.0) * 1e-3,
            p1,
            p2,
        };
        let dt = rng.random_range(0.01..2.0);
        let (next, out) = step(&state, cmd, dt, device).map_err(|e| e.to_string())?;

        if let Some(f) = out.f_slip {
            let xc = if state.clutch.engaged {
                state.clutch.x_clutch.max(state.x - f / k)
            } else {
                state.x
            };
            let expected = (k * (next.x - xc)).clamp(0.0, f);
            if (out.clutch_force - expected).abs() > 1e-6 {
                return Err(format!(
                    "seed {seed} step {n}: clutch force {} vs {expected}",
                    out.clutch_force
                ));
            }
            absorbed += ramp_energy(next.x, xc, k, f) - ramp_energy(state.x, xc, k, f);
            slipped += usize::from(next.clutch.slipping);
            if state.clutch.engaged && next.clutch.x_clutch < state.clutch.x_clutch - 1e-12 {
                return Err(format!("seed {seed} step {n}: x_clutch moved backwards"));
            }
        }
        let stored = out.clutch_force * out.clutch_force / (2.0 * k);
        if absorbed < stored - 1e-9 {
            return Err(format!(
                "seed {seed} step {n}: clutch returned {:.3e} J more than it absorbed",
                stored - absorbed
            ));
        }
        state = next;
    }
    Ok(slipped)
}

fn expected_mode(p1: f64, p2: f64) -> Option<Mode> {
    if p1 > 0.0 {
        None
    } else if p2 > 0.0 {
        Some(Mode::Clutched)
    } else if p1 < 0.0 {
        Some(Mode::Tension)
    } else if p2 == 0.0 {
        Some(Mode::Inactive)
    } else {
        None
    }
}

fn mode_sequence_holds(seed: u64, device: &DeviceParams) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = [-40.0 * KPA, 0.0, 25.0 * KPA];
    let mut state = SimState::new(0.25, &device.actuator).map_err(|e| e.to_string())?;
    for n in 0..300 {
        let p1 = levels[rng.random_range(0..3)];
        let p2 = levels[rng.random_range(0..3)];
        let cmd = Command {
            x_dot: rng.random_range(-5.0..5.0) * 1e-3,
            p1,
            p2,
        };
        match (step(&state, cmd, 0.5, device), expected_mode(p1, p2)) {
            (Ok((next, out)), Some(mode)) => {
                if next.mode != mode {
                    return Err(format!("seed {seed} step {n}: {:?} vs {mode:?}", next.mode));
                }
                if (next.slack > 0.0 || mode == Mode::Inactive) && out.force != 0.0 {
                    return Err(format!(
                        "seed {seed} step {n}: force {} with slack {} in {mode:?}",
                        out.force, next.slack
                    ));
                }
                if mode == Mode::Inactive && cmd.x_dot < 0.0 && next.x != state.x {
                    return Err(format!("seed {seed} step {n}: inactive retraction moved x"));
                }
                state = next;
            }
            (Err(Error::InvalidMode(_)), None) => {}
            (got, want) => {
                return Err(format!(
                    "seed {seed} step {n}: P1 {p1} P2 {p2} gave {:?}, expected {want:?}",
                    got.map(|(s, _)| s.mode)
                ))
            }
        }
    }
    Ok(())
}

fn continuity_holds(seed: u64, device: &DeviceParams) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = device.clutch.k_tube;
    let p2 = rng.random_range(10.0..50.0) * KPA;
    let engaged = {
        let s = SimState::new(0.2, &device.actuator).map_err(|e| e.to_string())?;
        let hold = Command {
            x_dot: 0.0,
            p1: 0.0,
            p2,
        };
        step(&s, hold, 1e-3, device).map_err(|e| e.to_string())?.0
    };
    let f = device.clutch.slip_curve.interpolate(p2).force;
    let x_slip = engaged.clutch.x_clutch + f / k;
    let run = |x_end: f64, substeps: usize| -> std::result::Result<(f64, f64), String> {
        let total = 1.0;
        let dt = total / substeps as f64;
        let cmd = Command {
            x_dot: (x_end - engaged.x) / total,
            p1: 0.0,
            p2,
        };
        let mut s = engaged;
        let mut force = 0.0;
        for _ in 0..substeps {
            let (next, out) = step(&s, cmd, dt, device).map_err(|e| e.to_string())?;
            s = next;
            force = out.clutch_force;
        }
        Ok((force, s.clutch.x_clutch))
    };
    let eps = 1e-10;
    let below = run(x_slip - eps, 1)?.0;
    let above = run(x_slip + eps, 1)?.0;
    if (above - below).abs() > 1e-6 {
        return Err(format!(
            "seed {seed}: jump {} N across x_slip",
            above - below
        ));
    }
    let beyond = x_slip + rng.random_range(0.001..0.05);
    let (f1, xc1) = run(beyond, 1)?;
    for substeps in [2, 7, 50] {
        let (fn_, xcn) = run(beyond, substeps)?;
        if (fn_ - f1).abs() > 1e-6 || (fn_ - f).abs() > 1e-6 || (xcn - xc1).abs() > 1e-9 {
            return Err(format!(
                "seed {seed}: {substeps} substeps give {fn_} N, single step {f1} N, threshold {f} N"
            ));
        }
    }
    Ok(())
}

fn criterion_properties() -> Outcome {
    let device = DeviceParams::prototype();
    let mut slipped = 0;
    for seed in 0..100 {
        slipped += clutch_schedule_holds(seed, &device)?;
        mode_sequence_holds(seed, &device)?;
        continuity_holds(seed, &device)?;
    }
    if slipped == 0 {
        return Err("no schedule reached the slip branch".into());
    }
    Ok(format!(
        "100 schedules each: passivity, ratchet ({slipped} slipping steps), mode exclusivity, slack, continuity"
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "atmospheric force ceiling table",
            budget: Duration::from_millis(100),
            run: criterion_max_force,
        },
        Criterion {
            id: 2,
            name: "model force column",
            budget: Duration::from_millis(100),
            run: criterion_model_forces,
        },
        Criterion {
            id: 3,
            name: "identification from tabulated means",
            budget: Duration::from_secs(1),
            run: criterion_sysid_replication,
        },
        Criterion {
            id: 4,
            name: "round-trip identification, 20 seeds",
            budget: Duration::from_secs(30),
            run: criterion_round_trip,
        },
        Criterion {
            id: 5,
            name: "clutch slip table",
            budget: Duration::from_secs(5),
            run: criterion_clutch_table,
        },
        Criterion {
            id: 6,
            name: "hysteresis energy per cycle",
            budget: Duration::from_secs(5),
            run: criterion_hysteresis_energy,
        },
        Criterion {
            id: 7,
            name: "clutch and mode property suites",
            budget: Duration::from_secs(60),
            run: criterion_properties,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {:?}", c.budget)),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{}] {}: {} ({:.3} s)",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
