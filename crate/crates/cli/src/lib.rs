//! Command implementations behind the `invacc` binary.
//!
//! Each command is a plain function returning its textual output so it can
//! be driven from tests without spawning a process.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use invacc_core::config::{load_profile, CONFIG_PATH_ENV};
use invacc_core::simulator::{
    clutch_pull_test, external_work, force_envelope, run_profile, synthesize_trace,
    ClutchPullReport, EnvelopeRow, SynthesisOptions,
};
use invacc_core::sysid::{identify, AnalysisWindow, IdentifyReport};
use invacc_core::units::{CM, CM2, KPA, MM_PER_MIN};
use invacc_core::{Config, Error, ErrorCategory, ForceTrace, Result};

/// Exit status for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err.category() {
        ErrorCategory::Validation => 2,
        ErrorCategory::Numerical => 3,
        ErrorCategory::Io => 4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    /// Pa, m/s, m².
    Si,
    /// kPa, mm/min, cm² as used on the test bench.
    #[default]
    Lab,
}

impl Units {
    fn pressure(self, pa: f64) -> f64 {
        match self {
            Units::Si => pa,
            Units::Lab => pa / KPA,
        }
    }
    fn pressure_unit(self) -> &'static str {
        match self {
            Units::Si => "Pa",
            Units::Lab => "kPa",
        }
    }
    fn rate(self, m_s: f64) -> f64 {
        match self {
            Units::Si => m_s,
            Units::Lab => m_s / MM_PER_MIN,
        }
    }
    fn rate_unit(self) -> &'static str {
        match self {
            Units::Si => "m/s",
            Units::Lab => "mm/min",
        }
    }
    fn area(self, m2: f64) -> f64 {
        match self {
            Units::Si => m2,
            Units::Lab => m2 / CM2,
        }
    }
    fn area_unit(self) -> &'static str {
        match self {
            Units::Si => "m2",
            Units::Lab => "cm2",
        }
    }
}

/// Resolves the configuration: an explicit file, else the first
/// `invacc.conf` on the search path, else the built-in prototype values.
pub fn load_config(explicit: Option<&Path>, search_path: Option<&str>) -> Result<Config> {
    if let Some(path) = explicit {
        return Config::load(path);
    }
    if let Some(found) = search_path.and_then(Config::find_in_search_path) {
        return Config::load(&found);
    }
    Ok(Config::default())
}

/// [`load_config`] with the search path taken from the environment.
pub fn load_config_from_env(explicit: Option<&Path>) -> Result<Config> {
    let search = std::env::var(CONFIG_PATH_ENV).ok();
    load_config(explicit, search.as_deref())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs a profile file and writes the trace CSV. Returns a short summary.
pub fn cmd_simulate(
    profile_path: &Path,
    config: &Config,
    out: &Path,
    seed: Option<u64>,
) -> Result<String> {
    let mut profile = load_profile(profile_path, &config.sim)?;
    if let Some(seed) = seed {
        profile.seed = seed;
    }
    let trace = run_profile(&profile, &config.device()?)?;
    trace.write_csv(out)?;

    let n = trace.len();
    let duration = trace.samples[n - 1].t;
    let mean = trace.samples.iter().map(|s| s.force).sum::<f64>() / n as f64;
    let peak = trace.samples.iter().fold(0.0f64, |m, s| m.max(s.force));
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "wrote {} ({n} samples, {duration} s)",
        out.display()
    );
    let _ = writeln!(summary, "mean tension   {mean:.4} N");
    let _ = writeln!(summary, "peak tension   {peak:.4} N");
    let _ = writeln!(
        summary,
        "external work  {:.6} J",
        external_work(&trace.samples)
    );
    if let Some(w) = trace.metadata.get("warning") {
        let _ = writeln!(summary, "warning: {w}");
    }
    Ok(summary)
}

/// Output of [`cmd_identify`].
#[derive(Debug, Clone)]
pub struct IdentifyOutput {
    pub report: IdentifyReport,
    /// Human-readable tables.
    pub text: String,
    /// Machine-readable `key = value` lines.
    pub key_values: String,
}

pub fn cmd_identify(
    traces: &[PathBuf],
    config: &Config,
    window: Option<AnalysisWindow>,
    units: Units,
) -> Result<IdentifyOutput> {
    let window = window.unwrap_or(config.window);
    let loaded = traces
        .iter()
        .map(|p| ForceTrace::read_csv(p, config.smoothing))
        .collect::<Result<Vec<_>>>()?;
    let report = identify(&loaded, &window)?;
    let text = format_identify(&report, &config.actuator, units);
    let key_values = identify_key_values(&report);
    Ok(IdentifyOutput {
        report,
        text,
        key_values,
    })
}

fn format_identify(
    report: &IdentifyReport,
    template: &invacc_core::ActuatorParams,
    units: Units,
) -> String {
    let fit = &report.fit;
    let geometric = std::f64::consts::PI * template.diameter.powi(2) / 4.0;
    let mut out = String::new();
    let _ = writeln!(out, "Identified actuator model coefficients");
    let _ = writeln!(
        out,
        "  A_eff    {:.4} {}  ({:.1} % of tube cross-section)",
        units.area(fit.a_eff),
        units.area_unit(),
        100.0 * fit.a_eff / geometric
    );
    let _ = writeln!(out, "  F_yield  {:.4} N", fit.f_yield);
    let _ = writeln!(out, "  mu_visc  {:.4} N*s/m", fit.mu_visc);
    let _ = writeln!(out);
    let _ = writeln!(out, "Actuator characterization");
    let _ = writeln!(
        out,
        "  {:>9} {:>11} {:<12} {:>9} {:>16} {:>8} {:>8}",
        format!("P1[{}]", units.pressure_unit()),
        format!("rate[{}]", units.rate_unit()),
        "range",
        "model[N]",
        "mean (sd) [N]",
        "rms[N]",
        "err[%]"
    );
    for c in &report.conditions {
        let cond = &c.summary.condition;
        let r = &c.residuals;
        let rows = [
            (
                "extension",
                fit.predict(cond.p1, cond.rate),
                &c.summary.extension,
                r.rms_extension,
                r.pct_extension,
            ),
            (
                "contraction",
                fit.predict(cond.p1, -cond.rate),
                &c.summary.contraction,
                r.rms_contraction,
                r.pct_contraction,
            ),
            (
                "both",
                fit.predict(cond.p1, 0.0),
                &c.summary.both,
                r.rms,
                r.pct_both,
            ),
        ];
        for (label, model, stats, rms, pct) in rows {
            let _ = writeln!(
                out,
                "  {:>9.4} {:>11.4} {:<12} {:>9.3} {:>16} {:>8.3} {:>8.2}",
                units.pressure(cond.p1),
                units.rate(cond.rate),
                label,
                model,
                format!("{:.3} ({:.3})", stats.mean, stats.sd),
                rms,
                100.0 * pct
            );
        }
        if c.summary.anomalous {
            let _ = writeln!(
                out,
                "  warning: contraction tension above extension tension at P1 = {} {}",
                units.pressure(cond.p1),
                units.pressure_unit()
            );
        }
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "Average RMS residual: {:.3} N", report.average_rms());
    let _ = writeln!(
        out,
        "Average |error| (extension, contraction): {:.2} %",
        100.0 * report.average_pct()
    );
    out
}

fn identify_key_values(report: &IdentifyReport) -> String {
    let fit = &report.fit;
    let mut out = String::new();
    let mut kv = |k: String, v: f64| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("a_eff_m2".into(), fit.a_eff);
    kv("f_yield_N".into(), fit.f_yield);
    kv("mu_visc_N_s_m".into(), fit.mu_visc);
    kv("fit_rms_residual_N".into(), fit.rms_residual);
    kv("fit_pct_error".into(), fit.pct_error);
    kv("average_rms_N".into(), report.average_rms());
    kv("average_pct_error".into(), report.average_pct());
    for (i, c) in report.conditions.iter().enumerate() {
        let p = format!("condition.{}", i + 1);
        let s = &c.summary;
        let r = &c.residuals;
        kv(format!("{p}.p1_Pa"), s.condition.p1);
        kv(format!("{p}.rate_m_s"), s.condition.rate);
        kv(format!("{p}.loss_N"), s.condition.loss);
        kv(format!("{p}.baseline_N"), s.condition.baseline);
        kv(format!("{p}.extension_mean_N"), s.extension.mean);
        kv(format!("{p}.extension_sd_N"), s.extension.sd);
        kv(format!("{p}.contraction_mean_N"), s.contraction.mean);
        kv(format!("{p}.contraction_sd_N"), s.contraction.sd);
        kv(format!("{p}.rms_N"), r.rms);
        kv(format!("{p}.rms_extension_N"), r.rms_extension);
        kv(format!("{p}.rms_contraction_N"), r.rms_contraction);
        kv(format!("{p}.pct_extension"), r.pct_extension);
        kv(format!("{p}.pct_contraction"), r.pct_contraction);
        kv(format!("{p}.pct_both"), r.pct_both);
    }
    out
}

pub const ENVELOPE_HEADER: &str =
    "P1_Pa,retraction_N,extension_N,P2_Pa,clutch_slip_N,clutch_extrapolated";

pub fn envelope_csv(rows: &[EnvelopeRow]) -> String {
    let mut out = String::from(ENVELOPE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.p1,
            r.retraction,
            r.extension,
            r.p2,
            r.clutch_limit,
            u8::from(r.extrapolated)
        );
    }
    out
}

/// Samples the force envelope. Missing bounds default to atmospheric vacuum
/// for P1 and the highest tabulated clutch pressure for P2.
pub fn cmd_envelope(
    config: &Config,
    p1_max_mag: Option<f64>,
    p2_max: Option<f64>,
    rate: f64,
    points: usize,
) -> Result<(Vec<EnvelopeRow>, String)> {
    let p1 = p1_max_mag.unwrap_or(invacc_core::units::P_ATM);
    let p2 = p2_max.unwrap_or_else(|| {
        config
            .slip_curve
            .points()
            .last()
            .map(|p| p.0)
            .unwrap_or(0.0)
    });
    let rows = force_envelope(&config.device()?, p1, p2, rate, points)?;
    let csv = envelope_csv(&rows);
    Ok((rows, csv))
}

/// Starting extension of the clutch pull test [m].
pub const CLUTCH_TEST_X0: f64 = 10.0 * CM;

/// Forced-extension clutch test at each clutching pressure.
pub fn cmd_clutch(
    config: &Config,
    p2_list: &[f64],
    pull_rate: f64,
    p1: f64,
) -> Result<Vec<ClutchPullReport>> {
    if p2_list.is_empty() {
        return Err(Error::InvalidInput(
            "at least one clutching pressure is required".into(),
        ));
    }
    let device = config.device()?;
    p2_list
        .iter()
        .map(|&p2| clutch_pull_test(&device, p1, p2, pull_rate, CLUTCH_TEST_X0, config.sim.dt))
        .collect()
}

pub fn clutch_table(reports: &[ClutchPullReport], units: Units) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>9} {:>10} {:>15} {:>14} {:>16} {:>16}",
        format!("P2[{}]", units.pressure_unit()),
        "F_slip[N]",
        "peak_clutch[N]",
        "peak_total[N]",
        "peak/P2[N/kPa]",
        "k_elastic[N/m]"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:>9.3} {:>10.3} {:>15.3} {:>14.3} {:>16.3} {:>16.1}{}",
            units.pressure(r.p2),
            r.f_slip,
            r.peak_clutch,
            r.peak_total,
            r.peak_per_kpa(),
            r.elastic_slope,
            if r.extrapolated {
                "  (extrapolated)"
            } else {
                ""
            }
        );
    }
    out
}

pub fn clutch_csv(reports: &[ClutchPullReport]) -> String {
    let mut out = String::from(
        "P2_Pa,F_slip_N,peak_clutch_N,peak_total_N,peak_per_kPa,k_elastic_N_m,extrapolated\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.p2,
            r.f_slip,
            r.peak_clutch,
            r.peak_total,
            r.peak_per_kpa(),
            r.elastic_slope,
            u8::from(r.extrapolated)
        );
    }
    out
}

/// The five `(P1 [Pa], rate [m/s])` operating points of the bench protocol.
pub fn bench_conditions() -> [(f64, f64); 5] {
    [
        (-34.0 * KPA, 100.0 * MM_PER_MIN),
        (-34.0 * KPA, 500.0 * MM_PER_MIN),
        (-34.0 * KPA, 2500.0 * MM_PER_MIN),
        (-51.0 * KPA, 100.0 * MM_PER_MIN),
        (-81.0 * KPA, 100.0 * MM_PER_MIN),
    ]
}

/// Writes one synthetic trace per bench condition into `out_dir` and
/// returns the file paths. Condition `i` uses seed `seed + i`.
pub fn cmd_synthesize(
    config: &Config,
    out_dir: &Path,
    noise_sd: f64,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let opts = SynthesisOptions {
        lo: config.window.lo,
        hi: config.window.hi,
        ..SynthesisOptions::default()
    };
    bench_conditions()
        .iter()
        .enumerate()
        .map(|(i, &(p1, rate))| {
            let trace =
                synthesize_trace(p1, rate, &config.actuator, noise_sd, seed + i as u64, &opts)?;
            let name = format!(
                "trace_p1_{}kPa_rate_{}mm_min.csv",
                (-p1 / KPA).round(),
                (rate / MM_PER_MIN).round()
            );
            let path = out_dir.join(name);
            write_file(&path, &trace.to_csv())?;
            Ok(path)
        })
        .collect()
}

/// Writes `contents` to `out`, mapping failures to an I/O error naming the
/// path.
pub fn write_output(out: &Path, contents: &str) -> Result<()> {
    write_file(out, contents)
}
