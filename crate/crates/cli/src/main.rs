use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use invacc_cli::{
    clutch_csv, clutch_table, cmd_clutch, cmd_envelope, cmd_identify, cmd_simulate, cmd_synthesize,
    exit_code, load_config_from_env, write_output, Units,
};
use invacc_core::sysid::AnalysisWindow;
use invacc_core::units::{parse_quantity, Dimension};
use invacc_core::Result;

#[derive(Parser)]
#[command(
    name = "invacc",
    version,
    about = "Inverting-tube vacuum actuator with clutch: simulation and identification"
)]
struct Cli {
    /// Configuration file (defaults to invacc.conf on INVACC_CONFIG_PATH, then built-in values)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Units for printed reports
    #[arg(long, global = true, value_enum, default_value_t = UnitsArg::Lab)]
    units: UnitsArg,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitsArg {
    Si,
    Lab,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Si => Units::Si,
            UnitsArg::Lab => Units::Lab,
        }
    }
}

fn pressure(s: &str) -> std::result::Result<f64, String> {
    parse_quantity(s, Dimension::Pressure).map_err(|e| e.to_string())
}

fn velocity(s: &str) -> std::result::Result<f64, String> {
    parse_quantity(s, Dimension::Velocity).map_err(|e| e.to_string())
}

fn force(s: &str) -> std::result::Result<f64, String> {
    parse_quantity(s, Dimension::Force).map_err(|e| e.to_string())
}

/// `LO:HI` with length units, e.g. `5cm:50cm`.
fn window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, found `{s}`"))?;
    let lo = parse_quantity(lo, Dimension::Length).map_err(|e| e.to_string())?;
    let hi = parse_quantity(hi, Dimension::Length).map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Run a profile file and write the force trace CSV
    Simulate {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the noise seed of the profile
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the actuator model to force traces
    Identify {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Analysis window, e.g. 5cm:50cm
        #[arg(long, value_parser = window)]
        window: Option<(f64, f64)>,
        /// Write machine-readable key-value results here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the force capability of the device
    Envelope {
        #[arg(long)]
        out: PathBuf,
        /// Largest vacuum magnitude, e.g. "101.325 kPa"
        #[arg(long, value_parser = pressure)]
        p1_max: Option<f64>,
        /// Largest clutching pressure, e.g. "50 kPa"
        #[arg(long, value_parser = pressure)]
        p2_max: Option<f64>,
        #[arg(long, value_parser = velocity, default_value = "100 mm/min")]
        rate: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Forced-extension clutch slip test
    Clutch {
        /// Clutching pressures, e.g. 10kPa,20kPa,30kPa
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, value_parser = pressure)]
        p2: Vec<f64>,
        #[arg(long, value_parser = velocity, default_value = "100 mm/min")]
        rate: f64,
        /// Retraction vacuum held during the test
        #[arg(long, value_parser = pressure, default_value = "-34 kPa", allow_hyphen_values = true)]
        p1: f64,
        /// Write the slip report CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic traces for the five bench conditions
    Synthesize {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = force, default_value = "0.3 N")]
        noise: f64,
    },
    /// Print the active configuration in file format
    Config,
}

fn run(cli: Cli) -> Result<String> {
    let config = load_config_from_env(cli.config.as_deref())?;
    let units: Units = cli.units.into();
    match cli.command {
        Command::Simulate { profile, out, seed } => cmd_simulate(&profile, &config, &out, seed),
        Command::Identify {
            traces,
            window,
            out,
        } => {
            let window = window.map(|(lo, hi)| AnalysisWindow {
                lo,
                hi,
                settling: config.window.settling,
            });
            let result = cmd_identify(&traces, &config, window, units)?;
            if let Some(out) = out {
                write_output(&out, &result.key_values)?;
            }
            Ok(result.text)
        }
        Command::Envelope {
            out,
            p1_max,
            p2_max,
            rate,
            points,
        } => {
            let (rows, csv) = cmd_envelope(&config, p1_max.map(f64::abs), p2_max, rate, points)?;
            write_output(&out, &csv)?;
            Ok(format!("wrote {} ({} rows)\n", out.display(), rows.len()))
        }
        Command::Clutch { p2, rate, p1, out } => {
            let reports = cmd_clutch(&config, &p2, rate, p1)?;
            if let Some(out) = out {
                write_output(&out, &clutch_csv(&reports))?;
            }
            Ok(clutch_table(&reports, units))
        }
        Command::Synthesize { out, seed, noise } => {
            let paths = cmd_synthesize(&config, &out, noise, seed)?;
            Ok(paths.iter().map(|p| format!("{}\n", p.display())).collect())
        }
        Command::Config => Ok(config.to_text()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
