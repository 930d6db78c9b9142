use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use invacc_core::trace::CSV_HEADER;
use invacc_core::ForceTrace;
use tempfile::TempDir;

const PROFILE: &str = "\
dt = 10 ms
record_interval = 100 ms
noise_sd = 0.3 N
seed = 4
segment = 60 s, 100 mm/min, -34 kPa, 0 kPa
segment = 60 s, -100 mm/min, -34 kPa, 0 kPa
";

fn invacc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invacc"))
        .current_dir(dir)
        .env_remove("INVACC_CONFIG_PATH")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_writes_a_six_column_trace() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("p.profile"), PROFILE).unwrap();
    let out = invacc(
        dir.path(),
        &["simulate", "--profile", "p.profile", "--out", "t.csv"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some(CSV_HEADER));
    assert!(rows.all(|r| r.split(',').count() == 6));
    let trace = ForceTrace::read_csv(&dir.path().join("t.csv"), 5).unwrap();
    assert_eq!(trace.to_csv(), text);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("p.profile"), PROFILE).unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = invacc(
            dir.path(),
            &["simulate", "--profile", "p.profile", "--out", name],
        );
        assert!(out.status.success());
    }
    for d in ["s1", "s2"] {
        let out = invacc(dir.path(), &["synthesize", "--out", d, "--seed", "11"]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    let name = "trace_p1_81kPa_rate_100mm_min.csv";
    assert_eq!(read(&format!("s1/{name}")), read(&format!("s2/{name}")));
}

#[test]
fn identify_recovers_synthetic_parameters() {
    let dir = TempDir::new().unwrap();
    let out = invacc(
        dir.path(),
        &["synthesize", "--out", "traces", "--seed", "2"],
    );
    assert!(out.status.success());
    let mut args = vec!["identify".to_string()];
    for entry in fs::read_dir(dir.path().join("traces")).unwrap() {
        args.push(entry.unwrap().path().display().to_string());
    }
    args.extend(["--out".into(), "fit.kv".into()]);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = invacc(dir.path(), &refs);
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("A_eff") && stdout.contains("Average RMS"));
    let kv = fs::read_to_string(dir.path().join("fit.kv")).unwrap();
    let a_eff: f64 = kv
        .lines()
        .find_map(|l| l.strip_prefix("a_eff_m2 = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((a_eff - 2.49e-4).abs() / 2.49e-4 < 0.02);
}

#[test]
fn identify_with_one_trace_is_a_numerical_error() {
    let dir = TempDir::new().unwrap();
    invacc(dir.path(), &["synthesize", "--out", "traces"]);
    let out = invacc(
        dir.path(),
        &["identify", "traces/trace_p1_34kPa_rate_100mm_min.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("underdetermined"));
}

#[test]
fn mixed_unit_header_is_rejected() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "t_s,x_mm,xdot_m_s,F_N,P1_Pa,P2_Pa\n0,50,0.001,3,-34000,-34000\n",
    )
    .unwrap();
    let out = invacc(dir.path(), &["identify", "bad.csv", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unit"), "{}", stderr(&out));
}

#[test]
fn missing_config_key_is_named() {
    let dir = TempDir::new().unwrap();
    let full = invacc(dir.path(), &["config"]);
    let text: String = String::from_utf8_lossy(&full.stdout)
        .lines()
        .filter(|l| !l.starts_with("actuator.f_yield"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("invacc.conf"), text).unwrap();
    let out = invacc(dir.path(), &["--config", "invacc.conf", "config"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("actuator.f_yield"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn config_is_found_on_the_search_path() {
    let dir = TempDir::new().unwrap();
    let full = invacc(dir.path(), &["config"]);
    let text = String::from_utf8_lossy(&full.stdout).replace("2.45 N", "3 N");
    let conf_dir = dir.path().join("etc");
    fs::create_dir(&conf_dir).unwrap();
    fs::write(conf_dir.join("invacc.conf"), text).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_invacc"))
        .env("INVACC_CONFIG_PATH", &conf_dir)
        .arg("config")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("actuator.f_yield = 3 N"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = invacc(
        dir.path(),
        &["envelope", "--out", "missing/dir/envelope.csv"],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn zero_bounds_give_a_single_envelope_row() {
    let dir = TempDir::new().unwrap();
    let out = invacc(
        dir.path(),
        &[
            "envelope", "--out", "e.csv", "--p1-max", "0 kPa", "--p2-max", "0 kPa",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn clutch_reports_table_peaks() {
    let dir = TempDir::new().unwrap();
    let out = invacc(
        dir.path(),
        &[
            "clutch",
            "--p2",
            "10kPa,20kPa,30kPa,40kPa,50kPa",
            "--out",
            "c.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let peaks: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    for (got, want) in peaks.iter().zip([17.0, 35.0, 44.0, 83.0, 122.0]) {
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn clutch_without_pressures_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = invacc(dir.path(), &["clutch", "--p2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = invacc(dir.path(), &["clutch"]);
    assert_eq!(out.status.code(), Some(2));
}
