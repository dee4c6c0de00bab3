use std::path::Path;
use std::process::{Command, Output};

use bpd_core::dictionary::read_matrix;
use bpd_core::harness::{parse_results, parse_trials, OutputFormat};

const SMALL: &str = "\
num_antennas = 16
num_subcarriers = 4
num_angles = 16
num_rings = 2
num_paths = 2
max_paths = 3
pilots = 2
trials = 2
";

fn bpd_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpd-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn simulate_writes_results_and_trials() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("r.csv");
    let run = bpd_sim(&[
        "simulate", "--config", &cfg, "--axis", "snr", "--values", "-5,10", "--seed", "9",
        "--out", out.to_str().unwrap(), "--per-trial", "-q",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(
        "sweep_axis,sweep_value,estimator,nmse_db_mean,nmse_db_std,trials,walltime_ms_mean\n"
    ));
    let rows = parse_results(&text, OutputFormat::Csv).unwrap();
    assert_eq!(rows.len(), 2 * 7);
    assert!(rows.iter().all(|r| r.trials == 2 && r.walltime_ms_mean == 0.0));
    let trials = std::fs::read_to_string(dir.path().join("r.trials.csv")).unwrap();
    assert_eq!(parse_trials(&trials, OutputFormat::Csv).unwrap().len(), 2 * 2 * 7);
}

#[test]
fn json_output_and_preset_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("r.json");
    let run = bpd_sim(&[
        "simulate", "--preset", "fig5", "--config", &cfg, "--values", "1e8", "--trials", "1",
        "--estimators", "bpd,ls", "--format", "json", "--out", out.to_str().unwrap(), "-q",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let rows = parse_results(&std::fs::read_to_string(&out).unwrap(), OutputFormat::Json).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].sweep_value, 1e8);
    assert_eq!(rows[0].trials, 1);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let r = bpd_sim(&["simulate", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap(), "-q"]);
        assert_eq!(code(&r), 0);
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let out = out.to_str().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let unknown = write(dir.path(), "bad.toml", "num_antenas = 16\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--preset", "fig9", "--out", out],
        vec!["simulate", "--config", &unknown, "--out", out],
        vec!["simulate", "--config", "/nonexistent/cfg.toml", "--out", out],
        vec!["simulate", "--config", &cfg, "--trials", "0", "--out", out],
        vec!["simulate", "--config", &cfg, "--estimators", "magic", "--out", out],
        vec!["simulate", "--config", &cfg, "--axis", "pilots", "--values", "2.5", "--out", out],
        vec!["simulate", "--out", out, "--format", "xml"],
        vec!["simulate"],
    ];
    for args in cases {
        let run = bpd_sim(&args);
        assert_eq!(code(&run), 2, "{args:?}: {}", String::from_utf8_lossy(&run.stderr));
    }
}

#[test]
fn numerical_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // More RF chains than antennas makes every combiner block rank deficient.
    let cfg = write(dir.path(), "rank.toml", &format!("{SMALL}rf_chains = 32\n"));
    let out = dir.path().join("r.csv");
    let run = bpd_sim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "-q"]);
    assert_eq!(code(&run), 3, "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn pattern_dump_writes_three_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("xi.csv");
    let run = bpd_sim(&["pattern", "dump", "--config", &cfg, "--steps", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let heat = std::fs::read_to_string(&out).unwrap();
    assert!(heat.starts_with("gamma,zeta,value\n"));
    assert_eq!(heat.lines().count(), 1 + 25);
    let centre = heat.lines().find(|l| l.starts_with("0,0,")).unwrap();
    assert_eq!(centre, "0,0,1");
    let angle = std::fs::read_to_string(dir.path().join("xi_angle.csv")).unwrap();
    assert!(angle.starts_with("index,m,mapped_index\n"));
    assert_eq!(angle.lines().count(), 1 + 16 * 4);
    let ring = std::fs::read_to_string(dir.path().join("xi_ring.csv")).unwrap();
    assert_eq!(ring.lines().count(), 1 + 2 * 4);
}

#[test]
fn dictionary_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    for (flag, cols) in [(None, 32usize), (Some("--far-field"), 16)] {
        let out = dir.path().join("w.pdic");
        let mut args = vec!["dictionary", "export", "--config", &cfg, "--out", out.to_str().unwrap()];
        args.extend(flag);
        let run = bpd_sim(&args);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
        let w = read_matrix(&out).unwrap();
        assert_eq!(w.shape(), (16, cols));
    }
}
