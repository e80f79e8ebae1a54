use std::path::Path;
use std::process::{Command, Output};

use lislam_cli::config::{parse_config, DEFAULT_PRESET};
use lislam_cli::csvlog::read_csv;
use lislam_cli::CliError;
use lislam::sim::REFERENCE_LANDMARKS;

fn lislam(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lislam"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("failed to launch binary")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn preset_gives_reference_gains_and_landmarks() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "run.toml", &format!("preset = \"{DEFAULT_PRESET}\"\n"));
    let cfg = parse_config(&path).unwrap();
    let g = cfg.scenario.gains;
    assert_eq!((g.k_r, g.k_v, g.k_x, g.k_p), (2.0, 2.0, 1.0, 4.0));
    assert_eq!(cfg.scenario.n, 5);
    for (i, p) in REFERENCE_LANDMARKS.iter().enumerate() {
        let col = cfg.scenario.true_init.v.column(i + 2);
        assert_eq!([col[0], col[1], col[2]], *p);
    }
    assert_eq!(cfg.scenario.rate_hz, 500.0);
    assert_eq!(cfg.scenario.duration_s, 10.0);
}

const MINIMAL: &str = r#"
[gains]
k_r = 2.0
k_v = 2.0
k_x = 1.0
k_p = 4.0

[true_init]
rotation_vector = [0.0, 0.0, 0.0]
v = [0.0, 1.0, 0.0]
x = [1.0, 0.0, 1.0]
landmarks = [[0.5, 0.5, 0.0]]

[est_init]
rotation_vector = [0.3, 0.0, 0.0]
v = [0.0, 0.0, 0.0]
x = [0.0, 0.0, 0.0]
landmarks = [[0.0, 0.0, 0.0]]
"#;

#[test]
fn missing_duration_defaults_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "run.toml", MINIMAL);
    let cfg = parse_config(&path).unwrap();
    assert_eq!(cfg.scenario.duration_s, 10.0);
    assert_eq!(cfg.scenario.g, 9.81);
    assert_eq!(cfg.scenario.rate_hz, 500.0);
    assert_eq!(cfg.scenario.n, 1);
    assert!(cfg.warnings.iter().any(|w| w.contains("duration_s")), "{:?}", cfg.warnings);
}

#[test]
fn negative_gain_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "preset = \"paper_default\"\n[gains]\nk_v = -1.0\n");
    match parse_config(&path) {
        Err(CliError::Validation { field, constraint }) => {
            assert_eq!(field, "gains");
            assert!(constraint.contains("k_v > 0"), "{constraint}");
        }
        other => panic!("expected a validation error, got {other:?}"),
    }
    let out = lislam(&["simulate", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_v > 0"));
}

#[test]
fn parse_error_exits_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "broken.toml", "preset = \"paper_default\"\nduration_s = [\n");
    let out = lislam(&["certify", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn zero_duration_gives_minimal_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "zero.toml", "preset = \"paper_default\"\nduration_s = 0.0\n");
    let out = lislam(&["simulate", path.to_str().unwrap(), "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("t,R00,R01,R02,"));
    assert!(csv.ends_with('\n') && !csv.contains('\r'));
    let summary = std::fs::read_to_string(dir.path().join("res/summary.toml")).unwrap();
    assert!(summary.contains("steps = 0"));
}

#[test]
fn reference_run_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = lislam(&["simulate", "--preset", "paper_default", "--out", "a"], dir.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = lislam(&["simulate", "--preset", "paper_default", "--out", "b"], dir.path());
    assert_eq!(second.status.code(), Some(0));

    let csv_a = std::fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let csv_b = std::fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let table = read_csv(csv_a.as_slice()).unwrap();
    assert_eq!(table.len(), 5001);
    assert_eq!(table.rows[5000][0], 10.0);

    // Summaries differ only in the echoed output directory.
    let sum_a = std::fs::read_to_string(dir.path().join("a/summary.toml")).unwrap();
    let sum_b = std::fs::read_to_string(dir.path().join("b/summary.toml")).unwrap();
    assert_eq!(sum_a.replace("dir = \"a\"", "dir = \"b\""), sum_b);
    assert!(sum_a.contains("samples = 5001"));

    // Re-running into the same directory reproduces the files byte for byte.
    let again = lislam(&["simulate", "--preset", "paper_default", "--out", "a"], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("a/trajectory.csv")).unwrap(), csv_b);
    assert_eq!(std::fs::read_to_string(dir.path().join("a/summary.toml")).unwrap(), sum_a);

    // Alignment moves the converged estimate onto the true trajectory.
    let out = lislam(&["align", "a/trajectory.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let aligned = read_csv(std::fs::File::open(dir.path().join("a/trajectory_aligned.csv")).unwrap()).unwrap();
    assert_eq!(aligned.len(), 5001);
    let last = 5000;
    let (x, x_hat) = (aligned.true_state(last), aligned.est_state(last));
    assert!((x.v.columns(1, 6) - x_hat.v.columns(1, 6)).amax() < 1e-2);
    assert!((x.r - x_hat.r).amax() < 1e-2);
    let raw_hat = table.est_state(last);
    assert!((x.v.columns(1, 6) - raw_hat.v.columns(1, 6)).amax() > 1e-1);
    // True-state and metric columns pass through untouched.
    assert_eq!(aligned.rows[last][..16], table.rows[last][..16]);
    assert_eq!(aligned.rows[last][61..], table.rows[last][61..]);
}

#[test]
fn certify_reference_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "run.toml", "preset = \"paper_default\"\n");
    let out = lislam(&["certify", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let line = stdout
        .lines()
        .find(|l| l.starts_with("eigenvalues = "))
        .expect("eigenvalue line");
    let nums: Vec<f64> = line["eigenvalues = ".len()..]
        .split(['[', ']', ','])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(nums.len(), 12);
    let eig: Vec<(f64, f64)> = nums.chunks(2).map(|c| (c[0], c[1])).collect();
    let at_minus_four = eig
        .iter()
        .filter(|(re, im)| (re + 4.0).abs() < 1e-9 && im.abs() < 1e-9)
        .count();
    assert_eq!(at_minus_four, 4, "{eig:?}");
    assert!(eig.iter().all(|(re, _)| *re < 0.0));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = lislam(&["launch"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn numerical_failure_exits_two() {
    // Euler at 1 Hz with these gains is violently unstable.
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "unstable.toml",
        "preset = \"paper_default\"\nrate_hz = 1.0\nduration_s = 2000.0\ncheck_auxiliary = false\n[gains]\nk_p = 50.0\nk_v = 50.0\n",
    );
    let out = lislam(&["simulate", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
}

#[test]
fn align_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "other.csv", "a,b\n1,2\n");
    let out = lislam(&["align", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
}
