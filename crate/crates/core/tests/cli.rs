//! End-to-end tests of the `phg` command-line interface: exit codes,
//! file formats, and determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

use num_complex::Complex64;
use phg::io::{parse_track_jsonl, EvalOutput, PointsFile};
use phg::system::LaurentSystem;

fn phg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path
}

const SIMPLE_SYSTEM: &str = r#"{
    "n": 1,
    "support": [[1], [0]],
    "coefficients": [[[2.0, 0.0], [3.0, 0.0]]],
    "lifting": [[1, 1], [2, 1]]
}"#;

const EXP_PATH_SYSTEM: &str = r#"{
    "n": 1,
    "support": [[0], [1]],
    "coefficients": [[[-1.0, 0.0], [1.0, 0.0]]],
    "lifting": [[1, 1], [0, 1]]
}"#;

#[test]
fn gen_cyclic_14_has_184_monomials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cyclic14.json");
    let result = phg(&["gen", "cyclic", "--n", "14", "--out", out.to_str().unwrap()]);
    assert!(result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("m=184"), "stderr: {stderr}");
    assert!(stderr.contains("N=15"));
    let sys = LaurentSystem::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(sys.monomial_count(), 184);
}

#[test]
fn gen_chandra_24_has_324_monomials() {
    let result = phg(&["gen", "chandra", "--n", "24"]);
    assert!(result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("m=324"));
    let sys = LaurentSystem::parse(&String::from_utf8_lossy(&result.stdout)).unwrap();
    assert_eq!(sys.monomial_count(), 324);
}

#[test]
fn gen_random_is_deterministic() {
    let a = phg(&["gen", "random", "--n", "3", "--m", "10", "--seed", "7"]);
    let b = phg(&["gen", "random", "--n", "3", "--m", "10", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn gen_rejects_bad_parameters_with_usage_code() {
    let result = phg(&["gen", "cyclic", "--n", "2"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn eval_emits_the_expected_block() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", SIMPLE_SYSTEM);
    let points = write(
        &dir,
        "pts.json",
        r#"{"tau0": 0.0, "points": [[[1.0, 0.0], [1.0, 0.0]]]}"#,
    );
    let out = dir.path().join("eval.json");
    let result = phg(&[
        "eval",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let parsed = EvalOutput::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let block = parsed.block(0);
    let expect = [2.0, 3.0, 8.0, 5.0];
    for (j, want) in expect.iter().enumerate() {
        assert!((block[(0, j)] - Complex64::new(*want, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn eval_check_oracle_reports_small_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let system = dir.path().join("sys.json");
    assert!(phg(&["gen", "random", "--n", "3", "--m", "12", "--seed", "9", "--out", system.to_str().unwrap()])
        .status
        .success());
    // 100 seeded points in an annulus around the unit torus.
    let mut points = Vec::new();
    for i in 0..100 {
        let row: Vec<[f64; 2]> = (0..4)
            .map(|j| {
                let z = Complex64::from_polar(0.8 + 0.01 * (i % 40) as f64, 0.13 * (i + 7 * j) as f64);
                [z.re, z.im]
            })
            .collect();
        points.push(row);
    }
    let pf = PointsFile { tau0: -1.0, points };
    let points = write(&dir, "pts.json", &pf.to_json());
    let out = dir.path().join("eval.json");
    let result = phg(&[
        "eval",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--check-oracle",
    ]);
    assert!(result.status.success());
    let parsed = EvalOutput::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let dev = parsed.max_oracle_deviation.expect("deviation recorded");
    assert!(dev <= 1e-11, "deviation {dev}");
}

#[test]
fn eval_zero_coordinate_names_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", SIMPLE_SYSTEM);
    let points = write(
        &dir,
        "pts.json",
        r#"{"tau0": 0.0, "points": [[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}"#,
    );
    let result = phg(&[
        "eval",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("point 1"), "stderr: {stderr}");
}

#[test]
fn eval_shape_mismatch_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", SIMPLE_SYSTEM);
    let points = write(
        &dir,
        "pts.json",
        r#"{"tau0": 0.0, "points": [[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]]}"#,
    );
    let result = phg(&[
        "eval",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn track_converges_on_the_closed_form_path() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", EXP_PATH_SYSTEM);
    let x = (-2.0f64).exp();
    let points = write(
        &dir,
        "pts.json",
        &format!(r#"{{"tau0": -2.0, "points": [[[{x}, 0.0]]]}}"#),
    );
    let out = dir.path().join("track.jsonl");
    let result = phg(&[
        "track",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let (records, summary) = parse_track_jsonl(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(summary.paths, 1);
    assert_eq!(summary.converged, 1);
    assert_eq!(records[0].status, "Converged");
    assert!(records[0].residual.unwrap() <= 1e-8);
    let xa = records[0].x_affine.as_ref().unwrap();
    assert!((Complex64::new(xa[0][0], xa[0][1]) - Complex64::ONE).norm() <= 1e-8);
}

#[test]
fn track_rejects_off_path_start_points() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", EXP_PATH_SYSTEM);
    let points = write(&dir, "pts.json", r#"{"tau0": -2.0, "points": [[[0.9, 0.0]]]}"#);
    let result = phg(&[
        "track",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("start point"));
}

#[test]
fn track_empty_points_file_succeeds_with_zero_paths() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", EXP_PATH_SYSTEM);
    let points = write(&dir, "pts.json", r#"{"tau0": -2.0, "points": []}"#);
    let result = phg(&[
        "track",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&result.stderr).contains("0 paths"));
}

#[test]
fn track_fixed_steps_protocol_reports_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", EXP_PATH_SYSTEM);
    // 20 copies of the on-path start; the fixed-step protocol skips the
    // start-residual gate, so arbitrary points are also accepted.
    let x = (-20.0f64).exp();
    let rows: Vec<Vec<[f64; 2]>> = (0..20).map(|_| vec![[x, 0.0]]).collect();
    let pf = PointsFile {
        tau0: -20.0,
        points: rows,
    };
    let points = write(&dir, "pts.json", &pf.to_json());
    let out = dir.path().join("track.jsonl");
    let result = phg(&[
        "track",
        "--system",
        system.to_str().unwrap(),
        "--points",
        points.to_str().unwrap(),
        "--fixed-steps",
        "100",
        "--newton-iters",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(result.status.success(), "stderr: {stderr}");
    let (records, summary) = parse_track_jsonl(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(summary.paths, 20);
    assert_eq!(summary.converged, 20);
    assert!(summary.wall_seconds > 0.0);
    assert!(stderr.contains("20 paths"), "stderr: {stderr}");
    for r in &records {
        assert_eq!(r.steps, 100);
        assert_eq!(r.newton_iters, 100);
    }
}

#[test]
fn track_backend_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let system = write(&dir, "sys.json", EXP_PATH_SYSTEM);
    let x = (-2.0f64).exp();
    let points = write(
        &dir,
        "pts.json",
        &format!(r#"{{"tau0": -2.0, "points": [[[{x}, 0.0]]]}}"#),
    );
    let result = Command::new(env!("CARGO_BIN_EXE_phg"))
        .args(["track", "--system", system.to_str().unwrap(), "--points", points.to_str().unwrap()])
        .env("PHG_BACKEND", "blocked")
        .output()
        .unwrap();
    assert!(result.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_phg"))
        .args(["track", "--system", system.to_str().unwrap(), "--points", points.to_str().unwrap()])
        .env("PHG_BACKEND", "gpu")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn bench_csv_structure_and_determinism_header() {
    let dir = tempfile::tempdir().unwrap();
    let system = dir.path().join("sys.json");
    assert!(phg(&["gen", "cyclic", "--n", "4", "--out", system.to_str().unwrap()])
        .status
        .success());
    let out = dir.path().join("bench.csv");
    let result = phg(&[
        "bench",
        "--system",
        system.to_str().unwrap(),
        "--point-counts",
        "4,8",
        "--repetitions",
        "2",
        "--fixed-steps",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = phg::bench::parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].points, 4);
    assert_eq!(rows[1].points, 8);
    assert_eq!(rows[0].backend, "reference");
    assert!(rows.iter().all(|r| r.mean_seconds.is_some()));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let result = phg(&["polish"]);
    assert_eq!(result.status.code(), Some(1));
}

#[test]
fn missing_system_file_is_data_error() {
    let result = phg(&["bench", "--system", "/nonexistent/sys.json"]);
    assert_eq!(result.status.code(), Some(2));
}
