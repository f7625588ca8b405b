use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn obsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obsim"))
        .args(args)
        .output()
        .expect("spawn obsim")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_min_prints_step_counts() {
    let out = obsim(&[
        "run",
        "--task",
        "min",
        "--n-range",
        "3..3",
        "--k-range",
        "2..3",
    ]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "task,n,k,invocations,rounds,stored_items,predicted_one_step,agreement\n\
         min,3,2,2,2,2,false,true\n\
         min,3,3,1,1,0,true,true\n"
    );
}

#[test]
fn run_single_item_is_free() {
    let out = obsim(&["run", "--task", "min", "--n", "1", "--k", "2"]);
    assert!(out.status.success());
    assert!(stdout(&out).ends_with("min,1,2,0,0,0,true,true\n"));
}

#[test]
fn run_energy_row() {
    let out = obsim(&[
        "run",
        "--task",
        "energy",
        "--count",
        "10",
        "--base-energy",
        "50",
        "--growth-ratio",
        "1.3",
        "--k",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(&fields[..3], &["energy", "10", "10"]);
    let nums: Vec<f64> = fields[3..6].iter().map(|f| f.parse().unwrap()).collect();
    for (got, want) in nums.iter().zip([689.29, 2820.26, 282.02]) {
        assert!((got - want).abs() <= 0.01, "{row}");
    }
}

#[test]
fn energy_subcommand_table() {
    let out = obsim(&["energy"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "charge,energy_ev,cumulative_ev,per_observability_ev"
    );
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[1], "0,50.000000,50.000000,5.000000");
    assert!(lines[11].starts_with("10,689.29"));
}

#[test]
fn sweep_grid_size_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    let out = obsim(&[
        "sweep",
        "--task",
        "min",
        "--n-range",
        "2..20",
        "--k-range",
        "2..10",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(&path).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 171);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    // n-major, then k.
    assert!(
        rows[0].starts_with("min,2,2,")
            && rows[1].starts_with("min,2,3,")
            && rows[9].starts_with("min,3,2,")
    );
}

#[test]
fn sweep_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"task": "principle", "n_range": [1, 6], "k_range": [2, 6], "seed": 3, "allow_ties": true}"#).unwrap();
    let out = obsim(&["sweep", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 6 * 5);
    assert!(text
        .lines()
        .skip(1)
        .all(|r| r.starts_with("principle,") && r.ends_with(",true")));
}

#[test]
fn physics_sorts_and_flips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("particles.json");
    fs::write(
        &path,
        r#"[{"mass": 1, "charge": 1, "speed": 1}, {"mass": 2, "charge": 1, "speed": 1}, {"mass": 3, "charge": 1, "speed": 1}]"#,
    )
    .unwrap();
    let out = obsim(&["physics", "--input", path.to_str().unwrap()]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["permutation"], serde_json::json!([2, 1, 0]));
    assert_eq!(report["invocations"], 1);
    assert_eq!(report["k"], 3);
    assert_eq!(report["displacements"][0]["displacement"], 0.5);

    let out = obsim(&[
        "physics",
        "--input",
        path.to_str().unwrap(),
        "--field-strength",
        "-1",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["permutation"], serde_json::json!([0, 1, 2]));
}

#[test]
fn physics_document_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("experiment.json");
    fs::write(
        &path,
        r#"{"particles": [{"mass": 1, "charge": 2, "speed": 1}, {"mass": 1, "charge": 1, "speed": 1}],
            "field": {"field_strength": 1, "plate_length": 2, "drift_distance": 1}}"#,
    )
    .unwrap();
    let out = obsim(&["physics", "--input", path.to_str().unwrap(), "--k", "4"]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["permutation"], serde_json::json!([1, 0]));
    // y = qHL(L/2 + D)/(m v^2) = 2 * 1 * 2 * 2 / 1
    assert_eq!(report["displacements"][0]["displacement"], 8.0);
}

#[test]
fn charge_sort_from_file_in_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("particles.json");
    fs::write(
        &path,
        r#"[{"mass": 1, "charge": 1, "speed": 1}, {"mass": 2, "charge": 1, "speed": 3}]"#,
    )
    .unwrap();
    let out = obsim(&[
        "run",
        "--task",
        "charge_sort",
        "--k-range",
        "2..4",
        "--input",
        path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        stdout(&out).lines().skip(1).collect::<Vec<_>>(),
        vec![
            "charge_sort,2,2,1,1,0,true,true",
            "charge_sort,2,3,1,1,0,true,true",
            "charge_sort,2,4,1,1,0,true,true"
        ]
    );
}

#[test]
fn invalid_spec_exits_two() {
    for args in [
        &["run", "--task", "min", "--n", "3", "--k", "1"][..],
        &["run", "--task", "min", "--k", "3"][..],
        &["run", "--task", "median", "--n", "3", "--k", "3"][..],
        &["sweep", "--task", "energy", "--k", "10"][..],
        &["run", "--task", "sort", "--n-range", "9..3", "--k", "3"][..],
    ] {
        let out = obsim(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn bad_input_exits_three() {
    let out = obsim(&["physics", "--input", "/nonexistent/particles.json"]);
    assert_eq!(out.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, r#"[{"mass": 1, "charge": 1}]"#).unwrap();
    assert_eq!(
        obsim(&["physics", "--input", path.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    fs::write(&path, r#"[{"mass": -1, "charge": 1, "speed": 1}]"#).unwrap();
    assert_eq!(
        obsim(&["physics", "--input", path.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );

    fs::write(&path, "{not json").unwrap();
    assert_eq!(
        obsim(&["run", "--spec", path.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn write_failure_exits_four() {
    let out = obsim(&[
        "sweep",
        "--task",
        "min",
        "--n-range",
        "2..3",
        "--k",
        "2",
        "--output",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(out.status.code(), Some(4));
}
