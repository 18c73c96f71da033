use clap::Parser;
use serde_json::Value;
use torus_bml::{step_u, step_y, Cell, Configuration};

use crate::{run, Cli, CliError, Output, RunConfig};

fn bml(args: &[&str]) -> Result<Output, CliError> {
    let cli = Cli::try_parse_from(std::iter::once("bml").chain(args.iter().copied()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    run(&RunConfig::from_cli(cli)?)
}

fn code(args: &[&str]) -> i32 {
    bml(args).map_or_else(|e| e.exit_code(), |_| 0)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&bml(args).unwrap().stdout).unwrap()
}

fn rows_to_config(rows: &Value) -> Configuration {
    let rows: Vec<&str> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_str().unwrap())
        .collect();
    format!("{} {}\n{}", rows.len(), rows[0].len(), rows.join("\n"))
        .parse()
        .unwrap()
}

/// Particles that moved from `x`, counted from the two half-steps alone.
fn moves_in_step(x: &Configuration) -> u64 {
    let u = step_u(x);
    let y = step_y(&u);
    let left = |a: &Configuration, b: &Configuration, kind: Cell| {
        a.cells()
            .iter()
            .zip(b.cells())
            .filter(|(p, q)| **p == kind && **q == Cell::Empty)
            .count() as u64
    };
    left(x, &u, Cell::TypeOne) + left(&u, &y, Cell::TypeTwo)
}

#[test]
fn mean_velocity_matches_frames() {
    let report = json(&[
        "simulate", "--n1", "5", "--n2", "6", "--m1", "7", "--m2", "6", "--q", "0.3", "--seed",
        "5", "--steps", "40", "--frames", "--format", "json",
    ]);
    let frames: Vec<Configuration> = report["frames"]
        .as_array()
        .unwrap()
        .iter()
        .map(rows_to_config)
        .collect();
    assert_eq!(frames.len(), 41);
    let mut total = 0;
    for (t, pair) in frames.windows(2).enumerate() {
        let occupied = |c: &Configuration| {
            c.cells()
                .iter()
                .map(|x| x.is_particle())
                .collect::<Vec<_>>()
        };
        let moved = step_y(&step_u(&pair[0]));
        assert_eq!(
            occupied(&moved),
            occupied(&pair[1]),
            "positions after step {t}"
        );
        let m = moves_in_step(&pair[0]);
        assert_eq!(report["history"][t]["moves"].as_u64(), Some(m));
        total += m;
    }
    assert_eq!(report["totalMoves"].as_u64(), Some(total));
    let mean = report["meanVelocity"].as_f64().unwrap();
    assert_eq!(mean, total as f64 / (13.0 * 40.0));
    assert_eq!(report["schemaVersion"], 1);
}

#[test]
fn simulate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex1.txt");
    std::fs::write(&path, "3 3\n1.2\n...\n...\n").unwrap();
    let p = path.to_str().unwrap();
    let report = json(&["simulate", "--input", p, "--steps", "9", "--format", "json"]);
    assert_eq!(report["moves"], serde_json::json!([9, 9]));
    assert_eq!(report["meanVelocityExact"], "1");
    assert_eq!(report["cycle"]["period"], 3);

    assert_eq!(code(&["simulate", "--input", p, "--n1", "4"]), 1);
}

#[test]
fn exit_codes() {
    let cap = bml(&["spectrum", "--n1", "5", "--n2", "5"]).unwrap_err();
    assert_eq!(cap.exit_code(), 2);
    assert!(cap.to_string().contains("classify"));
    assert_eq!(
        code(&["simulate", "--n1", "2", "--n2", "2", "--q", "1.0"]),
        1
    );
    assert_eq!(
        code(&["simulate", "--n1", "2", "--n2", "2", "--m1", "5"]),
        1
    );
    assert_eq!(code(&["simulate"]), 1);
    assert_eq!(code(&["classify"]), 1);
    assert_eq!(
        code(&["diophantine", "--a", "0", "--b", "3", "--c", "1"]),
        1
    );
    assert_eq!(code(&["nonsense"]), 1);
    assert_eq!(code(&["check", "--n1", "2", "--n2", "2"]), 0);
    let help = Cli::try_parse_from(["bml", "--help"]).unwrap_err();
    assert!(!help.use_stderr());
}

#[test]
fn spectrum_writes_exports() {
    let dir = tempfile::tempdir().unwrap();
    let out = bml(&[
        "spectrum",
        "--n1",
        "2",
        "--n2",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ])
    .unwrap();
    assert_eq!(out.files.len(), 2);
    let export: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("spectrum-2x2.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(export["stateCount"], 162);
    assert_eq!(export["recurrentCount"], 162);
    let csv = std::fs::read_to_string(dir.path().join("summary-2x2.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}

#[test]
fn check_reports() {
    let free = json(&["check", "--n1", "3", "--n2", "3", "--format", "json"]);
    assert_eq!(free["gcd"], 3);
    assert_eq!(
        free["freeExample"],
        serde_json::json!(["1.2", "...", "..."])
    );
    let small = json(&["check", "--n1", "2", "--n2", "4", "--format", "json"]);
    assert_eq!(small["status"], "PASS");
    assert_eq!(small["sweeps"][0]["freeMovement"], 0);
    let switching = json(&[
        "check", "--n1", "2", "--n2", "2", "--q", "0.5", "--format", "json",
    ]);
    assert_eq!(switching["sweeps"][0]["freeMovement"], 0);
    assert_eq!(switching["sweeps"][1]["freeMovement"], 8);
}

#[test]
fn classify_and_diophantine() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("jam.txt");
    std::fs::write(&path, "2 2\n12\n21\n").unwrap();
    let v = json(&[
        "classify",
        "--input",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(v["kind"], "Jam");
    let d = json(&[
        "diophantine",
        "--a",
        "4",
        "--b",
        "-6",
        "--c",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(d["solvable"], true);
    let (x, y) = (d["x0"].as_i64().unwrap(), d["y0"].as_i64().unwrap());
    assert_eq!(4 * x - 6 * y + 2, 0);
    assert_eq!(d["reducedStep"], serde_json::json!([3, 2]));
    let none = json(&[
        "diophantine",
        "--a",
        "4",
        "--b",
        "6",
        "--c",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(none["solvable"], false);
}
