use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use torus_bml::algebra::{classify_reachable, FlipSupport, Limits};
use torus_bml::spectrum::{build_spectrum_with, SpectrumOptions};
use torus_bml::{
    classify_deterministic, find_delay_witness, gcd, gcd_verdict, in_set_b, is_mixed,
    solve_diophantine, sweep_deterministic, sweep_stochastic, Cell, ClassificationVerdict,
    Configuration, DiophantineProblem, Evidence, GcdVerdict, Phase, SpectrumExport, SystemState,
    VerdictKind,
};

use crate::args::{Command, DiophantineArgs, OutputFormat};
use crate::simulate::{random_placement, simulate};
use crate::{CliError, Output, RunConfig};

/// Largest lattice `check` sweeps exhaustively with `q = 0`.
pub const CHECK_MAX_CELLS: usize = 12;

pub fn run(cfg: &RunConfig) -> Result<Output, CliError> {
    match cfg.command {
        Command::Simulate => cmd_simulate(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Check => cmd_check(cfg),
        Command::Classify => cmd_classify(cfg),
        Command::Diophantine(args) => cmd_diophantine(cfg, args),
    }
}

fn read_config(path: &Path) -> Result<Configuration, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    text.parse()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Initial configuration from `--input`, or a seeded random placement.
fn initial_config(cfg: &RunConfig) -> Result<Configuration, CliError> {
    match &cfg.input {
        Some(path) => {
            let config = read_config(path)?;
            let clash = |flag: Option<usize>, actual: usize| flag.is_some_and(|n| n != actual);
            if clash(cfg.n1, config.rows()) || clash(cfg.n2, config.cols()) {
                return Err(CliError::Usage(format!(
                    "input is {}x{} but --n1/--n2 ask for {}x{}",
                    config.rows(),
                    config.cols(),
                    cfg.n1.map_or("?".into(), |n| n.to_string()),
                    cfg.n2.map_or("?".into(), |n| n.to_string()),
                )));
            }
            Ok(config)
        }
        None => {
            let (n1, n2) = cfg.dims()?;
            random_placement(n1, n2, cfg.m1, cfg.m2, cfg.seed)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let initial = initial_config(cfg)?;
    let report = simulate(initial, cfg.q, cfg.seed, cfg.steps, cfg.frames)?;
    let stdout = match cfg.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Text => report.to_text(),
    };
    let mut files = Vec::new();
    if let Some(dir) = &cfg.out {
        let path = dir.join(format!(
            "simulation-{}x{}-seed{}.json",
            report.n1, report.n2, report.seed
        ));
        write_file(&path, &to_json(&report))?;
        files.push(path);
    }
    Ok(Output { stdout, files })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io {
            path: parent.to_owned(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn cmd_spectrum(cfg: &RunConfig) -> Result<Output, CliError> {
    let (n1, n2) = cfg.dims()?;
    let options = SpectrumOptions {
        workers: cfg.workers,
        ..SpectrumOptions::default()
    };
    let spectrum = build_spectrum_with(n1, n2, options).map_err(|e| match CliError::from(e) {
        CliError::CapExceeded(msg) => CliError::CapExceeded(format!(
            "{msg}; use `bml classify --input FILE` for single states"
        )),
        other => other,
    })?;
    let summary = spectrum.summary();
    let export = SpectrumExport::from_spectrum(&spectrum)?;
    let csv = summary
        .to_csv()
        .map_err(|e| CliError::Internal(e.to_string()))?;

    let mut stdout = match cfg.format {
        OutputFormat::Json => export.to_json() + "\n",
        OutputFormat::Csv => csv.clone(),
        OutputFormat::Text => summary.to_string(),
    };
    let mut files = Vec::new();
    if let Some(dir) = &cfg.out {
        let json_path = dir.join(format!("spectrum-{n1}x{n2}.json"));
        let csv_path = dir.join(format!("summary-{n1}x{n2}.csv"));
        write_file(&json_path, &(export.to_json() + "\n"))?;
        write_file(&csv_path, &csv)?;
        if cfg.format == OutputFormat::Text {
            let _ = writeln!(stdout, "wrote {}", json_path.display());
            let _ = writeln!(stdout, "wrote {}", csv_path.display());
        }
        files.push(json_path);
        files.push(csv_path);
    }
    Ok(Output { stdout, files })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct WitnessReport {
    type_one_at: (usize, usize),
    type_two_at: (usize, usize),
    equation: String,
    x: u64,
    y: u64,
    delayed_type: u8,
    delay_step: u64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SweepSummary {
    scope: String,
    checked: u64,
    free_movement: u64,
    first_free: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CheckReport {
    schema_version: u32,
    n1: usize,
    n2: usize,
    q: f64,
    gcd: i64,
    gcd_verdict: String,
    sample_witness: Option<WitnessReport>,
    sweeps: Vec<SweepSummary>,
    /// A mixed two-particle configuration that moves freely from the start.
    free_example: Option<Vec<String>>,
    status: String,
}

fn grid_rows(config: &Configuration) -> Vec<String> {
    config
        .to_text()
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect()
}

/// First type-two position (row-major) that yields a witness against a
/// type-one particle at the origin.
fn sample_witness(n1: usize, n2: usize) -> Result<Option<WitnessReport>, CliError> {
    for k in 1..n1 * n2 {
        let pos2 = (k / n2, k % n2);
        if let Some(w) = find_delay_witness(n1, n2, (0, 0), pos2)? {
            return Ok(Some(WitnessReport {
                type_one_at: (0, 0),
                type_two_at: pos2,
                equation: format!("{:?}", w.equation),
                x: w.x,
                y: w.y,
                delayed_type: w.delayed_type.digit(),
                delay_step: w.delay_offset,
            }));
        }
    }
    Ok(None)
}

/// First mixed pair, scanning type-one then type-two positions row-major,
/// whose configuration lies on its own limit cycle with every step free.
fn free_pair(n1: usize, n2: usize) -> Result<Option<Configuration>, CliError> {
    let cells = n1 * n2;
    for k1 in 0..cells {
        for k2 in 0..cells {
            if k1 == k2 {
                continue;
            }
            let config = Configuration::with_particles(
                n1,
                n2,
                &[
                    ((k1 / n2, k1 % n2), Cell::TypeOne),
                    ((k2 / n2, k2 % n2), Cell::TypeTwo),
                ],
            )?;
            let v = classify_deterministic(&SystemState::new(config.clone(), Phase::Row))?;
            if v.kind == VerdictKind::FreeMovement && v.onset == 0 {
                return Ok(Some(config));
            }
        }
    }
    Ok(None)
}

fn cmd_check(cfg: &RunConfig) -> Result<Output, CliError> {
    let (n1, n2) = cfg.dims()?;
    let d = gcd(n1 as i64, n2 as i64)?;
    let verdict = gcd_verdict(n1, n2, true, cfg.q)?;
    let gcd_rules_out = verdict == GcdVerdict::FreeMovementImpossible;
    let sample = sample_witness(n1, n2)?;

    let mut sweeps = Vec::new();
    let mut violations = 0u64;
    if cfg.q == 0.0 {
        if n1 * n2 > CHECK_MAX_CELLS {
            return Err(CliError::CapExceeded(format!(
                "{} cells exceed the exhaustive check cap of {CHECK_MAX_CELLS}",
                n1 * n2
            )));
        }
        let r = sweep_deterministic(n1, n2, is_mixed)?;
        if gcd_rules_out {
            violations += r.free;
        }
        sweeps.push(SweepSummary {
            scope: "mixed types, q = 0".into(),
            checked: r.checked,
            free_movement: r.free,
            first_free: r.first_free.as_ref().map(grid_rows),
        });
    } else {
        let paired = sweep_stochastic(n1, n2, |c| c.counts().0 >= 2)?;
        let single = sweep_stochastic(n1, n2, |c| c.counts().0 == 1)?;
        if gcd_rules_out {
            violations += paired.free;
        }
        sweeps.push(SweepSummary {
            scope: "at least two particles, q > 0".into(),
            checked: paired.checked,
            free_movement: paired.free,
            first_free: paired.first_free.as_ref().map(grid_rows),
        });
        sweeps.push(SweepSummary {
            scope: "single particle, q > 0 (no pair to meet)".into(),
            checked: single.checked,
            free_movement: single.free,
            first_free: single.first_free.as_ref().map(grid_rows),
        });
    }
    let free_example = if d >= 3 && cfg.q == 0.0 {
        free_pair(n1, n2)?.as_ref().map(grid_rows)
    } else {
        None
    };
    let status = if !gcd_rules_out {
        "NO CLAIM (necessary condition holds)"
    } else if violations == 0 {
        "PASS"
    } else {
        "FAIL"
    };
    let report = CheckReport {
        schema_version: 1,
        n1,
        n2,
        q: cfg.q,
        gcd: d,
        gcd_verdict: format!("{verdict:?}"),
        sample_witness: sample,
        sweeps,
        free_example,
        status: status.into(),
    };
    let stdout = match cfg.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Text | OutputFormat::Csv => check_text(&report),
    };
    if violations > 0 {
        return Err(CliError::Internal(format!(
            "{stdout}free-movement state found where the gcd criterion rules it out"
        )));
    }
    Ok(Output {
        stdout,
        files: Vec::new(),
    })
}

fn check_text(r: &CheckReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "check {}x{} q={}", r.n1, r.n2, r.q);
    let _ = writeln!(s, "gcd({}, {}) = {}", r.n1, r.n2, r.gcd);
    let _ = writeln!(s, "gcd criterion (both types present): {}", r.gcd_verdict);
    match &r.sample_witness {
        Some(w) => {
            let _ = writeln!(
                s,
                "delay witness: type 1 at {:?}, type 2 at {:?}: {} x={} y={}, type {} held up at step {}",
                w.type_one_at, w.type_two_at, w.equation, w.x, w.y, w.delayed_type, w.delay_step
            );
        }
        None => {
            let _ = writeln!(s, "delay witness: none for a type-one particle at (0, 0)");
        }
    }
    for sw in &r.sweeps {
        let _ = writeln!(
            s,
            "sweep [{}]: {} states, {} free-movement",
            sw.scope, sw.checked, sw.free_movement
        );
        if let Some(rows) = &sw.first_free {
            let _ = writeln!(s, "  first free-movement state:");
            for row in rows {
                let _ = writeln!(s, "    {row}");
            }
        }
    }
    if let Some(rows) = &r.free_example {
        let _ = writeln!(s, "free movement from t=0:");
        for row in rows {
            let _ = writeln!(s, "    {row}");
        }
    }
    let _ = writeln!(s, "status: {}", r.status);
    s
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ClassifyReport {
    schema_version: u32,
    mode: String,
    kind: String,
    onset: usize,
    cycle_len: usize,
    evidence_kind: String,
    /// Configurations of the evidence, each as rows of '.', '1', '2'.
    evidence: Vec<Vec<String>>,
    /// For a delayed state: the steps leading to it.
    path: Vec<Vec<String>>,
}

fn classify_report(mode: &str, v: &ClassificationVerdict) -> ClassifyReport {
    let (evidence_kind, evidence, path) = match &v.evidence {
        Evidence::FreeCycle(c) => ("free cycle", c.iter().map(grid_rows).collect(), Vec::new()),
        Evidence::FreeClosure(c) => (
            "free closure",
            c.iter().map(grid_rows).collect(),
            Vec::new(),
        ),
        Evidence::Fixed(c) => ("fixed", vec![grid_rows(c)], Vec::new()),
        Evidence::Delayed { config, path } => (
            "delayed",
            vec![grid_rows(config)],
            path.iter().map(grid_rows).collect(),
        ),
    };
    ClassifyReport {
        schema_version: 1,
        mode: mode.into(),
        kind: format!("{:?}", v.kind),
        onset: v.onset,
        cycle_len: v.cycle_len,
        evidence_kind: evidence_kind.into(),
        evidence,
        path,
    }
}

fn cmd_classify(cfg: &RunConfig) -> Result<Output, CliError> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("classify needs --input FILE".into()))?;
    let config = read_config(path)?;
    let state = SystemState::new(config, Phase::Row);
    let (mode, verdict) = if cfg.q > 0.0 {
        (
            "switching (q > 0)",
            classify_reachable(&state, FlipSupport::AnySubset, &Limits::default())?,
        )
    } else {
        ("deterministic (q = 0)", classify_deterministic(&state)?)
    };
    let report = classify_report(mode, &verdict);
    let stdout = match cfg.format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Text | OutputFormat::Csv => classify_text(&report, &verdict),
    };
    Ok(Output {
        stdout,
        files: Vec::new(),
    })
}

fn classify_text(r: &ClassifyReport, v: &ClassificationVerdict) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} [{}]", r.kind, r.mode);
    let _ = writeln!(s, "onset: {} steps, limit size: {}", r.onset, r.cycle_len);
    let render = |s: &mut String, c: &Configuration| {
        for line in c.render().lines() {
            let _ = writeln!(s, "    {line}");
        }
    };
    match &v.evidence {
        Evidence::FreeCycle(c) | Evidence::FreeClosure(c) => {
            let _ = writeln!(s, "evidence: {} configurations, all moving freely", c.len());
            for (k, x) in c.iter().enumerate() {
                let _ = writeln!(s, "  [{k}]");
                render(&mut s, x);
            }
        }
        Evidence::Fixed(c) => {
            let _ = writeln!(s, "evidence: no particle ever moves");
            render(&mut s, c);
        }
        Evidence::Delayed { config, path } => {
            let _ = writeln!(
                s,
                "evidence: recurring configuration with a held-up particle (in B: {})",
                in_set_b(config)
            );
            render(&mut s, config);
            let _ = writeln!(s, "reached after {} steps", path.len());
        }
    }
    s
}

fn cmd_diophantine(cfg: &RunConfig, args: DiophantineArgs) -> Result<Output, CliError> {
    let problem = DiophantineProblem::new(args.a, args.b, args.c)?;
    let sol = solve_diophantine(&problem);
    let stdout = match cfg.format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            #[serde(rename_all = "camelCase")]
            struct Report {
                schema_version: u32,
                a: i64,
                b: i64,
                c: i64,
                gcd: i64,
                solvable: bool,
                x0: Option<i64>,
                y0: Option<i64>,
                family_step: (i64, i64),
                reduced_step: (i64, i64),
            }
            to_json(&Report {
                schema_version: 1,
                a: args.a,
                b: args.b,
                c: args.c,
                gcd: sol.gcd,
                solvable: sol.is_solvable(),
                x0: sol.witness.map(|w| w.0),
                y0: sol.witness.map(|w| w.1),
                family_step: sol.family_step,
                reduced_step: sol.reduced_step,
            })
        }
        OutputFormat::Text | OutputFormat::Csv => {
            let mut s = format!(
                "{}x + {}y + {} = 0, gcd({}, {}) = {}\n",
                args.a,
                args.b,
                args.c,
                args.a.abs(),
                args.b.abs(),
                sol.gcd
            );
            match sol.witness {
                None => s.push_str("no solution\n"),
                Some((x0, y0)) => {
                    let _ = writeln!(s, "witness: x0 = {x0}, y0 = {y0}");
                    let _ = writeln!(
                        s,
                        "family: x = {x0} + ({})t, y = {y0} + ({})t",
                        sol.family_step.0, sol.family_step.1
                    );
                    let _ = writeln!(
                        s,
                        "all solutions: x = {x0} + ({})t, y = {y0} + ({})t",
                        sol.reduced_step.0, sol.reduced_step.1
                    );
                }
            }
            s
        }
    };
    Ok(Output {
        stdout,
        files: Vec::new(),
    })
}
