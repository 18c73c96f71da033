use std::collections::HashMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use torus_bml::{
    step_half, Cell, Configuration, FlipParams, FlipProcess, ParticleLedger, Phase, SystemState,
};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepRecord {
    pub step: u64,
    pub m1: usize,
    pub m2: usize,
    /// Cell transitions made during this step.
    pub moves: u64,
    pub running_mean_velocity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleDetection {
    /// First time whose configuration was seen before.
    pub first_repeat_step: u64,
    pub previous_step: u64,
    pub period: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationReport {
    pub schema_version: u32,
    pub n1: usize,
    pub n2: usize,
    pub q: f64,
    pub seed: u64,
    pub steps: u64,
    pub m: usize,
    pub initial: Vec<String>,
    /// Per particle, ids in row-major order of the initial configuration.
    pub moves: Vec<u64>,
    pub total_moves: u64,
    pub mean_velocity: Option<f64>,
    pub mean_velocity_exact: Option<String>,
    /// Only searched when `q = 0`.
    pub cycle: Option<CycleDetection>,
    pub history: Vec<StepRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<Vec<String>>>,
}

fn rows_of(config: &Configuration) -> Vec<String> {
    config
        .to_text()
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect()
}

/// Places `m1` type-one then `m2` type-two particles uniformly over the
/// remaining empty cells.
pub fn random_placement(
    n1: usize,
    n2: usize,
    m1: usize,
    m2: usize,
    seed: u64,
) -> Result<Configuration, CliError> {
    let mut config = Configuration::try_new(n1, n2)?;
    if m1 + m2 > n1 * n2 {
        return Err(CliError::Usage(format!(
            "{} particles do not fit on a {n1}x{n2} lattice",
            m1 + m2
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut empty: Vec<usize> = (0..n1 * n2).collect();
    let kinds =
        std::iter::repeat_n(Cell::TypeOne, m1).chain(std::iter::repeat_n(Cell::TypeTwo, m2));
    for kind in kinds {
        let k = empty.remove(rng.gen_range(0..empty.len()));
        config.set(k / n2, k % n2, kind);
    }
    Ok(config)
}

pub fn simulate(
    initial: Configuration,
    q: f64,
    seed: u64,
    steps: u64,
    keep_frames: bool,
) -> Result<SimulationReport, CliError> {
    let params = FlipParams::new(q, seed)?;
    let mut process = FlipProcess::new(params);
    let mut ledger = ParticleLedger::new(&initial);
    let m = initial.counts().0;
    let mut state = SystemState::new(initial.clone(), Phase::Row);

    let mut seen: HashMap<Configuration, u64> = HashMap::new();
    let mut cycle = None;
    if q == 0.0 {
        seen.insert(initial.clone(), 0);
    }
    let mut frames = keep_frames.then(|| vec![rows_of(&initial)]);
    let mut history = Vec::with_capacity(steps as usize);
    let mean = |total: u64, t: u64| (m > 0 && t > 0).then(|| total as f64 / (m as u64 * t) as f64);

    for t in 1..=steps {
        let before_moves = ledger.total_moves();
        for _ in 0..2 {
            let next = step_half(&state);
            ledger
                .advance(&state.config, &next.config, state.phase)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            state = next;
        }
        let flipped = process.flip(&state.config)?;
        ledger
            .sync_types(&flipped)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        state = SystemState::new(flipped, Phase::Row);

        let (_, m1, m2) = state.config.counts();
        let total = ledger.total_moves();
        history.push(StepRecord {
            step: t,
            m1,
            m2,
            moves: total - before_moves,
            running_mean_velocity: mean(total, t),
        });
        if let Some(f) = frames.as_mut() {
            f.push(rows_of(&state.config));
        }
        if q == 0.0 && cycle.is_none() {
            if let Some(&prev) = seen.get(&state.config) {
                cycle = Some(CycleDetection {
                    first_repeat_step: t,
                    previous_step: prev,
                    period: t - prev,
                });
            } else {
                seen.insert(state.config.clone(), t);
            }
        }
    }

    let total_moves = ledger.total_moves();
    Ok(SimulationReport {
        schema_version: 1,
        n1: initial.rows(),
        n2: initial.cols(),
        q,
        seed,
        steps,
        m,
        initial: rows_of(&initial),
        moves: ledger.moves(),
        total_moves,
        mean_velocity: mean(total_moves, steps),
        mean_velocity_exact: (m > 0 && steps > 0)
            .then(|| Ratio::new(total_moves, m as u64 * steps).to_string()),
        cycle,
        history,
        frames,
    })
}

impl SimulationReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "simulate {}x{} q={} seed={} steps={} particles={}",
            self.n1, self.n2, self.q, self.seed, self.steps, self.m
        );
        if let Some(frames) = &self.frames {
            for (t, rows) in frames.iter().enumerate() {
                let _ = writeln!(s, "t={t}");
                for r in rows {
                    let arrows: String = r
                        .chars()
                        .map(|c| match c {
                            '1' => '>',
                            '2' => 'v',
                            other => other,
                        })
                        .collect();
                    let _ = writeln!(s, "  {arrows}");
                }
            }
        }
        let moves: Vec<String> = self.moves.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "moves per particle: [{}]", moves.join(", "));
        let _ = writeln!(s, "total moves: {}", self.total_moves);
        match (&self.mean_velocity_exact, self.mean_velocity) {
            (Some(exact), Some(v)) => {
                let _ = writeln!(s, "mean velocity: {exact} ({v:.6})");
            }
            _ => {
                let _ = writeln!(s, "mean velocity: undefined");
            }
        }
        match &self.cycle {
            Some(c) => {
                let _ = writeln!(
                    s,
                    "cycle: configuration at t={} repeats t={}, period {}",
                    c.first_repeat_step, c.previous_step, c.period
                );
            }
            None if self.q == 0.0 => {
                let _ = writeln!(s, "cycle: none within {} steps", self.steps);
            }
            None => {}
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,m1,m2,moves,running_mean_velocity\n");
        for r in &self.history {
            let v = r
                .running_mean_velocity
                .map(|v| v.to_string())
                .unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{}", r.step, r.m1, r.m2, r.moves, v);
        }
        s
    }
}
