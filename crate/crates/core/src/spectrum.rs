//! Exhaustive spectrum of the deterministic half-step dynamics.
//!
//! Every `(configuration, phase)` pair of a small lattice gets a dense index;
//! the half-step map is then a functional graph on those indices. Its cycles,
//! with their periods and particle velocities, form the spectrum.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::lattice::{step_half, Configuration, ParticleLedger, Phase, SystemState};

/// Largest lattice, in cells, that is enumerated by default.
pub const DEFAULT_MAX_CELLS: usize = 16;

/// Dense index of a system state: `(phase − 1)·3^(n1·n2) + configuration code`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateIndex(pub u64);

/// Index arithmetic for one lattice size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateSpace {
    n1: usize,
    n2: usize,
    configs: u64,
}

impl StateSpace {
    pub fn new(n1: usize, n2: usize, max_cells: usize) -> Result<Self, AnalysisError> {
        Configuration::try_new(n1, n2)?;
        let cells = n1 * n2;
        if cells > max_cells {
            return Err(AnalysisError::CapExceeded {
                cells,
                cap: max_cells,
            });
        }
        Ok(Self {
            n1,
            n2,
            configs: 3u64.pow(cells as u32),
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn config_count(&self) -> u64 {
        self.configs
    }

    pub fn state_count(&self) -> u64 {
        2 * self.configs
    }

    pub fn encode(&self, state: &SystemState) -> StateIndex {
        debug_assert_eq!(
            (state.config.rows(), state.config.cols()),
            (self.n1, self.n2)
        );
        let high = match state.phase {
            Phase::Row => 0,
            Phase::Col => self.configs,
        };
        StateIndex(high + state.config.code())
    }

    pub fn decode(&self, index: StateIndex) -> Result<SystemState, AnalysisError> {
        if index.0 >= self.state_count() {
            return Err(crate::error::LatticeError::CodeRange.into());
        }
        let (phase, code) = if index.0 < self.configs {
            (Phase::Row, index.0)
        } else {
            (Phase::Col, index.0 - self.configs)
        };
        Ok(SystemState::new(
            Configuration::from_code(self.n1, self.n2, code)?,
            phase,
        ))
    }

    fn successor(&self, index: u64) -> u64 {
        let state = self.decode(StateIndex(index)).expect("index in range");
        self.encode(&step_half(&state)).0
    }
}

/// All states of an `n1 × n2` lattice in ascending index order.
pub fn enumerate_states(
    n1: usize,
    n2: usize,
) -> Result<impl Iterator<Item = SystemState>, AnalysisError> {
    let space = StateSpace::new(n1, n2, DEFAULT_MAX_CELLS)?;
    Ok((0..space.state_count()).map(move |i| space.decode(StateIndex(i)).expect("index in range")))
}

/// A closed trajectory of the half-step map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub id: usize,
    /// Listed from the smallest index.
    pub states: Vec<StateIndex>,
    pub period_half_steps: usize,
    pub period_full_steps: usize,
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
    /// Moves per full step over one traversal, by particle id (row-major at
    /// the first listed state).
    pub velocities: Vec<Ratio<u64>>,
    /// `None` on the empty lattice.
    pub mean_velocity: Option<Ratio<u64>>,
}

impl Cycle {
    /// Particle velocities in ascending order.
    pub fn velocity_profile(&self) -> Vec<Ratio<u64>> {
        let mut v = self.velocities.clone();
        v.sort_unstable();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    space: StateSpace,
    pub cycles: Vec<Cycle>,
    /// Cycle id per state index; `None` for transient states.
    state_to_cycle: Vec<Option<u32>>,
}

impl Spectrum {
    pub fn n1(&self) -> usize {
        self.space.n1
    }

    pub fn n2(&self) -> usize {
        self.space.n2
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn state_count(&self) -> u64 {
        self.space.state_count()
    }

    pub fn recurrent_count(&self) -> u64 {
        self.cycles.iter().map(|c| c.period_half_steps as u64).sum()
    }

    pub fn cycle_of(&self, index: StateIndex) -> Option<&Cycle> {
        self.state_to_cycle
            .get(index.0 as usize)
            .copied()
            .flatten()
            .map(|id| &self.cycles[id as usize])
    }

    pub fn is_recurrent(&self, index: StateIndex) -> bool {
        self.cycle_of(index).is_some()
    }

    pub fn summary(&self) -> SpectrumSummary {
        spectrum_summary(self)
    }
}

/// Options for [`build_spectrum_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpectrumOptions {
    /// Worker threads for the successor table; `None` uses the global pool.
    pub workers: Option<usize>,
    pub max_cells: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            workers: None,
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

pub fn build_spectrum(n1: usize, n2: usize) -> Result<Spectrum, AnalysisError> {
    build_spectrum_with(n1, n2, SpectrumOptions::default())
}

fn successor_table(space: &StateSpace, workers: Option<usize>) -> Result<Vec<u32>, AnalysisError> {
    let total = space.state_count();
    if total > u64::from(u32::MAX) {
        return Err(AnalysisError::Internal(
            "state space exceeds 32-bit indices".into(),
        ));
    }
    let compute = || {
        (0..total as u32)
            .into_par_iter()
            .map(|i| space.successor(u64::from(i)) as u32)
            .collect::<Vec<u32>>()
    };
    match workers {
        None => Ok(compute()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| AnalysisError::Internal(e.to_string()))?;
            Ok(pool.install(compute))
        }
    }
}

/// Cycles of a functional graph given as a successor array, each rotated to
/// start at its smallest node, sorted by that node. Handles tails feeding
/// into cycles.
pub fn functional_graph_cycles(succ: &[u32]) -> Vec<Vec<u32>> {
    const NEW: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let mut color = vec![NEW; succ.len()];
    let mut cycles = Vec::new();
    let mut path: Vec<u32> = Vec::new();
    for s in 0..succ.len() {
        if color[s] != NEW {
            continue;
        }
        path.clear();
        let mut v = s as u32;
        while color[v as usize] == NEW {
            color[v as usize] = ON_PATH;
            path.push(v);
            v = succ[v as usize];
        }
        if color[v as usize] == ON_PATH {
            let at = path.iter().rposition(|&u| u == v).expect("on current path");
            let mut cycle = path[at..].to_vec();
            let min_at = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, &u)| u)
                .map(|(k, _)| k)
                .unwrap_or(0);
            cycle.rotate_left(min_at);
            cycles.push(cycle);
        }
        for &u in &path {
            color[u as usize] = DONE;
        }
    }
    cycles.sort_unstable_by_key(|c| c[0]);
    cycles
}

/// Full enumeration: successor table, cycle search, velocities.
pub fn build_spectrum_with(
    n1: usize,
    n2: usize,
    options: SpectrumOptions,
) -> Result<Spectrum, AnalysisError> {
    let space = StateSpace::new(n1, n2, options.max_cells)?;
    let succ = successor_table(&space, options.workers)?;
    let raw = functional_graph_cycles(&succ);

    let mut state_to_cycle = vec![None; succ.len()];
    let mut cycles = Vec::with_capacity(raw.len());
    for (id, nodes) in raw.into_iter().enumerate() {
        for &u in &nodes {
            state_to_cycle[u as usize] = Some(id as u32);
        }
        cycles.push(measure_cycle(&space, id, nodes)?);
    }
    Ok(Spectrum {
        space,
        cycles,
        state_to_cycle,
    })
}

/// Replays one traversal with a particle ledger and derives the velocities.
fn measure_cycle(space: &StateSpace, id: usize, nodes: Vec<u32>) -> Result<Cycle, AnalysisError> {
    let period_half_steps = nodes.len();
    if !period_half_steps.is_multiple_of(2) {
        return Err(AnalysisError::Internal(format!(
            "cycle {id} has odd length {period_half_steps}"
        )));
    }
    let period_full_steps = period_half_steps / 2;
    let first = space.decode(StateIndex(u64::from(nodes[0])))?;
    let (m, m1, m2) = first.config.counts();
    let mut ledger = ParticleLedger::new(&first.config);
    let mut state = first;
    for k in 0..period_half_steps {
        let next = step_half(&state);
        let expected = nodes[(k + 1) % period_half_steps];
        if space.encode(&next).0 != u64::from(expected) {
            return Err(AnalysisError::Internal(format!(
                "cycle {id} does not close"
            )));
        }
        if next.config.counts() != (m, m1, m2) {
            return Err(AnalysisError::Internal(format!(
                "cycle {id} changes particle counts"
            )));
        }
        ledger.advance(&state.config, &next.config, state.phase)?;
        state = next;
    }
    let full = period_full_steps as u64;
    let velocities: Vec<Ratio<u64>> = ledger
        .moves()
        .into_iter()
        .map(|a| Ratio::new(a, full))
        .collect();
    if velocities.iter().any(|v| *v > Ratio::from_integer(1)) {
        return Err(AnalysisError::Internal(format!(
            "cycle {id} has velocity above 1"
        )));
    }
    let mean_velocity = (m > 0).then(|| Ratio::new(ledger.total_moves(), full * m as u64));
    Ok(Cycle {
        id,
        states: nodes
            .into_iter()
            .map(|u| StateIndex(u64::from(u)))
            .collect(),
        period_half_steps,
        period_full_steps,
        m,
        m1,
        m2,
        velocities,
        mean_velocity,
    })
}

/// One row of the spectrum summary: cycles sharing particle counts, period
/// and velocity profile.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SummaryRow {
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
    pub period_half_steps: usize,
    pub period_full_steps: usize,
    /// Sorted particle velocities, space separated, e.g. `0 0 1`.
    pub velocities: String,
    pub mean_velocity: String,
    pub cycles: usize,
    pub states: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumSummary {
    pub n1: usize,
    pub n2: usize,
    pub state_count: u64,
    pub recurrent_count: u64,
    pub rows: Vec<SummaryRow>,
}

impl SpectrumSummary {
    /// Recurrent states with `m` particles.
    pub fn states_with(&self, m: usize) -> usize {
        self.rows
            .iter()
            .filter(|r| r.m == m)
            .map(|r| r.states)
            .sum()
    }

    /// Recurrent states with `m` particles, bucketed by cycle mean velocity.
    pub fn states_by_mean_velocity(&self, m: usize) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.m == m) {
            *out.entry(r.mean_velocity.clone()).or_insert(0) += r.states;
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

impl fmt::Display for SpectrumSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}x{} lattice: {} states, {} recurrent",
            self.n1, self.n2, self.state_count, self.recurrent_count
        )?;
        writeln!(
            f,
            "{:>3} {:>3} {:>3} {:>6} {:>6} {:>7} {:>7}  velocities",
            "m", "m1", "m2", "T_half", "T_full", "cycles", "states"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>3} {:>3} {:>3} {:>6} {:>6} {:>7} {:>7}  [{}] mean {}",
                r.m,
                r.m1,
                r.m2,
                r.period_half_steps,
                r.period_full_steps,
                r.cycles,
                r.states,
                r.velocities,
                r.mean_velocity
            )?;
        }
        Ok(())
    }
}

fn ratio_text(r: &Ratio<u64>) -> String {
    r.to_string()
}

pub fn spectrum_summary(spectrum: &Spectrum) -> SpectrumSummary {
    type Key = (usize, usize, usize, usize, Vec<Ratio<u64>>);
    let mut groups: BTreeMap<Key, (Option<Ratio<u64>>, usize, usize)> = BTreeMap::new();
    for c in &spectrum.cycles {
        let key = (c.m, c.m1, c.m2, c.period_half_steps, c.velocity_profile());
        let e = groups.entry(key).or_insert((c.mean_velocity, 0, 0));
        e.1 += 1;
        e.2 += c.period_half_steps;
    }
    let rows = groups
        .into_iter()
        .map(
            |((m, m1, m2, half, profile), (mean, cycles, states))| SummaryRow {
                m,
                m1,
                m2,
                period_half_steps: half,
                period_full_steps: half / 2,
                velocities: profile.iter().map(ratio_text).collect::<Vec<_>>().join(" "),
                mean_velocity: mean.as_ref().map(ratio_text).unwrap_or_else(|| "-".into()),
                cycles,
                states,
            },
        )
        .collect();
    SpectrumSummary {
        n1: spectrum.n1(),
        n2: spectrum.n2(),
        state_count: spectrum.state_count(),
        recurrent_count: spectrum.recurrent_count(),
        rows,
    }
}

/// Machine-readable spectrum file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumExport {
    pub schema_version: u32,
    pub n1: usize,
    pub n2: usize,
    pub state_count: u64,
    pub recurrent_count: u64,
    pub cycles: Vec<CycleRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleRecord {
    pub id: usize,
    pub period_half_steps: usize,
    pub period_full_steps: usize,
    pub m: usize,
    pub m1: usize,
    pub m2: usize,
    pub velocities: Vec<String>,
    pub mean_velocity: Option<String>,
    pub states: Vec<String>,
}

impl SpectrumExport {
    pub fn from_spectrum(spectrum: &Spectrum) -> Result<Self, AnalysisError> {
        let space = spectrum.space();
        let cycles = spectrum
            .cycles
            .iter()
            .map(|c| {
                let states = c
                    .states
                    .iter()
                    .map(|&i| space.decode(i).map(|s| s.canonical()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(CycleRecord {
                    id: c.id,
                    period_half_steps: c.period_half_steps,
                    period_full_steps: c.period_full_steps,
                    m: c.m,
                    m1: c.m1,
                    m2: c.m2,
                    velocities: c.velocities.iter().map(ratio_text).collect(),
                    mean_velocity: c.mean_velocity.as_ref().map(ratio_text),
                    states,
                })
            })
            .collect::<Result<Vec<_>, AnalysisError>>()?;
        Ok(Self {
            schema_version: 1,
            n1: spectrum.n1(),
            n2: spectrum.n2(),
            state_count: spectrum.state_count(),
            recurrent_count: spectrum.recurrent_count(),
            cycles,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("export serializes")
    }
}

/// Result of the injectivity test for the half-step map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceReport {
    pub all_recurrent: bool,
    /// States without a predecessor.
    pub unreached: u64,
    /// Up to [`RecurrenceReport::SAMPLE`] successors with several preimages,
    /// each listed with its preimages.
    pub collisions: Vec<(StateIndex, Vec<StateIndex>)>,
    pub collision_count: u64,
}

impl RecurrenceReport {
    pub const SAMPLE: usize = 64;
}

/// Every state is recurrent exactly when the half-step map is injective.
pub fn verify_recurrence(n1: usize, n2: usize) -> Result<RecurrenceReport, AnalysisError> {
    let space = StateSpace::new(n1, n2, DEFAULT_MAX_CELLS)?;
    let succ = successor_table(&space, None)?;
    let mut preimages = vec![0u32; succ.len()];
    for &s in &succ {
        preimages[s as usize] += 1;
    }
    let unreached = preimages.iter().filter(|&&c| c == 0).count() as u64;
    let collision_count = preimages.iter().filter(|&&c| c > 1).count() as u64;
    let mut collisions: BTreeMap<u32, Vec<StateIndex>> = BTreeMap::new();
    for (i, &s) in succ.iter().enumerate() {
        if preimages[s as usize] > 1
            && (collisions.len() < RecurrenceReport::SAMPLE || collisions.contains_key(&s))
        {
            collisions.entry(s).or_default().push(StateIndex(i as u64));
        }
    }
    Ok(RecurrenceReport {
        all_recurrent: unreached == 0,
        unreached,
        collisions: collisions
            .into_iter()
            .map(|(s, pre)| (StateIndex(u64::from(s)), pre))
            .collect(),
        collision_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_counts() {
        assert_eq!(enumerate_states(2, 2).unwrap().count(), 162);
        assert_eq!(enumerate_states(1, 1).unwrap().count(), 6);
        assert_eq!(enumerate_states(2, 3).unwrap().count(), 1458);
        assert!(enumerate_states(4, 5).is_err());
    }

    #[test]
    fn enumeration_is_ascending_and_bijective() {
        let space = StateSpace::new(2, 2, DEFAULT_MAX_CELLS).unwrap();
        for (k, s) in enumerate_states(2, 2).unwrap().enumerate() {
            assert_eq!(space.encode(&s), StateIndex(k as u64));
        }
        assert!(space.decode(StateIndex(162)).is_err());
    }

    #[test]
    fn functional_graph_with_tails() {
        // 0 -> 1 -> 2 -> 1, 3 -> 3, 4 -> 0
        let succ = [1, 2, 1, 3, 0];
        assert_eq!(functional_graph_cycles(&succ), vec![vec![1, 2], vec![3]]);
    }

    #[test]
    fn two_by_two_headlines() {
        let s = build_spectrum(2, 2).unwrap();
        assert_eq!(s.state_count(), 162);
        assert_eq!(s.recurrent_count(), 162);
        let empty = s.cycle_of(StateIndex(0)).unwrap();
        assert_eq!(empty.period_half_steps, 2);
        assert_eq!(empty.mean_velocity, None);
        let mixed: Vec<_> = s.cycles.iter().filter(|c| (c.m1, c.m2) == (1, 1)).collect();
        assert_eq!(mixed.len(), 4);
        for c in mixed {
            assert_eq!(c.period_half_steps, 6);
            assert!(c.velocities.iter().all(|v| *v == Ratio::new(2, 3)));
        }
    }

    #[test]
    fn recurrence_small() {
        assert!(verify_recurrence(2, 2).unwrap().all_recurrent);
        let r = verify_recurrence(1, 2).unwrap();
        assert_eq!(r.all_recurrent, r.collision_count == 0);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let a = build_spectrum_with(
            2,
            3,
            SpectrumOptions {
                workers: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let b = build_spectrum_with(
            2,
            3,
            SpectrumOptions {
                workers: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn summary_csv_has_header() {
        let csv = build_spectrum(1, 1).unwrap().summary().to_csv().unwrap();
        assert!(csv.starts_with("m,m1,m2,period_half_steps"));
    }
}
