//! Membership in the free-movement sets and the decision procedures built on it.
//!
//! A configuration is in `B` when every particle moves during the next full
//! step. A configuration is in `C` (free movement) when its trajectory stays
//! in `B` from some time on. Deterministically this means the limit cycle of
//! the full-step map lies in `B`. With type switching, the one-step relation
//! links a configuration to every result of moving and then switching some
//! subset of particles; free movement then means every configuration that can
//! still occur arbitrarily late is in `B`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::lattice::{step_f, step_u, step_y, Cell, Configuration, Phase, SystemState};

/// Size bounds for the exact procedures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest lattice (in cells) the deterministic classifier accepts.
    pub max_cells: usize,
    /// Largest lattice the reachability closure accepts.
    pub max_closure_cells: usize,
    /// Largest particle count for flip-subset enumeration.
    pub max_flip_particles: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_cells: 16,
            max_closure_cells: 9,
            max_flip_particles: 20,
        }
    }
}

/// Lattice sizes and particle counts the sets are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraSignature {
    pub n1: usize,
    pub n2: usize,
    pub m1: usize,
    pub m2: usize,
}

impl AlgebraSignature {
    pub fn of(config: &Configuration) -> Self {
        let (_, m1, m2) = config.counts();
        Self {
            n1: config.rows(),
            n2: config.cols(),
            m1,
            m2,
        }
    }

    pub fn total(&self) -> usize {
        self.m1 + self.m2
    }
}

/// `true` when every particle moves in the next full step: each type-one
/// particle has an empty cell to its right, and after the row half-step
/// each type-two particle has an empty cell below.
pub fn in_set_b(config: &Configuration) -> bool {
    let all_move = |c: &Configuration, kind: Cell| {
        c.particles().filter(|(_, k)| *k == kind).all(|(pos, _)| {
            let (fi, fj) = c.forward(pos, kind);
            c.get(fi, fj) == Cell::Empty
        })
    };
    all_move(config, Cell::TypeOne) && all_move(&step_u(config), Cell::TypeTwo)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    FreeMovement,
    Jam,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evidence {
    /// The limit cycle, starting at the configuration reached after `onset`
    /// full steps. Every entry is in `B`.
    FreeCycle(Vec<Configuration>),
    /// Every configuration that recurs in the switching dynamics; all in `B`.
    FreeClosure(Vec<Configuration>),
    /// A configuration the dynamics settles in where nothing moves.
    Fixed(Configuration),
    /// A recurring configuration outside `B`, and a path of one-step
    /// successors leading to it from the starting configuration.
    Delayed {
        config: Configuration,
        path: Vec<Configuration>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationVerdict {
    pub kind: VerdictKind,
    /// Full steps before the limit behaviour starts.
    pub onset: usize,
    /// Limit cycle length in full steps (deterministic) or the number of
    /// recurring configurations (switching dynamics).
    pub cycle_len: usize,
    pub evidence: Evidence,
}

fn check_cells(config: &Configuration, cap: usize) -> Result<(), AnalysisError> {
    if config.len() > cap {
        return Err(AnalysisError::CapExceeded {
            cells: config.len(),
            cap,
        });
    }
    Ok(())
}

/// Moves a column-phase state on to the next row phase.
fn anchor(state: &SystemState) -> Configuration {
    match state.phase {
        Phase::Row => state.config.clone(),
        Phase::Col => step_y(&state.config),
    }
}

pub fn classify_deterministic(state: &SystemState) -> Result<ClassificationVerdict, AnalysisError> {
    classify_deterministic_with(state, &Limits::default())
}

/// Follows the full-step map until it cycles and judges the limit cycle.
///
/// A column-phase state first finishes its column half-step; that half-step
/// belongs to the transient.
pub fn classify_deterministic_with(
    state: &SystemState,
    limits: &Limits,
) -> Result<ClassificationVerdict, AnalysisError> {
    check_cells(&state.config, limits.max_cells)?;
    let start = anchor(state);
    let (onset, cycle_len) = brent(&start, step_f);

    let mut path = Vec::with_capacity(onset + 1);
    let mut x = start;
    for _ in 0..onset {
        let next = step_f(&x);
        path.push(std::mem::replace(&mut x, next));
    }
    let mut cycle = Vec::with_capacity(cycle_len);
    for _ in 0..cycle_len {
        let next = step_f(&x);
        cycle.push(std::mem::replace(&mut x, next));
    }
    debug_assert_eq!(x, cycle[0]);

    let (kind, evidence) = match cycle.iter().position(|c| !in_set_b(c)) {
        None => (VerdictKind::FreeMovement, Evidence::FreeCycle(cycle)),
        Some(_) if cycle_len == 1 => (VerdictKind::Jam, Evidence::Fixed(cycle.swap_remove(0))),
        Some(k) => {
            path.extend(cycle[..k].iter().cloned());
            let config = cycle.swap_remove(k);
            (VerdictKind::Other, Evidence::Delayed { config, path })
        }
    };
    Ok(ClassificationVerdict {
        kind,
        onset,
        cycle_len,
        evidence,
    })
}

/// Brent's cycle finder: `(tail length, cycle length)` of the orbit of `x0`.
pub fn brent<T, F>(x0: &T, f: F) -> (usize, usize)
where
    T: Clone + PartialEq,
    F: Fn(&T) -> T,
{
    let mut power = 1usize;
    let mut lam = 1usize;
    let mut tortoise = x0.clone();
    let mut hare = f(x0);
    while tortoise != hare {
        if power == lam {
            tortoise = hare.clone();
            power *= 2;
            lam = 0;
        }
        hare = f(&hare);
        lam += 1;
    }
    let mut tortoise = x0.clone();
    let mut hare = x0.clone();
    for _ in 0..lam {
        hare = f(&hare);
    }
    let mut mu = 0usize;
    while tortoise != hare {
        tortoise = f(&tortoise);
        hare = f(&hare);
        mu += 1;
    }
    (mu, lam)
}

/// Which type switches the one-step relation allows after movement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipSupport {
    /// No particle ever switches (q = 0).
    Frozen,
    /// Any subset of particles may switch (0 < q < 1).
    AnySubset,
}

fn flip_images(moved: &Configuration, support: FlipSupport) -> Vec<Configuration> {
    match support {
        FlipSupport::Frozen => vec![moved.clone()],
        FlipSupport::AnySubset => {
            let slots: Vec<usize> = moved
                .cells()
                .iter()
                .enumerate()
                .filter_map(|(k, c)| c.is_particle().then_some(k))
                .collect();
            let mut out = Vec::with_capacity(1 << slots.len());
            for mask in 0u64..(1u64 << slots.len()) {
                let mut cells = moved.cells().to_vec();
                for (bit, &k) in slots.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        cells[k] = cells[k].toggled();
                    }
                }
                out.push(
                    Configuration::from_cells(moved.rows(), moved.cols(), cells)
                        .expect("same dimensions"),
                );
            }
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

pub fn successors_stochastic(state: &SystemState) -> Result<Vec<SystemState>, AnalysisError> {
    successors_with(state, FlipSupport::AnySubset, &Limits::default())
}

/// Every row-phase state reachable with positive probability in one full
/// step: movement, then any admissible set of type switches. Sorted.
pub fn successors_with(
    state: &SystemState,
    support: FlipSupport,
    limits: &Limits,
) -> Result<Vec<SystemState>, AnalysisError> {
    if state.phase != Phase::Row {
        return Err(crate::error::LatticeError::NotRowPhase.into());
    }
    let m = state.config.counts().0;
    if support == FlipSupport::AnySubset && m > limits.max_flip_particles {
        return Err(AnalysisError::TooManyParticles {
            particles: m,
            cap: limits.max_flip_particles,
        });
    }
    let moved = step_f(&state.config);
    Ok(flip_images(&moved, support)
        .into_iter()
        .map(|c| SystemState::new(c, Phase::Row))
        .collect())
}

pub fn classify_stochastic(state: &SystemState) -> Result<ClassificationVerdict, AnalysisError> {
    classify_reachable(state, FlipSupport::AnySubset, &Limits::default())
}

/// Reachability graph of the one-step relation from a start configuration.
struct Closure {
    nodes: Vec<Configuration>,
    edges: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
}

fn explore(start: &Configuration, support: FlipSupport) -> Closure {
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut nodes = vec![start.clone()];
    let mut parent = vec![None];
    let mut edges: Vec<Vec<usize>> = Vec::new();
    index.insert(start.code(), 0);
    let mut head = 0;
    while head < nodes.len() {
        let moved = step_f(&nodes[head]);
        let mut out = Vec::new();
        for next in flip_images(&moved, support) {
            let id = *index.entry(next.code()).or_insert_with(|| {
                nodes.push(next);
                parent.push(Some(head));
                nodes.len() - 1
            });
            out.push(id);
        }
        edges.push(out);
        head += 1;
    }
    Closure {
        nodes,
        edges,
        parent,
    }
}

/// Possibilistic free-movement test.
///
/// The configurations that can occur arbitrarily late are found by
/// repeatedly taking the image of the reachable set until it stops
/// shrinking. The state is free-moving when all of them are in `B`, and
/// jammed when that set is a single configuration where nothing moves.
/// With [`FlipSupport::Frozen`] this agrees with [`classify_deterministic`].
pub fn classify_reachable(
    state: &SystemState,
    support: FlipSupport,
    limits: &Limits,
) -> Result<ClassificationVerdict, AnalysisError> {
    check_cells(&state.config, limits.max_closure_cells)?;
    let m = state.config.counts().0;
    if support == FlipSupport::AnySubset && m > limits.max_flip_particles {
        return Err(AnalysisError::TooManyParticles {
            particles: m,
            cap: limits.max_flip_particles,
        });
    }
    let start = anchor(state);
    let closure = explore(&start, support);
    let n = closure.nodes.len();

    let mut live = vec![true; n];
    let mut live_count = n;
    let mut rounds = 0usize;
    loop {
        let mut image = vec![false; n];
        for (v, outs) in closure.edges.iter().enumerate() {
            if live[v] {
                for &w in outs {
                    image[w] = true;
                }
            }
        }
        let count = image.iter().filter(|b| **b).count();
        if count == live_count {
            break;
        }
        live = image;
        live_count = count;
        rounds += 1;
    }

    let recurring: Vec<usize> = (0..n).filter(|&v| live[v]).collect();
    let kind_and_evidence = match recurring.iter().find(|&&v| !in_set_b(&closure.nodes[v])) {
        None => {
            let mut configs: Vec<Configuration> = recurring
                .iter()
                .map(|&v| closure.nodes[v].clone())
                .collect();
            configs.sort_unstable();
            (VerdictKind::FreeMovement, Evidence::FreeClosure(configs))
        }
        Some(&v) => {
            let config = closure.nodes[v].clone();
            if recurring.len() == 1 && step_f(&config) == config {
                (VerdictKind::Jam, Evidence::Fixed(config))
            } else {
                let mut path = Vec::new();
                let mut cur = closure.parent[v];
                while let Some(p) = cur {
                    path.push(closure.nodes[p].clone());
                    cur = closure.parent[p];
                }
                path.reverse();
                (VerdictKind::Other, Evidence::Delayed { config, path })
            }
        }
    };
    let (kind, evidence) = kind_and_evidence;
    Ok(ClassificationVerdict {
        kind,
        onset: rounds,
        cycle_len: recurring.len(),
        evidence,
    })
}

/// Outcome of classifying every configuration of a lattice that passes a filter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepReport {
    pub checked: u64,
    /// Configurations classified as free movement.
    pub free: u64,
    /// The free configuration with the smallest code, if any.
    pub first_free: Option<Configuration>,
}

fn sweep<P, C>(
    n1: usize,
    n2: usize,
    cap: usize,
    keep: P,
    classify: C,
) -> Result<SweepReport, AnalysisError>
where
    P: Fn(&Configuration) -> bool + Sync,
    C: Fn(&SystemState) -> Result<ClassificationVerdict, AnalysisError> + Sync,
{
    let probe = Configuration::try_new(n1, n2)?;
    check_cells(&probe, cap)?;
    let total = 3u64.pow((n1 * n2) as u32);
    let per_code = |code: u64| -> Result<(u64, Option<u64>), AnalysisError> {
        let config = Configuration::from_code(n1, n2, code)?;
        if !keep(&config) {
            return Ok((0, None));
        }
        let v = classify(&SystemState::new(config, Phase::Row))?;
        Ok((1, (v.kind == VerdictKind::FreeMovement).then_some(code)))
    };
    let (checked, free, first) = (0..total)
        .into_par_iter()
        .map(|code| per_code(code).map(|(k, f)| (k, f.is_some() as u64, f)))
        .try_reduce(
            || (0, 0, None),
            |a, b| {
                let first = match (a.2, b.2) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
                Ok((a.0 + b.0, a.1 + b.1, first))
            },
        )?;
    Ok(SweepReport {
        checked,
        free,
        first_free: first
            .map(|c| Configuration::from_code(n1, n2, c))
            .transpose()?,
    })
}

/// Deterministic classification of every configuration accepted by `keep`.
pub fn sweep_deterministic<P>(n1: usize, n2: usize, keep: P) -> Result<SweepReport, AnalysisError>
where
    P: Fn(&Configuration) -> bool + Sync,
{
    let limits = Limits::default();
    sweep(n1, n2, limits.max_cells, keep, |s| {
        classify_deterministic_with(s, &limits)
    })
}

/// Possibilistic classification (any switch subset) of every configuration
/// accepted by `keep`.
pub fn sweep_stochastic<P>(n1: usize, n2: usize, keep: P) -> Result<SweepReport, AnalysisError>
where
    P: Fn(&Configuration) -> bool + Sync,
{
    let limits = Limits::default();
    sweep(n1, n2, limits.max_closure_cells, keep, |s| {
        classify_reachable(s, FlipSupport::AnySubset, &limits)
    })
}

/// Both particle types present.
pub fn is_mixed(config: &Configuration) -> bool {
    let (_, m1, m2) = config.counts();
    m1 > 0 && m2 > 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Configuration {
        s.parse().unwrap()
    }

    fn row(s: &str) -> SystemState {
        SystemState::new(parse(s), Phase::Row)
    }

    fn free_pair() -> SystemState {
        row("3 3\n1.2\n...\n...")
    }

    #[test]
    fn set_b_examples() {
        assert!(in_set_b(&Configuration::new(2, 2)));
        assert!(in_set_b(&free_pair().config));
        assert!(!in_set_b(&parse("2 2\n11\n..")));
        // type two blocked only after the row half-step
        assert!(!in_set_b(&parse("2 2\n1.\n.2")));
    }

    #[test]
    fn free_pair_is_free() {
        let v = classify_deterministic(&free_pair()).unwrap();
        assert_eq!(v.kind, VerdictKind::FreeMovement);
        assert_eq!((v.onset, v.cycle_len), (0, 3));
    }

    #[test]
    fn full_two_by_two_is_jam() {
        let v = classify_deterministic(&row("2 2\n11\n11")).unwrap();
        assert_eq!(v.kind, VerdictKind::Jam);
        assert_eq!(v.evidence, Evidence::Fixed(parse("2 2\n11\n11")));
    }

    #[test]
    fn mixed_pair_is_delayed() {
        let start = row("2 2\n1.\n.2");
        let v = classify_deterministic(&start).unwrap();
        assert_eq!(v.kind, VerdictKind::Other);
        match v.evidence {
            Evidence::Delayed { config, path } => {
                assert!(!in_set_b(&config));
                let mut x = start.config.clone();
                for p in &path {
                    assert_eq!(*p, x);
                    x = step_f(&x);
                }
                assert_eq!(x, config);
            }
            other => panic!("unexpected evidence {other:?}"),
        }
    }

    #[test]
    fn column_phase_input_is_anchored() {
        let s = SystemState::new(parse("3 3\n...\n...\n..2"), Phase::Col);
        let v = classify_deterministic(&s).unwrap();
        assert_eq!(v.kind, VerdictKind::FreeMovement);
    }

    #[test]
    fn cap_is_enforced() {
        let s = row("4 5\n.....\n.....\n.....\n.....");
        assert!(matches!(
            classify_deterministic(&s),
            Err(AnalysisError::CapExceeded { cells: 20, cap: 16 })
        ));
        assert!(classify_stochastic(&row("2 5\n.....\n.....")).is_err());
    }

    #[test]
    fn brent_finds_tail_and_cycle() {
        // 0 -> 1 -> 2 -> 3 -> 4 -> 2
        let f = |x: &u32| if *x < 4 { x + 1 } else { 2 };
        assert_eq!(brent(&0, f), (2, 3));
        assert_eq!(brent(&3, f), (0, 3));
    }

    #[test]
    fn successor_counts() {
        let empty = row("2 2\n..\n..");
        assert_eq!(successors_stochastic(&empty).unwrap(), vec![empty.clone()]);
        let one = row("2 2\n1.\n..");
        let s = successors_stochastic(&one).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.contains(&row("2 2\n.1\n..")));
        assert!(s.contains(&row("2 2\n.2\n..")));
        let two = row("2 2\n1.\n.2");
        assert_eq!(successors_stochastic(&two).unwrap().len(), 4);
        let col = SystemState::new(parse("2 2\n1.\n.2"), Phase::Col);
        assert!(successors_stochastic(&col).is_err());
    }

    #[test]
    fn stochastic_verdicts() {
        let v = classify_stochastic(&row("2 2\n..\n..")).unwrap();
        assert_eq!(v.kind, VerdictKind::FreeMovement);
        let v = classify_stochastic(&row("2 2\n12\n..")).unwrap();
        assert_ne!(v.kind, VerdictKind::FreeMovement);
        // a lone particle always has an empty cell ahead
        let v = classify_stochastic(&row("3 3\n1..\n...\n...")).unwrap();
        assert_eq!(v.kind, VerdictKind::FreeMovement);
    }

    #[test]
    fn sweeps_on_two_by_two() {
        let r = sweep_deterministic(2, 2, is_mixed).unwrap();
        assert_eq!((r.checked, r.free), (50, 0));
        let r = sweep_stochastic(2, 2, |c| c.counts().0 >= 2).unwrap();
        assert_eq!(r.free, 0);
        let r = sweep_deterministic(3, 3, is_mixed).unwrap();
        assert!(r.free > 0);
        let first = SystemState::new(r.first_free.unwrap(), Phase::Row);
        assert_eq!(
            classify_deterministic(&first).unwrap().kind,
            VerdictKind::FreeMovement
        );
    }

    #[test]
    fn frozen_closure_matches_trajectory_on_small_lattices() {
        for (n1, n2) in [(2usize, 2usize), (2, 3), (3, 2)] {
            for code in 0..3u64.pow((n1 * n2) as u32) {
                let s =
                    SystemState::new(Configuration::from_code(n1, n2, code).unwrap(), Phase::Row);
                let a = classify_deterministic(&s).unwrap();
                let b = classify_reachable(&s, FlipSupport::Frozen, &Limits::default()).unwrap();
                assert_eq!(a.kind, b.kind, "{:?}", s.config);
                assert_eq!(a.cycle_len, b.cycle_len);
            }
        }
    }
}
