use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_bml::lattice::flip_types;
use torus_bml::{
    step_f, step_half, step_u, step_y, Cell, Configuration, ParticleLedger, Phase, SystemState,
};

/// Cell-by-cell half-step written from the neighbourhood rule alone: a cell
/// holding a mover empties when the cell ahead is empty, and an empty cell
/// fills when the cell behind holds a mover.
fn local_half_step(x: &Configuration, mover: Cell) -> Configuration {
    let (n1, n2) = (x.rows(), x.cols());
    let mut out = Configuration::new(n1, n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let (ahead, behind) = match mover {
                Cell::TypeOne => (x.get(i, (j + 1) % n2), x.get(i, (j + n2 - 1) % n2)),
                _ => (x.get((i + 1) % n1, j), x.get((i + n1 - 1) % n1, j)),
            };
            let here = x.get(i, j);
            let next = if here == mover && ahead == Cell::Empty {
                Cell::Empty
            } else if here == Cell::Empty && behind == mover {
                mover
            } else {
                here
            };
            out.set(i, j, next);
        }
    }
    out
}

/// Checks one half-step `before → after` moved only `mover` particles, each
/// by one cell into a cell that was empty, without two entering one cell.
fn check_half_step(
    before: &Configuration,
    after: &Configuration,
    mover: Cell,
) -> Result<(), String> {
    if before.counts() != after.counts() {
        return Err(format!(
            "counts changed: {:?} -> {:?}",
            before.counts(),
            after.counts()
        ));
    }
    let mut entered = vec![0u8; before.len()];
    for ((i, j), kind) in before.particles() {
        if after.get(i, j) == kind {
            continue;
        }
        if kind != mover {
            return Err(format!("non-mover at ({i},{j}) left its cell"));
        }
        let (fi, fj) = before.forward((i, j), kind);
        if before.get(fi, fj) != Cell::Empty {
            return Err(format!("({i},{j}) entered occupied ({fi},{fj})"));
        }
        if after.get(fi, fj) != kind {
            return Err(format!("({i},{j}) vanished"));
        }
        entered[fi * before.cols() + fj] += 1;
    }
    if let Some(k) = entered.iter().position(|&n| n > 1) {
        return Err(format!("cell {k} received {} particles", entered[k]));
    }
    let mut ledger = ParticleLedger::new(before);
    let phase = if mover == Cell::TypeOne {
        Phase::Row
    } else {
        Phase::Col
    };
    ledger
        .advance(before, after, phase)
        .map_err(|e| e.to_string())?;
    Ok(())
}

fn check_all(x: &Configuration) -> Result<(), String> {
    let u = step_u(x);
    let y = step_y(x);
    if u != local_half_step(x, Cell::TypeOne) {
        return Err("stepU differs from the local rule".into());
    }
    if y != local_half_step(x, Cell::TypeTwo) {
        return Err("stepY differs from the local rule".into());
    }
    check_half_step(x, &u, Cell::TypeOne)?;
    check_half_step(x, &y, Cell::TypeTwo)?;
    let f = step_f(x);
    check_half_step(&u, &f, Cell::TypeTwo)?;
    if f != step_y(&u) || f != step_f(&x.clone()) {
        return Err("stepF is not Y after U".into());
    }
    let row = SystemState::new(x.clone(), Phase::Row);
    let after_row = step_half(&row);
    if after_row.config != u || after_row.phase != Phase::Col || step_half(&after_row).config != f {
        return Err("half-step phases disagree with stepU/stepY".into());
    }
    for dr in 0..x.rows() {
        for dc in 0..x.cols() {
            if step_f(&x.shifted(dr, dc)) != f.shifted(dr, dc) {
                return Err(format!("shift ({dr},{dc}) does not commute with stepF"));
            }
        }
    }
    Ok(())
}

fn every_config(n1: usize, n2: usize) -> impl Iterator<Item = Configuration> {
    (0..3u64.pow((n1 * n2) as u32)).map(move |c| Configuration::from_code(n1, n2, c).unwrap())
}

#[test]
fn exhaustive_small_lattices() {
    for (n1, n2) in [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (2, 3), (3, 2)] {
        for x in every_config(n1, n2) {
            if let Err(e) = check_all(&x) {
                panic!("{n1}x{n2} {x:?}: {e}");
            }
        }
    }
}

#[test]
fn one_by_two_mutual_blockage() {
    let x: Configuration = "1 2\n11".parse().unwrap();
    assert_eq!(step_u(&x), x);
    let moved: Vec<_> = every_config(1, 2).filter(|x| step_u(x) != *x).collect();
    // only a lone type-one particle moves along the 2-ring
    assert_eq!(moved.len(), 2);
    assert!(moved.iter().all(|x| x.counts() == (1, 1, 0)));
}

fn config_strategy() -> impl Strategy<Value = Configuration> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(n1, n2)| {
        prop::collection::vec(0u8..3, n1 * n2).prop_map(move |digits| {
            let cells = digits
                .into_iter()
                .map(|d| Cell::from_digit(d).unwrap())
                .collect();
            Configuration::from_cells(n1, n2, cells).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn half_steps_are_legal(x in config_strategy()) {
        prop_assert_eq!(check_all(&x), Ok(()));
    }

    #[test]
    fn step_f_is_pure(x in config_strategy()) {
        prop_assert_eq!(step_f(&x), step_f(&x));
    }

    #[test]
    fn iterates_compose(x in config_strategy(), s in 0usize..12, t in 0usize..12) {
        let iterate = |c: &Configuration, k: usize| (0..k).fold(c.clone(), |c, _| step_f(&c));
        prop_assert_eq!(iterate(&x, s + t), iterate(&iterate(&x, t), s));
    }

    #[test]
    fn flips_keep_particle_count(x in config_strategy(), q in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draws = std::iter::repeat_with(|| rng.gen::<f64>());
        let y = flip_types(&x, q, &mut draws).unwrap();
        prop_assert_eq!(y.counts().0, x.counts().0);
        for (k, (a, b)) in x.cells().iter().zip(y.cells()).enumerate() {
            prop_assert!(a == b || (a.is_particle() && *b == a.toggled()), "cell {}", k);
        }
    }

    #[test]
    fn code_round_trips(x in config_strategy()) {
        prop_assume!(x.len() <= 40);
        let back = Configuration::from_code(x.rows(), x.cols(), x.code()).unwrap();
        prop_assert_eq!(back, x.clone());
        let text: Configuration = x.to_text().parse().unwrap();
        prop_assert_eq!(text, x);
    }
}

#[test]
fn flip_frequency_matches_q() {
    let x: Configuration = "1 1\n1".parse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 100_000;
    let mut flipped = 0u32;
    for _ in 0..trials {
        let mut draws = std::iter::repeat_with(|| rng.gen::<f64>());
        if flip_types(&x, 0.3, &mut draws).unwrap().get(0, 0) == Cell::TypeTwo {
            flipped += 1;
        }
    }
    let freq = f64::from(flipped) / f64::from(trials);
    assert!((freq - 0.3).abs() < 0.01, "observed {freq}");
}

#[test]
fn zero_q_never_flips() {
    let x: Configuration = "2 3\n12.\n.21".parse().unwrap();
    let mut draws = std::iter::repeat(0.0);
    assert_eq!(flip_types(&x, 0.0, &mut draws).unwrap(), x);
}
