//! Two-variable linear Diophantine equations and the delay witnesses built on them.
//!
//! A type-one particle at `(i1, j1)` reaches the column of a type-two particle
//! at `(i2, j2)` after `c1 = (j2 − j1) mod N2` moves, and the type-two particle
//! reaches the type-one particle's row after `c2 = (i1 − i2) mod N1` moves.
//! While both move freely they next collide when
//! `N2·x − N1·y = c` (the type-two particle is held up) or
//! `N2·x − N1·y = c + 1` (the type-one particle is held up), with
//! `c = c2 − c1`. When `gcd(N1, N2) ≤ 2` one of the two right-hand sides is
//! always divisible by the gcd, so two particles of different types cannot
//! both circulate forever.

use serde::{Deserialize, Serialize};

use crate::error::NumberError;
use crate::lattice::{Cell, Pos};

/// Greatest common divisor of two positive integers.
pub fn gcd(a: i64, b: i64) -> Result<i64, NumberError> {
    if a < 1 || b < 1 {
        return Err(NumberError::NonPositive(a, b));
    }
    Ok(gcd_unchecked(a, b))
}

fn gcd_unchecked(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Extended Euclid: `(g, x, y)` with `a·x + b·y = g = gcd(|a|, |b|)`.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

/// `a·x + b·y + c = 0` over the integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiophantineProblem {
    a: i64,
    b: i64,
    c: i64,
}

impl DiophantineProblem {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self, NumberError> {
        if a == 0 || b == 0 {
            return Err(NumberError::ZeroCoefficient);
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    /// Value of `a·x + b·y + c`.
    pub fn eval(&self, x: i64, y: i64) -> i128 {
        i128::from(self.a) * i128::from(x) + i128::from(self.b) * i128::from(y) + i128::from(self.c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiophantineSolution {
    pub problem: DiophantineProblem,
    pub gcd: i64,
    /// `(x0, y0)` when solvable; `x0` is the least non-negative choice.
    pub witness: Option<(i64, i64)>,
    /// `(−b, a)`: `(x0 − b·t, y0 + a·t)` solves the equation for every integer `t`.
    pub family_step: (i64, i64),
    /// `(−b/g, a/g)`: stepping by this reaches every solution.
    pub reduced_step: (i64, i64),
}

impl DiophantineSolution {
    pub fn is_solvable(&self) -> bool {
        self.witness.is_some()
    }

    /// Member `t` of the family `(x0 − b·t, y0 + a·t)`.
    pub fn family_member(&self, t: i64) -> Option<(i64, i64)> {
        self.witness
            .map(|(x0, y0)| (x0 + self.family_step.0 * t, y0 + self.family_step.1 * t))
    }
}

/// Decides solvability of `a·x + b·y + c = 0` and produces a witness.
///
/// Intermediate arithmetic is 128-bit; witnesses fit in `i64` whenever
/// `|a|`, `|b|` and `|c|` stay below `2^31`.
pub fn solve_diophantine(p: &DiophantineProblem) -> DiophantineSolution {
    let (a, b, c) = (i128::from(p.a), i128::from(p.b), i128::from(p.c));
    let (g, s, _) = ext_gcd(a, b);
    let step_x = -b / g;
    let step_y = a / g;
    let witness = (c % g == 0).then(|| {
        // a·x + b·y = −c
        let k = -c / g;
        let modulus = step_x.abs();
        let x0 = (s * k).rem_euclid(modulus);
        let y0 = (-c - a * x0) / b;
        debug_assert_eq!(a * x0 + b * y0 + c, 0);
        (
            i64::try_from(x0).expect("witness fits in i64"),
            i64::try_from(y0).expect("witness fits in i64"),
        )
    });
    DiophantineSolution {
        problem: *p,
        gcd: g as i64,
        witness,
        family_step: (-p.b, p.a),
        reduced_step: (step_x as i64, step_y as i64),
    }
}

/// Which meeting equation produced a witness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DelayEquation {
    /// `N2·x − N1·y = c`: the type-two particle is held up.
    TypeTwoHeld,
    /// `N2·x − N1·y = c + 1`: the type-one particle is held up.
    TypeOneHeld,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayWitness {
    pub equation: DelayEquation,
    pub x: u64,
    pub y: u64,
    pub delayed_type: Cell,
    /// `(j2 − j1) mod N2`: moves the type-one particle needs to reach column `j2`.
    pub col_offset: i64,
    /// `(i1 − i2) mod N1`: moves the type-two particle needs to reach row `i1`.
    pub row_offset: i64,
    /// `row_offset − col_offset`.
    pub c: i64,
    /// `col_offset + N2·x − 1`: the full step, counted from the observation
    /// time, during which the delayed particle fails to move, provided no
    /// earlier delay and no type switch intervenes.
    pub delay_offset: u64,
}

impl DelayWitness {
    pub fn delay_time(&self, t0: u64) -> u64 {
        t0 + self.delay_offset
    }
}

/// Least `x ≥ 0` (with `y ≥ 0` and `col_offset + n2·x ≥ 1`) solving
/// `n2·x − n1·y = rhs`.
fn least_nonnegative(n1: i64, n2: i64, col_offset: i64, rhs: i64) -> Option<(u64, u64)> {
    let problem = DiophantineProblem::new(n2, -n1, -rhs).ok()?;
    let sol = solve_diophantine(&problem);
    let (mut x, _) = sol.witness?;
    let step = sol.reduced_step.0;
    debug_assert!(step > 0);
    while n2 * x - rhs < 0 || col_offset + n2 * x < 1 {
        x += step;
    }
    Some((x as u64, ((n2 * x - rhs) / n1) as u64))
}

/// Builds the canonical delay witness for a type-one particle at `pos1` and a
/// type-two particle at `pos2` on an `n1 × n2` torus, if either equation has
/// a non-negative solution. The earlier delay wins, ties go to `TypeTwoHeld`.
///
/// On lattices with both sides at least 2, the witness's `delay_offset` is
/// exactly the first step at which the lone pair is held up. On a ring of
/// length one a particle blocks itself from the start.
pub fn find_delay_witness(
    n1: usize,
    n2: usize,
    pos1: Pos,
    pos2: Pos,
) -> Result<Option<DelayWitness>, NumberError> {
    for &(row, col) in &[pos1, pos2] {
        if row >= n1 || col >= n2 {
            return Err(NumberError::OutOfBounds {
                row,
                col,
                rows: n1,
                cols: n2,
            });
        }
    }
    let (rows, cols) = (n1 as i64, n2 as i64);
    let col_offset = (pos2.1 as i64 - pos1.1 as i64).rem_euclid(cols);
    let row_offset = (pos1.0 as i64 - pos2.0 as i64).rem_euclid(rows);
    let c = row_offset - col_offset;

    let candidates = [
        (DelayEquation::TypeTwoHeld, c, Cell::TypeTwo),
        (DelayEquation::TypeOneHeld, c + 1, Cell::TypeOne),
    ];
    let best = candidates
        .iter()
        .filter_map(|&(equation, rhs, delayed_type)| {
            least_nonnegative(rows, cols, col_offset, rhs).map(|(x, y)| DelayWitness {
                equation,
                x,
                y,
                delayed_type,
                col_offset,
                row_offset,
                c,
                delay_offset: (col_offset + cols * x as i64 - 1) as u64,
            })
        })
        // the first of equal keys (TypeTwoHeld) is kept
        .min_by_key(|w| w.delay_offset);
    Ok(best)
}

/// Outcome of the gcd test for free movement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GcdVerdict {
    /// `gcd(n1, n2) < 3` and either switching is on or both types are present.
    FreeMovementImpossible,
    /// The necessary condition holds; free movement may or may not exist.
    NecessaryConditionHolds,
}

/// Applies the gcd criterion. With switching on this assumes at least two
/// particles: a lone particle never meets anyone and always moves.
pub fn gcd_verdict(
    n1: usize,
    n2: usize,
    has_both_types: bool,
    q: f64,
) -> Result<GcdVerdict, NumberError> {
    let d = gcd(n1 as i64, n2 as i64)?;
    if d < 3 && (q > 0.0 || has_both_types) {
        Ok(GcdVerdict::FreeMovementImpossible)
    } else {
        Ok(GcdVerdict::NecessaryConditionHolds)
    }
}
