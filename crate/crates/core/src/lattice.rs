//! Configurations on the `rows × cols` torus and the synchronous dynamics.
//!
//! Type-one particles move along their row towards increasing column index,
//! type-two particles along their column towards increasing row index; both
//! wrap around. A full time step is the row half-step followed by the column
//! half-step, after which every particle may switch type.
//!
//! Degenerate rings are allowed: on a row of length one (or a column of
//! length one) a particle's forward cell is its own cell, which it occupies,
//! so it never moves.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, LedgerError};

/// Contents of a single lattice cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Cell {
    Empty = 0,
    TypeOne = 1,
    TypeTwo = 2,
}

impl Cell {
    pub const ALL: [Cell; 3] = [Cell::Empty, Cell::TypeOne, Cell::TypeTwo];

    #[inline]
    pub fn digit(self) -> u8 {
        self as u8
    }

    pub fn from_digit(d: u8) -> Option<Cell> {
        match d {
            0 => Some(Cell::Empty),
            1 => Some(Cell::TypeOne),
            2 => Some(Cell::TypeTwo),
            _ => None,
        }
    }

    /// The other particle type; `Empty` stays `Empty`.
    #[inline]
    pub fn toggled(self) -> Cell {
        match self {
            Cell::Empty => Cell::Empty,
            Cell::TypeOne => Cell::TypeTwo,
            Cell::TypeTwo => Cell::TypeOne,
        }
    }

    #[inline]
    pub fn is_particle(self) -> bool {
        self != Cell::Empty
    }

    fn text_char(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::TypeOne => '1',
            Cell::TypeTwo => '2',
        }
    }

    /// Rendering glyph pointing in the direction of motion.
    pub fn arrow(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::TypeOne => '>',
            Cell::TypeTwo => 'v',
        }
    }
}

/// Which particle type moves in the next half-step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    /// Type-one particles move along rows.
    Row = 1,
    /// Type-two particles move along columns.
    Col = 2,
}

impl Phase {
    pub fn toggled(self) -> Phase {
        match self {
            Phase::Row => Phase::Col,
            Phase::Col => Phase::Row,
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    /// The particle type that moves in this phase.
    pub fn mover(self) -> Cell {
        match self {
            Phase::Row => Cell::TypeOne,
            Phase::Col => Cell::TypeTwo,
        }
    }
}

/// A lattice position as `(row, col)`, 0-based.
pub type Pos = (usize, usize);

/// Occupancy of the whole torus.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,
}

impl Configuration {
    /// An empty lattice. Panics on a zero dimension; use [`Configuration::try_new`]
    /// for untrusted input.
    pub fn new(rows: usize, cols: usize) -> Self {
        Self::try_new(rows, cols).expect("lattice dimensions must be positive")
    }

    pub fn try_new(rows: usize, cols: usize) -> Result<Self, LatticeError> {
        if rows == 0 || cols == 0 {
            return Err(LatticeError::ZeroDimension { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            cells: vec![Cell::Empty; rows * cols],
        })
    }

    pub fn from_cells(rows: usize, cols: usize, cells: Vec<Cell>) -> Result<Self, LatticeError> {
        let mut config = Self::try_new(rows, cols)?;
        if cells.len() != rows * cols {
            return Err(LatticeError::CellCount {
                expected: rows * cols,
                found: cells.len(),
            });
        }
        config.cells = cells;
        Ok(config)
    }

    /// Builds a lattice holding the listed particles.
    pub fn with_particles(
        rows: usize,
        cols: usize,
        particles: &[(Pos, Cell)],
    ) -> Result<Self, LatticeError> {
        let mut config = Self::try_new(rows, cols)?;
        for &((i, j), kind) in particles {
            config.check_pos((i, j))?;
            if config.get(i, j) != Cell::Empty {
                return Err(LatticeError::Occupied { row: i, col: j });
            }
            config.set(i, j, kind);
        }
        Ok(config)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|c| *c == Cell::Empty)
    }

    #[inline]
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        self.cells[row * self.cols + col] = cell;
    }

    pub fn check_pos(&self, (row, col): Pos) -> Result<(), LatticeError> {
        if row >= self.rows || col >= self.cols {
            return Err(LatticeError::OutOfBounds {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    /// Cell a particle of type `kind` at `pos` would move into.
    #[inline]
    pub fn forward(&self, (row, col): Pos, kind: Cell) -> Pos {
        match kind {
            Cell::TypeOne => (row, (col + 1) % self.cols),
            Cell::TypeTwo => ((row + 1) % self.rows, col),
            Cell::Empty => (row, col),
        }
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.cells.iter().filter(|c| **c == kind).count()
    }

    /// `(m, m1, m2)`: total particles and per-type counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let m1 = self.count(Cell::TypeOne);
        let m2 = self.count(Cell::TypeTwo);
        (m1 + m2, m1, m2)
    }

    /// Occupied cells in row-major order.
    pub fn particles(&self) -> impl Iterator<Item = (Pos, Cell)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(k, c)| {
            c.is_particle()
                .then_some(((k / self.cols, k % self.cols), *c))
        })
    }

    /// Base-3 code of the cells, row-major with cell (0,0) most significant.
    pub fn code(&self) -> u64 {
        self.cells
            .iter()
            .fold(0u64, |acc, c| acc * 3 + u64::from(c.digit()))
    }

    pub fn from_code(rows: usize, cols: usize, mut code: u64) -> Result<Self, LatticeError> {
        let mut config = Self::try_new(rows, cols)?;
        for k in (0..config.cells.len()).rev() {
            config.cells[k] = Cell::from_digit((code % 3) as u8).expect("digit below 3");
            code /= 3;
        }
        if code != 0 {
            return Err(LatticeError::CodeRange);
        }
        Ok(config)
    }

    /// Shifts the whole pattern down by `dr` rows and right by `dc` columns.
    pub fn shifted(&self, dr: usize, dc: usize) -> Self {
        let mut out = Self::new(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set((i + dr) % self.rows, (j + dc) % self.cols, self.get(i, j));
            }
        }
        out
    }

    /// ASCII picture using `.`, `>` and `v`, row 0 first.
    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.rows * (self.cols + 1));
        for row in self.cells.chunks(self.cols) {
            s.extend(row.iter().map(|c| c.arrow()));
            s.push('\n');
        }
        s
    }

    /// Text file form: a `rows cols` header, then one line per row of `.`, `1`, `2`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for row in self.cells.chunks(self.cols) {
            let line: String = row.iter().map(|c| c.text_char()).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .cells
            .chunks(self.cols)
            .map(|r| r.iter().map(|c| c.text_char()).collect())
            .collect();
        write!(f, "Configuration[{}]", rows.join("/"))
    }
}

impl FromStr for Configuration {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut lines = s
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(LatticeError::Parse {
            line: 1,
            msg: "missing \"N1 N2\" header".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |t: &str| {
            t.parse::<usize>().map_err(|_| LatticeError::Parse {
                line: 1,
                msg: format!("bad dimension {t:?}"),
            })
        };
        if dims.len() != 2 {
            return Err(LatticeError::Parse {
                line: 1,
                msg: "header must contain exactly two integers".into(),
            });
        }
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;
        let mut config = Self::try_new(rows, cols)?;
        for i in 0..rows {
            let line = lines.next().ok_or(LatticeError::Parse {
                line: i + 2,
                msg: format!("expected {rows} rows"),
            })?;
            let chars: Vec<char> = line.trim().chars().collect();
            if chars.len() != cols {
                return Err(LatticeError::Parse {
                    line: i + 2,
                    msg: format!("expected {cols} cells, found {}", chars.len()),
                });
            }
            for (j, ch) in chars.into_iter().enumerate() {
                let cell = match ch {
                    '.' | '0' => Cell::Empty,
                    '1' => Cell::TypeOne,
                    '2' => Cell::TypeTwo,
                    other => {
                        return Err(LatticeError::Parse {
                            line: i + 2,
                            msg: format!("unexpected character {other:?}"),
                        })
                    }
                };
                config.set(i, j, cell);
            }
        }
        if let Some(extra) = lines.next() {
            return Err(LatticeError::Parse {
                line: rows + 2,
                msg: format!("trailing content {extra:?}"),
            });
        }
        Ok(config)
    }
}

/// A configuration together with the type that moves next.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub config: Configuration,
    pub phase: Phase,
}

impl SystemState {
    pub fn new(config: Configuration, phase: Phase) -> Self {
        Self { config, phase }
    }

    /// Tuple form `(m,m1,m2;x11,x12,...;s)` with cells listed row-major.
    pub fn canonical(&self) -> String {
        let (m, m1, m2) = self.config.counts();
        let cells: Vec<String> = self
            .config
            .cells()
            .iter()
            .map(|c| c.digit().to_string())
            .collect();
        format!(
            "({m},{m1},{m2};{};{})",
            cells.join(","),
            self.phase.number()
        )
    }
}

/// Moves every particle of type `kind` one cell forward when that cell is empty.
fn advance_type(config: &Configuration, kind: Cell) -> Configuration {
    let mut out = config.clone();
    for i in 0..config.rows {
        for j in 0..config.cols {
            if config.get(i, j) != kind {
                continue;
            }
            let (fi, fj) = config.forward((i, j), kind);
            if config.get(fi, fj) == Cell::Empty {
                out.set(i, j, Cell::Empty);
                out.set(fi, fj, kind);
            }
        }
    }
    out
}

/// Row half-step: type-one particles move right when the cell ahead is empty.
pub fn step_u(config: &Configuration) -> Configuration {
    advance_type(config, Cell::TypeOne)
}

/// Column half-step: type-two particles move from row `i` to `i + 1` when that cell is empty.
pub fn step_y(config: &Configuration) -> Configuration {
    advance_type(config, Cell::TypeTwo)
}

/// One deterministic full step: row half-step, then column half-step.
pub fn step_f(config: &Configuration) -> Configuration {
    step_y(&step_u(config))
}

/// Applies the half-step of the current phase and hands the turn to the other type.
pub fn step_half(state: &SystemState) -> SystemState {
    let config = match state.phase {
        Phase::Row => step_u(&state.config),
        Phase::Col => step_y(&state.config),
    };
    SystemState::new(config, state.phase.toggled())
}

/// Type-switching probability and the seed the draws come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlipParams {
    q: f64,
    seed: u64,
}

impl FlipParams {
    pub fn new(q: f64, seed: u64) -> Result<Self, LatticeError> {
        if !(0.0..1.0).contains(&q) {
            return Err(LatticeError::Probability(q));
        }
        Ok(Self { q, seed })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The draw stream the seed denotes.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Toggles each particle's type when its draw falls below `q`.
///
/// One draw is consumed per particle in row-major order, whatever the value
/// of `q`. Fails if the draw sequence runs dry.
pub fn flip_types<I>(
    config: &Configuration,
    q: f64,
    draws: &mut I,
) -> Result<Configuration, LatticeError>
where
    I: Iterator<Item = f64>,
{
    if !(0.0..1.0).contains(&q) {
        return Err(LatticeError::Probability(q));
    }
    let mut out = config.clone();
    for cell in out.cells.iter_mut().filter(|c| c.is_particle()) {
        let u = draws.next().ok_or(LatticeError::DrawsExhausted)?;
        if u < q {
            *cell = cell.toggled();
        }
    }
    Ok(out)
}

/// Seeded stochastic driver for full time steps.
#[derive(Clone, Debug)]
pub struct FlipProcess {
    q: f64,
    rng: ChaCha8Rng,
}

impl FlipProcess {
    pub fn new(params: FlipParams) -> Self {
        Self {
            q: params.q,
            rng: params.rng(),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Moves both types, then applies the type switches. Only accepts
    /// row-phase states, since full steps are anchored there.
    pub fn full_step(&mut self, state: &SystemState) -> Result<SystemState, LatticeError> {
        let moved = full_step_moves(state)?;
        let flipped = self.flip(&moved)?;
        Ok(SystemState::new(flipped, Phase::Row))
    }

    pub fn flip(&mut self, config: &Configuration) -> Result<Configuration, LatticeError> {
        let rng = &mut self.rng;
        let mut draws = std::iter::repeat_with(|| rng.gen::<f64>());
        flip_types(config, self.q, &mut draws)
    }
}

fn full_step_moves(state: &SystemState) -> Result<Configuration, LatticeError> {
    if state.phase != Phase::Row {
        return Err(LatticeError::NotRowPhase);
    }
    Ok(step_f(&state.config))
}

/// One stochastic full step drawing from the supplied stream.
pub fn full_stochastic_step<I>(
    state: &SystemState,
    q: f64,
    draws: &mut I,
) -> Result<SystemState, LatticeError>
where
    I: Iterator<Item = f64>,
{
    let moved = full_step_moves(state)?;
    Ok(SystemState::new(flip_types(&moved, q, draws)?, Phase::Row))
}

/// A tracked particle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Particle {
    pub id: usize,
    pub pos: Pos,
    pub kind: Cell,
    pub moves: u64,
}

/// Identity and move counts for every particle on the lattice.
///
/// Ids are assigned in row-major order of the configuration the ledger was
/// created from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticleLedger {
    rows: usize,
    cols: usize,
    particles: Vec<Particle>,
}

impl ParticleLedger {
    pub fn new(config: &Configuration) -> Self {
        let particles = config
            .particles()
            .enumerate()
            .map(|(id, (pos, kind))| Particle {
                id,
                pos,
                kind,
                moves: 0,
            })
            .collect();
        Self {
            rows: config.rows(),
            cols: config.cols(),
            particles,
        }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn moves(&self) -> Vec<u64> {
        self.particles.iter().map(|p| p.moves).collect()
    }

    pub fn total_moves(&self) -> u64 {
        self.particles.iter().map(|p| p.moves).sum()
    }

    /// Rebuilds the configuration the ledger describes.
    pub fn to_configuration(&self) -> Configuration {
        let mut config = Configuration::new(self.rows, self.cols);
        for p in &self.particles {
            config.set(p.pos.0, p.pos.1, p.kind);
        }
        config
    }

    /// Records the half-step `before → after` taken in `phase`.
    ///
    /// A moving particle vacates its cell and no particle enters an occupied
    /// cell, so a particle moved exactly when its cell is empty afterwards.
    pub fn advance(
        &mut self,
        before: &Configuration,
        after: &Configuration,
        phase: Phase,
    ) -> Result<(), LedgerError> {
        if (before.rows(), before.cols()) != (self.rows, self.cols)
            || (after.rows(), after.cols()) != (self.rows, self.cols)
        {
            return Err(LedgerError::Dimensions);
        }
        if self.to_configuration() != *before {
            return Err(LedgerError::OutOfSync);
        }
        let mover = phase.mover();
        let mut next = self.particles.clone();
        for p in next.iter_mut() {
            let (i, j) = p.pos;
            if after.get(i, j) == p.kind {
                continue;
            }
            if p.kind != mover || after.get(i, j) != Cell::Empty {
                return Err(LedgerError::IllegalMove { row: i, col: j });
            }
            let (fi, fj) = before.forward(p.pos, p.kind);
            if before.get(fi, fj) != Cell::Empty || after.get(fi, fj) != p.kind {
                return Err(LedgerError::IllegalMove { row: i, col: j });
            }
            p.pos = (fi, fj);
            p.moves += 1;
        }
        let rebuilt = {
            let mut c = Configuration::new(self.rows, self.cols);
            for p in &next {
                if c.get(p.pos.0, p.pos.1) != Cell::Empty {
                    return Err(LedgerError::Collision {
                        row: p.pos.0,
                        col: p.pos.1,
                    });
                }
                c.set(p.pos.0, p.pos.1, p.kind);
            }
            c
        };
        if rebuilt != *after {
            return Err(LedgerError::Mismatch);
        }
        self.particles = next;
        Ok(())
    }

    /// Takes over the particle types of `config`; positions must already agree.
    pub fn sync_types(&mut self, config: &Configuration) -> Result<(), LedgerError> {
        for p in self.particles.iter_mut() {
            let cell = config.get(p.pos.0, p.pos.1);
            if !cell.is_particle() {
                return Err(LedgerError::OutOfSync);
            }
            p.kind = cell;
        }
        if config.counts().0 != self.particles.len() {
            return Err(LedgerError::OutOfSync);
        }
        Ok(())
    }
}
