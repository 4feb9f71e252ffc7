//! Lattice geometry, bit-packed occupation storage and free streaming.
//!
//! Sites live in a `width × height` rectangular array with periodic wrap in
//! both axes. The hexagonal lattice uses the offset ("brick-wall") embedding:
//! odd rows are shifted half a spacing to the right, so a site `(x, y)` sits
//! at physical position `(x + (y mod 2)/2, y·√3/2)`. The embedding only closes
//! periodically when `height` is even.
//!
//! Each site stores one byte; bit `i` is the occupation number of direction
//! `i`. Directions are 0-based in code: on the hexagonal lattice bit 0 points
//! along `+x` and indices increase counter-clockwise in 60° steps; on the
//! square lattice the order is E, N, W, S.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice dimensions must be positive (got {width}x{height})")]
    EmptyLattice { width: usize, height: usize },
    #[error("hexagonal lattice needs an even height for periodic wrap (got {0})")]
    OddHexHeight(usize),
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell {index} has bits outside the {z} lattice directions (mask {mask:#04x})")]
    InvalidMask { index: usize, mask: u8, z: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatticeKind {
    /// Square lattice, four directions (HPP).
    Square4,
    /// Hexagonal lattice, six directions (FHP).
    Hex6,
}

impl LatticeKind {
    /// Number of lattice directions.
    pub const fn z(self) -> usize {
        match self {
            LatticeKind::Square4 => 4,
            LatticeKind::Hex6 => 6,
        }
    }

    /// Spatial dimension; always two here.
    pub const fn d(self) -> usize {
        2
    }

    /// Mask with all `z` direction bits set.
    pub const fn full_mask(self) -> u8 {
        ((1u16 << self.z()) - 1) as u8
    }

    pub fn directions(self) -> impl Iterator<Item = Direction> {
        (0..self.z()).map(move |i| Direction { kind: self, index: i as u8 })
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Square4 => f.write_str("square4"),
            LatticeKind::Hex6 => f.write_str("hex6"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Periodic,
}

/// A vector in the lattice's integer momentum basis.
///
/// Square lattice: plain unit components. Hexagonal lattice: `x` counts
/// halves and `y` counts multiples of `√3/2`, so every hexagonal velocity has
/// integer coordinates and momentum sums are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ExactVector {
    pub x: i64,
    pub y: i64,
}

impl ExactVector {
    pub const ZERO: ExactVector = ExactVector { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    /// Physical components for a given lattice.
    pub fn to_physical<T: Real>(self, kind: LatticeKind) -> [T; 2] {
        match kind {
            LatticeKind::Square4 => [T::lit(self.x as f64), T::lit(self.y as f64)],
            LatticeKind::Hex6 => [
                T::lit(self.x as f64) * T::lit(0.5),
                T::lit(self.y as f64) * T::lit(3f64.sqrt() / 2.0),
            ],
        }
    }
}

impl Add for ExactVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for ExactVector {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for ExactVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for ExactVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl std::iter::Sum for ExactVector {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

const HEX_EXACT: [ExactVector; 6] = [
    ExactVector::new(2, 0),
    ExactVector::new(1, 1),
    ExactVector::new(-1, 1),
    ExactVector::new(-2, 0),
    ExactVector::new(-1, -1),
    ExactVector::new(1, -1),
];

const SQUARE_EXACT: [ExactVector; 4] = [
    ExactVector::new(1, 0),
    ExactVector::new(0, 1),
    ExactVector::new(-1, 0),
    ExactVector::new(0, -1),
];

/// One of the `z` lattice directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    kind: LatticeKind,
    index: u8,
}

impl Direction {
    pub fn new(kind: LatticeKind, index: usize) -> Option<Self> {
        (index < kind.z()).then_some(Self { kind, index: index as u8 })
    }

    pub fn kind(self) -> LatticeKind {
        self.kind
    }

    /// 0-based index, equal to the bit position in a site mask.
    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn bit(self) -> u8 {
        1 << self.index
    }

    pub fn opposite(self) -> Self {
        self.rotate(self.kind.z() as i32 / 2)
    }

    /// Rotate counter-clockwise by `steps` lattice angles.
    pub fn rotate(self, steps: i32) -> Self {
        let z = self.kind.z() as i32;
        let index = (self.index as i32 + steps).rem_euclid(z) as u8;
        Self { kind: self.kind, index }
    }

    /// Velocity in the integer momentum basis (see [`ExactVector`]).
    pub fn exact_velocity(self) -> ExactVector {
        match self.kind {
            LatticeKind::Square4 => SQUARE_EXACT[self.index()],
            LatticeKind::Hex6 => HEX_EXACT[self.index()],
        }
    }

    /// Unit vector `c_i`.
    pub fn unit_vector<T: Real>(self) -> [T; 2] {
        self.exact_velocity().to_physical(self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Topology {
    kind: LatticeKind,
    width: usize,
    height: usize,
    boundary: Boundary,
}

impl Topology {
    pub fn new(kind: LatticeKind, width: usize, height: usize) -> Result<Self, LatticeError> {
        if width == 0 || height == 0 {
            return Err(LatticeError::EmptyLattice { width, height });
        }
        if kind == LatticeKind::Hex6 && !height.is_multiple_of(2) {
            return Err(LatticeError::OddHexHeight(height));
        }
        Ok(Self { kind, width, height, boundary: Boundary::Periodic })
    }

    pub fn square(width: usize, height: usize) -> Result<Self, LatticeError> {
        Self::new(LatticeKind::Square4, width, height)
    }

    pub fn hex(width: usize, height: usize) -> Result<Self, LatticeError> {
        Self::new(LatticeKind::Hex6, width, height)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn z(&self) -> usize {
        self.kind.z()
    }

    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, site: Site) -> usize {
        site.y * self.width + site.x
    }

    pub fn site(&self, index: usize) -> Site {
        Site::new(index % self.width, index / self.width)
    }

    pub fn direction(&self, index: usize) -> Option<Direction> {
        Direction::new(self.kind, index)
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> {
        self.kind.directions()
    }

    /// Offset `(dx, dy)` in array coordinates of the move along `dir` that
    /// starts on row `y`.
    fn offset(&self, y: usize, dir: Direction) -> (isize, isize) {
        match self.kind {
            LatticeKind::Square4 => match dir.index {
                0 => (1, 0),
                1 => (0, 1),
                2 => (-1, 0),
                _ => (0, -1),
            },
            LatticeKind::Hex6 => {
                let odd = (y % 2) as isize;
                match dir.index {
                    0 => (1, 0),
                    1 => (odd, 1),
                    2 => (odd - 1, 1),
                    3 => (-1, 0),
                    4 => (odd - 1, -1),
                    _ => (odd, -1),
                }
            }
        }
    }

    /// The site one lattice spacing away along `dir`, wrapped periodically.
    pub fn neighbor(&self, site: Site, dir: Direction) -> Site {
        debug_assert!(site.x < self.width && site.y < self.height);
        let (dx, dy) = self.offset(site.y, dir);
        Site::new(wrap(site.x, dx, self.width), wrap(site.y, dy, self.height))
    }

    /// Physical position of a site in units of the lattice spacing.
    pub fn position<T: Real>(&self, site: Site) -> [T; 2] {
        match self.kind {
            LatticeKind::Square4 => [T::count(site.x), T::count(site.y)],
            LatticeKind::Hex6 => [
                T::count(site.x) + T::lit(0.5 * (site.y % 2) as f64),
                T::count(site.y) * T::lit(3f64.sqrt() / 2.0),
            ],
        }
    }

    /// Physical extent of the lattice along `y`, in lattice spacings.
    pub fn physical_height<T: Real>(&self) -> T {
        match self.kind {
            LatticeKind::Square4 => T::count(self.height),
            LatticeKind::Hex6 => T::count(self.height) * T::lit(3f64.sqrt() / 2.0),
        }
    }
}

#[inline]
fn wrap(v: usize, d: isize, n: usize) -> usize {
    (v as isize + d).rem_euclid(n as isize) as usize
}

/// Time step and lattice spacing; particle speed is `v = Δr/Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitsConfig<T> {
    delta_t: T,
    delta_r: T,
}

impl<T: Real> UnitsConfig<T> {
    /// Returns `None` unless both values are positive and finite.
    pub fn new(delta_t: T, delta_r: T) -> Option<Self> {
        let ok = |v: T| v.is_finite() && v > T::zero();
        (ok(delta_t) && ok(delta_r)).then_some(Self { delta_t, delta_r })
    }

    pub fn delta_t(&self) -> T {
        self.delta_t
    }

    pub fn delta_r(&self) -> T {
        self.delta_r
    }

    pub fn speed(&self) -> T {
        self.delta_r / self.delta_t
    }
}

impl<T: Real> Default for UnitsConfig<T> {
    fn default() -> Self {
        Self { delta_t: T::one(), delta_r: T::one() }
    }
}

/// Occupation numbers of every `(site, direction)` pair at one time step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeState {
    topology: Topology,
    cells: Vec<u8>,
    time: u64,
}

impl LatticeState {
    pub fn empty(topology: Topology) -> Self {
        Self { cells: vec![0; topology.sites()], topology, time: 0 }
    }

    pub fn full(topology: Topology) -> Self {
        Self { cells: vec![topology.kind.full_mask(); topology.sites()], topology, time: 0 }
    }

    pub fn from_cells(topology: Topology, cells: Vec<u8>, time: u64) -> Result<Self, LatticeError> {
        if cells.len() != topology.sites() {
            return Err(LatticeError::CellCount { expected: topology.sites(), got: cells.len() });
        }
        let full = topology.kind.full_mask();
        if let Some((index, &mask)) = cells.iter().enumerate().find(|(_, &m)| m & !full != 0) {
            return Err(LatticeError::InvalidMask { index, mask, z: topology.z() });
        }
        Ok(Self { topology, cells, time })
    }

    /// Build from a per-site mask function. Bits above `z` are discarded.
    pub fn from_fn(topology: Topology, mut f: impl FnMut(Site) -> u8) -> Self {
        let full = topology.kind.full_mask();
        let cells = (0..topology.sites()).map(|i| f(topology.site(i)) & full).collect();
        Self { topology, cells, time: 0 }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn with_time(mut self, time: u64) -> Self {
        self.time = time;
        self
    }

    pub fn get(&self, site: Site) -> u8 {
        self.cells[self.topology.index(site)]
    }

    pub fn occupied(&self, site: Site, dir: Direction) -> bool {
        self.get(site) & dir.bit() != 0
    }

    pub fn set(&mut self, site: Site, mask: u8) {
        let i = self.topology.index(site);
        self.cells[i] = mask & self.topology.kind.full_mask();
    }

    pub fn insert(&mut self, site: Site, dir: Direction) {
        let i = self.topology.index(site);
        self.cells[i] |= dir.bit();
    }

    /// Total particle count.
    pub fn mass(&self) -> u64 {
        self.cells.iter().map(|&c| u64::from(c.count_ones())).sum()
    }

    /// Total momentum in the exact basis.
    pub fn momentum(&self) -> ExactVector {
        let counts = self.direction_counts();
        self.topology
            .directions()
            .map(|d| {
                let v = d.exact_velocity();
                let n = counts[d.index()] as i64;
                ExactVector::new(v.x * n, v.y * n)
            })
            .sum()
    }

    /// Number of particles moving along each direction.
    pub fn direction_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.topology.z()];
        for &c in &self.cells {
            let mut bits = c;
            while bits != 0 {
                counts[bits.trailing_zeros() as usize] += 1;
                bits &= bits - 1;
            }
        }
        counts
    }

    /// Free streaming: every particle moves one spacing along its velocity.
    pub fn propagate(&self) -> LatticeState {
        self.stream(false)
    }

    /// Inverse of [`propagate`](Self::propagate): every particle moves one
    /// spacing against its velocity and the clock goes back one step.
    pub fn propagate_reverse(&self) -> LatticeState {
        self.stream(true)
    }

    fn stream(&self, reverse: bool) -> LatticeState {
        let topo = self.topology;
        let (w, h) = (topo.width, topo.height);
        let mut out = vec![0u8; self.cells.len()];
        out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for dir in topo.directions() {
                // A particle arriving at (x, y) along `dir` came from the
                // neighbour in the opposite direction.
                let back = if reverse { dir } else { dir.opposite() };
                let (dx, dy) = topo.offset(y, back);
                let src_row = wrap(y, dy, h) * w;
                let bit = dir.bit();
                for (x, dst) in row.iter_mut().enumerate() {
                    *dst |= self.cells[src_row + wrap(x, dx, w)] & bit;
                }
            }
        });
        let time = if reverse { self.time.wrapping_sub(1) } else { self.time.wrapping_add(1) };
        LatticeState { topology: topo, cells: out, time }
    }
}
