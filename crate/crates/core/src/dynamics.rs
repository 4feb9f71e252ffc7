//! Collision rules for the HPP and FHP lattice gases and the full
//! collide-then-propagate time step.
//!
//! Site collisions are tabulated once per model. The FHP rule is evaluated
//! from the two-body flag `D_i`, the three-body flag `T_i` and the collision
//! term
//!
//! ```text
//! Ω_i = −D_i + q·D_{i−1} + (1−q)·D_{i+1} − T_i + T_{i+3}
//! ```
//!
//! With 0-based indices counter-clockwise from `+x`, `q = 1` feeds `D_{i−1}`
//! into direction `i`: a head-on pair rotates by +60° (counter-clockwise).
//! `q = 0` rotates it by −60°.

use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{Direction, ExactVector, LatticeKind, LatticeState, Topology};
use crate::rng::{self, Stream};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("{model} table entry {input:#04x} (q={q}) maps to {output:#04x}, violating {law} conservation")]
    Conservation { model: CollisionModel, input: u8, q: u8, output: u8, law: &'static str },
    #[error("{model} collisions need a {expected} lattice, state is {got}")]
    TopologyMismatch { model: CollisionModel, expected: LatticeKind, got: LatticeKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionModel {
    Hpp,
    Fhp,
}

impl CollisionModel {
    pub fn lattice(self) -> LatticeKind {
        match self {
            CollisionModel::Hpp => LatticeKind::Square4,
            CollisionModel::Fhp => LatticeKind::Hex6,
        }
    }
}

impl std::fmt::Display for CollisionModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CollisionModel::Hpp => "HPP",
            CollisionModel::Fhp => "FHP",
        })
    }
}

#[inline]
fn n(state: u8, i: i32) -> i32 {
    i32::from((state >> i.rem_euclid(6)) & 1)
}

/// Two-body head-on flag `D_i`: only `i` and `i+3` occupied.
pub fn fhp_two_body_flag(state: u8, i: usize) -> bool {
    let i = i as i32;
    n(state, i) * n(state, i + 3)
        * (1 - n(state, i + 1))
        * (1 - n(state, i + 2))
        * (1 - n(state, i + 4))
        * (1 - n(state, i + 5))
        == 1
}

/// Symmetric three-body flag `T_i`: only `i`, `i+2` and `i+4` occupied.
pub fn fhp_three_body_flag(state: u8, i: usize) -> bool {
    let i = i as i32;
    n(state, i) * n(state, i + 2) * n(state, i + 4)
        * (1 - n(state, i + 1))
        * (1 - n(state, i + 3))
        * (1 - n(state, i + 5))
        == 1
}

/// Collision term `Ω_i` for every direction.
pub fn fhp_collision_term(state: u8, q: bool) -> [i32; 6] {
    let q = i32::from(q);
    let d = |i: i32| i32::from(fhp_two_body_flag(state, i.rem_euclid(6) as usize));
    let t = |i: i32| i32::from(fhp_three_body_flag(state, i.rem_euclid(6) as usize));
    let mut omega = [0; 6];
    for (i, o) in omega.iter_mut().enumerate() {
        let i = i as i32;
        *o = -d(i) + q * d(i - 1) + (1 - q) * d(i + 1) - t(i) + t(i + 3);
    }
    omega
}

/// Post-collision state of one FHP site, `out_i = in_i + Ω_i`.
pub fn fhp_collide_site(state: u8, q: bool) -> u8 {
    let omega = fhp_collision_term(state, q);
    let mut out = 0u8;
    for (i, o) in omega.iter().enumerate() {
        let v = n(state, i as i32) + o;
        debug_assert!(v == 0 || v == 1, "Ω drives n_{i} out of {{0,1}} for {state:#04x}");
        out |= (v as u8 & 1) << i;
    }
    out
}

const HPP_EW: u8 = 0b0101;
const HPP_NS: u8 = 0b1010;

/// HPP site rule: an isolated head-on pair turns by 90°, anything else passes.
pub fn hpp_collide_site(state: u8) -> u8 {
    match state & 0x0f {
        HPP_EW => HPP_NS,
        HPP_NS => HPP_EW,
        s => s,
    }
}

fn momentum_of(kind: LatticeKind, state: u8) -> ExactVector {
    kind.directions().filter(|d| state & d.bit() != 0).map(Direction::exact_velocity).sum()
}

/// Complete site-state map for one model, indexed by `(q, state)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollisionTable {
    model: CollisionModel,
    entries: [[u8; 64]; 2],
}

impl CollisionTable {
    /// Tabulate every site state for both values of `q` and verify mass and
    /// momentum conservation entry by entry.
    pub fn build(model: CollisionModel) -> Result<Self, DynamicsError> {
        let kind = model.lattice();
        let states = 1usize << kind.z();
        let mut entries = [[0u8; 64]; 2];
        for q in 0..2u8 {
            for s in 0..states as u8 {
                let out = match model {
                    CollisionModel::Hpp => hpp_collide_site(s),
                    CollisionModel::Fhp => fhp_collide_site(s, q == 1),
                };
                if out.count_ones() != s.count_ones() {
                    return Err(DynamicsError::Conservation { model, input: s, q, output: out, law: "mass" });
                }
                if momentum_of(kind, out) != momentum_of(kind, s) {
                    return Err(DynamicsError::Conservation { model, input: s, q, output: out, law: "momentum" });
                }
                entries[q as usize][s as usize] = out;
            }
        }
        Ok(Self { model, entries })
    }

    pub fn model(&self) -> CollisionModel {
        self.model
    }

    /// Number of populated `(state, q)` entries.
    pub fn len(&self) -> usize {
        2 << self.model.lattice().z()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn lookup(&self, state: u8, q: bool) -> u8 {
        self.entries[usize::from(q)][state as usize]
    }

    /// All `(input, q, output)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (u8, bool, u8)> + '_ {
        let states = 1u8 << self.model.lattice().z();
        [false, true]
            .into_iter()
            .flat_map(move |q| (0..states).map(move |s| (s, q, self.lookup(s, q))))
    }
}

/// Seeded source of the per-site chirality bit `q(r, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomPolicy {
    seed: u64,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bernoulli(1/2) draw keyed on `(seed, time, x, y)`.
    #[inline]
    pub fn q(&self, time: u64, x: usize, y: usize) -> bool {
        rng::keyed(self.seed, &[Stream::Collision as u64, time, x as u64, y as u64]) & 1 == 1
    }
}

fn check_model(table: &CollisionTable, topology: &Topology) -> Result<(), DynamicsError> {
    let expected = table.model.lattice();
    if topology.kind() != expected {
        return Err(DynamicsError::TopologyMismatch { model: table.model, expected, got: topology.kind() });
    }
    Ok(())
}

/// Apply the collision rule at every site without moving particles.
pub fn collide(state: &LatticeState, table: &CollisionTable, rng: &RandomPolicy) -> Result<LatticeState, DynamicsError> {
    let topo = *state.topology();
    check_model(table, &topo)?;
    let w = topo.width();
    let t = state.time();
    let mut out = state.cells().to_vec();
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, c) in row.iter_mut().enumerate() {
            *c = table.lookup(*c, rng.q(t, x, y));
        }
    });
    Ok(LatticeState::from_cells(topo, out, t).expect("collision output stays within z bits"))
}

/// One full time step: collide at every site, then propagate.
pub fn step(state: &LatticeState, table: &CollisionTable, rng: &RandomPolicy) -> Result<LatticeState, DynamicsError> {
    Ok(collide(state, table, rng)?.propagate())
}

/// Run `steps` time steps, calling `observe` on every state after the
/// initial one.
pub fn run(
    state: LatticeState,
    table: &CollisionTable,
    rng: &RandomPolicy,
    steps: u64,
    mut observe: impl FnMut(&LatticeState),
) -> Result<LatticeState, DynamicsError> {
    let mut s = state;
    for _ in 0..steps {
        s = step(&s, table, rng)?;
        observe(&s);
    }
    Ok(s)
}

/// Random initial state: each `(site, direction)` is occupied independently
/// with probability `density / z`.
pub fn random_state(topology: Topology, density: f64, seed: u64) -> LatticeState {
    let z = topology.z();
    let prob = density / z as f64;
    sample_state(topology, seed, |_, _| prob)
}

/// Sample each `(site, direction)` as Bernoulli(`prob(site, direction)`).
pub fn sample_state(
    topology: Topology,
    seed: u64,
    prob: impl Fn(crate::lattice::Site, Direction) -> f64,
) -> LatticeState {
    LatticeState::from_fn(topology, |site| {
        let mut mask = 0u8;
        for d in topology.directions() {
            let bits = rng::keyed(
                seed,
                &[Stream::Initialization as u64, site.x as u64, site.y as u64, d.index() as u64],
            );
            if rng::unit_f64(bits) < prob(site, d) {
                mask |= d.bit();
            }
        }
        mask
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    /// Site mask from 1-based direction labels.
    fn sites(labels: &[usize]) -> u8 {
        labels.iter().fold(0, |m, &l| m | 1 << (l - 1))
    }

    #[test]
    fn two_body_flag() {
        assert!(fhp_two_body_flag(sites(&[1, 4]), 0));
        assert!(fhp_two_body_flag(sites(&[1, 4]), 3));
        assert!(!fhp_two_body_flag(sites(&[1, 3, 5]), 0));
        for i in 0..6 {
            assert!(!fhp_two_body_flag(0, i));
        }
    }

    #[test]
    fn three_body_flag() {
        assert!(fhp_three_body_flag(sites(&[1, 3, 5]), 0));
        assert!(!fhp_three_body_flag(sites(&[1, 3, 5]), 1));
        for i in 0..6 {
            assert!(!fhp_three_body_flag(0x3f, i));
        }
    }

    #[test]
    fn head_on_pair_rotates() {
        assert_eq!(fhp_collision_term(sites(&[1, 4]), true), [-1, 1, 0, -1, 1, 0]);
        assert_eq!(fhp_collide_site(sites(&[1, 4]), true), sites(&[2, 5]));
        assert_eq!(fhp_collide_site(sites(&[1, 4]), false), sites(&[3, 6]));
    }

    #[test]
    fn three_body_bounce_back() {
        for q in [false, true] {
            assert_eq!(fhp_collide_site(sites(&[1, 3, 5]), q), sites(&[2, 4, 6]));
            assert_eq!(fhp_collide_site(sites(&[2, 4, 6]), q), sites(&[1, 3, 5]));
        }
    }

    #[test]
    fn sixty_degree_pair_passes_through() {
        for q in [false, true] {
            assert_eq!(fhp_collide_site(sites(&[1, 2]), q), sites(&[1, 2]));
        }
    }

    #[test]
    fn hpp_rules() {
        assert_eq!(hpp_collide_site(0b0101), 0b1010);
        assert_eq!(hpp_collide_site(0b1010), 0b0101);
        assert_eq!(hpp_collide_site(0b1111), 0b1111);
        assert_eq!(hpp_collide_site(0b0001), 0b0001);
        let changed = (0..16u8).filter(|&s| hpp_collide_site(s) != s).count();
        assert_eq!(changed, 2);
    }

    #[test]
    fn tables_build() {
        let fhp = CollisionTable::build(CollisionModel::Fhp).unwrap();
        assert_eq!(fhp.len(), 128);
        assert_eq!(fhp.iter().count(), 128);
        let hpp = CollisionTable::build(CollisionModel::Hpp).unwrap();
        assert_eq!(hpp.len(), 32);
        for s in 0..16 {
            assert_eq!(hpp.lookup(s, false), hpp.lookup(s, true));
        }
    }

    #[test]
    fn exactly_three_states_have_two_body_images() {
        let count = (0..64u8).filter(|&s| (0..6).any(|i| fhp_two_body_flag(s, i))).count();
        assert_eq!(count, 3);
        let count = (0..64u8).filter(|&s| (0..6).any(|i| fhp_three_body_flag(s, i))).count();
        assert_eq!(count, 2);
    }

    #[test]
    fn non_colliding_states_are_fixed() {
        let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
        for (s, q, out) in table.iter() {
            let collides = (0..6).any(|i| fhp_two_body_flag(s, i) || fhp_three_body_flag(s, i));
            if !collides {
                assert_eq!(out, s, "state {s:#04x} q={q}");
            }
        }
    }

    #[test]
    fn q_tables_are_mirror_images() {
        // Reflection through the x axis: i ↦ −i (0-based), i.e. i ↦ 8−i mod 6
        // with 1-based labels.
        let reflect = |s: u8| (0..6).fold(0u8, |m, i| m | ((s >> i) & 1) << ((6 - i) % 6));
        let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
        for s in 0..64u8 {
            assert_eq!(reflect(table.lookup(s, true)), table.lookup(reflect(s), false));
        }
    }

    #[test]
    fn step_rejects_wrong_lattice() {
        let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
        let s = LatticeState::empty(Topology::square(4, 4).unwrap());
        assert!(matches!(step(&s, &table, &RandomPolicy::new(0)), Err(DynamicsError::TopologyMismatch { .. })));
    }

    #[test]
    fn empty_lattice_stays_empty() {
        let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
        let s = LatticeState::empty(Topology::hex(8, 8).unwrap());
        let next = step(&s, &table, &RandomPolicy::new(3)).unwrap();
        assert_eq!(next.mass(), 0);
        assert_eq!(next.time(), 1);
    }

    #[test]
    fn hpp_head_on_trace() {
        // E particle at x=2 and W particle at x=4 on row 3: they meet at x=3
        // after one step, collide there on step 2 and leave along N and S.
        let topo = Topology::square(8, 8).unwrap();
        let table = CollisionTable::build(CollisionModel::Hpp).unwrap();
        let rng = RandomPolicy::new(0);
        let e = topo.direction(0).unwrap();
        let w = topo.direction(2).unwrap();
        let mut s = LatticeState::empty(topo);
        s.insert(Site::new(2, 3), e);
        s.insert(Site::new(4, 3), w);

        let s1 = step(&s, &table, &rng).unwrap();
        assert_eq!(s1.get(Site::new(3, 3)), 0b0101);
        assert_eq!(s1.mass(), 2);

        let s2 = step(&s1, &table, &rng).unwrap();
        assert_eq!(s2.get(Site::new(3, 4)), 0b0010);
        assert_eq!(s2.get(Site::new(3, 2)), 0b1000);

        let s3 = step(&s2, &table, &rng).unwrap();
        assert_eq!(s3.get(Site::new(3, 5)), 0b0010);
        assert_eq!(s3.get(Site::new(3, 1)), 0b1000);
        assert_eq!(s3.mass(), 2);
    }

    #[test]
    fn random_state_density() {
        let topo = Topology::hex(64, 64).unwrap();
        let s = random_state(topo, 3.0, 11);
        let mean = s.mass() as f64 / (topo.sites() * 6) as f64;
        let sd = (0.25 / (topo.sites() * 6) as f64).sqrt();
        assert!((mean - 0.5).abs() < 5.0 * sd, "{mean}");
        assert_eq!(s, random_state(topo, 3.0, 11));
    }
}
