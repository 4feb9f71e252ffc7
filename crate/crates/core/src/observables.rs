//! Coarse-grained observables and the hydrodynamic predictors of the FHP gas.
//!
//! Occupation averages `N_i = ⟨n_i⟩` are estimated over `B×B` site blocks and
//! `W`-step time windows. From them come the density `ρ = Σ N_i`, the current
//! `ρu = Σ v_i N_i` and the momentum tensor `Π_αβ = Σ v_iα v_iβ N_i`.
//!
//! The predictors are the closed-form endpoints of the multiscale expansion
//! for FHP (`z = 6`, `d = 2`):
//!
//! ```text
//! N_i⁽⁰⁾ = aρ + (bρ/v²) v_i·u + (ρG(ρ)/v⁴) Q_iαβ u_α u_β,  Q_iαβ = v_iα v_iβ − (v²/d) δ_αβ
//! p      = a C₂ v² ρ − (C₂/d − C₄) ρ G(ρ) u²
//! ν      = Δt v² b C₄ (1/Λ − 1/2),   Λ = 2s(1−s)³,  s = ρ/6
//! ```
//!
//! with `a = 1/z`, `b = d/z`, `C₂ = z/d`, `C₄ = z/(d(d+2))` and
//! `G(ρ) = (2/3)(3−ρ)/(6−ρ)`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::dynamics::{self, CollisionModel, CollisionTable, DynamicsError, RandomPolicy};
use crate::lattice::{Direction, LatticeKind, LatticeState, Site, Topology, UnitsConfig};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum ObservablesError {
    #[error("no lattice states to average")]
    EmptyHistory,
    #[error("time window must be at least 1 and at most the history length ({len}), got {window}")]
    BadWindow { window: usize, len: usize },
    #[error("block size {block} must be positive and divide the lattice dimensions {width}x{height}")]
    BadBlock { block: usize, width: usize, height: usize },
    #[error("history mixes lattice geometries")]
    MixedTopology,
    #[error("density {0} outside the open interval (0, 6)")]
    DensityOutOfDomain(f64),
    #[error("shear-wave parameter out of range: {0}")]
    BadShearWave(&'static str),
    #[error("viscosity fit failed: {0}")]
    FitFailed(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
}

/// Block-averaged occupation numbers `N_i` for a sequence of time windows.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationField<T> {
    kind: LatticeKind,
    block: usize,
    window: usize,
    cells_x: usize,
    cells_y: usize,
    frames: usize,
    values: Vec<T>,
}

impl<T: Real> OccupationField<T> {
    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn cells_x(&self) -> usize {
        self.cells_x
    }

    pub fn cells_y(&self) -> usize {
        self.cells_y
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn z(&self) -> usize {
        self.kind.z()
    }

    /// `N_i` for every direction in one cell.
    pub fn cell(&self, frame: usize, cx: usize, cy: usize) -> &[T] {
        let z = self.z();
        let base = ((frame * self.cells_y + cy) * self.cells_x + cx) * z;
        &self.values[base..base + z]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Field with the same `N_i` in every cell, for a single frame.
    pub fn uniform(kind: LatticeKind, cells_x: usize, cells_y: usize, n: &[T]) -> Self {
        assert_eq!(n.len(), kind.z());
        let values = (0..cells_x * cells_y).flat_map(|_| n.iter().copied()).collect();
        Self { kind, block: 1, window: 1, cells_x, cells_y, frames: 1, values }
    }
}

/// Streaming per-block occupation counter for one time window.
#[derive(Debug, Clone)]
pub struct OccupationAccumulator {
    topology: Topology,
    block: usize,
    cells_x: usize,
    cells_y: usize,
    counts: Vec<u64>,
    samples: usize,
}

impl OccupationAccumulator {
    pub fn new(topology: Topology, block: usize) -> Result<Self, ObservablesError> {
        let (w, h) = (topology.width(), topology.height());
        if block == 0 || w % block != 0 || h % block != 0 {
            return Err(ObservablesError::BadBlock { block, width: w, height: h });
        }
        let (cells_x, cells_y) = (w / block, h / block);
        Ok(Self {
            topology,
            block,
            cells_x,
            cells_y,
            counts: vec![0; cells_x * cells_y * topology.z()],
            samples: 0,
        })
    }

    pub fn push(&mut self, state: &LatticeState) -> Result<(), ObservablesError> {
        if *state.topology() != self.topology {
            return Err(ObservablesError::MixedTopology);
        }
        let (w, z) = (self.topology.width(), self.topology.z());
        for (i, &mask) in state.cells().iter().enumerate() {
            if mask == 0 {
                continue;
            }
            let (x, y) = (i % w, i / w);
            let cell = (y / self.block) * self.cells_x + x / self.block;
            let mut bits = mask;
            while bits != 0 {
                self.counts[cell * z + bits.trailing_zeros() as usize] += 1;
                bits &= bits - 1;
            }
        }
        self.samples += 1;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Average everything pushed so far into a single-frame field.
    pub fn finish<T: Real>(&self) -> Result<OccupationField<T>, ObservablesError> {
        if self.samples == 0 {
            return Err(ObservablesError::EmptyHistory);
        }
        let denom = T::count(self.samples * self.block * self.block);
        Ok(OccupationField {
            kind: self.topology.kind(),
            block: self.block,
            window: self.samples,
            cells_x: self.cells_x,
            cells_y: self.cells_y,
            frames: 1,
            values: self.counts.iter().map(|&c| T::lit(c as f64) / denom).collect(),
        })
    }
}

/// Average `n_i` over `B×B` blocks and consecutive `W`-state windows. A
/// trailing partial window is dropped.
pub fn estimate_occupation<T: Real>(
    history: &[LatticeState],
    block: usize,
    window: usize,
) -> Result<OccupationField<T>, ObservablesError> {
    let first = history.first().ok_or(ObservablesError::EmptyHistory)?;
    if window == 0 || window > history.len() {
        return Err(ObservablesError::BadWindow { window, len: history.len() });
    }
    let topology = *first.topology();
    let mut frames = Vec::new();
    for chunk in history.chunks_exact(window) {
        let mut acc = OccupationAccumulator::new(topology, block)?;
        for s in chunk {
            acc.push(s)?;
        }
        frames.push(acc.finish::<T>()?);
    }
    let mut field = frames[0].clone();
    field.frames = frames.len();
    field.values = frames.into_iter().flat_map(|f| f.values).collect();
    Ok(field)
}

/// Density, velocity and momentum tensor per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroField<T> {
    pub cells_x: usize,
    pub cells_y: usize,
    pub frames: usize,
    /// Block size in sites, used to place cells when exporting.
    pub block: usize,
    pub rho: Vec<T>,
    /// Velocity `u`; zero where `ρ = 0`.
    pub u: Vec<[T; 2]>,
    /// `[Π_xx, Π_xy, Π_yy]`.
    pub pi: Vec<[T; 3]>,
}

impl<T: Real> MacroField<T> {
    pub fn index(&self, frame: usize, cx: usize, cy: usize) -> usize {
        (frame * self.cells_y + cy) * self.cells_x + cx
    }
}

/// `ρ = Σ N_i`, `ρu = Σ v_i N_i`, `Π_αβ = Σ v_iα v_iβ N_i`.
pub fn macro_fields<T: Real>(occ: &OccupationField<T>, units: &UnitsConfig<T>) -> MacroField<T> {
    let v = units.speed();
    let vel: Vec<[T; 2]> = occ
        .kind
        .directions()
        .map(|d| {
            let c: [T; 2] = d.unit_vector();
            [c[0] * v, c[1] * v]
        })
        .collect();
    let n_cells = occ.frames * occ.cells_x * occ.cells_y;
    let mut out = MacroField {
        cells_x: occ.cells_x,
        cells_y: occ.cells_y,
        frames: occ.frames,
        block: occ.block,
        rho: Vec::with_capacity(n_cells),
        u: Vec::with_capacity(n_cells),
        pi: Vec::with_capacity(n_cells),
    };
    for cell in occ.values.chunks_exact(occ.z()) {
        let mut rho = T::zero();
        let mut j = [T::zero(); 2];
        let mut pi = [T::zero(); 3];
        for (ni, vi) in cell.iter().zip(&vel) {
            rho = rho + *ni;
            j[0] = j[0] + vi[0] * *ni;
            j[1] = j[1] + vi[1] * *ni;
            pi[0] = pi[0] + vi[0] * vi[0] * *ni;
            pi[1] = pi[1] + vi[0] * vi[1] * *ni;
            pi[2] = pi[2] + vi[1] * vi[1] * *ni;
        }
        let u = if rho > T::zero() { [j[0] / rho, j[1] / rho] } else { [T::zero(); 2] };
        out.rho.push(rho);
        out.u.push(u);
        out.pi.push(pi);
    }
    out
}

/// Lattice constants of the FHP model, with the unit system they live in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhpConstants<T> {
    units: UnitsConfig<T>,
}

impl<T: Real> FhpConstants<T> {
    pub const Z: usize = 6;
    pub const D: usize = 2;

    pub fn new(units: UnitsConfig<T>) -> Self {
        Self { units }
    }

    pub fn units(&self) -> &UnitsConfig<T> {
        &self.units
    }

    pub fn v(&self) -> T {
        self.units.speed()
    }

    fn z(&self) -> T {
        T::count(Self::Z)
    }

    fn d(&self) -> T {
        T::count(Self::D)
    }

    /// `a = 1/z`.
    pub fn a(&self) -> T {
        T::one() / self.z()
    }

    /// `b = d/z`.
    pub fn b(&self) -> T {
        self.d() / self.z()
    }

    /// `C₂ = z/d`.
    pub fn c2(&self) -> T {
        self.z() / self.d()
    }

    /// `C₄ = z/(d(d+2))`.
    pub fn c4(&self) -> T {
        self.z() / (self.d() * (self.d() + T::lit(2.0)))
    }

    /// `G(ρ) = (2/3)(3−ρ)/(6−ρ)`.
    pub fn g(&self, rho: T) -> T {
        T::lit(2.0 / 3.0) * (T::lit(3.0) - rho) / (T::lit(6.0) - rho)
    }

    /// `Λ(ρ) = 2s(1−s)³` with `s = ρ/6`.
    pub fn lambda(&self, rho: T) -> T {
        let s = rho / T::lit(6.0);
        T::lit(2.0) * s * (T::one() - s).powi(3)
    }

    fn check(&self, rho: T) -> Result<(), ObservablesError> {
        if rho > T::zero() && rho < T::lit(6.0) {
            Ok(())
        } else {
            Err(ObservablesError::DensityOutOfDomain(rho.to_f64().unwrap_or(f64::NAN)))
        }
    }
}

impl<T: Real> Default for FhpConstants<T> {
    fn default() -> Self {
        Self::new(UnitsConfig::default())
    }
}

/// Second-order equilibrium occupation `N_i⁽⁰⁾(ρ, u)` for the six FHP
/// directions. The expansion is meant for `|u| ≪ v`; no error is raised for
/// large `u`, but beyond about `0.3v` entries can leave `[0, 1]`.
pub fn equilibrium_occupation<T: Real>(rho: T, u: [T; 2], consts: &FhpConstants<T>) -> Result<[T; 6], ObservablesError> {
    consts.check(rho)?;
    let v = consts.v();
    let v2 = v * v;
    let quad = rho * consts.g(rho) / (v2 * v2);
    let mut out = [T::zero(); 6];
    for (d, o) in LatticeKind::Hex6.directions().zip(out.iter_mut()) {
        let c: [T; 2] = d.unit_vector();
        let vi = [c[0] * v, c[1] * v];
        let vu = vi[0] * u[0] + vi[1] * u[1];
        let iso = v2 / consts.d();
        // Q_iαβ u_α u_β = (v_i·u)² − (v²/d)|u|²
        let q = vu * vu - iso * (u[0] * u[0] + u[1] * u[1]);
        *o = consts.a() * rho + consts.b() * rho / v2 * vu + quad * q;
    }
    Ok(out)
}

/// Equilibrium pressure `p(ρ, u²)`.
pub fn pressure<T: Real>(rho: T, u_squared: T, consts: &FhpConstants<T>) -> Result<T, ObservablesError> {
    consts.check(rho)?;
    let v = consts.v();
    Ok(consts.a() * consts.c2() * v * v * rho - (consts.c2() / consts.d() - consts.c4()) * rho * consts.g(rho) * u_squared)
}

/// Collision, lattice and total kinematic viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosity<T> {
    pub collision: T,
    pub lattice: T,
    pub total: T,
}

pub fn predicted_viscosity<T: Real>(rho: T, consts: &FhpConstants<T>) -> Result<Viscosity<T>, ObservablesError> {
    consts.check(rho)?;
    let v = consts.v();
    let scale = consts.units.delta_t() * v * v * consts.b() * consts.c4();
    let collision = scale / consts.lambda(rho);
    let lattice = -scale / T::lit(2.0);
    Ok(Viscosity { collision, lattice, total: collision + lattice })
}

/// Parameters of a shear-wave decay run on the FHP lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearWaveConfig {
    pub width: usize,
    pub height: usize,
    /// Mean density `ρ` (particles per site).
    pub density: f64,
    /// Initial amplitude `u₀` in units of `v`.
    pub amplitude: f64,
    pub steps: u64,
    pub seed: u64,
}

impl Default for ShearWaveConfig {
    fn default() -> Self {
        Self { width: 128, height: 128, density: 3.0, amplitude: 0.05, steps: 2000, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearWaveMeasurement {
    /// Fitted kinematic viscosity (lattice units, `Δt = Δr = 1`).
    pub viscosity: f64,
    /// Fitted decay rate of `ln|û_x|` per step.
    pub decay_rate: f64,
    /// `k₁ = 2π / L_y` with `L_y` the physical lattice height.
    pub wavenumber: f64,
    /// Half-open step range `[start, end)` used for the fit.
    pub fit_range: (usize, usize),
    /// Amplitude cutoff that ended the fit window.
    pub cutoff: f64,
    /// `|û_x(k₁, t)|` for `t = 0..=steps`.
    pub amplitudes: Vec<f64>,
    pub initial_mass: u64,
    /// True if the particle count never changed during the run.
    pub mass_conserved: bool,
}

/// Steps skipped at the start of the fit while the non-equilibrium part of
/// the initial state relaxes.
const FIT_SKIP: usize = 5;
const MIN_FIT_POINTS: usize = 20;

/// Complex amplitude of the `x`-velocity mode `sin(k₁y)` over the lattice,
/// as `|û|`.
fn shear_amplitude(state: &LatticeState, rows: &[(f64, f64)], rho: f64) -> f64 {
    let topo = state.topology();
    let w = topo.width();
    let cx: Vec<f64> = topo.directions().map(|d| d.unit_vector::<f64>()[0]).collect();
    let (mut s, mut c) = (0.0, 0.0);
    for (y, row) in state.cells().chunks_exact(w).enumerate() {
        let mut jx = 0.0;
        for &mask in row {
            let mut bits = mask;
            while bits != 0 {
                jx += cx[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
        }
        s += jx * rows[y].0;
        c += jx * rows[y].1;
    }
    let norm = 2.0 / (topo.sites() as f64 * rho);
    (s * norm).hypot(c * norm)
}

/// Ordinary least squares slope of `ys` against `xs`.
fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Measure the kinematic viscosity from the decay of a transverse shear
/// wave `u_x(y) = u₀ sin(k₁y)`.
///
/// Each `(site, direction)` is sampled from `N_i⁽⁰⁾(ρ, u(y))`. The fit runs
/// from step 5 until `|û_x|` first drops below `max(u₀e⁻³, 3σ)`, with `σ`
/// the per-component noise of the mode estimator at equilibrium.
pub fn measure_viscosity(cfg: &ShearWaveConfig) -> Result<ShearWaveMeasurement, ObservablesError> {
    if !(cfg.amplitude > 0.0 && cfg.amplitude <= 0.1) {
        return Err(ObservablesError::BadShearWave("amplitude must lie in (0, 0.1]"));
    }
    if !(cfg.density > 0.0 && cfg.density < 6.0) {
        return Err(ObservablesError::DensityOutOfDomain(cfg.density));
    }
    let topo = Topology::hex(cfg.width, cfg.height)?;
    let consts = FhpConstants::<f64>::default();
    let k = 2.0 * PI / topo.physical_height::<f64>();
    let rows: Vec<(f64, f64)> = (0..topo.height())
        .map(|y| {
            let py = topo.position::<f64>(Site::new(0, y))[1];
            ((k * py).sin(), (k * py).cos())
        })
        .collect();

    let mut eq = Vec::with_capacity(topo.height());
    for &(sin, _) in &rows {
        eq.push(equilibrium_occupation(cfg.density, [cfg.amplitude * sin, 0.0], &consts)?);
    }
    let state = dynamics::sample_state(topo, cfg.seed, |site, d: Direction| eq[site.y][d.index()].clamp(0.0, 1.0));
    let initial_mass = state.mass();
    let rho = initial_mass as f64 / topo.sites() as f64;

    let table = CollisionTable::build(CollisionModel::Fhp)?;
    let policy = RandomPolicy::new(cfg.seed);
    let mut amplitudes = vec![shear_amplitude(&state, &rows, rho)];
    let mut mass_conserved = true;
    dynamics::run(state, &table, &policy, cfg.steps, |s| {
        mass_conserved &= s.mass() == initial_mass;
        amplitudes.push(shear_amplitude(s, &rows, rho));
    })?;

    let s = rho / 6.0;
    let var_jx = 3.0 * s * (1.0 - s);
    let sigma = (2.0 * var_jx / (topo.sites() as f64 * rho * rho)).sqrt();
    let cutoff = (cfg.amplitude * (-3.0f64).exp()).max(3.0 * sigma);
    let end = amplitudes
        .iter()
        .skip(FIT_SKIP)
        .position(|&a| a < cutoff)
        .map_or(amplitudes.len(), |p| p + FIT_SKIP);
    if end < FIT_SKIP + MIN_FIT_POINTS {
        return Err(ObservablesError::FitFailed(format!(
            "signal fell below the noise cutoff {cutoff:.3e} after {end} steps"
        )));
    }
    let xs: Vec<f64> = (FIT_SKIP..end).map(|t| t as f64).collect();
    let ys: Vec<f64> = amplitudes[FIT_SKIP..end].iter().map(|a| a.ln()).collect();
    let slope = ols_slope(&xs, &ys);
    if slope.is_nan() || slope >= 0.0 {
        return Err(ObservablesError::FitFailed(format!("non-decaying signal (slope {slope:.3e})")));
    }
    Ok(ShearWaveMeasurement {
        viscosity: -slope / (k * k),
        decay_rate: -slope,
        wavenumber: k,
        fit_range: (FIT_SKIP, end),
        cutoff,
        amplitudes,
        initial_mass,
        mass_conserved,
    })
}

/// Particle count per `B×B` block.
pub fn block_masses(state: &LatticeState, block: usize) -> Result<Vec<u64>, ObservablesError> {
    let acc = {
        let mut a = OccupationAccumulator::new(*state.topology(), block)?;
        a.push(state)?;
        a
    };
    let z = state.topology().z();
    Ok(acc.counts.chunks_exact(z).map(|c| c.iter().sum()).collect())
}

/// Net number of particles entering each block when `state` is propagated:
/// inflow minus outflow across the block boundary.
pub fn block_net_inflow(state: &LatticeState, block: usize) -> Result<Vec<i64>, ObservablesError> {
    let topo = *state.topology();
    let probe = OccupationAccumulator::new(topo, block)?;
    let cell_of = |s: Site| (s.y / block) * probe.cells_x + s.x / block;
    let mut net = vec![0i64; probe.cells_x * probe.cells_y];
    for (i, &mask) in state.cells().iter().enumerate() {
        let here = topo.site(i);
        for d in topo.directions().filter(|d| mask & d.bit() != 0) {
            let (from, to) = (cell_of(here), cell_of(topo.neighbor(here, d)));
            if from != to {
                net[from] -= 1;
                net[to] += 1;
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constants() {
        let c = FhpConstants::<f64>::default();
        assert_eq!(c.a(), 1.0 / 6.0);
        assert_eq!(c.b(), 1.0 / 3.0);
        assert_eq!(c.c2(), 3.0);
        assert_eq!(c.c4(), 0.75);
        assert_eq!(c.g(3.0), 0.0);
        assert_eq!(c.lambda(3.0), 0.125);
    }

    #[test]
    fn equilibrium_at_half_filling() {
        let c = FhpConstants::<f64>::default();
        let n = equilibrium_occupation(3.0, [0.0, 0.0], &c).unwrap();
        assert!(n.iter().all(|&x| close(x, 0.5, 1e-15)));
        // G(3) = 0: no quadratic term, so N_i is linear in u.
        let u = [0.07, -0.02];
        let n = equilibrium_occupation(3.0, u, &c).unwrap();
        for (d, ni) in LatticeKind::Hex6.directions().zip(n) {
            let ci: [f64; 2] = d.unit_vector();
            assert!(close(ni, 0.5 + (ci[0] * u[0] + ci[1] * u[1]), 1e-15));
        }
    }

    #[test]
    fn equilibrium_rejects_bad_density() {
        let c = FhpConstants::<f64>::default();
        assert!(equilibrium_occupation(0.0, [0.0; 2], &c).is_err());
        assert!(equilibrium_occupation(6.0, [0.0; 2], &c).is_err());
        assert!(pressure(-1.0, 0.0, &c).is_err());
        assert!(predicted_viscosity(6.0, &c).is_err());
    }

    #[test]
    fn pressure_values() {
        let c = FhpConstants::<f64>::default();
        for rho in [0.5, 1.0, 3.0, 5.5] {
            assert!(close(pressure(rho, 0.0, &c).unwrap(), rho / 2.0, 1e-14));
        }
        assert!(close(pressure(3.0, 0.04, &c).unwrap(), 1.5, 1e-14));
        let units = UnitsConfig::new(0.5, 1.0).unwrap();
        let c2 = FhpConstants::new(units);
        assert!(close(pressure(2.0, 0.0, &c2).unwrap(), 2.0 * 4.0 / 2.0, 1e-12));
    }

    #[test]
    fn viscosity_at_half_filling() {
        let c = FhpConstants::<f64>::default();
        let nu = predicted_viscosity(3.0, &c).unwrap();
        assert!(close(nu.total, 1.875, 1e-14));
        assert!(close(nu.lattice, -0.125, 1e-15));
        assert!(close(nu.collision, 2.0, 1e-14));
        // Δt = 2, v = 1/2: Δt v² = 1/2
        let c2 = FhpConstants::new(UnitsConfig::new(2.0, 1.0).unwrap());
        assert!(close(predicted_viscosity(3.0, &c2).unwrap().total, 1.875 * 0.5, 1e-14));
    }

    #[test]
    fn f32_predictors() {
        let c = FhpConstants::<f32>::default();
        assert!((predicted_viscosity(3.0f32, &c).unwrap().total - 1.875).abs() < 1e-5);
    }

    #[test]
    fn macro_fields_symmetric_half_filling() {
        let occ = OccupationField::uniform(LatticeKind::Hex6, 2, 2, &[0.5f64; 6]);
        let m = macro_fields(&occ, &UnitsConfig::default());
        for i in 0..4 {
            assert!(close(m.rho[i], 3.0, 1e-14));
            assert!(m.u[i][0].abs() < 1e-14 && m.u[i][1].abs() < 1e-14);
            assert!(close(m.pi[i][0], 1.5, 1e-14));
            assert!(m.pi[i][1].abs() < 1e-14);
            assert!(close(m.pi[i][2], 1.5, 1e-14));
        }
    }

    #[test]
    fn macro_fields_single_direction() {
        let occ = OccupationField::uniform(LatticeKind::Hex6, 1, 1, &[1.0f64, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let m = macro_fields(&occ, &UnitsConfig::new(1.0, 2.0).unwrap());
        assert_eq!(m.rho[0], 1.0);
        assert!(close(m.u[0][0], 2.0, 1e-14) && m.u[0][1].abs() < 1e-14);
        let empty = OccupationField::uniform(LatticeKind::Square4, 1, 1, &[0.0f64; 4]);
        let m = macro_fields(&empty, &UnitsConfig::default());
        assert_eq!(m.u[0], [0.0, 0.0]);
    }

    #[test]
    fn estimate_constant_histories() {
        let t = Topology::hex(8, 8).unwrap();
        let empty = vec![LatticeState::empty(t); 3];
        let f = estimate_occupation::<f64>(&empty, 4, 3).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        let full = vec![LatticeState::full(t); 4];
        let f = estimate_occupation::<f64>(&full, 2, 2).unwrap();
        assert_eq!(f.frames(), 2);
        assert!(f.values().iter().all(|&v| v == 1.0));
        let alt = vec![LatticeState::full(t), LatticeState::empty(t)];
        let f = estimate_occupation::<f64>(&alt, 8, 2).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn estimate_errors() {
        let t = Topology::square(6, 6).unwrap();
        assert_eq!(estimate_occupation::<f64>(&[], 1, 1), Err(ObservablesError::EmptyHistory));
        let h = vec![LatticeState::empty(t)];
        assert!(matches!(estimate_occupation::<f64>(&h, 4, 1), Err(ObservablesError::BadBlock { .. })));
        assert!(matches!(estimate_occupation::<f64>(&h, 3, 0), Err(ObservablesError::BadWindow { .. })));
        let mixed = vec![LatticeState::empty(t), LatticeState::empty(Topology::square(6, 3).unwrap())];
        assert_eq!(estimate_occupation::<f64>(&mixed, 3, 2), Err(ObservablesError::MixedTopology));
    }

    #[test]
    fn ols() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 0.5, 0.0, -0.5];
        assert!(close(ols_slope(&xs, &ys), -0.5, 1e-15));
    }
}
