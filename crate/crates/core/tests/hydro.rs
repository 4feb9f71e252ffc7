use lgcalab_core::dynamics::{self, CollisionModel, CollisionTable, RandomPolicy};
use lgcalab_core::lattice::{LatticeState, Topology, UnitsConfig};
use lgcalab_core::observables::{
    estimate_occupation, macro_fields, measure_viscosity, predicted_viscosity, FhpConstants, OccupationAccumulator,
    ShearWaveConfig,
};

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn viscosities(amplitude: f64) -> Vec<f64> {
    (1..=4)
        .map(|seed| {
            let m = measure_viscosity(&ShearWaveConfig { amplitude, seed, ..Default::default() }).unwrap();
            assert!(m.mass_conserved);
            assert!(m.fit_range.1 - m.fit_range.0 >= 20);
            m.viscosity
        })
        .collect()
}

#[test]
fn halving_the_amplitude_leaves_viscosity_unchanged() {
    let (full, sd_full) = mean_sd(&viscosities(0.1));
    let (half, sd_half) = mean_sd(&viscosities(0.05));
    let se = (sd_full.powi(2) / 4.0 + sd_half.powi(2) / 4.0).sqrt();
    assert!((full - half).abs() < 3.0 * se, "ν(0.1) = {full}, ν(0.05) = {half}, se = {se}");
    assert!(full > 0.0 && half > 0.0);
}

#[test]
fn shear_wave_rejects_bad_parameters() {
    assert!(measure_viscosity(&ShearWaveConfig { amplitude: 0.2, ..Default::default() }).is_err());
    assert!(measure_viscosity(&ShearWaveConfig { density: 6.0, ..Default::default() }).is_err());
    assert!(measure_viscosity(&ShearWaveConfig { height: 63, ..Default::default() }).is_err());
}

#[test]
fn noise_only_signal_is_a_fit_failure() {
    // Tiny lattice: the 3σ noise floor sits above the initial amplitude.
    let cfg = ShearWaveConfig { width: 8, height: 8, amplitude: 0.01, steps: 100, ..Default::default() };
    assert!(matches!(
        measure_viscosity(&cfg),
        Err(lgcalab_core::ObservablesError::FitFailed(_))
    ));
}

#[test]
fn uniform_random_state_relaxes_to_rho_over_six() {
    let topo = Topology::hex(64, 64).unwrap();
    let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
    let s = dynamics::random_state(topo, 2.0, 31);
    let rho = s.mass() as f64 / topo.sites() as f64;
    let mut acc = OccupationAccumulator::new(topo, 64).unwrap();
    dynamics::run(s, &table, &RandomPolicy::new(31), 600, |st| {
        if st.time() > 100 {
            acc.push(st).unwrap();
        }
    })
    .unwrap();
    let n = acc.finish::<f64>().unwrap();
    let sk = rho / 6.0;
    // Fixed mass and momentum leave only the split between directions to
    // fluctuate; 3σ of a single frame is a loose bound for the time mean.
    let sigma = (sk * (1.0 - sk) / topo.sites() as f64).sqrt();
    for &ni in n.cell(0, 0, 0) {
        assert!((ni - sk).abs() < 3.0 * sigma, "N = {ni} vs {sk} ± {}", 3.0 * sigma);
    }
}

#[test]
fn macro_fields_of_a_simulated_history() {
    let topo = Topology::hex(16, 16).unwrap();
    let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
    let mut history: Vec<LatticeState> = vec![dynamics::random_state(topo, 3.0, 1)];
    let mass = history[0].mass();
    dynamics::run(history[0].clone(), &table, &RandomPolicy::new(1), 19, |s| history.push(s.clone())).unwrap();
    let occ = estimate_occupation::<f64>(&history, 4, 10).unwrap();
    assert_eq!(occ.frames(), 2);
    let mf = macro_fields(&occ, &UnitsConfig::default());
    for f in 0..2 {
        let total: f64 = (0..16).map(|c| mf.rho[f * 16 + c]).sum::<f64>() * 16.0;
        assert!((total - mass as f64).abs() < 1e-9);
    }
    assert!(mf.rho.iter().all(|&r| (0.0..=6.0).contains(&r)));
}

#[test]
fn predicted_viscosity_at_half_filling() {
    let v = predicted_viscosity(3.0, &FhpConstants::<f64>::default()).unwrap();
    assert!((v.total - 1.875).abs() < 1e-12);
    assert!((v.lattice + 0.125).abs() < 1e-15);
}
