use lgcalab_core::dynamics::{self, fhp_collision_term, CollisionModel, CollisionTable, RandomPolicy};
use lgcalab_core::lattice::{LatticeState, Topology};
use lgcalab_core::observables::{block_masses, block_net_inflow};

/// Momentum of a site state from angles, independent of the integer basis.
fn float_momentum(z: usize, state: u8) -> [f64; 2] {
    (0..z).filter(|i| state >> i & 1 == 1).fold([0.0, 0.0], |acc, i| {
        let a = std::f64::consts::TAU * i as f64 / z as f64;
        [acc[0] + a.cos(), acc[1] + a.sin()]
    })
}

#[test]
fn every_table_entry_conserves_mass_and_momentum() {
    for model in [CollisionModel::Hpp, CollisionModel::Fhp] {
        let table = CollisionTable::build(model).unwrap();
        let z = model.lattice().z();
        let mut n = 0;
        for (input, _, output) in table.iter() {
            assert_eq!(input.count_ones(), output.count_ones());
            let (a, b) = (float_momentum(z, input), float_momentum(z, output));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12, "{model} {input:#b}");
            n += 1;
        }
        assert_eq!(n, 2 << z);
    }
}

#[test]
fn collision_term_sums_vanish() {
    for q in [false, true] {
        for s in 0..64u8 {
            let omega = fhp_collision_term(s, q);
            assert_eq!(omega.iter().sum::<i32>(), 0);
            let m = (0..6).fold([0.0, 0.0], |acc, i| {
                let a = std::f64::consts::TAU * i as f64 / 6.0;
                [acc[0] + omega[i] as f64 * a.cos(), acc[1] + omega[i] as f64 * a.sin()]
            });
            assert!(m[0].abs() < 1e-12 && m[1].abs() < 1e-12);
            // Ω only ever removes present particles and adds absent ones.
            for (i, &o) in omega.iter().enumerate() {
                let present = s >> i & 1 == 1;
                assert!(o == 0 || (o == -1 && present) || (o == 1 && !present));
            }
        }
    }
}

#[test]
fn conservation_over_a_thousand_steps() {
    for (model, topo) in [
        (CollisionModel::Fhp, Topology::hex(64, 64).unwrap()),
        (CollisionModel::Hpp, Topology::square(64, 64).unwrap()),
    ] {
        let table = CollisionTable::build(model).unwrap();
        let s0 = dynamics::random_state(topo, 1.7, 11);
        let (m0, p0) = (s0.mass(), s0.momentum());
        let mut ok = true;
        let end = dynamics::run(s0, &table, &RandomPolicy::new(5), 1000, |s| {
            ok &= s.mass() == m0 && s.momentum() == p0;
        })
        .unwrap();
        assert!(ok, "{model}");
        assert_eq!(end.time(), 1000);
    }
}

#[test]
fn block_mass_changes_by_net_flux() {
    let topo = Topology::hex(32, 32).unwrap();
    let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
    let policy = RandomPolicy::new(3);
    let mut s = dynamics::random_state(topo, 2.5, 8);
    for _ in 0..20 {
        let collided = dynamics::collide(&s, &table, &policy).unwrap();
        let before = block_masses(&collided, 8).unwrap();
        let flux = block_net_inflow(&collided, 8).unwrap();
        let next = collided.propagate();
        let after = block_masses(&next, 8).unwrap();
        for ((b, f), a) in before.iter().zip(&flux).zip(&after) {
            assert_eq!(*b as i64 + f, *a as i64);
        }
        // Collisions are local: block masses are unchanged by them.
        assert_eq!(block_masses(&s, 8).unwrap(), before);
        s = next;
    }
}

fn run_in_pool(threads: usize) -> LatticeState {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let topo = Topology::hex(48, 40).unwrap();
        let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
        let s = dynamics::random_state(topo, 3.0, 21);
        dynamics::run(s, &table, &RandomPolicy::new(21), 200, |_| {}).unwrap()
    })
}

#[test]
fn result_does_not_depend_on_thread_count() {
    assert_eq!(run_in_pool(1), run_in_pool(4));
}

#[test]
fn anisotropic_start_relaxes_to_equal_occupations() {
    let topo = Topology::hex(64, 64).unwrap();
    let table = CollisionTable::build(CollisionModel::Fhp).unwrap();
    // Zero net momentum, but directions 0 and 3 are crowded.
    let s = dynamics::sample_state(topo, 2, |_, d| if d.index() % 3 == 0 { 0.8 } else { 0.2 });
    let rho = s.mass() as f64 / topo.sites() as f64;
    let mut sums = [0u64; 6];
    let mut frames = 0u64;
    dynamics::run(s, &table, &RandomPolicy::new(2), 400, |st| {
        if st.time() > 200 {
            for (acc, c) in sums.iter_mut().zip(st.direction_counts()) {
                *acc += c;
            }
            frames += 1;
        }
    })
    .unwrap();
    for c in sums {
        let n = c as f64 / (frames * topo.sites() as u64) as f64;
        assert!((n - rho / 6.0).abs() < 0.01, "N = {n}, expected {}", rho / 6.0);
    }
}

#[test]
fn hpp_keeps_its_spurious_invariants() {
    // HPP conserves x-momentum separately in every row.
    let topo = Topology::square(32, 32).unwrap();
    let table = CollisionTable::build(CollisionModel::Hpp).unwrap();
    let s = dynamics::sample_state(topo, 4, |_, d| if d.index() == 0 { 0.6 } else { 0.3 });
    let row_jx = |st: &LatticeState| -> Vec<i64> {
        (0..32)
            .map(|y| {
                (0..32)
                    .map(|x| {
                        let m = st.get(lgcalab_core::Site::new(x, y));
                        i64::from(m & 1) - i64::from(m >> 2 & 1)
                    })
                    .sum()
            })
            .collect()
    };
    let end = dynamics::run(s.clone(), &table, &RandomPolicy::new(4), 300, |_| {}).unwrap();
    // Collisions swap E+W for N+S pairs with zero x-momentum, and streaming
    // keeps E/W movers in their row.
    assert_eq!(row_jx(&end), row_jx(&s));
    assert_ne!(row_jx(&s).iter().sum::<i64>(), 0);
}
