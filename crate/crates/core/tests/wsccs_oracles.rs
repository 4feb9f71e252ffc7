use lgcalab_core::wsccs::{
    analyze, ant_colony, colony_matrix, colony_matrix_by_composition, compose_step, simulate, ProcessState,
    TransitionMatrix,
};
use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};

fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `C(i,k) p^{i−k} (1−p)^k` with factorials, over exact rationals.
fn binomial_oracle(i: usize, k: usize, p: &BigRational) -> BigRational {
    let fact = |m: usize| (1..=m).fold(BigInt::from(1), |a, b| a * BigInt::from(b));
    let c = BigRational::from_integer(fact(i) / (fact(k) * fact(i - k)));
    let one = BigRational::from_integer(BigInt::from(1));
    let pow = |x: &BigRational, e: usize| (0..e).fold(one.clone(), |a, _| a * x);
    c * pow(p, i - k) * pow(&(one.clone() - p), k)
}

#[test]
fn exact_composition_matches_binomial_chain() {
    for (num, den) in [(1, 5), (1, 2), (9, 10)] {
        let p = big(num, den);
        for n in 1..=4 {
            let brute = colony_matrix_by_composition(n, p.clone()).unwrap();
            let closed = colony_matrix(n, p.clone()).unwrap();
            assert_eq!(brute, closed, "n={n} p={num}/{den}");
            for i in 0..=n {
                for k in 0..=n {
                    let want = if k <= i { binomial_oracle(i, k, &p) } else { big(0, 1) };
                    assert_eq!(*closed.get(i, k), want);
                }
            }
        }
    }
}

#[test]
fn float_composition_within_1e12() {
    for p in [0.2f64, 0.5, 0.9] {
        for n in 1..=4 {
            let a = colony_matrix_by_composition(n, p).unwrap();
            let b = colony_matrix(n, p).unwrap();
            for i in 0..=n {
                for k in 0..=n {
                    assert!((a.get(i, k) - b.get(i, k)).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn mixed_composition_keeps_total() {
    let sys = ant_colony(Ratio::new(1i64, 3)).unwrap();
    let start = ProcessState::colony(5, 3);
    let dist = compose_step(&sys, &start).unwrap();
    assert!(dist.keys().all(|s| s.total() == 5 && s.count("Active") <= 3));
    assert_eq!(dist.values().fold(Ratio::new(0, 1), |a, b| a + b), Ratio::new(1, 1));
}

#[test]
fn expected_next_count_is_thinned() {
    let p = big(3, 10);
    let m = colony_matrix(6, p.clone()).unwrap();
    for i in 0..=6 {
        let mean = (0..=6).fold(big(0, 1), |a, k| a + m.get(i, k) * BigRational::from_integer(BigInt::from(k)));
        assert_eq!(mean, BigRational::from_integer(BigInt::from(i)) * (big(1, 1) - &p));
    }
}

#[test]
fn absorption_times_solve_first_step_equations() {
    // h(1) = 1/p, h(2) = (3 − 2p) / (p(2 − p)) for the two-ant colony.
    let p = big(1, 4);
    let m = colony_matrix(2, p.clone()).unwrap();
    let a = analyze(&m, 2, 5).unwrap();
    assert_eq!(a.absorption_times[1], big(4, 1));
    let want = (big(3, 1) - big(2, 1) * &p) / (&p * (big(2, 1) - &p));
    assert_eq!(a.expected_absorption, want);
    assert_eq!(a.distribution.iter().fold(big(0, 1), |x, y| x + y), big(1, 1));
}

#[test]
fn long_run_concentrates_on_extinction() {
    for p in [0.05f64, 0.2, 0.9] {
        let m = colony_matrix(20, p).unwrap();
        let a = analyze(&m, 20, 1000).unwrap();
        assert!((a.distribution[0] - 1.0).abs() < 1e-10, "p={p}");
        for t in [0, 1, 7, 64, 333] {
            let d = analyze(&m, 20, t).unwrap().distribution;
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn one_step_frequencies_within_three_sigma() {
    let trials = 100_000;
    for p in [0.2f64, 0.5, 0.9] {
        let n = 4;
        let m = colony_matrix(n, p).unwrap();
        let sim = simulate(&m, n, 1, trials, 17).unwrap();
        let hist = sim.histogram(1, n + 1);
        for (k, &count) in hist.iter().enumerate() {
            let pk = *m.get(n, k);
            let sigma = (trials as f64 * pk * (1.0 - pk)).sqrt();
            assert!((count as f64 - trials as f64 * pk).abs() <= 3.0 * sigma + 1e-9, "p={p} k={k}");
        }
    }
}

/// Upper 1% point of χ² with `df` degrees of freedom (Wilson-Hilferty).
fn chi2_critical_01(df: usize) -> f64 {
    let k = df as f64;
    let z = 2.326_347_874;
    k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3)
}

#[test]
fn histograms_at_fixed_time_pass_chi_square() {
    let (n, p, t, trials) = (8, 0.15, 6usize, 50_000);
    let m = colony_matrix(n, p).unwrap();
    let expect = analyze(&m, n, t as u64).unwrap().distribution;
    let hist = simulate(&m, n, t, trials, 99).unwrap().histogram(t, n + 1);
    let mut stat = 0.0;
    let mut df = 0;
    for (k, &obs) in hist.iter().enumerate() {
        let e = expect[k] * trials as f64;
        if e >= 5.0 {
            stat += (obs as f64 - e).powi(2) / e;
            df += 1;
        }
    }
    assert!(stat < chi2_critical_01(df - 1), "χ² = {stat} with {} dof", df - 1);
}

#[test]
fn simulation_is_reproducible_and_schedule_free() {
    let m = colony_matrix(6, 0.3).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&m, 6, 30, 500, 4).unwrap())
    };
    assert_eq!(run(1), run(4));
    assert_ne!(run(1), simulate(&m, 6, 30, 500, 5).unwrap());
}

#[test]
fn exact_matrix_converts_to_float() {
    let exact: TransitionMatrix<BigRational> = colony_matrix(3, big(1, 2)).unwrap();
    let f = exact.to_f64();
    assert_eq!(f.row(3), &[0.125, 0.375, 0.375, 0.125]);
}
