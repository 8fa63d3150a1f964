use std::collections::HashSet;

use profassoc::cond::{cond_independence_test_data, cond_profiles, local_linear_weights, CondData, Kernel, SmootherConfig};
use profassoc::distance::DistanceMatrix;
use profassoc::perm::{draw_plan, independence_test_matrices, TestResult};
use profassoc::rng::stream_rng;
use profassoc::sim::{generate, simulate_once, SimulationConfig, Setting};
use proptest::prelude::*;

fn kernels() -> impl Strategy<Value = Kernel> {
    prop::sample::select(vec![Kernel::Epanechnikov, Kernel::Triangular, Kernel::Quartic])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plans_pair_disjoint_halves(n in 12usize..80, seed in any::<u64>()) {
        let plan = draw_plan(n, &mut stream_rng(seed, 0)).unwrap();
        prop_assert_eq!(plan.half, n / 2);
        prop_assert_eq!(plan.pi.len(), plan.half);
        prop_assert_eq!(plan.sigma_pi_c.len(), plan.half);
        prop_assert!(plan.pi.windows(2).all(|w| w[0] < w[1]));
        let pi: HashSet<_> = plan.pi.iter().copied().collect();
        let rest: HashSet<_> = plan.sigma_pi_c.iter().copied().collect();
        prop_assert_eq!(rest.len(), plan.half);
        prop_assert!(pi.is_disjoint(&rest));
        prop_assert!(pi.iter().chain(&rest).all(|&i| i < n));
    }

    #[test]
    fn p_value_and_decision_follow_the_replicates(
        stat in -5.0f64..5.0,
        reps in prop::collection::vec(-5.0f64..5.0, 1..60),
        alpha in 0.001f64..1.0,
        bump in 0.0f64..0.5,
    ) {
        let r = TestResult::from_replicates(stat, reps.clone(), alpha, 7);
        let exceed = reps.iter().filter(|&&v| v >= stat).count();
        prop_assert_eq!(r.p_value, (1 + exceed) as f64 / (1 + reps.len()) as f64);
        prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        prop_assert_eq!(r.reject, r.p_value <= alpha);
        prop_assert_eq!(r.n_permutations, reps.len());
        let looser = TestResult::from_replicates(stat, reps, (alpha + bump).min(1.0), 7);
        prop_assert!(!r.reject || looser.reject);
    }

    #[test]
    fn weights_reproduce_lines_and_vanish_off_window(
        z in prop::collection::vec(0.0f64..1.0, 20..60),
        center in 0.3f64..0.7,
        h in 0.15f64..0.5,
        kernel in kernels(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let w = match local_linear_weights(&z, center, kernel, h) {
            Ok(w) => w,
            Err(_) => return Ok(()),
        };
        let total: f64 = w.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10, "sum {total}");
        let first: f64 = w.weights.iter().zip(&z).map(|(wi, zi)| wi * (zi - center)).sum();
        prop_assert!(first.abs() < 1e-10, "first moment {first}");
        let line: Vec<f64> = z.iter().map(|zi| a + b * zi).collect();
        prop_assert!((w.fit(&line) - (a + b * center)).abs() < 1e-9);
        for (i, zi) in z.iter().enumerate() {
            if ((zi - center) / h).abs() >= 1.0 {
                prop_assert_eq!(w.weights[i], 0.0);
            }
        }
    }

    #[test]
    fn conditional_profiles_are_probabilities(
        xs in prop::collection::vec(-2.0f64..2.0, 30),
        ys in prop::collection::vec(-2.0f64..2.0, 30),
        z in prop::collection::vec(0.0f64..1.0, 30),
        anchor in 0usize..30,
        u in 0.0f64..3.0,
        v in 0.0f64..3.0,
        h in 0.1f64..0.6,
    ) {
        let (dx, dy) = (DistanceMatrix::from_scalars(&xs), DistanceMatrix::from_scalars(&ys));
        let w = match local_linear_weights(&z, z[anchor], Kernel::Epanechnikov, h) {
            Ok(w) => w,
            Err(_) => return Ok(()),
        };
        let (fx, fy, fxy) = cond_profiles(&dx, &dy, &w, anchor, u, v).unwrap();
        for f in [fx, fy, fxy] {
            prop_assert!((0.0..=1.0).contains(&f), "{f}");
        }
    }
}

fn scalar_sample(seed: u64, n: usize) -> (DistanceMatrix, DistanceMatrix, Vec<f64>) {
    use rand::Rng;
    let mut rng = stream_rng(seed, 0);
    let z: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let x: Vec<f64> = z.iter().map(|zi| zi + rng.random::<f64>()).collect();
    let y: Vec<f64> = z.iter().map(|zi| zi - rng.random::<f64>()).collect();
    (DistanceMatrix::from_scalars(&x), DistanceMatrix::from_scalars(&y), z)
}

#[test]
fn tests_are_reproducible_from_the_seed() {
    let (dx, dy, z) = scalar_sample(11, 40);
    let a = independence_test_matrices(&dx, &dy, 30, 0.05, 5).unwrap();
    let b = independence_test_matrices(&dx, &dy, 30, 0.05, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replicates.len(), 30);
    let c = independence_test_matrices(&dx, &dy, 30, 0.05, 6).unwrap();
    assert_ne!(a.replicates, c.replicates);

    let data = CondData::new(&dx, &dy, &z).unwrap();
    let cfg = SmootherConfig::default();
    let a = cond_independence_test_data(&data, &cfg, 20, 0.05, 5).unwrap();
    let b = cond_independence_test_data(&data, &cfg, 20, 0.05, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.replicates.len(), 20);
}

#[test]
fn simulated_data_is_reproducible() {
    for setting in Setting::ALL {
        let mut cfg = SimulationConfig::new(setting, 24);
        cfg.rho = 0.5;
        cfg.grid_size = 50;
        cfg.n_permutations = 5;
        let a = generate(&cfg, &mut stream_rng(3, 0)).unwrap();
        let b = generate(&cfg, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(a, b, "{setting}");
        assert_eq!(a.n(), 24);
        assert_eq!(a.z().is_some(), setting.is_conditional(), "{setting}");
        assert_eq!(simulate_once(&cfg, 1).unwrap(), simulate_once(&cfg, 1).unwrap());
    }
}
