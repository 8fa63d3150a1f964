use profassoc::assoc::{association_from_matrices, d_n_fast, d_n_oracle, NORMALIZATION};
use profassoc::distance::DistanceMatrix;
use profassoc::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn sample(min: usize, max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (min..=max).prop_flat_map(|n| {
        (prop::collection::vec(-3.0f64..3.0, n), prop::collection::vec(-3.0f64..3.0, n))
    })
}

fn matrices(xs: &[f64], ys: &[f64]) -> (DistanceMatrix, DistanceMatrix) {
    (DistanceMatrix::from_scalars(xs), DistanceMatrix::from_scalars(ys))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fast_equals_oracle((xs, ys) in sample(6, 9)) {
        let (dx, dy) = matrices(&xs, &ys);
        prop_assert_eq!(d_n_fast(&dx, &dy).unwrap(), d_n_oracle(&dx, &dy).unwrap());
    }

    #[test]
    fn fast_equals_oracle_on_rounded_data((xs, ys) in sample(6, 9)) {
        let round = |v: &[f64]| v.iter().map(|x| x.round()).collect::<Vec<_>>();
        let (dx, dy) = matrices(&round(&xs), &round(&ys));
        prop_assert_eq!(d_n_fast(&dx, &dy).unwrap(), d_n_oracle(&dx, &dy).unwrap());
    }

    #[test]
    fn symmetric_in_the_two_roles((xs, ys) in sample(6, 40)) {
        let (dx, dy) = matrices(&xs, &ys);
        let a = d_n_fast(&dx, &dy).unwrap();
        let b = d_n_fast(&dy, &dx).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn invariant_under_common_relabeling((xs, ys) in sample(6, 40), seed in any::<u64>()) {
        let n = xs.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = stream_rng(seed, 0);
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let (dx, dy) = matrices(&xs, &ys);
        let a = d_n_fast(&dx, &dy).unwrap();
        let b = d_n_fast(&dx.submatrix(&order), &dy.submatrix(&order)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn invariant_under_increasing_transforms((xs, ys) in sample(6, 40), p in 0.2f64..3.0) {
        let (dx, dy) = matrices(&xs, &ys);
        let a = d_n_fast(&dx, &dy).unwrap();
        let b = d_n_fast(&dx.map(|d| d.powf(p)), &dy.map(|d| d.exp_m1())).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bounded_and_exactly_normalized((xs, ys) in sample(6, 60)) {
        let (dx, dy) = matrices(&xs, &ys);
        let r = association_from_matrices(&dx, &dy).unwrap();
        prop_assert!(r.d_n >= -0.25 && r.d_n <= 0.25);
        prop_assert_eq!(r.normalized, NORMALIZATION * r.d_n);
    }
}

#[test]
fn comonotone_association_approaches_one() {
    let mut rng = stream_rng(3, 0);
    let x: Vec<f64> = (0..300).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
    let (dx, dy) = matrices(&x, &x);
    let same = NORMALIZATION * d_n_fast(&dx, &dy).unwrap();
    assert!(same > 0.85 && same <= 1.0, "{same}");
    // a monotone map changes distances but not which points are nearer
    let cubic = NORMALIZATION * d_n_fast(&dx, &DistanceMatrix::from_scalars(&y)).unwrap();
    assert!(cubic > 0.5, "{cubic}");
}

#[test]
fn spread_shrinks_with_sample_size() {
    let spread = |n: usize| {
        let values: Vec<f64> = (0..40)
            .map(|run| {
                let mut rng = stream_rng(n as u64, run);
                let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let (dx, dy) = matrices(&x, &y);
                d_n_fast(&dx, &dy).unwrap()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64
    };
    assert!(spread(120) < spread(30));
}
