//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any
//! criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DMatrix;
use profassoc::assoc::{d_n_fast, d_n_oracle, NORMALIZATION};
use profassoc::cond::{cond_association_data, local_linear_weights, smooth_curve, CondData, Kernel, SmootherConfig};
use profassoc::distance::{pairwise_matrix, DistanceMatrix};
use profassoc::metrics::{
    gaussian_quantile_grid, spd_airm, spd_frobenius, spd_power, wasserstein1d, MetricId,
};
use profassoc::objects::{MetricObject, SpdMatrix};
use profassoc::perm::independence_test_matrices;
use profassoc::sim::{power_curve, Setting, SimulationConfig};
use profassoc_cli::io::{write_covariate, write_objects};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    r.sample(StandardNormal)
}

fn random_spd(r: &mut ChaCha8Rng, p: usize) -> SpdMatrix {
    let a = DMatrix::from_fn(p, p, |_, _| normal(r));
    SpdMatrix::new(&a * a.transpose() + DMatrix::identity(p, p) * 0.1).unwrap()
}

fn max_rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn criterion_1() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let spd_metrics = [
        MetricId::SpdFrobenius,
        MetricId::SpdAirm,
        MetricId::SpdLogCholesky,
        MetricId::SpdPower { alpha: 0.5 },
        MetricId::SpdBuresWasserstein,
    ];
    let mut datasets = 0;
    let mut worst: f64 = 0.0;
    let mut check = |dx: &DistanceMatrix, dy: &DistanceMatrix| {
        let fast = d_n_fast(dx, dy).unwrap();
        let oracle = d_n_oracle(dx, dy).unwrap();
        worst = worst.max(max_rel_err(fast, oracle));
        datasets += 1;
    };
    for rep in 0..4 {
        for n in 6..=10 {
            // scalars, with ties on the odd repetitions
            let xs: Vec<f64> = (0..n).map(|_| if rep % 2 == 1 { (normal(&mut r) * 2.0).round() } else { normal(&mut r) }).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x * x + 0.5 * normal(&mut r)).collect();
            check(&DistanceMatrix::from_scalars(&xs), &DistanceMatrix::from_scalars(&ys));

            let mx = spd_metrics[(rep + n) % 5];
            let my = spd_metrics[(rep + n + 2) % 5];
            let a: Vec<_> = (0..n).map(|_| MetricObject::spd(random_spd(&mut r, 2))).collect();
            let b: Vec<_> = (0..n).map(|_| MetricObject::spd(random_spd(&mut r, 3))).collect();
            check(&pairwise_matrix(&a, &mx).unwrap(), &pairwise_matrix(&b, &my).unwrap());

            let qa: Vec<_> = (0..n)
                .map(|_| MetricObject::quantile_grid(gaussian_quantile_grid(normal(&mut r), r.random_range(0.5..2.0), 100)).unwrap())
                .collect();
            let qb: Vec<_> = (0..n)
                .map(|_| MetricObject::quantile_grid(gaussian_quantile_grid(normal(&mut r), r.random_range(0.5..2.0), 100)).unwrap())
                .collect();
            check(&pairwise_matrix(&qa, &MetricId::Wasserstein1d).unwrap(), &pairwise_matrix(&qb, &MetricId::Wasserstein1d).unwrap());
        }
    }
    // every SPD metric also on both sides of one dataset
    for m in spd_metrics {
        let a: Vec<_> = (0..8).map(|_| MetricObject::spd(random_spd(&mut r, 2))).collect();
        let b: Vec<_> = (0..8).map(|_| MetricObject::spd(random_spd(&mut r, 2))).collect();
        check(&pairwise_matrix(&a, &m).unwrap(), &pairwise_matrix(&b, &m).unwrap());
    }
    outcome(datasets >= 50 && worst < 1e-12, format!("{datasets} datasets, max relative error {worst:e}"))
}

fn criterion_2() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let x: Vec<f64> = (0..500).map(|_| normal(&mut r)).collect();
    let d = DistanceMatrix::from_scalars(&x);
    let v = NORMALIZATION * d_n_fast(&d, &d).unwrap();
    outcome((0.85..=1.0).contains(&v), format!("30 D_n = {v:.4} for Y = X, n = 500"))
}

fn rate(setting: Setting, n: usize, rho: f64) -> f64 {
    let cfg = SimulationConfig { rho, mc_runs: 200, n_permutations: 199, alpha: 0.05, seed: SEED, ..SimulationConfig::new(setting, n) };
    power_curve(&cfg, &[rho]).unwrap().rejection_rates[0]
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [Setting::RLin, Setting::RLog, Setting::RCir, Setting::SpdInterp, Setting::W2Mean] {
        let v = rate(s, 100, 0.0);
        pass &= (0.02..=0.09).contains(&v);
        parts.push(format!("{s} {v:.3}"));
    }
    outcome(pass, format!("null rates at n = 100: {}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let w2 = rate(Setting::W2Mean, 200, 1.0);
    let cir = rate(Setting::RCir, 200, 1.0);
    outcome(w2 >= 0.9 && cir >= 0.8, format!("power at rho = 1, n = 200: w2_mean {w2:.3} (>= 0.9), r_cir {cir:.3} (>= 0.8)"))
}

fn criterion_5() -> Outcome {
    let level = rate(Setting::CondW2Log, 200, 0.0);
    let power = rate(Setting::CondW2Sin, 200, 1.0);
    outcome(
        (0.02..=0.09).contains(&level) && power >= 0.8,
        format!("cond_w2_log level {level:.3} (in [0.02, 0.09]), cond_w2_sin power {power:.3} (>= 0.8)"),
    )
}

fn criterion_6() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let mut w2_err: f64 = 0.0;
    for _ in 0..20 {
        let (m1, m2) = (normal(&mut r), normal(&mut r));
        let (s1, s2) = (r.random_range(0.2..3.0), r.random_range(0.2..3.0));
        let got = wasserstein1d(&gaussian_quantile_grid(m1, s1, 1000), &gaussian_quantile_grid(m2, s2, 1000)).unwrap();
        let want = ((m1 - m2).powi(2) + (s1 - s2).powi(2)).sqrt();
        w2_err = w2_err.max((got - want).abs());
    }
    let mut airm_err: f64 = 0.0;
    let mut power_err: f64 = 0.0;
    for _ in 0..20 {
        let (a, b) = (random_spd(&mut r, 3), random_spd(&mut r, 3));
        let g = DMatrix::from_fn(3, 3, |i, j| normal(&mut r) + if i == j { 3.0 } else { 0.0 });
        let ga = SpdMatrix::new(&g * a.matrix() * g.transpose()).unwrap();
        let gb = SpdMatrix::new(&g * b.matrix() * g.transpose()).unwrap();
        airm_err = airm_err.max((spd_airm(&a, &b).unwrap() - spd_airm(&ga, &gb).unwrap()).abs());
        power_err = power_err.max((spd_power(&a, &b, 1.0).unwrap() - spd_frobenius(&a, &b).unwrap()).abs());
    }
    outcome(
        w2_err < 5e-3 && airm_err < 1e-8 && power_err < 1e-12,
        format!("W2 error {w2_err:.2e}, AIRM invariance error {airm_err:.2e}, power(1) vs Frobenius {power_err:.2e}"),
    )
}

fn ecdf_sup_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut points: Vec<f64> = a.iter().chain(b).copied().collect();
    points.sort_by(f64::total_cmp);
    let cdf = |s: &[f64], z: f64| s.iter().filter(|&&v| v <= z).count() as f64 / s.len() as f64;
    points.iter().map(|&z| (cdf(a, z) - cdf(b, z)).abs()).fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let x: Vec<f64> = (0..100).map(|_| normal(&mut r)).collect();
    let y: Vec<f64> = (0..100).map(|_| normal(&mut r)).collect();
    let (dx, dy) = (DistanceMatrix::from_scalars(&x), DistanceMatrix::from_scalars(&y));
    let a = independence_test_matrices(&dx, &dy, 500, 0.05, 1).unwrap();
    let b = independence_test_matrices(&dx, &dy, 500, 0.05, 2).unwrap();
    let d = ecdf_sup_distance(&a.replicates, &b.replicates);
    outcome(d < 0.12, format!("sup distance {d:.4} between two N = 500 replicate CDFs"))
}

fn criterion_8() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let z: Vec<f64> = (0..200).map(|_| r.random::<f64>()).collect();
    let affine: Vec<f64> = z.iter().map(|v| 2.5 - 1.75 * v).collect();
    let mut affine_err: f64 = 0.0;
    for g in [0.2, 0.35, 0.5, 0.65, 0.8] {
        for k in [Kernel::Epanechnikov, Kernel::Triangular, Kernel::Quartic] {
            let w = local_linear_weights(&z, g, k, 0.1).unwrap();
            affine_err = affine_err.max((w.fit(&affine) - (2.5 - 1.75 * g)).abs());
        }
    }
    // constant R_j: a smooth of a constant, and a curve on data whose every R_j is 0
    let c = 0.012_345_678_9;
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let smoothed = smooth_curve(&z, &vec![c; z.len()], &grid, Kernel::Epanechnikov, 0.15);
    let smooth_exact = smoothed.iter().all(|v| *v == Some(c));
    let x: Vec<f64> = (0..200).map(|_| normal(&mut r)).collect();
    let dx = DistanceMatrix::from_scalars(&x);
    let dy = DistanceMatrix::from_scalars(&[1.0; 200]);
    let data = CondData::new(&dx, &dy, &z).unwrap();
    let curve = cond_association_data(&data, &grid, &SmootherConfig::default()).unwrap();
    let curve_exact = curve.values.iter().all(|v| *v == Some(0.0));
    outcome(
        affine_err < 1e-9 && smooth_exact && curve_exact,
        format!("affine error {affine_err:.2e}, constant smooth exact: {smooth_exact}, constant curve exact: {curve_exact}"),
    )
}

fn run_binary(dir: &Path, args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_profassoc"))
        .current_dir(dir)
        .args(args)
        .args(["--threads", threads])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    let n = 60;
    let z: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    let xs: Vec<_> = z
        .iter()
        .map(|&zi| MetricObject::quantile_grid(gaussian_quantile_grid(zi + normal(&mut r), 1.0, 100)).unwrap())
        .collect();
    let ys: Vec<_> = z
        .iter()
        .map(|&zi| MetricObject::quantile_grid(gaussian_quantile_grid(zi + normal(&mut r), 1.0, 100)).unwrap())
        .collect();
    write_objects(&dir.path().join("x.csv"), &xs).unwrap();
    write_objects(&dir.path().join("y.csv"), &ys).unwrap();
    write_covariate(&dir.path().join("z.csv"), &z).unwrap();
    let w = ["--x", "x.csv", "--y", "y.csv", "--metric-x", "wasserstein1d", "--metric-y", "wasserstein1d"];
    let with = |head: &[&'static str], tail: &[&'static str]| -> Vec<&'static str> {
        head.iter().chain(w.iter()).chain(tail).copied().collect()
    };
    let commands = [
        with(&["assoc"], &[]),
        with(&["test"], &["--permutations", "200", "--seed", "3"]),
        with(&["cond-test"], &["--z", "z.csv", "--permutations", "50", "--seed", "3"]),
        with(&["cond-assoc"], &["--z", "z.csv"]),
        vec!["simulate", "--setting", "r_log", "--n", "40", "--rho-grid", "0,1", "--mc-runs", "8", "--permutations", "39", "--seed", "3"],
    ];
    let mut identical = 0;
    for args in &commands {
        let one = run_binary(dir.path(), args, "1");
        let four = run_binary(dir.path(), args, "4");
        let again = run_binary(dir.path(), args, "4");
        if one == four && four == again && !one.is_empty() {
            identical += 1;
        }
    }
    outcome(identical == commands.len(), format!("{identical}/{} commands byte-identical across --threads 1 and 4", commands.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("fast D_n equals the oracle", criterion_1),
        ("maximal association", criterion_2),
        ("null calibration", criterion_3),
        ("power", criterion_4),
        ("conditional level and power", criterion_5),
        ("metric closed forms", criterion_6),
        ("replicate CDF stability", criterion_7),
        ("local-linear exactness", criterion_8),
        ("determinism across thread counts", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {name}: {} ({:.1} s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
