//! Simulation designs and a Monte-Carlo level/power harness.

mod generators;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::cond::{cond_independence_test, SmootherConfig};
use crate::dataset::PairedDataset;
use crate::metrics::{MetricId, DEFAULT_QUANTILE_GRID};
use crate::objects::MetricObject;
use crate::perm::{independence_test, MIN_TEST_SAMPLES};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, Result};
use generators::*;

/// Monte-Carlo runs per grid point unless configured otherwise.
pub const DEFAULT_MC_RUNS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    RLin,
    RLog,
    RCir,
    SpdInterp,
    HybridSphereSpd,
    W2Mean,
    CondSphereLog,
    CondW2Log,
    CondW2Sin,
}

impl Setting {
    pub const ALL: [Setting; 9] = [
        Setting::RLin,
        Setting::RLog,
        Setting::RCir,
        Setting::SpdInterp,
        Setting::HybridSphereSpd,
        Setting::W2Mean,
        Setting::CondSphereLog,
        Setting::CondW2Log,
        Setting::CondW2Sin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::RLin => "r_lin",
            Setting::RLog => "r_log",
            Setting::RCir => "r_cir",
            Setting::SpdInterp => "spd_interp",
            Setting::HybridSphereSpd => "hybrid_sphere_spd",
            Setting::W2Mean => "w2_mean",
            Setting::CondSphereLog => "cond_sphere_log",
            Setting::CondW2Log => "cond_w2_log",
            Setting::CondW2Sin => "cond_w2_sin",
        }
    }

    pub fn is_conditional(self) -> bool {
        matches!(self, Setting::CondSphereLog | Setting::CondW2Log | Setting::CondW2Sin)
    }

    /// Metrics used for `X` and `Y`.
    pub fn metrics(self) -> (MetricId, MetricId) {
        use MetricId::*;
        match self {
            Setting::RLin | Setting::RLog | Setting::RCir => (Euclidean, Euclidean),
            Setting::SpdInterp => (SpdAirm, SpdAirm),
            Setting::HybridSphereSpd => (SphereGeodesic, SpdAirm),
            Setting::W2Mean | Setting::CondW2Log | Setting::CondW2Sin => (Wasserstein1d, Wasserstein1d),
            Setting::CondSphereLog => (SphereGeodesic, SphereGeodesic),
        }
    }

    /// Dimension used when none is given: `R^2` for the Euclidean designs,
    /// 2x2 matrices for the SPD designs, the sphere `S^2`, and scalars for the
    /// circle design. Distribution-valued designs have no dimension.
    pub fn default_p(self) -> Option<usize> {
        match self {
            Setting::RLin | Setting::RLog | Setting::SpdInterp | Setting::HybridSphereSpd | Setting::CondSphereLog => Some(2),
            Setting::RCir => Some(1),
            Setting::W2Mean | Setting::CondW2Log | Setting::CondW2Sin => None,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Setting::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidParameter(format!("unknown setting '{s}'; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub setting: Setting,
    pub n: usize,
    pub rho: f64,
    /// `None` selects [`Setting::default_p`].
    pub p: Option<usize>,
    pub mc_runs: usize,
    pub alpha: f64,
    pub seed: u64,
    pub n_permutations: usize,
    /// Quantile grid size for distribution-valued designs.
    pub grid_size: usize,
    /// Smoother for the conditional designs.
    pub smoother: SmootherConfig,
}

impl SimulationConfig {
    pub fn new(setting: Setting, n: usize) -> Self {
        SimulationConfig {
            setting,
            n,
            rho: 0.0,
            p: None,
            mc_runs: DEFAULT_MC_RUNS,
            alpha: 0.05,
            seed: 0,
            n_permutations: 199,
            grid_size: DEFAULT_QUANTILE_GRID,
            smoother: SmootherConfig::default(),
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        self.p.or(self.setting.default_p())
    }

    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        if self.n < MIN_TEST_SAMPLES {
            return Err(Error::TooFewSamples { required: MIN_TEST_SAMPLES, found: self.n });
        }
        if self.mc_runs < 1 {
            return Err(Error::InvalidParameter("mc_runs must be at least 1".into()));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidParameter("quantile grid needs at least 2 points".into()));
        }
        let p = self.dimension();
        let bad = match self.setting {
            Setting::RCir => p != Some(1),
            Setting::SpdInterp | Setting::HybridSphereSpd => p != Some(2),
            Setting::RLin | Setting::RLog | Setting::CondSphereLog => p == Some(0),
            _ => p.is_some(),
        };
        if bad {
            return Err(Error::InvalidParameter(format!(
                "dimension {p:?} does not apply to setting {}",
                self.setting
            )));
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0, 1], got {rho}")));
    }
    Ok(())
}

/// Draws one dataset of `cfg.n` samples from the configured design.
pub fn generate<R: Rng + ?Sized>(cfg: &SimulationConfig, rng: &mut R) -> Result<PairedDataset> {
    cfg.validate()?;
    let (n, rho, m) = (cfg.n, cfg.rho, cfg.grid_size);
    let p = cfg.dimension().unwrap_or(0);
    let (x, y, z) = match cfg.setting {
        Setting::RLin => with_no_z(euclidean_pairs(n, p, rho, |x| x, rng)?),
        Setting::RLog => with_no_z(euclidean_pairs(n, p, rho, log_link, rng)?),
        Setting::RCir => with_no_z(circle_pairs(n, rho, rng)?),
        Setting::SpdInterp => {
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let (x, y) = spd_interp_pair(rho, rng)?;
                xs.push(MetricObject::spd(x));
                ys.push(MetricObject::spd(y));
            }
            (xs, ys, None)
        }
        Setting::HybridSphereSpd => {
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let (x0, y) = spd_interp_pair(rho, rng)?;
                let m0 = x0.matrix();
                xs.push(MetricObject::unit_vector_normalized(vec![m0[(0, 0)], m0[(0, 1)], m0[(1, 1)]])?);
                ys.push(MetricObject::spd(y));
            }
            (xs, ys, None)
        }
        Setting::W2Mean => with_no_z(w2_mean_pairs(n, rho, m, rng)?),
        Setting::CondSphereLog => with_z(cond_sphere_log(n, p, rho, rng)?),
        Setting::CondW2Log => with_z(cond_w2(n, rho, m, log_link, rng)?),
        Setting::CondW2Sin => with_z(cond_w2(n, rho, m, sin_link, rng)?),
    };
    let ds = PairedDataset::new(x, y)?;
    match z {
        Some(z) => ds.with_covariate(z),
        None => Ok(ds),
    }
}

type Columns = (Vec<MetricObject>, Vec<MetricObject>, Option<Vec<f64>>);

fn with_no_z((x, y): (Vec<MetricObject>, Vec<MetricObject>)) -> Columns {
    (x, y, None)
}

fn with_z((x, y, z): (Vec<MetricObject>, Vec<MetricObject>, Vec<f64>)) -> Columns {
    (x, y, Some(z))
}

/// Runs the design's test once on a fresh dataset; returns the decision.
pub fn simulate_once(cfg: &SimulationConfig, run: u64) -> Result<bool> {
    // data and test seeds depend on the run index only, so every rho on a
    // grid sees the same random inputs
    let mut data_rng = stream_rng(cfg.seed, 2 * run);
    let test_seed = derive_seed(cfg.seed, 2 * run + 1);
    let ds = generate(cfg, &mut data_rng)?;
    let (mx, my) = cfg.setting.metrics();
    let result = if cfg.setting.is_conditional() {
        cond_independence_test(&ds, &mx, &my, &cfg.smoother, cfg.n_permutations, cfg.alpha, test_seed)?
    } else {
        independence_test(&ds, &mx, &my, cfg.n_permutations, cfg.alpha, test_seed)?
    };
    Ok(result.reject)
}

/// Rejection rates over a grid of dependence levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTable {
    pub rho_grid: Vec<f64>,
    pub rejection_rates: Vec<f64>,
    pub mc_runs: usize,
    pub config: SimulationConfig,
}

pub const POWER_TABLE_HEADER: &str = "rho,rejection_rate,mc_runs,n,alpha,setting,seed";

impl PowerTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{POWER_TABLE_HEADER}")?;
        for (rho, rate) in self.rho_grid.iter().zip(&self.rejection_rates) {
            writeln!(
                out,
                "{rho},{rate},{},{},{},{},{}",
                self.mc_runs, self.config.n, self.config.alpha, self.config.setting, self.config.seed
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Empirical rejection rate at each `rho` in `rho_grid` over `cfg.mc_runs`
/// runs. `cfg.rho` is ignored.
pub fn power_curve(cfg: &SimulationConfig, rho_grid: &[f64]) -> Result<PowerTable> {
    if rho_grid.is_empty() {
        return Err(Error::InvalidParameter("rho grid is empty".into()));
    }
    for &rho in rho_grid {
        check_rho(rho)?;
    }
    let mut rates = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let point = SimulationConfig { rho, ..cfg.clone() };
        point.validate()?;
        let decisions = (0..point.mc_runs as u64)
            .into_par_iter()
            .map(|run| simulate_once(&point, run))
            .collect::<Result<Vec<bool>>>()?;
        rates.push(decisions.iter().filter(|&&r| r).count() as f64 / point.mc_runs as f64);
    }
    Ok(PowerTable { rho_grid: rho_grid.to_vec(), rejection_rates: rates, mc_runs: cfg.mc_runs, config: cfg.clone() })
}
