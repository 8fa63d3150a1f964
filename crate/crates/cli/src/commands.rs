use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use profassoc::assoc::association_from_matrices;
use profassoc::cond::{
    cond_association_data, cond_independence_test_data, default_grid, stratified_association, BandwidthRule,
    CondData, Kernel, SmootherConfig, DEFAULT_GRID_SIZE,
};
use profassoc::dataset::PairedDataset;
use profassoc::distance::{pairwise_matrix, DistanceMatrix};
use profassoc::metrics::{MetricId, DEFAULT_QUANTILE_GRID};
use profassoc::perm::{independence_test_matrices, TestResult, DEFAULT_PERMUTATIONS};
use profassoc::sim::{power_curve, Setting, SimulationConfig, DEFAULT_MC_RUNS};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::io::{self, Fingerprint, InputError};
use crate::report::{cell, fingerprint, num, nums, opt_cell, opt_num, CsvTable, RunReport};

#[derive(Debug, Parser)]
#[command(name = "profassoc", version, about = "Profile association and independence tests for random objects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, env = "PROFASSOC_THREADS")]
    pub threads: Option<usize>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format. Tables (curves, power tables) default to CSV, other
    /// reports to JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Record the wall time in the report (makes reports run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Profile association D_n between two samples.
    Assoc(AssocArgs),
    /// Half-permutation independence test.
    Test(TestArgs),
    /// Conditional independence test given a scalar covariate.
    CondTest(CondTestArgs),
    /// Conditional association curve over a covariate grid.
    CondAssoc(CondAssocArgs),
    /// Monte-Carlo level/power table for a simulation design.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Objects of the X sample, one per row.
    #[arg(long, conflicts_with = "dx", required_unless_present = "dx")]
    pub x: Option<PathBuf>,
    /// Objects of the Y sample, one per row.
    #[arg(long, conflicts_with = "dy", required_unless_present = "dy")]
    pub y: Option<PathBuf>,
    /// Precomputed X distance matrix.
    #[arg(long)]
    pub dx: Option<PathBuf>,
    /// Precomputed Y distance matrix.
    #[arg(long)]
    pub dy: Option<PathBuf>,
    #[arg(long, default_value = "euclidean")]
    pub metric_x: String,
    #[arg(long, default_value = "euclidean")]
    pub metric_y: String,
    /// Exponent for `--metric-x spd_power`.
    #[arg(long)]
    pub power_x: Option<f64>,
    /// Exponent for `--metric-y spd_power`.
    #[arg(long)]
    pub power_y: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PermArgs {
    #[arg(long, default_value_t = DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Random seed; drawn from the OS and recorded when absent.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SmootherArgs {
    /// Scalar covariate, one value per row.
    #[arg(long, required = true)]
    pub z: PathBuf,
    /// Fixed bandwidth. Without it, h = c (n / log n)^(-1/5).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// The constant c of the default bandwidth; defaults to sd(Z).
    #[arg(long, conflicts_with = "bandwidth")]
    pub bandwidth_scale: Option<f64>,
    #[arg(long, default_value = "epanechnikov")]
    pub kernel: String,
}

#[derive(Debug, Clone, Args)]
pub struct AssocArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub perm: PermArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CondTestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub smoother: SmootherArgs,
    #[command(flatten)]
    pub perm: PermArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CondAssocArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub smoother: SmootherArgs,
    /// Evaluation points, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub grid: Option<Vec<f64>>,
    /// Size of the default grid between the 5th and 95th percentiles of Z.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE, conflicts_with = "grid")]
    pub grid_size: usize,
    /// Treat Z as categorical and report the association within each level.
    #[arg(long)]
    pub categorical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SettingArg {
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

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Setting {
        match s {
            SettingArg::RLin => Setting::RLin,
            SettingArg::RLog => Setting::RLog,
            SettingArg::RCir => Setting::RCir,
            SettingArg::SpdInterp => Setting::SpdInterp,
            SettingArg::HybridSphereSpd => Setting::HybridSphereSpd,
            SettingArg::W2Mean => Setting::W2Mean,
            SettingArg::CondSphereLog => Setting::CondSphereLog,
            SettingArg::CondW2Log => Setting::CondW2Log,
            SettingArg::CondW2Sin => Setting::CondW2Sin,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub setting: SettingArg,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Dependence levels, comma separated, each in [0, 1].
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0,0.25,0.5,0.75,1")]
    pub rho_grid: Vec<f64>,
    /// Dimension where the design has one.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_MC_RUNS)]
    pub mc_runs: usize,
    #[arg(long, default_value_t = 199)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quantile grid size for distribution-valued designs.
    #[arg(long, default_value_t = DEFAULT_QUANTILE_GRID)]
    pub quantile_points: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Core(#[from] profassoc::Error),
    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// 2 usage, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(profassoc::Error::InvalidParameter(_)) => 2,
            CliError::Input(_) | CliError::Core(_) | CliError::Output(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_metric(name: &str, power: Option<f64>) -> Result<MetricId> {
    let (name, power) = match name.split_once(':') {
        Some((base, a)) => {
            let a: f64 = a.parse().map_err(|_| usage(format!("bad exponent in metric '{name}'")))?;
            if power.is_some() {
                return Err(usage(format!("exponent given twice for metric '{name}'")));
            }
            (base, Some(a))
        }
        None => (name, power),
    };
    MetricId::parse(name, power).map_err(|e| usage(e.to_string()))
}

fn metric_value(m: &MetricId) -> Value {
    m.to_string().into()
}

/// One side of the paired sample.
struct Side {
    distances: DistanceMatrix,
    fingerprint: Fingerprint,
    metric: MetricId,
    precomputed: bool,
}

fn load_side(objects: &Option<PathBuf>, matrix: &Option<PathBuf>, metric: MetricId) -> Result<Side> {
    match (objects, matrix) {
        (Some(path), None) => {
            let (objs, fingerprint) = io::read_objects(path, &metric)?;
            let distances = pairwise_matrix(&objs, &metric)?;
            Ok(Side { distances, fingerprint, metric, precomputed: false })
        }
        (None, Some(path)) => {
            let (distances, fingerprint) = io::read_distance_matrix(path)?;
            Ok(Side { distances, fingerprint, metric, precomputed: true })
        }
        _ => Err(usage("give exactly one of the object file and the distance matrix for each sample")),
    }
}

struct Loaded {
    x: Side,
    y: Side,
    arguments: Map<String, Value>,
    inputs: Map<String, Value>,
}

fn load_inputs(args: &InputArgs) -> Result<Loaded> {
    let mx = parse_metric(&args.metric_x, args.power_x)?;
    let my = parse_metric(&args.metric_y, args.power_y)?;
    let x = load_side(&args.x, &args.dx, mx)?;
    let y = load_side(&args.y, &args.dy, my)?;
    if x.distances.n() != y.distances.n() {
        return Err(profassoc::Error::SizeMismatch(x.distances.n(), y.distances.n()).into());
    }
    let mut arguments = Map::new();
    let mut inputs = Map::new();
    for (key, side) in [("x", &x), ("y", &y)] {
        let mut entry = match fingerprint(&side.fingerprint) {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        entry.insert("kind".into(), if side.precomputed { "distance_matrix" } else { "objects" }.into());
        inputs.insert(key.into(), Value::Object(entry));
        // a precomputed matrix carries no metric
        let metric = if side.precomputed { Value::Null } else { metric_value(&side.metric) };
        arguments.insert(format!("metric_{key}"), metric);
    }
    Ok(Loaded { x, y, arguments, inputs })
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        log::info!("no --seed given; using {s}");
        s
    })
}

fn check_perm(perm: &PermArgs) -> Result<()> {
    if perm.permutations < 1 {
        return Err(usage("--permutations must be at least 1"));
    }
    if !(perm.alpha > 0.0 && perm.alpha <= 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1], got {}", perm.alpha)));
    }
    Ok(())
}

fn smoother_config(args: &SmootherArgs) -> Result<SmootherConfig> {
    let kernel: Kernel = args.kernel.parse().map_err(|e: profassoc::Error| usage(e.to_string()))?;
    let rule = match (args.bandwidth, args.bandwidth_scale) {
        (Some(h), _) => {
            if !(h > 0.0) {
                return Err(usage(format!("--bandwidth must be positive, got {h}")));
            }
            BandwidthRule::Fixed(h)
        }
        (None, Some(c)) => {
            if !(c > 0.0) {
                return Err(usage(format!("--bandwidth-scale must be positive, got {c}")));
            }
            BandwidthRule::RateDefault { scale: Some(c) }
        }
        (None, None) => BandwidthRule::RateDefault { scale: None },
    };
    Ok(SmootherConfig { kernel, rule })
}

fn smoother_arguments(cfg: &SmootherConfig, bandwidth: f64, m: &mut Map<String, Value>) {
    m.insert("kernel".into(), cfg.kernel.name().into());
    let rule = match cfg.rule {
        BandwidthRule::Fixed(_) => "fixed",
        BandwidthRule::RateDefault { .. } => "rate_default",
    };
    m.insert("bandwidth_rule".into(), rule.into());
    if let BandwidthRule::RateDefault { scale: Some(c) } = cfg.rule {
        m.insert("bandwidth_scale".into(), num(c));
    }
    m.insert("bandwidth".into(), num(bandwidth));
}

fn load_covariate(args: &SmootherArgs, n: usize, inputs: &mut Map<String, Value>) -> Result<Vec<f64>> {
    let (z, fp) = io::read_covariate(&args.z)?;
    if z.len() != n {
        return Err(profassoc::Error::SizeMismatch(n, z.len()).into());
    }
    inputs.insert("z".into(), fingerprint(&fp));
    Ok(z)
}

fn test_result_value(r: &TestResult) -> Value {
    let mut m = Map::new();
    m.insert("statistic".into(), num(r.statistic));
    m.insert("p_value".into(), num(r.p_value));
    m.insert("alpha".into(), num(r.alpha));
    m.insert("reject".into(), r.reject.into());
    m.insert("n_permutations".into(), r.n_permutations.into());
    m.insert("seed".into(), r.seed.into());
    m.insert("replicates".into(), nums(&r.replicates));
    Value::Object(m)
}

fn test_result_table(r: &TestResult, n: usize) -> CsvTable {
    let mut t = CsvTable::new(&["n", "statistic", "p_value", "alpha", "reject", "n_permutations", "seed"]);
    t.push(vec![
        n.to_string(),
        cell(r.statistic),
        cell(r.p_value),
        cell(r.alpha),
        r.reject.to_string(),
        r.n_permutations.to_string(),
        r.seed.to_string(),
    ]);
    t
}

fn perm_arguments(perm: &PermArgs, seed: u64, m: &mut Map<String, Value>) {
    m.insert("permutations".into(), perm.permutations.into());
    m.insert("alpha".into(), num(perm.alpha));
    m.insert("seed".into(), seed.into());
}

pub fn cmd_assoc(args: &AssocArgs) -> Result<RunReport> {
    let loaded = load_inputs(&args.input)?;
    let r = association_from_matrices(&loaded.x.distances, &loaded.y.distances)?;
    let mut result = Map::new();
    result.insert("n".into(), r.n.into());
    result.insert("d_n".into(), num(r.d_n));
    result.insert("normalized".into(), num(r.normalized));
    result.insert("tie_fraction_x".into(), num(r.tie_fraction_x));
    result.insert("tie_fraction_y".into(), num(r.tie_fraction_y));
    let mut table = CsvTable::new(&["n", "d_n", "normalized"]);
    table.push(vec![r.n.to_string(), cell(r.d_n), cell(r.normalized)]);
    Ok(RunReport {
        command: "assoc",
        arguments: loaded.arguments,
        inputs: loaded.inputs,
        result: Value::Object(result),
        table,
        wall_time: None,
    })
}

pub fn cmd_test(args: &TestArgs) -> Result<RunReport> {
    check_perm(&args.perm)?;
    let loaded = load_inputs(&args.input)?;
    let seed = resolve_seed(args.perm.seed);
    let n = loaded.x.distances.n();
    let r = independence_test_matrices(&loaded.x.distances, &loaded.y.distances, args.perm.permutations, args.perm.alpha, seed)?;
    let mut arguments = loaded.arguments;
    perm_arguments(&args.perm, seed, &mut arguments);
    Ok(RunReport {
        command: "test",
        arguments,
        inputs: loaded.inputs,
        result: test_result_value(&r),
        table: test_result_table(&r, n),
        wall_time: None,
    })
}

pub fn cmd_cond_test(args: &CondTestArgs) -> Result<RunReport> {
    check_perm(&args.perm)?;
    let cfg = smoother_config(&args.smoother)?;
    let mut loaded = load_inputs(&args.input)?;
    let n = loaded.x.distances.n();
    let z = load_covariate(&args.smoother, n, &mut loaded.inputs)?;
    let seed = resolve_seed(args.perm.seed);
    let data = CondData::new(&loaded.x.distances, &loaded.y.distances, &z)?;
    let h = cfg.bandwidth_for(&z)?;
    let r = cond_independence_test_data(&data, &cfg, args.perm.permutations, args.perm.alpha, seed)?;
    let mut arguments = loaded.arguments;
    smoother_arguments(&cfg, h, &mut arguments);
    perm_arguments(&args.perm, seed, &mut arguments);
    Ok(RunReport {
        command: "cond-test",
        arguments,
        inputs: loaded.inputs,
        result: test_result_value(&r),
        table: test_result_table(&r, n),
        wall_time: None,
    })
}

pub fn cmd_cond_assoc(args: &CondAssocArgs) -> Result<RunReport> {
    let cfg = smoother_config(&args.smoother)?;
    let mut loaded = load_inputs(&args.input)?;
    let n = loaded.x.distances.n();
    let z = load_covariate(&args.smoother, n, &mut loaded.inputs)?;
    if args.categorical {
        return stratified_report(loaded, z);
    }
    let grid = match &args.grid {
        Some(g) => g.clone(),
        None => {
            if args.grid_size == 0 {
                return Err(usage("--grid-size must be positive"));
            }
            default_grid(&z, args.grid_size)?
        }
    };
    let data = CondData::new(&loaded.x.distances, &loaded.y.distances, &z)?;
    let curve = cond_association_data(&data, &grid, &cfg)?;
    let mut arguments = loaded.arguments;
    smoother_arguments(&cfg, curve.bandwidth, &mut arguments);
    arguments.insert("grid".into(), nums(&grid));
    let mut result = Map::new();
    result.insert("n".into(), n.into());
    result.insert("anchors_used".into(), curve.anchors_used.into());
    result.insert("z".into(), nums(&curve.z_grid));
    result.insert("values".into(), Value::Array(curve.values.iter().map(|v| opt_num(*v)).collect()));
    result.insert(
        "normalized_values".into(),
        Value::Array(curve.normalized_values.iter().map(|v| opt_num(*v)).collect()),
    );
    let mut table = CsvTable::new(&["z", "value", "normalized"]);
    for ((z, v), nv) in curve.z_grid.iter().zip(&curve.values).zip(&curve.normalized_values) {
        table.push(vec![cell(*z), opt_cell(*v), opt_cell(*nv)]);
    }
    Ok(RunReport { command: "cond-assoc", arguments, inputs: loaded.inputs, result: Value::Object(result), table, wall_time: None })
}

fn stratified_report(loaded: Loaded, z: Vec<f64>) -> Result<RunReport> {
    let ds = PairedDataset::new(loaded.x.distances, loaded.y.distances)?.with_covariate(z)?;
    // the matrices are already computed, so the metrics are not used again
    let strata = stratified_association(&ds, &MetricId::Euclidean, &MetricId::Euclidean)?;
    let mut table = CsvTable::new(&["level", "n", "d_n", "normalized"]);
    let mut rows = Vec::new();
    for s in &strata {
        let (d, nd) = match &s.report {
            Some(r) => (Some(r.d_n), Some(r.normalized)),
            None => (None, None),
        };
        table.push(vec![cell(s.level), s.n.to_string(), opt_cell(d), opt_cell(nd)]);
        let mut m = Map::new();
        m.insert("level".into(), num(s.level));
        m.insert("n".into(), s.n.into());
        m.insert("d_n".into(), opt_num(d));
        m.insert("normalized".into(), opt_num(nd));
        rows.push(Value::Object(m));
    }
    let mut arguments = loaded.arguments;
    arguments.insert("categorical".into(), true.into());
    let mut result = Map::new();
    result.insert("strata".into(), Value::Array(rows));
    Ok(RunReport { command: "cond-assoc", arguments, inputs: loaded.inputs, result: Value::Object(result), table, wall_time: None })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunReport> {
    if args.permutations < 1 {
        return Err(usage("--permutations must be at least 1"));
    }
    if args.mc_runs < 1 {
        return Err(usage("--mc-runs must be at least 1"));
    }
    if !(args.alpha > 0.0 && args.alpha <= 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1], got {}", args.alpha)));
    }
    if let Some(bad) = args.rho_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(usage(format!("--rho-grid values must lie in [0, 1], got {bad}")));
    }
    let seed = resolve_seed(args.seed);
    let setting: Setting = args.setting.into();
    let cfg = SimulationConfig {
        p: args.p,
        mc_runs: args.mc_runs,
        alpha: args.alpha,
        seed,
        n_permutations: args.permutations,
        grid_size: args.quantile_points,
        ..SimulationConfig::new(setting, args.n)
    };
    let table = power_curve(&cfg, &args.rho_grid)?;
    let mut arguments = Map::new();
    arguments.insert("setting".into(), setting.name().into());
    arguments.insert("n".into(), args.n.into());
    arguments.insert("rho_grid".into(), nums(&args.rho_grid));
    arguments.insert("p".into(), cfg.dimension().map_or(Value::Null, Value::from));
    arguments.insert("mc_runs".into(), args.mc_runs.into());
    arguments.insert("permutations".into(), args.permutations.into());
    arguments.insert("alpha".into(), num(args.alpha));
    arguments.insert("seed".into(), seed.into());
    arguments.insert("quantile_points".into(), args.quantile_points.into());
    let (mx, my) = setting.metrics();
    arguments.insert("metric_x".into(), metric_value(&mx));
    arguments.insert("metric_y".into(), metric_value(&my));
    let mut csv = CsvTable::new(&["rho", "rejection_rate", "mc_runs", "n", "alpha", "setting", "seed"]);
    for (rho, rate) in table.rho_grid.iter().zip(&table.rejection_rates) {
        csv.push(vec![
            cell(*rho),
            cell(*rate),
            table.mc_runs.to_string(),
            cfg.n.to_string(),
            cell(cfg.alpha),
            setting.name().to_string(),
            seed.to_string(),
        ]);
    }
    let mut result = Map::new();
    result.insert("rho".into(), nums(&table.rho_grid));
    result.insert("rejection_rate".into(), nums(&table.rejection_rates));
    result.insert("mc_runs".into(), table.mc_runs.into());
    Ok(RunReport { command: "simulate", arguments, inputs: Map::new(), result: Value::Object(result), table: csv, wall_time: None })
}

impl Command {
    fn default_format(&self) -> Format {
        match self {
            Command::CondAssoc(_) | Command::Simulate(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Runs the parsed command and returns the rendered report.
pub fn run(cli: &Cli) -> Result<String> {
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Assoc(a) => cmd_assoc(a)?,
        Command::Test(a) => cmd_test(a)?,
        Command::CondTest(a) => cmd_cond_test(a)?,
        Command::CondAssoc(a) => cmd_cond_assoc(a)?,
        Command::Simulate(a) => cmd_simulate(a)?,
    };
    if cli.timing {
        report.wall_time = Some(start.elapsed().as_secs_f64());
        log::info!("wall time {:.3} s", start.elapsed().as_secs_f64());
    }
    Ok(match cli.format.unwrap_or_else(|| cli.command.default_format()) {
        Format::Json => report.to_json(),
        Format::Csv => report.table.render(),
    })
}
