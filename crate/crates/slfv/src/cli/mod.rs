//! Command-line front end. One JSON config per run; every output embeds the
//! sha-256 of the effective config (seed override applied) and the seed, so a
//! run is reproducible from its artifacts alone. Randomness is split
//! master seed -> command stream -> replicate stream; the worker count only
//! changes scheduling, never results.

use crate::dual::{estimate_ibd_logged, TrialOutcome};
use crate::forward::{self, new_field, run_forward, Init, Mode, Observer};
use crate::geometry::{Dimension, Point};
use crate::kernels::generator::{apply_d_alpha, apply_l_n};
use crate::kernels::pairing::{q_pairing, wm_function, wm_pairing};
use crate::kernels::testfn::TestFunction;
use crate::kernels::KernelSpec;
use crate::regimes::{
    check_asymptotics, derive_params, rescaled_rates, schedule_from_theta, DerivedParams,
    RegimeParams, ScalingSchedule, ValidityReport,
};
use crate::rng::{command_stream, RngStream};
use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "slfv",
    about = "Spatial Lambda-Fleming-Viot simulator and numerical toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
    /// JSON experiment config
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config's seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (results are identical for any value)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    /// Derived limit parameters and scaling schedule as JSON
    Params,
    /// Wright-Malecot identity-by-descent curves as CSV
    Wmf,
    /// Ancestral-pair Monte Carlo identity estimate
    Dual,
    /// Forward field simulation with snapshot observers
    Forward,
    /// Empirical quadratic variation of the fluctuation field
    Qv,
    /// Prelimit-vs-limit generator sweep over resolutions
    Gencheck,
}

impl CommandKind {
    fn tag(self) -> &'static str {
        match self {
            CommandKind::Params => "params",
            CommandKind::Wmf => "wmf",
            CommandKind::Dual => "dual",
            CommandKind::Forward => "forward",
            CommandKind::Qv => "qv",
            CommandKind::Gencheck => "gencheck",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wmf: Option<WmfBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual: Option<DualBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward: Option<ForwardBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qv: Option<QvBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gencheck: Option<GencheckBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingBlock {
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl ScalingBlock {
    fn schedule(
        &self,
        p: &RegimeParams,
        dp: &DerivedParams,
    ) -> anyhow::Result<(ScalingSchedule, Option<ValidityReport>)> {
        match (self.delta, self.theta) {
            (Some(delta), None) => Ok((rescaled_rates(p, dp, self.n, delta)?, None)),
            (None, Some(theta)) => Ok((
                schedule_from_theta(p, dp, self.n, theta)?,
                Some(check_asymptotics(p, theta)?),
            )),
            _ => bail!("scaling needs exactly one of `delta` or `theta`"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    fn values(&self) -> anyhow::Result<Vec<f64>> {
        if self.count == 0 {
            bail!("grid count must be at least 1");
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.stop >= self.start) {
            bail!("grid must satisfy start <= stop");
        }
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| self.start + i as f64 * step)
            .collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WmfBlock {
    pub mu: f64,
    pub curves: Vec<CurveSpec>,
    pub r: GridSpec,
    /// divide each curve by its value at this separation (plot-style output)
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize_at: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub label: String,
    pub d: u32,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_one")]
    pub gamma: f64,
    /// zeta for alpha < 2, sigma^2 at alpha = 2
    #[serde(default = "default_one")]
    pub diffusivity: f64,
}

fn default_one() -> f64 {
    1.0
}

impl CurveSpec {
    fn kernel(&self) -> anyhow::Result<KernelSpec> {
        let d = Dimension::new(self.d)?;
        let spec = if self.alpha == 2.0 {
            KernelSpec::brownian(d, self.diffusivity)?
        } else {
            KernelSpec::stable(d, self.alpha, self.diffusivity)?
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum StartSpec {
    /// uniform density on [lo, hi] along the first axis
    Block([f64; 2]),
    Point([f64; 3]),
}

impl StartSpec {
    fn sampler(&self) -> anyhow::Result<Box<dyn Fn(&mut RngStream) -> Point + Sync>> {
        match *self {
            StartSpec::Block([lo, hi]) => {
                if !(hi > lo) {
                    bail!("start block must have positive width");
                }
                Ok(Box::new(move |rng: &mut RngStream| {
                    [lo + (hi - lo) * rng.random::<f64>(), 0.0, 0.0]
                }))
            }
            StartSpec::Point(p) => Ok(Box::new(move |_: &mut RngStream| p)),
        }
    }

    fn indicator(&self) -> anyhow::Result<TestFunction> {
        match *self {
            StartSpec::Block([lo, hi]) => Ok(TestFunction::indicator_interval(lo, hi)),
            StartSpec::Point(_) => bail!("formula comparison needs block start densities"),
        }
    }

    fn width(&self) -> f64 {
        match *self {
            StartSpec::Block([lo, hi]) => hi - lo,
            StartSpec::Point(_) => 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualBlock {
    /// horizon in rescaled time
    pub t: f64,
    pub reps: u64,
    pub start1: StartSpec,
    pub start2: StartSpec,
    /// also evaluate the Wright-Malecot pairing and report a z-score
    #[serde(default)]
    pub compare: bool,
    /// write per-replicate trial records next to the JSON report
    #[serde(default)]
    pub trials_csv: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    TwoAllele,
    Atomic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum InitSpec {
    Uniform,
    Constant { w: f64 },
    /// type 0 inside the ball, type 1 outside
    Ball { center: Vec<f64>, radius: f64 },
}

impl InitSpec {
    fn build(&self, d: Dimension) -> anyhow::Result<Init> {
        Ok(match self {
            InitSpec::Uniform => Init::UniformLebesgue,
            InitSpec::Constant { w } => Init::ConstantFrequency(*w),
            InitSpec::Ball { center, radius } => Init::TwoAlleleBall {
                center: point_from(center, d)?,
                radius: *radius,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum PhiSpec {
    Bump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
    },
}

impl PhiSpec {
    fn build(&self, d: Dimension) -> anyhow::Result<TestFunction> {
        Ok(match self {
            PhiSpec::Bump {
                center,
                radius,
                amplitude,
            } => TestFunction::bump(d, point_from(center, d)?, *radius, *amplitude),
            PhiSpec::Gaussian {
                center,
                width,
                amplitude,
            } => TestFunction::gaussian(d, point_from(center, d)?, *width, *amplitude),
        })
    }
}

fn point_from(coords: &[f64], d: Dimension) -> anyhow::Result<Point> {
    if coords.len() != d.get() as usize {
        bail!(
            "expected {} coordinates, got {}",
            d.get(),
            coords.len()
        );
    }
    let mut p = [0.0; 3];
    p[..coords.len()].copy_from_slice(coords);
    Ok(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardBlock {
    pub mode: ModeSpec,
    pub l: f64,
    pub grid: usize,
    pub init: InitSpec,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    /// type window recorded per cell in atomic mode
    #[serde(default = "default_window")]
    pub window: [f64; 2],
}

fn default_window() -> [f64; 2] {
    [0.0, 0.5]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QvBlock {
    pub l: f64,
    pub grid: usize,
    pub phi: PhiSpec,
    pub window: [f64; 2],
    pub t_end: f64,
    pub reps: u64,
    /// also evaluate the limiting pairing constant and report the ratio
    #[serde(default)]
    pub compare: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GencheckBlock {
    pub u0: f64,
    pub a: f64,
    pub b: f64,
    pub deltas: Vec<f64>,
    pub x: GridSpec,
    pub phi: PhiSpec,
}

/// Canonical serialization of the effective config; its sha-256 identifies
/// the run in every artifact.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        write!(hex, "{byte:02x}").unwrap();
    }
    hex
}

pub fn load_config(path: &Path, seed_override: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing config {}", path.display()))?;
    if let Some(seed) = seed_override {
        cfg.seed = Some(seed);
    }
    if cfg.seed.is_none() {
        bail!("no seed: set `seed` in the config or pass --seed");
    }
    Ok(cfg)
}

fn regime_of(cfg: &ExperimentConfig) -> anyhow::Result<&RegimeParams> {
    cfg.regime
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `regime` block"))
}

fn schedule_of(
    cfg: &ExperimentConfig,
    p: &RegimeParams,
    dp: &DerivedParams,
) -> anyhow::Result<ScalingSchedule> {
    let block = cfg
        .scaling
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `scaling` block"))?;
    Ok(block.schedule(p, dp)?.0)
}

fn write_output(dir: &Path, name: &str, content: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn json_doc<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn csv_preamble(hash: &str, seed: u64) -> String {
    format!("# config_sha256={hash}\n# seed={seed}\n")
}

#[derive(Serialize)]
struct ParamsReport<'a> {
    config_sha256: &'a str,
    seed: u64,
    derived: &'a DerivedParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<&'a ScalingSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    validity: Option<&'a ValidityReport>,
}

fn cmd_params(cfg: &ExperimentConfig, hash: &str, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let p = regime_of(cfg)?;
    let dp = derive_params(p)?;
    let mut schedule = None;
    let mut validity = None;
    if let Some(block) = &cfg.scaling {
        let (sched, report) = block.schedule(p, &dp)?;
        schedule = Some(sched);
        validity = report;
    }
    let report = ParamsReport {
        config_sha256: hash,
        seed: cfg.seed.unwrap(),
        derived: &dp,
        schedule: schedule.as_ref(),
        validity: validity.as_ref(),
    };
    Ok(vec![write_output(out, "params.json", &json_doc(&report))?])
}

fn cmd_wmf(cfg: &ExperimentConfig, hash: &str, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let block = cfg
        .wmf
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `wmf` block"))?;
    if block.curves.is_empty() {
        bail!("wmf needs at least one curve");
    }
    for curve in &block.curves {
        if curve.label.is_empty() || curve.label.contains([',', '\n', '\r']) {
            bail!("curve label {:?} is not CSV-safe", curve.label);
        }
    }
    if !(block.r.start > 0.0) {
        bail!("the identity curve diverges at r = 0; start the grid above it");
    }
    let rs = block.r.values()?;
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(block.curves.len());
    for curve in &block.curves {
        let kernel = curve.kernel()?;
        let scale = match block.normalize_at {
            Some(r0) => wm_function(&kernel, block.mu, curve.gamma, curve.beta, r0)?,
            None => 1.0,
        };
        let mut col = Vec::with_capacity(rs.len());
        for &r in &rs {
            col.push(wm_function(&kernel, block.mu, curve.gamma, curve.beta, r)? / scale);
        }
        columns.push(col);
    }
    let mut csv = csv_preamble(hash, cfg.seed.unwrap());
    csv.push('r');
    for curve in &block.curves {
        write!(csv, ",{}", curve.label).unwrap();
    }
    csv.push('\n');
    for (i, r) in rs.iter().enumerate() {
        write!(csv, "{r}").unwrap();
        for col in &columns {
            write!(csv, ",{}", col[i]).unwrap();
        }
        csv.push('\n');
    }
    Ok(vec![write_output(out, "wmf.csv", &csv)?])
}

#[derive(Serialize)]
struct OutcomeCounts {
    coal: u64,
    killed: u64,
    survived: u64,
}

#[derive(Serialize)]
struct Comparison {
    formula: f64,
    z_score: f64,
}

#[derive(Serialize)]
struct DualReport<'a> {
    config_sha256: &'a str,
    seed: u64,
    #[serde(rename = "N")]
    n: u64,
    delta: f64,
    n_eta: f64,
    t: f64,
    reps: u64,
    estimate: crate::dual::EstimateWithCI,
    outcomes: OutcomeCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

fn cmd_dual(cfg: &ExperimentConfig, hash: &str, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let p = regime_of(cfg)?;
    let dp = derive_params(p)?;
    let sched = schedule_of(cfg, p, &dp)?;
    let block = cfg
        .dual
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `dual` block"))?;
    let seed = cfg.seed.unwrap();
    let base = command_stream(seed, "dual");
    let phi = block.start1.sampler()?;
    let psi = block.start2.sampler()?;
    let (estimate, records) =
        estimate_ibd_logged(&base, &*phi, &*psi, block.t, p, &sched, block.reps)?;
    let mut outcomes = OutcomeCounts {
        coal: 0,
        killed: 0,
        survived: 0,
    };
    for r in &records {
        match r.outcome {
            TrialOutcome::Coal => outcomes.coal += 1,
            TrialOutcome::Killed => outcomes.killed += 1,
            TrialOutcome::Survived => outcomes.survived += 1,
        }
    }
    let comparison = if block.compare {
        let spec = dp.kernel_spec(p.d)?;
        let f1 = block.start1.indicator()?;
        let f2 = block.start2.indicator()?;
        let pairing = wm_pairing(&spec, p.mu, dp.gamma, dp.beta, &f1, &f2)?;
        // the Monte Carlo samples the blocks as probability densities, so
        // the pairing of the indicators is divided by the block masses
        let formula = pairing / (block.start1.width() * block.start2.width());
        let z_score = (estimate.estimate - formula) / estimate.std_error;
        Some(Comparison { formula, z_score })
    } else {
        None
    };
    let report = DualReport {
        config_sha256: hash,
        seed,
        n: sched.n,
        delta: sched.delta,
        n_eta: sched.n_eta(),
        t: block.t,
        reps: block.reps,
        estimate,
        outcomes,
        comparison,
    };
    let mut written = vec![write_output(out, "dual.json", &json_doc(&report))?];
    if block.trials_csv {
        let mut csv = csv_preamble(hash, seed);
        csv.push_str("rep,outcome,coal_time,n_events\n");
        for r in &records {
            let coal_time = r.coal_time.map(|t| t.to_string()).unwrap_or_default();
            writeln!(csv, "{},{},{},{}", r.rep, r.outcome.as_str(), coal_time, r.n_events)
                .unwrap();
        }
        written.push(write_output(out, "dual_trials.csv", &csv)?);
    }
    Ok(written)
}

fn cmd_forward(cfg: &ExperimentConfig, hash: &str, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let p = regime_of(cfg)?;
    let dp = derive_params(p)?;
    let sched = schedule_of(cfg, p, &dp)?;
    let block = cfg
        .forward
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `forward` block"))?;
    let mode = match block.mode {
        ModeSpec::TwoAllele => Mode::TwoAllele,
        ModeSpec::Atomic => Mode::Atomic,
    };
    let init = block.init.build(p.d)?;
    let mu = match mode {
        Mode::TwoAllele => 0.0,
        Mode::Atomic => p.mu,
    };
    if mode == Mode::TwoAllele && p.mu > 0.0 {
        bail!("two-allele forward runs need mu = 0 in the regime");
    }
    let mut field = new_field(mode, p.d, block.l, block.grid, &init, mu)?;
    let mut rng = command_stream(cfg.seed.unwrap(), "forward");
    let [lo, hi] = block.window;
    let axes = p.d.get() as usize;
    let mut rows: Vec<(f64, usize, Point, f64)> = Vec::new();
    let n_events = {
        let mut obs = vec![Observer::new(block.snapshot_times.clone(), |t, f| {
            for idx in 0..f.cell_count() {
                let value = match f.mode() {
                    Mode::TwoAllele => f.frequency(idx),
                    Mode::Atomic => f.window_mass(idx, lo, hi),
                };
                rows.push((t, idx, f.cell_center(idx), value));
            }
        })];
        run_forward(&mut rng, &mut field, p, &sched, block.t_end, &mut obs)?
    };
    let mut csv = csv_preamble(hash, cfg.seed.unwrap());
    writeln!(csv, "# events={n_events}").unwrap();
    csv.push_str("time,cell");
    for axis in 0..axes {
        write!(csv, ",x{axis}").unwrap();
    }
    csv.push_str(",value\n");
    for (t, idx, center, value) in &rows {
        write!(csv, "{t},{idx}").unwrap();
        for c in center.iter().take(axes) {
            write!(csv, ",{c}").unwrap();
        }
        writeln!(csv, ",{value}").unwrap();
    }
    Ok(vec![write_output(out, "forward_snapshots.csv", &csv)?])
}

#[derive(Serialize)]
struct QvReport<'a> {
    config_sha256: &'a str,
    seed: u64,
    #[serde(rename = "N")]
    n: u64,
    delta: f64,
    t: f64,
    reps: u64,
    estimate: crate::dual::EstimateWithCI,
    #[serde(skip_serializing_if = "Option::is_none")]
    formula: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
}

fn cmd_qv(cfg: &ExperimentConfig, hash: &str, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let p = regime_of(cfg)?;
    let dp = derive_params(p)?;
    let sched = schedule_of(cfg, p, &dp)?;
    let block = cfg
        .qv
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `qv` block"))?;
    let phi = block.phi.build(p.d)?;
    let window = (block.window[0], block.window[1]);
    let seed = cfg.seed.unwrap();
    let base = command_stream(seed, "qv");
    let estimate = forward::empirical_qv(
        &base, p, &sched, block.l, block.grid, &phi, window, block.t_end, block.reps,
    )?;
    let (formula, ratio) = if block.compare {
        let q = q_pairing(p.d, dp.beta, dp.gamma, &phi, window)?;
        (Some(q), Some(estimate.estimate / q))
    } else {
        (None, None)
    };
    let report = QvReport {
        config_sha256: hash,
        seed,
        n: sched.n,
        delta: sched.delta,
        t: block.t_end,
        reps: block.reps,
        estimate,
        formula,
        ratio,
    };
    Ok(vec![write_output(out, "qv.json", &json_doc(&report))?])
}

fn cmd_gencheck(cfg: &ExperimentConfig, hash: &str, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let block = cfg
        .gencheck
        .as_ref()
        .ok_or_else(|| anyhow!("this command needs a `gencheck` block"))?;
    let d1 = Dimension::new(1)?;
    let phi = block.phi.build(d1)?;
    let regime = RegimeParams::one_tail(d1, block.u0, 0.0, block.a, block.b, 0.0)?;
    let dp = derive_params(&regime)?;
    let spec = dp.kernel_spec(d1)?;
    let grid = block.x.values()?;
    if block.deltas.is_empty() {
        bail!("gencheck needs at least one delta");
    }
    let mut csv = csv_preamble(hash, cfg.seed.unwrap());
    csv.push_str("delta,sup_error\n");
    for &delta in &block.deltas {
        let mut sup = 0.0f64;
        for &x in &grid {
            let point = [x, 0.0, 0.0];
            let limit = apply_d_alpha(&spec, &phi, &point)?;
            let prelimit = apply_l_n(block.u0, block.a, block.b, delta, &phi, &point)?;
            sup = sup.max((prelimit - limit).abs());
        }
        writeln!(csv, "{delta},{sup}").unwrap();
    }
    Ok(vec![write_output(out, "gencheck.csv", &csv)?])
}

/// Execute a parsed invocation; returns the written files.
pub fn execute(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("installing the worker pool")?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("--config is required"))?;
    let cfg = load_config(config_path, cli.seed)?;
    let hash = config_hash(&cfg);
    match cli.command {
        CommandKind::Params => cmd_params(&cfg, &hash, &cli.out),
        CommandKind::Wmf => cmd_wmf(&cfg, &hash, &cli.out),
        CommandKind::Dual => cmd_dual(&cfg, &hash, &cli.out),
        CommandKind::Forward => cmd_forward(&cfg, &hash, &cli.out),
        CommandKind::Qv => cmd_qv(&cfg, &hash, &cli.out),
        CommandKind::Gencheck => cmd_gencheck(&cfg, &hash, &cli.out),
    }
    .with_context(|| format!("running `{}`", cli.command.tag()))
}

/// Entry point for the binary: parse `std::env::args`, run, list outputs.
pub fn run() -> anyhow::Result<Vec<PathBuf>> {
    let cli = Cli::parse();
    execute(&cli)
}
