//! Experiment runner: convergence runs, sweeps over qubit count and layer
//! count, gradient-variance scans, noise sweeps and depth reports.

mod emit;
pub mod stats;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_ansatz, AnsatzConfig, AnsatzKind};
use crate::circuits::Circuit;
use crate::cost::{gradient_variance, CostContext, EvaluationMode};
use crate::error::{validation, Error, Result};
use crate::noise::{build_calibration_matrix, ReadoutNoiseModel};
use crate::optim::{train, AdamConfig, Optimizer, QngConfig, TrainOptions, TrainingTrace};
use crate::rng::derive_seed;
use crate::targets::{completed_unitary, parse_custom_target, target_circuit, target_unitary, TargetName, TargetUnitary};

pub use emit::{emit, to_csv, to_json};
pub use stats::LinearFit;

/// Cost below which a run counts as converged in the depth report.
pub const CONVERGED_BELOW: f64 = 0.05;

// Sub-stream tags under a repeat seed.
const TAG_CALIBRATION: u64 = 1;
const TAG_SHOT_EVAL: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TrainOnce,
    SweepN,
    SweepL,
    BpVariance,
    NoiseSweep,
    DepthReport,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::TrainOnce,
        ExperimentKind::SweepN,
        ExperimentKind::SweepL,
        ExperimentKind::BpVariance,
        ExperimentKind::NoiseSweep,
        ExperimentKind::DepthReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TrainOnce => "train_once",
            ExperimentKind::SweepN => "sweep_n",
            ExperimentKind::SweepL => "sweep_l",
            ExperimentKind::BpVariance => "bp_variance",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::DepthReport => "depth_report",
        }
    }

    pub fn subcommand(self) -> &'static str {
        match self {
            ExperimentKind::TrainOnce => "train",
            ExperimentKind::SweepN => "sweep-n",
            ExperimentKind::SweepL => "sweep-l",
            ExperimentKind::BpVariance => "bp",
            ExperimentKind::NoiseSweep => "noise",
            ExperimentKind::DepthReport => "depth",
        }
    }

    /// The plotted quantity each kind reproduces.
    pub fn description(self) -> &'static str {
        match self {
            ExperimentKind::TrainOnce => "cost versus iteration for one target and ansatz (GHZ, W and AME case studies)",
            ExperimentKind::SweepN => "mean final distance versus qubit count at fixed layers",
            ExperimentKind::SweepL => "mean final distance versus layer count at fixed qubit count",
            ExperimentKind::BpVariance => "log-variance of one cost partial derivative versus qubit count, with a line fit",
            ExperimentKind::NoiseSweep => "final distance versus readout error rate, with and without mitigation",
            ExperimentKind::DepthReport => "ansatz depth against the tabulated formula and the target circuit depth",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One line per experiment kind: name, CLI subcommand, plotted quantity.
pub fn experiment_listing() -> String {
    ExperimentKind::ALL
        .iter()
        .map(|k| format!("{:<13} {:<9} {}\n", k.name(), k.subcommand(), k.description()))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Qng,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "qng" => Ok(OptimizerKind::Qng),
            other => Err(validation(format!("unknown optimizer `{other}` (expected adam or qng)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    Exact,
    Shots,
}

impl FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(ModeKind::Exact),
            "shots" => Ok(ModeKind::Shots),
            other => Err(validation(format!("unknown mode `{other}` (expected exact or shots)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(validation(format!("unknown format `{other}` (expected json or csv)"))),
        }
    }
}

/// Declarative description of one experiment. Loaded from a `key = value`
/// config file; every key is optional except `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub target: TargetName,
    /// Amplitude file for `target = "custom"`.
    pub custom_target: Option<PathBuf>,
    pub qubits: Vec<usize>,
    pub ansatz: AnsatzKind,
    pub layers: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Metric shift for QNG.
    pub regularization: f64,
    pub mode: ModeKind,
    pub shots: u64,
    pub iterations: usize,
    pub repeats: usize,
    /// Readout error rates; noise sweeps only.
    pub eps: Vec<f64>,
    /// Also run each noisy point with calibration-matrix mitigation.
    pub mitigate: bool,
    pub calibration_shots: u64,
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub convergence_threshold: Option<f64>,
    pub bp_samples: usize,
    pub bp_param: usize,
    /// Depth report only: targets and ansatz kinds to pair.
    pub targets: Option<Vec<TargetName>>,
    pub ansatze: Option<Vec<AnsatzKind>>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::TrainOnce,
            target: TargetName::Ghz,
            custom_target: None,
            qubits: vec![3],
            ansatz: AnsatzKind::G2,
            layers: vec![2],
            optimizer: OptimizerKind::Adam,
            learning_rate: 0.1,
            regularization: 1e-3,
            mode: ModeKind::Exact,
            shots: 10_000,
            iterations: 100,
            repeats: 10,
            eps: Vec::new(),
            mitigate: false,
            calibration_shots: 10_000,
            seed: 0,
            jobs: 0,
            convergence_threshold: None,
            bp_samples: 200,
            bp_param: 0,
            targets: None,
            ansatze: None,
            out: None,
            format: OutputFormat::Json,
        }
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn evaluation_mode(&self) -> EvaluationMode {
        match self.mode {
            ModeKind::Exact => EvaluationMode::Exact,
            ModeKind::Shots => EvaluationMode::Shots { shots: self.shots, seed: self.seed },
        }
    }

    pub fn optimizer_config(&self) -> Optimizer {
        match self.optimizer {
            OptimizerKind::Adam => Optimizer::Adam(AdamConfig { learning_rate: self.learning_rate, ..AdamConfig::default() }),
            OptimizerKind::Qng => {
                Optimizer::Qng(QngConfig { learning_rate: self.learning_rate, regularization: self.regularization })
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let kind = self.kind;
        let single = |name: &str, v: &[usize]| -> Result<()> {
            if v.len() != 1 {
                return Err(validation(format!("{kind} takes exactly one {name} value, got {}", v.len())));
            }
            Ok(())
        };
        let nonempty = |name: &str, v: &[usize]| -> Result<()> {
            if v.is_empty() {
                return Err(validation(format!("{kind} needs at least one {name} value")));
            }
            Ok(())
        };
        match kind {
            TrainOnce => {
                single("qubits", &self.qubits)?;
                single("layers", &self.layers)?;
            }
            SweepN | BpVariance => {
                nonempty("qubits", &self.qubits)?;
                single("layers", &self.layers)?;
            }
            SweepL => {
                single("qubits", &self.qubits)?;
                nonempty("layers", &self.layers)?;
            }
            NoiseSweep => {
                single("qubits", &self.qubits)?;
                single("layers", &self.layers)?;
            }
            DepthReport => {}
        }
        if kind != NoiseSweep && (!self.eps.is_empty() || self.mitigate) {
            return Err(validation("error rates and mitigation apply to noise_sweep only"));
        }
        if kind == NoiseSweep {
            if self.eps.is_empty() {
                return Err(validation("noise_sweep needs at least one error rate"));
            }
            if self.mode != ModeKind::Shots {
                return Err(validation("noise_sweep samples measurements; set mode = \"shots\""));
            }
            for &e in &self.eps {
                ReadoutNoiseModel::uniform(e)?;
            }
            if self.calibration_shots == 0 {
                return Err(validation("calibration_shots must be positive"));
            }
        }
        if kind != DepthReport && (self.targets.is_some() || self.ansatze.is_some()) {
            return Err(validation("targets and ansatze lists apply to depth_report only"));
        }
        if kind == BpVariance && self.bp_samples < 2 {
            return Err(validation("bp_samples must be at least 2"));
        }
        if self.mode == ModeKind::Shots && self.shots == 0 {
            return Err(validation("shots must be positive"));
        }
        if matches!(kind, TrainOnce | SweepN | SweepL | NoiseSweep) && self.repeats == 0 {
            return Err(validation("repeats must be at least 1"));
        }
        if (self.target == TargetName::Custom) != self.custom_target.is_some() {
            return Err(validation("target = \"custom\" and custom_target must be given together"));
        }
        self.optimizer_config().validate()
    }

    fn load_target(&self, n_qubits: usize) -> Result<TargetUnitary> {
        match (&self.target, &self.custom_target) {
            (TargetName::Custom, Some(path)) => {
                let text = std::fs::read_to_string(path)?;
                completed_unitary(&parse_custom_target(&text, Some(n_qubits))?)
            }
            (name, _) => target_unitary(*name, n_qubits),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seed: u64,
    pub trace: Option<TrainingTrace>,
    /// Last recorded training cost, in the training mode.
    pub final_cost: Option<f64>,
    /// Distance of the final parameters on the exact statevector.
    pub exact_distance: Option<f64>,
    /// Distance of the final parameters from a fresh shot sample, under the
    /// same noise and mitigation as training.
    pub shot_distance: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_ok: usize,
    pub mean_final_cost: Option<f64>,
    pub std_final_cost: Option<f64>,
    pub mean_exact_distance: Option<f64>,
    pub std_exact_distance: Option<f64>,
    pub mean_shot_distance: Option<f64>,
    pub std_shot_distance: Option<f64>,
}

impl Summary {
    pub fn from_repeats(repeats: &[RepeatRecord]) -> Self {
        let col = |f: fn(&RepeatRecord) -> Option<f64>| {
            let v: Vec<f64> = repeats.iter().filter_map(f).collect();
            stats::mean_std(&v).unzip()
        };
        let (mean_final_cost, std_final_cost) = col(|r| r.final_cost);
        let (mean_exact_distance, std_exact_distance) = col(|r| r.exact_distance);
        let (mean_shot_distance, std_shot_distance) = col(|r| r.shot_distance);
        Self {
            n_ok: repeats.iter().filter(|r| r.error.is_none()).count(),
            mean_final_cost,
            std_final_cost,
            mean_exact_distance,
            std_exact_distance,
            mean_shot_distance,
            std_shot_distance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_qubits: usize,
    pub layers: usize,
    pub epsilon: Option<f64>,
    pub mitigated: bool,
    pub repeats: Vec<RepeatRecord>,
    pub summary: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpPoint {
    pub n_qubits: usize,
    pub variance: f64,
    pub ln_variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpResult {
    pub param_index: usize,
    pub samples: usize,
    pub points: Vec<BpPoint>,
    /// Line through `(N, ln Var)`; absent with fewer than two points.
    pub fit: Option<LinearFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub target: TargetName,
    pub n_qubits: usize,
    pub ansatz: AnsatzKind,
    pub layers: usize,
    pub dag_depth: usize,
    pub table_depth: usize,
    pub target_depth: Option<usize>,
    pub final_cost: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
    pub bp: Option<BpResult>,
    pub depth: Option<Vec<DepthRow>>,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    /// Zeroes every wall-clock field, leaving only reproducible content.
    pub fn without_timings(mut self) -> Self {
        self.wall_time_s = 0.0;
        for r in self.points.iter_mut().flat_map(|p| p.repeats.iter_mut()) {
            if let Some(t) = &mut r.trace {
                t.wall_time_s = 0.0;
            }
        }
        self
    }
}

/// Runs the experiment described by `config` on a pool of `config.jobs`
/// threads. Results come back in config order whatever the scheduling.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let start = Instant::now();
    let mut result = ExperimentResult {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        points: Vec::new(),
        bp: None,
        depth: None,
        wall_time_s: 0.0,
    };
    pool.install(|| -> Result<()> {
        match config.kind {
            ExperimentKind::TrainOnce | ExperimentKind::SweepN | ExperimentKind::SweepL | ExperimentKind::NoiseSweep => {
                result.points = run_points(config)?;
            }
            ExperimentKind::BpVariance => result.bp = Some(run_bp(config)?),
            ExperimentKind::DepthReport => result.depth = Some(depth_report_for(config)?),
        }
        Ok(())
    })?;
    result.wall_time_s = start.elapsed().as_secs_f64();
    Ok(result)
}

struct PointSpec {
    n_qubits: usize,
    layers: usize,
    epsilon: Option<f64>,
    mitigated: bool,
}

fn point_specs(config: &ExperimentConfig) -> Vec<PointSpec> {
    let mut specs = Vec::new();
    for &n in &config.qubits {
        for &l in &config.layers {
            if config.kind == ExperimentKind::NoiseSweep {
                for &e in &config.eps {
                    specs.push(PointSpec { n_qubits: n, layers: l, epsilon: Some(e), mitigated: false });
                    if config.mitigate {
                        specs.push(PointSpec { n_qubits: n, layers: l, epsilon: Some(e), mitigated: true });
                    }
                }
            } else {
                specs.push(PointSpec { n_qubits: n, layers: l, epsilon: None, mitigated: false });
            }
        }
    }
    specs
}

fn run_points(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let specs = point_specs(config);
    // Build circuits and targets up front so configuration errors abort
    // before any training starts.
    let mut shared = Vec::with_capacity(specs.len());
    for s in &specs {
        let ansatz = build_ansatz(&AnsatzConfig::new(config.ansatz, s.n_qubits, s.layers)?)?;
        shared.push((ansatz, Arc::new(config.load_target(s.n_qubits)?)));
    }
    let tasks: Vec<(usize, usize)> = (0..specs.len()).flat_map(|p| (0..config.repeats).map(move |r| (p, r))).collect();
    let records: Vec<RepeatRecord> = tasks
        .par_iter()
        .map(|&(p, r)| {
            let (ansatz, target) = &shared[p];
            run_repeat(config, &specs[p], ansatz, target, r)
        })
        .collect();
    let mut records = records.into_iter();
    Ok(specs
        .into_iter()
        .map(|s| {
            let repeats: Vec<RepeatRecord> = records.by_ref().take(config.repeats).collect();
            SweepPoint {
                n_qubits: s.n_qubits,
                layers: s.layers,
                epsilon: s.epsilon,
                mitigated: s.mitigated,
                summary: Summary::from_repeats(&repeats),
                repeats,
            }
        })
        .collect())
}

fn repeat_context(
    config: &ExperimentConfig,
    spec: &PointSpec,
    ansatz: &Circuit,
    target: &Arc<TargetUnitary>,
    seed: u64,
    mode: EvaluationMode,
) -> Result<CostContext> {
    let mut ctx = CostContext::new(ansatz.clone(), (**target).clone(), mode)?;
    if let Some(eps) = spec.epsilon {
        let model = ReadoutNoiseModel::uniform(eps)?;
        ctx = ctx.with_noise(model.clone())?;
        if spec.mitigated {
            let cal = build_calibration_matrix(
                spec.n_qubits,
                &model,
                config.calibration_shots,
                derive_seed(seed, &[TAG_CALIBRATION]),
            )?;
            ctx = ctx.with_mitigation(Arc::new(cal))?;
        }
    }
    Ok(ctx)
}

/// Repeat `r` trains from seed `(base, r)`; its shot streams and calibration
/// hang off the same seed, so a point's repeats are independent of each other
/// and of scheduling.
fn run_repeat(config: &ExperimentConfig, spec: &PointSpec, ansatz: &Circuit, target: &Arc<TargetUnitary>, r: usize) -> RepeatRecord {
    let seed = derive_seed(config.seed, &[r as u64]);
    let mut record = RepeatRecord {
        repeat: r,
        seed,
        trace: None,
        final_cost: None,
        exact_distance: None,
        shot_distance: None,
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let mode = match config.mode {
            ModeKind::Exact => EvaluationMode::Exact,
            ModeKind::Shots => EvaluationMode::Shots { shots: config.shots, seed },
        };
        let ctx = repeat_context(config, spec, ansatz, target, seed, mode)?;
        let opts = TrainOptions { iterations: config.iterations, seed, convergence_threshold: config.convergence_threshold };
        let trace = train(&ctx, &config.optimizer_config(), &opts)?;
        record.final_cost = Some(trace.final_cost());
        record.exact_distance = Some(ctx.exact().cost(&trace.theta_final)?);
        let shot_ctx = match config.mode {
            ModeKind::Shots => ctx.with_seed(derive_seed(seed, &[TAG_SHOT_EVAL])),
            ModeKind::Exact => {
                let mode = EvaluationMode::Shots { shots: config.shots, seed: derive_seed(seed, &[TAG_SHOT_EVAL]) };
                repeat_context(config, spec, ansatz, target, seed, mode)?
            }
        };
        record.shot_distance = Some(shot_ctx.cost(&trace.theta_final)?);
        record.error = trace.error.clone();
        record.trace = Some(trace);
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("repeat {r} at N={} L={} failed: {e}", spec.n_qubits, spec.layers);
        record.error = Some(e.to_string());
    }
    record
}

fn run_bp(config: &ExperimentConfig) -> Result<BpResult> {
    let layers = config.layers[0];
    let mut jobs = Vec::new();
    for &n in &config.qubits {
        let ansatz = build_ansatz(&AnsatzConfig::new(config.ansatz, n, layers)?)?;
        jobs.push((n, ansatz, config.load_target(n)?));
    }
    let points = jobs
        .par_iter()
        .map(|(n, ansatz, target)| {
            let variance = gradient_variance(ansatz, target, config.bp_param, config.bp_samples, derive_seed(config.seed, &[*n as u64]))?;
            Ok(BpPoint { n_qubits: *n, variance, ln_variance: variance.ln() })
        })
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<&BpPoint> = points.iter().filter(|p| p.ln_variance.is_finite()).collect();
    let x: Vec<f64> = usable.iter().map(|p| p.n_qubits as f64).collect();
    let y: Vec<f64> = usable.iter().map(|p| p.ln_variance).collect();
    Ok(BpResult { param_index: config.bp_param, samples: config.bp_samples, fit: stats::linear_fit(&x, &y), points })
}

fn depth_report_for(config: &ExperimentConfig) -> Result<Vec<DepthRow>> {
    let targets = config.targets.clone().unwrap_or_else(|| vec![config.target]);
    let ansatze = config.ansatze.clone().unwrap_or_else(|| vec![config.ansatz]);
    let mut pairs = Vec::new();
    for &t in &targets {
        for &kind in &ansatze {
            for &n in &config.qubits {
                for &l in &config.layers {
                    pairs.push((t, AnsatzConfig { kind, n_qubits: n, layers: l }));
                }
            }
        }
    }
    let opts = TrainOptions { iterations: config.iterations, seed: derive_seed(config.seed, &[0]), convergence_threshold: None };
    depth_report(&pairs, &config.optimizer_config(), &opts)
}

/// Depth accounting for each `(target, ansatz)` pair, with one exact-mode
/// training run to record whether the ansatz reaches the target. Pairs whose
/// target or ansatz does not exist at that size are skipped.
pub fn depth_report(pairs: &[(TargetName, AnsatzConfig)], optimizer: &Optimizer, opts: &TrainOptions) -> Result<Vec<DepthRow>> {
    let usable: Vec<&(TargetName, AnsatzConfig)> = pairs
        .iter()
        .filter(|(t, c)| c.validate().is_ok() && *t != TargetName::Custom && target_unitary(*t, c.n_qubits).is_ok())
        .collect();
    usable
        .par_iter()
        .map(|(t, cfg)| {
            let ansatz = build_ansatz(cfg)?;
            let dag_depth = ansatz.dag_depth();
            let target = target_unitary(*t, cfg.n_qubits)?;
            let ctx = CostContext::new(ansatz, target, EvaluationMode::Exact)?;
            let trace = train(&ctx, optimizer, opts)?;
            let final_cost = trace.error.is_none().then(|| trace.final_cost());
            Ok(DepthRow {
                target: *t,
                n_qubits: cfg.n_qubits,
                ansatz: cfg.kind,
                layers: cfg.layers,
                dag_depth,
                table_depth: cfg.table_depth(),
                target_depth: target_circuit(*t, cfg.n_qubits).map(|c| c.circuit().dag_depth()),
                final_cost,
                converged: final_cost.is_some_and(|c| c < CONVERGED_BELOW),
            })
        })
        .collect()
}
