use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vqsp::ansatz::AnsatzKind;
use vqsp::harness::{self, ExperimentConfig, ExperimentKind, ExperimentResult, ModeKind, OptimizerKind, OutputFormat};
use vqsp::targets::TargetName;
use vqsp::{Error, Result};

/// Variational state preparation experiments on a statevector simulator.
#[derive(Parser)]
#[command(name = "vqsp", version)]
struct Cli {
    /// Print the experiment kinds and exit.
    #[arg(long)]
    list_experiments: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one target/ansatz pair for a number of repeats.
    Train(CommonArgs),
    /// Sweep the qubit count at fixed layers.
    SweepN(CommonArgs),
    /// Sweep the layer count at fixed qubit count.
    SweepL(CommonArgs),
    /// Gradient variance against qubit count, with a line fit.
    Bp(CommonArgs),
    /// Readout-noise sweep, optionally with mitigation.
    Noise(CommonArgs),
    /// Ansatz and target circuit depths.
    Depth(CommonArgs),
    /// Print the experiment kinds and what each produces.
    ListExperiments,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Config file (`key = value`); flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ghz, w, ame or custom; a comma list for `depth`.
    #[arg(long)]
    target: Option<String>,
    /// Amplitude file for `--target custom` (lines of `index re im`).
    #[arg(long)]
    target_file: Option<PathBuf>,
    /// g2, g2_gn or g2_gn_w; a comma list for `depth`.
    #[arg(long)]
    ansatz: Option<String>,
    /// Comma list or inclusive range such as `2..8`.
    #[arg(long)]
    qubits: Option<String>,
    /// Comma list or inclusive range such as `1..5`.
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    mode: Option<ModeKind>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma list of readout error rates.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    mitigate: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Stop a run once its cost falls below this value.
    #[arg(long)]
    converge_below: Option<f64>,
    /// Samples per qubit count for `bp`.
    #[arg(long)]
    samples: Option<usize>,
    /// Parameter whose partial derivative `bp` scans.
    #[arg(long)]
    param: Option<usize>,
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Validation(format!("cannot read `{text}` as a list of integers"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn parse_list<T: std::str::FromStr<Err = Error>>(text: &str) -> Result<Vec<T>> {
    text.split(',').map(|s| s.parse()).collect()
}

fn build_config(kind: ExperimentKind, args: CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => defaults_for(kind),
    };
    cfg.kind = kind;
    if let Some(t) = &args.target {
        let names: Vec<TargetName> = parse_list(t)?;
        if kind == ExperimentKind::DepthReport {
            cfg.targets = Some(names);
        } else if let [one] = names[..] {
            cfg.target = one;
        } else {
            return Err(Error::Validation("only `depth` accepts several targets".into()));
        }
    }
    if let Some(p) = args.target_file {
        cfg.custom_target = Some(p);
    }
    if let Some(a) = &args.ansatz {
        let kinds: Vec<AnsatzKind> = parse_list(a)?;
        if kind == ExperimentKind::DepthReport {
            cfg.ansatze = Some(kinds);
        } else if let [one] = kinds[..] {
            cfg.ansatz = one;
        } else {
            return Err(Error::Validation("only `depth` accepts several ansatz kinds".into()));
        }
    }
    if let Some(q) = &args.qubits {
        cfg.qubits = parse_usize_list(q)?;
    }
    if let Some(l) = &args.layers {
        cfg.layers = parse_usize_list(l)?;
    }
    if let Some(o) = args.optimizer {
        cfg.optimizer = o;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(s) = args.shots {
        cfg.shots = s;
    }
    if let Some(i) = args.iters {
        cfg.iterations = i;
    }
    if let Some(r) = args.repeats {
        cfg.repeats = r;
    }
    if let Some(e) = &args.eps {
        cfg.eps = e
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Validation(format!("bad error rate `{s}`"))))
            .collect::<Result<_>>()?;
    }
    if args.mitigate {
        cfg.mitigate = true;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    if let Some(o) = args.out {
        cfg.out = Some(o);
    }
    if let Some(f) = args.format {
        cfg.format = f;
    }
    if let Some(c) = args.converge_below {
        cfg.convergence_threshold = Some(c);
    }
    if let Some(s) = args.samples {
        cfg.bp_samples = s;
    }
    if let Some(p) = args.param {
        cfg.bp_param = p;
    }
    Ok(cfg)
}

/// Per-subcommand defaults matching the standard experiment setups.
fn defaults_for(kind: ExperimentKind) -> ExperimentConfig {
    let base = ExperimentConfig::new(kind);
    match kind {
        ExperimentKind::TrainOnce => base,
        ExperimentKind::SweepN => ExperimentConfig { qubits: (2..=8).collect(), ..base },
        ExperimentKind::SweepL => ExperimentConfig { qubits: vec![8], layers: (1..=5).collect(), ..base },
        ExperimentKind::BpVariance => ExperimentConfig { qubits: (2..=7).collect(), ..base },
        ExperimentKind::NoiseSweep => ExperimentConfig {
            qubits: vec![5],
            optimizer: OptimizerKind::Qng,
            mode: ModeKind::Shots,
            eps: vec![0.0, 0.01, 0.02, 0.03, 0.04],
            ..base
        },
        ExperimentKind::DepthReport => ExperimentConfig {
            qubits: vec![3],
            layers: vec![1, 2],
            targets: Some(vec![TargetName::Ghz, TargetName::W, TargetName::Ame3]),
            ansatze: Some(AnsatzKind::ALL.to_vec()),
            ..base
        },
    }
}

fn summary_line(result: &ExperimentResult) -> String {
    if let Some(bp) = &result.bp {
        return match bp.fit {
            Some(f) => format!("ln-variance slope {:.3}, intercept {:.3}, R² {:.3}", f.slope, f.intercept, f.r_squared),
            None => "too few points for a fit".into(),
        };
    }
    if let Some(rows) = &result.depth {
        return format!("{} depth rows", rows.len());
    }
    result
        .points
        .iter()
        .map(|p| {
            let eps = p.epsilon.map(|e| format!(" eps={e}{}", if p.mitigated { " mitigated" } else { "" })).unwrap_or_default();
            let mean = p.summary.mean_final_cost.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
            format!("N={} L={}{eps}: mean final cost {mean}", p.n_qubits, p.layers)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn execute(kind: ExperimentKind, args: CommonArgs) -> Result<()> {
    let cfg = build_config(kind, args)?;
    let result = harness::run(&cfg)?;
    match &cfg.out {
        Some(path) => harness::emit(&result, cfg.format, path)?,
        None => match cfg.format {
            OutputFormat::Json => println!("{}", harness::to_json(&result)?),
            OutputFormat::Csv => print!("{}", harness::to_csv(&result)),
        },
    }
    eprintln!("{}", summary_line(&result));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        _ if cli.list_experiments => {
            print!("{}", harness::experiment_listing());
            return ExitCode::SUCCESS;
        }
        None => {
            eprintln!("error: no subcommand given (see --help)");
            return ExitCode::FAILURE;
        }
        Some(Command::ListExperiments) => {
            print!("{}", harness::experiment_listing());
            return ExitCode::SUCCESS;
        }
        Some(Command::Train(a)) => (ExperimentKind::TrainOnce, a),
        Some(Command::SweepN(a)) => (ExperimentKind::SweepN, a),
        Some(Command::SweepL(a)) => (ExperimentKind::SweepL, a),
        Some(Command::Bp(a)) => (ExperimentKind::BpVariance, a),
        Some(Command::Noise(a)) => (ExperimentKind::NoiseSweep, a),
        Some(Command::Depth(a)) => (ExperimentKind::DepthReport, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
