use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dlcda::data::{make_synthetic, save_features, save_labels, FeatureFormat, SyntheticConfig};
use dlcda::experiment::{run_experiment, ExperimentConfig, ExperimentError, FileSpec, ReportFormat};
use dlcda::{KernelChoice, Variant};

#[derive(Parser)]
#[command(name = "dlcda", version, about = "Discriminative label consistent domain adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its reports.
    Run(RunArgs),
    /// Print an experiment config (defaults plus any overrides) as JSON.
    Config(RunArgs),
    /// Write the synthetic four-class domains as feature and label files.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    None,
    Linear,
    Rbf,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    source_features: Option<PathBuf>,
    #[arg(long)]
    source_labels: Option<PathBuf>,
    #[arg(long)]
    target_features: Option<PathBuf>,
    #[arg(long)]
    target_labels: Option<PathBuf>,
    /// Use the synthetic four-class domains instead of files.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, value_parser = clap::value_parser!(Variant))]
    variant: Option<Variant>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Outer iterations.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// RBF bandwidth; implies `--kernel rbf`. Omit for the median heuristic.
    #[arg(long)]
    gamma: Option<f64>,
    /// Z-score every feature within each domain.
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of json,csv,svg.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(ReportFormat))]
    formats: Option<Vec<ReportFormat>>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    samples_per_class: Option<usize>,
    #[arg(long, default_value = "csv", value_parser = clap::value_parser!(FeatureFormat))]
    format: FeatureFormat,
}

fn file_spec(slot: &mut Option<FileSpec>, features: &Option<PathBuf>, labels: &Option<PathBuf>) {
    if features.is_none() && labels.is_none() {
        return;
    }
    let spec = slot.get_or_insert_with(|| FileSpec {
        features: PathBuf::new(),
        labels: None,
        format: None,
    });
    if let Some(f) = features {
        spec.features = f.clone();
        spec.format = None;
    }
    if let Some(l) = labels {
        spec.labels = Some(l.clone());
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None if args.synthetic => ExperimentConfig::synthetic_benchmark(),
        None => ExperimentConfig::default(),
    };
    if args.synthetic {
        cfg.synthetic.get_or_insert_with(SyntheticConfig::default);
        cfg.source = None;
        cfg.target = None;
    }
    let uses_files = [&args.source_features, &args.source_labels, &args.target_features, &args.target_labels]
        .iter()
        .any(|a| a.is_some());
    if uses_files {
        if args.synthetic {
            return Err(ExperimentError::Config("--synthetic cannot be combined with data files".into()));
        }
        cfg.synthetic = None;
        file_spec(&mut cfg.source, &args.source_features, &args.source_labels);
        file_spec(&mut cfg.target, &args.target_features, &args.target_labels);
    }
    for spec in [&cfg.source, &cfg.target].into_iter().flatten() {
        if spec.features.as_os_str().is_empty() {
            return Err(ExperimentError::Config("a labels file was given without its feature file".into()));
        }
    }
    if let Some(task) = &args.task {
        cfg.task = task.clone();
    }
    let solver = &mut cfg.solver;
    if let Some(v) = args.variant {
        solver.variant = v;
    }
    if let Some(k) = args.k {
        solver.k = k;
    }
    if let Some(a) = args.alpha {
        solver.alpha = a;
    }
    if let Some(b) = args.beta {
        solver.beta = b;
    }
    if let Some(t) = args.iters {
        solver.outer_iters = t;
    }
    match (args.kernel, args.gamma) {
        (Some(KernelArg::None | KernelArg::Linear), Some(_)) => {
            return Err(ExperimentError::Config("--gamma only applies to the rbf kernel".into()))
        }
        (Some(KernelArg::None), None) => solver.kernel = KernelChoice::None,
        (Some(KernelArg::Linear), None) => solver.kernel = KernelChoice::Linear,
        (Some(KernelArg::Rbf), None) => solver.kernel = KernelChoice::Rbf { gamma: None },
        (_, Some(g)) => solver.kernel = KernelChoice::Rbf { gamma: Some(g) },
        (None, None) => {}
    }
    if args.standardize {
        cfg.standardize = true;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(formats) = &args.formats {
        cfg.formats = formats.clone();
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), ExperimentError> {
    let cfg = build_config(args)?;
    let report = run_experiment(&cfg)?;
    let fmt = |v: Option<f64>| v.map(|a| format!("{a:.4}")).unwrap_or_else(|| "na".into());
    println!(
        "task={} variant={} final_accuracy={} baseline_accuracy={} wall_clock_ms={} out={}",
        report.task,
        report.variant,
        fmt(report.final_accuracy),
        fmt(report.baseline_accuracy),
        report.wall_clock_ms,
        cfg.output_dir.display()
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), ExperimentError> {
    let mut cfg = SyntheticConfig {
        seed: args.seed,
        ..SyntheticConfig::default()
    };
    if let Some(n) = args.samples_per_class {
        cfg.samples_per_class = n;
    }
    let (source, target) = make_synthetic(&cfg)?;
    std::fs::create_dir_all(&args.out).map_err(|source| ExperimentError::Output {
        path: args.out.clone(),
        source,
    })?;
    let ext = match args.format {
        FeatureFormat::Csv => "csv",
        FeatureFormat::Binary => "bin",
    };
    for (name, d) in [("source", &source), ("target", &target)] {
        save_features(d, &args.out.join(format!("{name}.{ext}")), args.format)?;
        save_labels(d.labels().unwrap_or_default(), &args.out.join(format!("{name}_labels.csv")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Config(args) => build_config(args).map(|cfg| {
            let _ = writeln!(std::io::stdout(), "{}", cfg.to_json());
        }),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
