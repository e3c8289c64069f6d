use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hochschild::experiment::{ExperimentConfig, Task};
use hochschild::report::{render, Format};
use hochschild::{Error, PerturbationKind};

#[derive(Parser)]
#[command(name = "hochschild", version, about = "Hochschild cohomology and Hyers-type stability experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact cohomology dimensions up to degree n
    Cohomology(Flags),
    /// Repair a perturbed Pexider triple around a cocycle
    Repair(Flags),
    /// Repair a perturbed inner derivation (n = 1)
    Derivation(Flags),
    /// Repair a perturbed coboundary to a nearby potential
    CoboundaryRepair(Flags),
    /// Compare exact vanishing with approximate vanishing
    Vanishing(Flags),
    /// Contractibility and amenability probes
    Probe(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Table,
}

#[derive(Args)]
struct Flags {
    /// Experiment config (TOML); flags given on the command line override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algebra definition file
    #[arg(long, conflicts_with = "builtin")]
    algebra: Option<PathBuf>,
    /// Builtin algebra: m<k>, t<k>, dual-numbers
    #[arg(long)]
    builtin: Option<String>,
    /// Coefficient module: regular, dual, zero, zero:<dim>, or the file's module label
    #[arg(long)]
    module: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated perturbation sizes
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// bounded-smooth, oscillatory or coordinate-clip
    #[arg(long)]
    perturb: Option<String>,
    /// tcircle:COUNT, one-i, ball:COUNT:RADIUS or one
    #[arg(long)]
    lambda_set: Option<String>,
    /// basis or indices:i,j,...
    #[arg(long)]
    span: Option<String>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Defect samples per estimate
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: OutFormat,
    /// Exit with status 2 when a bound is violated
    #[arg(long)]
    strict: bool,
    /// Write the report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(task: Task, f: &Flags) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let cfg = ExperimentConfig::from_toml(&text)?;
            if cfg.task != task {
                return Err(Error::InvalidArgument(format!(
                    "config task {} does not match subcommand {task}",
                    cfg.task
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(task),
    };
    if let Some(p) = &f.algebra {
        cfg.algebra = Some(p.clone());
        cfg.builtin = None;
    }
    if let Some(b) = &f.builtin {
        cfg.builtin = Some(b.clone());
        cfg.algebra = None;
    }
    if let Some(v) = &f.module {
        cfg.module = v.clone();
    }
    if let Some(v) = f.n {
        cfg.n = v;
    }
    if let Some(v) = &f.eps {
        cfg.eps = v.clone();
    }
    if let Some(v) = &f.perturb {
        cfg.perturb = v.parse::<PerturbationKind>()?;
    }
    if let Some(v) = &f.lambda_set {
        cfg.lambda_set = v.clone();
    }
    if let Some(v) = &f.span {
        cfg.span = v.clone();
    }
    if let Some(v) = f.m_max {
        cfg.m_max = v;
    }
    if let Some(v) = f.tol {
        cfg.tol = v;
    }
    if f.seed.is_some() {
        cfg.seed = f.seed;
    }
    if let Some(v) = f.trials {
        cfg.trials = v;
    }
    if let Some(v) = f.samples {
        cfg.samples = v;
    }
    Ok(cfg)
}

fn execute(task: Task, f: &Flags) -> Result<bool, Error> {
    let cfg = build_config(task, f).map_err(|e| e.at("config"))?;
    let report = hochschild::run(&cfg)?;
    let format = match f.format {
        OutFormat::Json => Format::Json,
        OutFormat::Table => Format::Table,
    };
    let text = render(&report, format);
    match &f.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(report.verdict.holds)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, flags) = match &cli.command {
        Command::Cohomology(f) => (Task::Cohomology, f),
        Command::Repair(f) => (Task::Repair, f),
        Command::Derivation(f) => (Task::Derivation, f),
        Command::CoboundaryRepair(f) => (Task::CoboundaryRepair, f),
        Command::Vanishing(f) => (Task::Vanishing, f),
        Command::Probe(f) => (Task::Probe, f),
    };
    match execute(task, flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if flags.strict => {
            eprintln!("hochschild: a bound was violated");
            ExitCode::from(2)
        }
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hochschild: {e}");
            ExitCode::from(1)
        }
    }
}
