use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pconf::harness::config::parse_list;
use pconf::harness::study::{format_table, run_noise_study, run_overlap_study};
use pconf::harness::{bound_report, evaluate_files, generate, train_single, ExperimentConfig, GenerateSpec, KeyValues, Method, SingleConfig};
use pconf::{Algorithm, LossKind, Result};

#[derive(Parser)]
#[command(name = "pconf", version, about = "Binary classification from positive data with confidence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Overlap,
    Noise,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset described by a key=value spec file.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one method on a CSV file.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        loss: Option<LossKind>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated penalties to choose from on a held-out split.
        #[arg(long)]
        lambda_grid: Option<String>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Evaluate a stored model on a labeled CSV file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Run a synthetic study and write trials.csv and summary.csv.
    Study {
        kind: StudyKind,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate the deviation and estimation error bounds for a linear class.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pi_plus: f64,
        #[arg(long)]
        c_r: f64,
        #[arg(long, default_value = "logistic")]
        loss: LossKind,
        #[arg(long)]
        c_w: f64,
        #[arg(long)]
        c_phi: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { spec, out } => {
            let spec = GenerateSpec::from_key_values(&KeyValues::load(&spec)?)?;
            let rows = generate(&spec, &out)?;
            log::info!("wrote {rows} rows to {}", out.display());
        }
        Command::Train {
            config,
            method,
            train,
            loss,
            lambda,
            lambda_grid,
            floor,
            epochs,
            lr,
            seed,
            algorithm,
            model_out,
        } => {
            let mut cfg = SingleConfig::new(Method::Pconf, PathBuf::new());
            if let Some(path) = config {
                cfg.apply(&KeyValues::load(&path)?)?;
            }
            // Flags take precedence over the config file.
            if let Some(grid) = lambda_grid {
                cfg.lambda_grid = parse_list("lambda-grid", &grid)?;
            }
            if let Some(v) = method {
                cfg.method = v;
            }
            if let Some(v) = train {
                cfg.train = v;
            }
            if let Some(v) = loss {
                cfg.loss = v;
            }
            if let Some(v) = lambda {
                cfg.lambda = v;
            }
            if let Some(v) = floor {
                cfg.floor = v;
            }
            if let Some(v) = epochs {
                cfg.optimizer.max_epochs = v;
            }
            if let Some(v) = lr {
                cfg.optimizer.step_size = v;
            }
            if let Some(v) = seed {
                cfg.optimizer.seed = v;
            }
            if let Some(v) = algorithm {
                cfg.optimizer.algorithm = v;
            }
            if let Some(v) = model_out {
                cfg.model_out = Some(v);
            }
            if cfg.train.as_os_str().is_empty() {
                return Err(pconf::Error::Domain("a training file is required (--train)".into()));
            }
            let (_, result) = train_single(&cfg)?;
            print!("{}", result.to_record());
        }
        Command::Eval { model, test } => {
            print!("{}", evaluate_files(&model, &test)?.to_record());
        }
        Command::Study {
            kind,
            config,
            trials,
            seed,
            out,
            epochs,
        } => {
            let mut cfg = match kind {
                StudyKind::Overlap => ExperimentConfig::overlap(),
                StudyKind::Noise => ExperimentConfig::noise(),
            };
            if let Some(path) = config {
                cfg.apply(&KeyValues::load(&path)?)?;
            }
            if let Some(v) = trials {
                cfg.trials = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = out {
                cfg.output = Some(v);
            }
            if let Some(v) = epochs {
                cfg.optimizer.max_epochs = v;
            }
            let outcome = match kind {
                StudyKind::Overlap => run_overlap_study(&cfg)?,
                StudyKind::Noise => run_noise_study(&cfg)?,
            };
            print!("{}", format_table(&outcome));
        }
        Command::Bound {
            n,
            pi_plus,
            c_r,
            loss,
            c_w,
            c_phi,
            delta,
        } => {
            print!("{}", bound_report(n, pi_plus, c_r, loss, c_w, c_phi, delta)?.to_record());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
