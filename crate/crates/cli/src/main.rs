use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dfcn_cli::commands::{cmd_ablation, cmd_gen_data, cmd_gradcheck, cmd_report, cmd_subset, cmd_sweep, GenDataArgs};
use dfcn_cli::config::{ExperimentConfig, Overrides};
use dfcn_core::models::ModelKind;
use dfcn_core::Execution;

#[derive(Parser, Debug)]
#[command(name = "dfcn", version, about = "Masked-input evaluation of incomplete-data classifiers")]
struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides paths.out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated model kinds, e.g. DFCN,RF.
    #[arg(long, global = true, value_delimiter = ',')]
    kinds: Option<Vec<ModelKind>>,
    /// Comma-separated IMP values.
    #[arg(long, global = true, value_delimiter = ',')]
    imp_grid: Option<Vec<f64>>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train every kind over the IMP grid and select on the masked validation set.
    Sweep,
    /// Score the selected models on the masked test set; per-length AUC and DeLong tests.
    Ablation,
    /// Evaluate the selected models on one feature subset.
    Subset {
        #[arg(long)]
        subset: String,
        /// Also train models that only ever see the subset.
        #[arg(long)]
        retrain: bool,
    },
    /// Rebuild tables and plot series from the score dumps.
    Report,
    /// Finite-difference check of backpropagation on random networks.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Write a synthetic train.csv and test.csv.
    GenData {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        train_records: Option<usize>,
        #[arg(long)]
        test_records: Option<usize>,
    },
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        kinds: cli.kinds.clone(),
        imp_grid: cli.imp_grid.clone(),
        jobs: cli.jobs,
    });
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &ExperimentConfig) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match &cli.command {
        Command::Sweep => {
            let o = cmd_sweep(cfg, exec)?;
            for (k, p) in &o.selection {
                println!("{k}: optimal IMP {} (masked validation AUC {:.4})", p.optimal.imp, p.optimal.masked_val_auc);
            }
        }
        Command::Ablation => {
            let o = cmd_ablation(cfg, exec)?;
            for c in &o.report.curves {
                println!("{}: mean AUC over lengths {:.4}", c.model, c.mean_auc);
            }
        }
        Command::Subset { subset, retrain } => {
            let o = cmd_subset(cfg, subset, *retrain, exec)?;
            for r in &o.rows {
                let star = if r.significantly_lower { "*" } else { "" };
                println!("{}: AUC {:.4}{star} (n = {})", r.model, r.auc, r.samples);
            }
        }
        Command::Report => {
            for p in cmd_report(cfg, exec)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Gradcheck { cases } => {
            let s = cmd_gradcheck(*cases, cfg.seed)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
            if !s.failures.is_empty() {
                anyhow::bail!("{} of {} cases exceed relative error {}", s.failures.len(), s.cases, s.tolerance);
            }
        }
        Command::GenData {
            dir,
            train_records,
            test_records,
        } => {
            let (a, b) = cmd_gen_data(&GenDataArgs {
                dir: dir.clone(),
                seed: cfg.seed,
                train_records: *train_records,
                test_records: *test_records,
            })?;
            println!("wrote {} and {}", a.display(), b.display());
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn with_pool(jobs: usize, f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    if jobs == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?.install(f)
}

#[cfg(not(feature = "parallel"))]
fn with_pool(_jobs: usize, f: impl FnOnce() -> Result<()> + Send) -> Result<()> {
    f()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| with_pool(cfg.jobs, || run(&cli, &cfg)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let causes: Vec<String> = e.chain().skip(1).map(|c| c.to_string()).collect();
            let body = serde_json::json!({ "error": e.to_string(), "causes": causes });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
