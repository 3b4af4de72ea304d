use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clinpred::data::{generate_synthetic_cohort, write_csv, GeneratorSpec};
use clinpred::pipeline::{
    cmd_evaluate, cmd_predict, cmd_run, emit_report, load_report, model_load, predictions_csv, write_evaluation,
    write_run, PipelineConfig, RunReport,
};
use clinpred::{Error, Result};

/// Clinical prediction modeling: generate cohorts, train and validate models,
/// apply saved models, and render reports.
#[derive(Parser)]
#[command(name = "clinpred", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's top-level `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort as CSV.
    Generate {
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
    },
    /// Split, select, tune, compare, and validate; writes reports and the model.
    Run {
        /// Score a saved model on a labelled CSV instead of training.
        #[arg(long, requires_all = ["model", "input"])]
        evaluate_only: bool,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Apply a saved model to a CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Re-render report files from a saved run report.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

fn out_path(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn summarize(report: &RunReport) {
    if let Some(t) = &report.training {
        println!("model comparison ({}, resampled):", report.metric.name());
        for c in &t.comparison {
            let mark = if c.model == t.selected { "*" } else { " " };
            println!(" {mark} {:<6} {:.4} (sd {:.4})  {}", c.model, c.mean, c.sd, c.hyper);
        }
    }
    println!("test set (n = {}):", report.test.n);
    for m in &report.test.metrics {
        match m.value {
            Some(v) => println!("   {:<22} {v:.4}", m.name),
            None => println!("   {:<22} NA", m.name),
        }
    }
    for n in report.notes.iter().chain(&report.test.notes) {
        println!("note: {n}");
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { rows } => {
            let out = out_path(cli, "cohort.csv");
            let ds = generate_synthetic_cohort(*rows, cli.seed.unwrap_or(0), &GeneratorSpec::default())?;
            write_csv(&ds, &out)?;
            println!("wrote {} rows to {}", ds.n_rows(), out.display());
        }
        Command::Run { evaluate_only: true, model, input } => {
            let (model, input) = (model.as_ref().expect("required"), input.as_ref().expect("required"));
            let file = model_load(model)?;
            let report = cmd_evaluate(&file, input)?;
            let dir = out_path(cli, "clinpred-eval");
            write_evaluation(&report, &dir)?;
            summarize(&report);
            println!("reports written to {}", dir.display());
        }
        Command::Run { .. } => {
            let path = cli.config.as_ref().ok_or_else(|| Error::Config("run needs --config".into()))?;
            let mut cfg = PipelineConfig::load(path)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(t) = cli.threads {
                cfg.threads = Some(t);
            }
            if let Some(out) = &cli.out {
                cfg.out = out.clone();
            }
            let output = cmd_run(&cfg)?;
            write_run(&output, &cfg.out)?;
            summarize(&output.report);
            println!("reports and model written to {}", cfg.out.display());
        }
        Command::Predict { model, input } => {
            let file = model_load(model)?;
            let preds = cmd_predict(&file, input)?;
            let out = out_path(cli, "predictions.csv");
            std::fs::write(&out, predictions_csv(&preds)?).map_err(|e| Error::io(&out, e))?;
            println!("wrote {} predictions to {}", preds.len(), out.display());
        }
        Command::Report { input } => {
            let report = load_report(input)?;
            let dir = out_path(cli, "clinpred-report");
            let manifest = emit_report(&report, &dir)?;
            println!("wrote {} files to {}", manifest.len(), dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
