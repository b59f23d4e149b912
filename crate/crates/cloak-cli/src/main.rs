//! `cloak` — run privacy-preserving LLM tasks from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use cloak_core::backend::AuditLog;
use cloak_core::eval::{load_dataset, DatasetKind};
use cloak_core::pipeline::bench::run_benchmark;
use cloak_core::pipeline::{AnswerReport, Assets, Pipeline, PipelineConfig};
use cloak_core::service;

#[derive(Parser)]
#[command(name = "cloak", version, about = "Privacy-preserving task pipeline for LLM backends")]
struct Cli {
    /// Pipeline configuration file (.json or .toml).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the blend weight between the embedding and keyword
    /// relevance views (0 ≤ alpha ≤ 1).
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Override the number of target domains to route to.
    #[arg(long, global = true)]
    k: Option<usize>,

    /// Override the refinement round cap.
    #[arg(long, global = true)]
    max_rounds: Option<usize>,

    /// Disable entity identification and anonymization.
    #[arg(long, global = true)]
    no_ampp: bool,

    /// Disable domain routing; a single generic expert answers.
    #[arg(long, global = true)]
    no_drke: bool,

    /// Disable the contradiction-driven refinement loop.
    #[arg(long, global = true)]
    no_dle: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one task and print the answer report.
    Run {
        /// Task text, or @path to read it from a file.
        #[arg(long)]
        task: String,
        /// Write the report JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a dataset and print aggregate metrics.
    Bench {
        /// Dataset file: a JSON array of instances.
        #[arg(long)]
        dataset: PathBuf,
        /// Dataset kind: tcw, lgp, kpp, or lpp.
        #[arg(long)]
        kind: String,
        /// Directory for per-instance reports and metrics files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP gateway.
    Serve {
        /// Listen address.
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
    /// Print the placeholder vocabulary recorded in a report file.
    InspectBox {
        /// Report JSON produced by `run`.
        report: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<Arc<PipelineConfig>> {
    let path = cli
        .config
        .as_deref()
        .context("--config <FILE> is required for this command")?;
    let mut config = PipelineConfig::load(path)
        .with_context(|| format!("loading config {}", path.display()))?;
    if let Some(alpha) = cli.alpha {
        config.alpha = alpha;
    }
    if let Some(k) = cli.k {
        config.k = k;
    }
    if let Some(max_rounds) = cli.max_rounds {
        config.max_rounds = max_rounds;
    }
    if cli.no_ampp {
        config.enable_ampp = false;
    }
    if cli.no_drke {
        config.enable_drke = false;
    }
    if cli.no_dle {
        config.enable_dle = false;
    }
    config.validate()?;
    Ok(Arc::new(config))
}

fn build_audit(config: &PipelineConfig) -> Result<Arc<AuditLog>> {
    Ok(match &config.paths.audit_log {
        Some(path) => AuditLog::with_sink(path)?,
        None => AuditLog::in_memory(),
    })
}

fn read_task(task: &str) -> Result<String> {
    if let Some(path) = task.strip_prefix('@') {
        return std::fs::read_to_string(path)
            .with_context(|| format!("reading task file {path}"))
            .map(|s| s.trim_end().to_string());
    }
    Ok(task.to_string())
}

fn emit_report(report: &AnswerReport, out: Option<&PathBuf>) -> Result<()> {
    let body = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => {
            std::fs::write(path, &body).with_context(|| format!("writing {}", path.display()))?;
            println!("report written to {}", path.display());
        }
        None => println!("{body}"),
    }
    Ok(())
}

async fn cmd_run(cli: &Cli, task: &str, out: Option<&PathBuf>) -> Result<ExitCode> {
    let config = load_config(cli)?;
    let assets = Assets::load(&config)?;
    let audit = build_audit(&config)?;
    let task_text = read_task(task)?;
    if task_text.trim().is_empty() {
        bail!("the task is empty");
    }
    let pipeline = Pipeline::from_config(config, assets, audit)?;
    match pipeline.run_task(&task_text).await {
        Ok(report) => {
            emit_report(&report, out)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(failure) => {
            eprintln!("pipeline failed: {}", failure.error);
            eprintln!(
                "partial report:\n{}",
                serde_json::to_string_pretty(failure.partial.as_ref())?
            );
            Ok(ExitCode::FAILURE)
        }
    }
}

async fn cmd_bench(
    cli: &Cli,
    dataset: &Path,
    kind: &str,
    out: Option<&PathBuf>,
) -> Result<ExitCode> {
    let config = load_config(cli)?;
    let assets = Assets::load(&config)?;
    let kind: DatasetKind = kind.parse()?;
    let instances = load_dataset(dataset, kind)?;
    let outcome = run_benchmark(config, assets, &instances, out.map(|p| p.as_path())).await?;
    print!("{}", outcome.metrics.render_table());
    if outcome.metrics.exceeded_failure_budget() {
        eprintln!(
            "{} of {} instances failed (over the 10% budget)",
            outcome.metrics.failed, outcome.metrics.total
        );
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

async fn cmd_serve(cli: &Cli, listen: &str) -> Result<ExitCode> {
    let config = load_config(cli)?;
    let assets = Assets::load(&config)?;
    let listener = tokio::net::TcpListener::bind(listen)
        .await
        .with_context(|| format!("binding {listen}"))?;
    println!("listening on http://{}", listener.local_addr()?);
    service::serve(config, assets, listener).await?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_inspect_box(report_path: &PathBuf) -> Result<ExitCode> {
    let body = std::fs::read_to_string(report_path)
        .with_context(|| format!("reading {}", report_path.display()))?;
    let report: AnswerReport = serde_json::from_str(&body)
        .with_context(|| format!("parsing report {}", report_path.display()))?;
    if report.privacy_box.is_empty() {
        println!("(the placeholder vocabulary is empty)");
        return Ok(ExitCode::SUCCESS);
    }
    let width = report
        .privacy_box
        .entries()
        .iter()
        .map(|e| e.placeholder.rendered().len())
        .max()
        .unwrap_or(0);
    for entry in report.privacy_box.entries() {
        println!(
            "{:<width$}  {:<12}  {}",
            entry.placeholder.rendered(),
            entry.category.label(),
            entry.surface,
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { task, out } => cmd_run(&cli, task, out.as_ref()).await,
        Command::Bench { dataset, kind, out } => {
            cmd_bench(&cli, dataset, kind, out.as_ref()).await
        }
        Command::Serve { listen } => cmd_serve(&cli, listen).await,
        Command::InspectBox { report } => cmd_inspect_box(report),
    }
}
