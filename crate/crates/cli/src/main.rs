mod artifacts;
mod config;
mod error;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::{Classify, Failure};
use pipeline::Stage;

/// Backtest sentiment, indicator and forecast signals on daily bars.
#[derive(Debug, Parser)]
#[command(name = "sentrade", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Price CSV (date,open,high,low,close,adj_close,volume).
    #[arg(long, global = true)]
    prices: Option<PathBuf>,
    /// Per-article sentiment CSV (timestamp_et,source,model,label,score).
    #[arg(long, global = true)]
    sentiment: Option<PathBuf>,
    /// Raw news CSV (timestamp_et,source,title,text).
    #[arg(long, global = true)]
    news: Option<PathBuf>,
    /// First day of the test window (YYYY-MM-DD).
    #[arg(long, global = true)]
    from: Option<String>,
    /// Last day of the test window (YYYY-MM-DD).
    #[arg(long, global = true)]
    to: Option<String>,
    /// Trading days between sentiment and the return it predicts (0-2).
    #[arg(long, global = true)]
    lag: Option<usize>,
    /// same_day or next_day.
    #[arg(long, global = true)]
    execution: Option<String>,
    /// Initial cash.
    #[arg(long, global = true)]
    capital: Option<f64>,
    /// Recorded in the run metadata.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: reports/<run-id>].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Copy prices, vote daily sentiment and clean news into the output dir.
    Ingest,
    /// Compute returns and three-class labels.
    Label,
    /// Compute sentiment, indicator and walk-forward forecast signals.
    Signals,
    /// Simulate every configured strategy and the buy-and-hold benchmark.
    Backtest,
    /// Score each signal against realized return classes.
    Evaluate,
    /// Write the returns table, figures and run metadata.
    Report,
    /// Run every stage in order.
    All,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let flags = Overrides {
        prices: cli.prices,
        sentiment: cli.sentiment,
        news: cli.news,
        from: cli.from,
        to: cli.to,
        lag: cli.lag,
        execution: cli.execution,
        capital: cli.capital,
        seed: cli.seed,
        out: cli.out,
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &flags)?;
    let out = match &cfg.out {
        Some(p) => p.clone(),
        None => PathBuf::from("reports").join(pipeline::run_id(&cfg)?),
    };
    std::fs::create_dir_all(&out).data(|| format!("cannot create {}", out.display()))?;
    match cli.command {
        Command::Ingest => Stage::Ingest.run(&cfg, &out)?,
        Command::Label => Stage::Label.run(&cfg, &out)?,
        Command::Signals => Stage::Signals.run(&cfg, &out)?,
        Command::Backtest => Stage::Backtest.run(&cfg, &out)?,
        Command::Evaluate => Stage::Evaluate.run(&cfg, &out)?,
        Command::Report => Stage::Report.run(&cfg, &out)?,
        Command::All => pipeline::run_all(&cfg, &out)?,
    }
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::from(e.exit_code())
        }
    }
}
