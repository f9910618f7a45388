use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use saea_core::run_experiment;
use saea_core::stats::DEFAULT_ALPHA;
use saea_lab::analysis::{
    correlation_table, hsd_matrices, mwu_comparisons, write_correlation, write_hsd, write_mwu, CORRELATION_FILE,
    HSD_DIR, MWU_FILE,
};
use saea_lab::results::{load_raw_results, load_run, write_run, write_trace_summaries, TRACES_DIR};
use saea_lab::{parse_plan, LabError, LabResult};

#[derive(Parser)]
#[command(name = "saea-lab", version, about = "Pseudo-surrogate SAEA experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a plan and write the result directory.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: available cores).
        #[arg(long, env = "SAEA_LAB_THREADS")]
        threads: Option<usize>,
        /// Also write per-trial traces.
        #[arg(long)]
        raw: bool,
    },
    /// Derive analysis tables from a result directory.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: StatsMode,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Check a plan without running it.
    Validate {
        #[arg(long)]
        plan: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatsMode {
    /// Recompute trace summaries from raw traces.
    Traces,
    /// Kendall correlation between accuracy and final error.
    Tau,
    /// Tukey HSD across accuracies within each strategy.
    Hsd,
    /// Mann-Whitney U between strategies.
    Mwu,
}

fn run(plan_path: &Path, out: &Path, threads: Option<usize>, raw: bool) -> LabResult<()> {
    let plan = parse_plan(plan_path)?;
    let threads = threads
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1);
    if threads == 0 {
        return Err(LabError::Plan("threads: must be positive".into()));
    }
    let results = run_experiment(&plan.experiment, threads)?;
    write_run(out, &plan, &results, raw)?;
    info!("wrote {} trials to {}", results.len(), out.display());
    Ok(())
}

fn stats(input: &Path, mode: StatsMode, alpha: f64) -> LabResult<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::Plan(format!("alpha: {alpha} is outside (0, 1)")));
    }
    let (plan, rows) = load_run(input)?;
    match mode {
        StatsMode::Traces => {
            let results = load_raw_results(input, &rows)?;
            write_trace_summaries(&input.join(TRACES_DIR), &plan, &results)?;
        }
        StatsMode::Tau => write_correlation(&input.join(CORRELATION_FILE), &correlation_table(&rows)?)?,
        StatsMode::Hsd => {
            write_hsd(&input.join(HSD_DIR), &hsd_matrices(&rows, alpha)?)?;
        }
        StatsMode::Mwu => write_mwu(&input.join(MWU_FILE), &mwu_comparisons(&rows, alpha)?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            plan,
            out,
            threads,
            raw,
        } => run(&plan, &out, threads, raw),
        Command::Stats { input, mode, alpha } => stats(&input, mode, alpha),
        Command::Validate { plan } => parse_plan(&plan).map(|p| {
            println!(
                "{}: {} cells, {} trials",
                plan.display(),
                p.experiment.cells().len(),
                p.experiment.trial_count()
            );
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
