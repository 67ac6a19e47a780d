mod error;
mod pretty;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "assess",
    version,
    about = "Interface skill assessment: sessions, scoring, synthetic operators, exports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TaskArg {
    Command,
    Trajectory,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum CourseArg {
    Square,
    Curved,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Sql,
    Jsonl,
    CsvSummary,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the session service until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        store: PathBuf,
        /// Default trial config (JSON) for clients that send none.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Virtual seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
    },
    /// Batch-score stored trials or a raw JSON-lines log; one JSON line per trial.
    Score {
        #[arg(long, required_unless_present = "input", requires = "store")]
        trial: Option<i64>,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Raw JSON-lines trial log, or `-` for stdin.
        #[arg(long, conflicts_with_all = ["trial", "store"])]
        input: Option<PathBuf>,
        /// Human-readable tables on stderr.
        #[arg(long)]
        pretty: bool,
    },
    /// Generate a synthetic trial from an operator model and store it.
    Synth {
        #[arg(long, value_enum, default_value = "command")]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "square")]
        course: CourseArg,
        /// Base trial config (JSON); flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.3)]
        delay: f64,
        #[arg(long, default_value_t = 0.0)]
        angular_noise: f64,
        #[arg(long, default_value_t = 0.0)]
        magnitude_noise: f64,
        #[arg(long, default_value_t = 0.0)]
        settle_jitter: f64,
        #[arg(long, default_value_t = 0.0)]
        lapse_rate: f64,
        /// Operator seed; also the schedule seed unless --schedule-seed is given.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        schedule_seed: Option<u64>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "synthetic")]
        user: String,
        /// RFC 3339 start time; fixed by default so runs are reproducible.
        #[arg(long, default_value = "2000-01-01T00:00:00Z")]
        started_at: String,
        #[arg(long)]
        pretty: bool,
    },
    /// Write a store (or one user's part of it) as SQL, JSON lines, or a CSV summary.
    Export {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        user: Option<String>,
        #[arg(long, value_enum)]
        format: FormatArg,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plot-ready CSV of one measure across a user's complete trials.
    Series {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long)]
        measure: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
