//! Batch commands and the HTTP session service.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use etea_core::mining::BinsChoice;
use etea_core::Variant;

pub mod commands;
pub mod config;
pub mod error;
pub mod server;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "etea", version, about = "Gaze-driven color evolution: simulate, mine, replay, serve")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop run against a synthetic viewer; writes the history CSV.
    Simulate(SimulateArgs),
    /// Discretize, cross-validate and evaluate decision trees on records.
    Mine(MineArgs),
    /// Recompute a persisted session from its sample logs and diff records.
    Replay(ReplayArgs),
    /// Persist synthetic sessions to disk and collect their records.
    Record(RecordArgs),
    /// Run the session service over HTTP.
    Serve(ServeArgs),
}

/// Synthetic viewer settings; absent flags keep the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct UserArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub dwell_ms_mean: Option<f64>,
    #[arg(long)]
    pub dwell_ms_sd: Option<f64>,
    #[arg(long)]
    pub min_visits: Option<usize>,
    #[arg(long)]
    pub max_visits: Option<usize>,
    #[arg(long)]
    pub pupil_base: Option<f64>,
    #[arg(long)]
    pub pupil_gain: Option<f64>,
    #[arg(long)]
    pub position_noise: Option<f64>,
    #[arg(long)]
    pub pupil_noise: Option<f64>,
}

/// Scorer and genetic-operator settings.
#[derive(Debug, Clone, Default, Args)]
pub struct EngineArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub w_time: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub w_trans: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub w_cog: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub selected_bonus: Option<f64>,
    #[arg(long)]
    pub parents: Option<usize>,
    #[arg(long)]
    pub elites: Option<usize>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// Score zones with this tree instead of the weighted sum.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub generations: u32,
    #[command(flatten)]
    pub user: UserArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// History CSV; written to stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    /// Evaluation-record CSV.
    #[arg(long, value_name = "PATH")]
    pub records: PathBuf,
    /// A, A', B or B'; repeat for several. All four when absent.
    #[arg(long = "variant", value_name = "NAME")]
    pub variants: Vec<Variant>,
    /// preset (alias paper) or auto.
    #[arg(long, default_value = "auto")]
    pub bins: BinsChoice,
    #[arg(long, default_value_t = 15)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Report file; written to stdout when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Save the tree trained on the learning half. Needs a single variant.
    #[arg(long, value_name = "PATH")]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Session directory holding manifest.txt.
    pub dir: PathBuf,
    /// Also write the recomputed records CSV here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RecordArgs {
    /// Root under which one directory per session is created.
    #[arg(long, value_name = "DIR")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub sessions: u32,
    #[arg(long, default_value_t = 30)]
    pub screens: u32,
    /// Session i uses seed + i and subject i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub user: UserArgs,
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Concatenated records of all sessions.
    #[arg(long, value_name = "PATH")]
    pub records_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// 0 picks a free port, which is printed.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Persist sessions here; memory only when absent.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Tree for sessions configured with the model scorer.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
}

/// Parses `args` (program name first), applies any config file and runs the
/// command. Help and version requests print and succeed.
pub fn run<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = config::splice_config(args.into_iter().map(Into::into).collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    match cli.command {
        Command::Simulate(a) => commands::cmd_simulate(&a),
        Command::Mine(a) => commands::cmd_mine(&a),
        Command::Replay(a) => commands::cmd_replay(&a),
        Command::Record(a) => commands::cmd_record(&a),
        Command::Serve(a) => server::cmd_serve(&a),
    }
}
