mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{GlobalScanArgs, GradCheckArgs, GroupScanArgs, LayersArgs, MnistArgs, VarianceScanArgs};

#[derive(Debug, Parser)]
#[command(name = "lcqnn", version, about = "LCQNN gradient-variance scans and MNIST training")]
struct Cli {
    /// Worker threads for sample loops (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gradient variance against working-register size for fixed locality.
    VarianceScan(VarianceScanArgs),
    /// Gradient variance against the number of combined blocks.
    VarianceLayers(LayersArgs),
    /// Global blocks with every control value used.
    GlobalScan(GlobalScanArgs),
    /// Block-diagonal cost over block spectra.
    GroupScan(GroupScanArgs),
    /// Train the 4-class MNIST classifier over an (L, D) grid.
    Mnist(MnistArgs),
    /// Parameter-shift against finite differences on random models.
    GradCheck(GradCheckArgs),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] lcqnn_core::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use lcqnn_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::NonFinite(_) => 1,
                E::Capacity { .. }
                | E::Architecture(_)
                | E::InvalidParam(_)
                | E::Argument(_)
                | E::OversizeBlock { .. }
                | E::ObservableScope { .. }
                | E::ParameterLength { .. }
                | E::IdxFormat(_)
                | E::Truncated { .. }
                | E::CountMismatch { .. }
                | E::Io { .. }
                | E::Dataset(_) => 2,
                _ => 1,
            },
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::VarianceScan(a) => commands::variance_scan(a),
        Command::VarianceLayers(a) => commands::variance_layers(a),
        Command::GlobalScan(a) => commands::global_scan(a),
        Command::GroupScan(a) => commands::group_scan(a),
        Command::Mnist(a) => commands::mnist(a),
        Command::GradCheck(a) => commands::grad_check(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
