use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rwrp::commands::{run, Command};
use rwrp::config::Overrides;
use rwrp::{ExperimentConfig, LabError};

#[derive(Parser)]
#[command(
    name = "rwrp",
    version,
    about = "Lyapunov exponents of a random walk in a random potential"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Global {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    d: Option<usize>,
    /// Potential law, e.g. `pareto:0.7,1` or `exp:1`.
    #[arg(long, global = true)]
    mu: Option<String>,
    /// Comma-separated list.
    #[arg(long, global = true, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Comma-separated window of hyperplane distances.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Option<Vec<i64>>,
    #[arg(long, global = true)]
    replicas: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Escape probability q_d.
    Qd {
        /// Also run the Monte Carlo estimate.
        #[arg(long)]
        mc: bool,
    },
    /// Closed-form predictions per lambda.
    Predict,
    /// Annealed costs and exponent.
    Annealed,
    /// Quenched costs and exponent.
    Quenched,
    /// Full lambda sweep with ratio columns.
    Scan,
    /// Goodness certificates of the block region.
    Certify,
    /// Oriented percolation grid and directed path.
    Perc {
        /// i.i.d. open probability instead of certified blocks.
        #[arg(long)]
        p_open: Option<f64>,
        #[arg(long)]
        columns: Option<usize>,
    },
    /// Event rates of the block construction.
    Events,
    /// Monte Carlo against the exact solvers.
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<String, LabError> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(Overrides {
        seed: g.seed,
        d: g.d,
        mu: g.mu,
        lambdas: g.lambda,
        eps: g.eps,
        n_window: g.n,
        replicas: g.replicas,
        workers: g.workers,
    });
    let cmd = match cli.command {
        Cmd::Qd { mc } => Command::Qd { mc },
        Cmd::Predict => Command::Predict,
        Cmd::Annealed => Command::Annealed,
        Cmd::Quenched => Command::Quenched,
        Cmd::Scan => Command::Scan,
        Cmd::Certify => Command::Certify,
        Cmd::Perc { p_open, columns } => {
            if p_open.is_some() {
                cfg.percolation.p_open = p_open;
            }
            if let Some(c) = columns {
                cfg.percolation.columns = c;
            }
            Command::Perc
        }
        Cmd::Events => Command::Events,
        Cmd::Oracle => Command::Oracle,
    };
    run(&cfg, cmd, &g.out)
}
