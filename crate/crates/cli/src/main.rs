use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flockcert_cli::{run, Mode, RunConfig, SweepAxis};

#[derive(Parser)]
#[command(name = "flockcert", version, about = "Simulate delayed flocking models and certify the flocking estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file, or `preset:<name>`
    scenario: String,
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon override
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Tolerance block (TOML, or JSON by extension)
    #[arg(long)]
    tol_block: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate and write trajectory.csv and diagnostics.csv
    Simulate(Common),
    /// Integrate, run every check and write report.json
    Certify {
        #[command(flatten)]
        common: Common,
        /// Also write dv_envelope.svg
        #[arg(long)]
        svg: bool,
        /// Multiply the solution by exp(rate·t) before checking
        #[arg(long, value_name = "RATE")]
        corrupt_exp: Option<f64>,
    },
    /// Certify once per value of a scenario parameter and write sweep.csv
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path into the scenario document, e.g. `tau_bar` or `influence.k0`
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, env = "FLOCKCERT_WORKERS")]
        workers: Option<usize>,
    },
    /// Certify every preset and the corrupted fixture
    Selftest {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        tol_block: Option<PathBuf>,
    },
}

fn config(mode: Mode, c: Common) -> RunConfig {
    RunConfig { dt: c.dt, horizon: c.horizon, stride: c.stride, tol_block: c.tol_block, ..RunConfig::new(mode, c.scenario, c.out) }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.command {
        Command::Simulate(c) => config(Mode::Simulate, c),
        Command::Certify { common, svg, corrupt_exp } => RunConfig { svg, corrupt_exp, ..config(Mode::Certify, common) },
        Command::Sweep { common, param, values, workers } => RunConfig { axis: Some(SweepAxis { param, values }), workers, ..config(Mode::Sweep, common) },
        Command::Selftest { out, tol_block } => RunConfig { tol_block, ..RunConfig::new(Mode::Selftest, "", out) },
    };
    match run(&cfg) {
        Ok(outcome) => {
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
