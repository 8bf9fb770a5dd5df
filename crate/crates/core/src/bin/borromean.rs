use std::path::PathBuf;
use std::process::ExitCode;

use borromean::sweep::{self, Command, SweepConfig};
use borromean::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "borromean", version, about = "Two- and three-body binding thresholds in 2D")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML sweep configuration (optional for the figure commands).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// SVM seed; overrides `solvers.svm.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the per-point pool.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Two-body critical repulsion over a lambda_minus grid.
    TwoThreshold,
    /// Three-body critical repulsion over a lambda_minus grid.
    ThreeThreshold,
    /// Deep-core curve h(s).
    HCurve,
    /// Paired two- and three-body thresholds with window flags.
    WindowScan,
    Fig1,
    Fig2,
    Fig2a,
    Fig3,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::TwoThreshold => Command::TwoThreshold,
            Cmd::ThreeThreshold => Command::ThreeThreshold,
            Cmd::HCurve => Command::HCurve,
            Cmd::WindowScan => Command::WindowScan,
            Cmd::Fig1 => Command::Fig1,
            Cmd::Fig2 => Command::Fig2,
            Cmd::Fig2a => Command::Fig2a,
            Cmd::Fig3 => Command::Fig3,
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_PARTIAL: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let cfg = match &cli.config {
        Some(path) => SweepConfig::from_path(path),
        None => command
            .default_config()
            .ok_or_else(|| Error::Config(format!("{} needs --config", command.name()))),
    };
    let mut cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.solvers.svm.seed = Some(seed);
    }
    if let Some(out) = cli.out {
        cfg.output.directory = out;
    }
    let dir = cfg.output.directory.clone();
    match sweep::run(command, &cfg, &dir, cli.jobs) {
        Ok(m) => {
            let failed = m.failed();
            eprintln!(
                "{}: {} points, {} failed, {:.2} s -> {}",
                m.command,
                m.points.len(),
                failed,
                m.wall_time_s,
                dir.display()
            );
            for p in m.points.iter().filter(|p| !p.ok) {
                eprintln!("  point {} ({}): {}", p.index, p.value, p.error.as_deref().unwrap_or(""));
            }
            if failed == 0 {
                ExitCode::SUCCESS
            } else if failed < m.points.len() {
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::from(EXIT_SOLVER)
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
