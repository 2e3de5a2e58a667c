use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use sdmf_core::eval::{run_attack, run_experiments, ExperimentConfig};
use sdmf_core::rr;

#[derive(Parser)]
#[command(name = "sdmf", version, about = "Private distributed matrix factorization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the learning-curve grid described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the output CSV path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve (f, p, q) for one client.
    Calibrate {
        #[arg(long)]
        eps_i: f64,
        /// Defaults to twice eps_i.
        #[arg(long)]
        eps_p: Option<f64>,
        /// Number of rated items.
        #[arg(long)]
        h: usize,
        #[arg(long)]
        items: usize,
        /// Target expected sends per round.
        #[arg(long)]
        z: f64,
    },
    /// Score the frequency attack against the configured budgets.
    Attack {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            if let Some(o) = output {
                cfg.output = o;
            }
            let report = run_experiments(&cfg)?;
            println!(
                "wrote {} points to {} (summary: {})",
                report.records.len(),
                report.curves.display(),
                report.summary.display()
            );
        }
        Command::Calibrate { eps_i, eps_p, h, items, z } => {
            let eps_p = eps_p.unwrap_or(2.0 * eps_i);
            let p = rr::calibrate(eps_i, eps_p, h, items, z)?;
            println!("f      = {}", p.f);
            println!("p      = {}", p.p);
            println!("q      = {}", p.q);
            println!("p_star = {}", p.p_star);
            println!("q_star = {}", p.q_star);
            println!("z      = {}", p.z);
            println!("eps_I  = {}", rr::epsilon_i_of(p.p_star, p.q_star, h)?);
            println!("eps_P  = {}", rr::epsilon_p_of(p.f, h)?);
        }
        Command::Attack { config } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            println!("eps_I,users,skipped,accuracy,rated_recall,prr_agreement");
            for r in run_attack(&cfg)? {
                println!(
                    "{},{},{},{:.4},{:.4},{:.4}",
                    r.eps_i, r.users, r.skipped, r.accuracy, r.rated_recall, r.prr_agreement
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
