use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use daccgd_cli::{load_config, run_experiment, run_sweep, run_verify, CliError, ExperimentConfig, Mode, OutputOptions};

/// Decentralized accelerated gradient descent experiments.
///
/// Log verbosity is read from DACCGD_LOG (e.g. `DACCGD_LOG=info`).
#[derive(Parser)]
#[command(name = "daccgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured method and write trace.csv, meta.json and
    /// convergence.svg. Configs with `mode = "verify"` or `"sweep"` dispatch there.
    Run(Common),
    /// Run the numerical checks and write verify_report.{txt,csv}.
    Verify(Common),
    /// Run one experiment per kappa_g listed in [sweep] and write summary.csv.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip convergence.svg.
    #[arg(long)]
    no_plot: bool,
    /// Cap on outer iterations.
    #[arg(long)]
    max_outer: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = load_config(&self.config)?;
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(m) = self.max_outer {
            cfg.algorithm.max_outer = Some(m);
            cfg.verify.steps = Some(m);
        }
        Ok(cfg)
    }

    fn output(&self) -> OutputOptions {
        OutputOptions { plot: !self.no_plot }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let (c, mode) = match &cli.command {
        Command::Run(c) => (c, None),
        Command::Verify(c) => (c, Some(Mode::Verify)),
        Command::Sweep(c) => (c, Some(Mode::Sweep)),
    };
    let cfg = c.load()?;
    match mode.unwrap_or(cfg.mode) {
        Mode::Run => {
            let result = run_experiment(&cfg, c.output())?;
            let last = result.trace.last();
            println!(
                "{}: {} steps, {} gradient evaluations, {} communication rounds, f_gap {:e} -> {}",
                result.method.name(),
                last.iter,
                last.grad_evals,
                last.comm_rounds,
                last.f_gap,
                result.dir.display()
            );
            Ok(())
        }
        Mode::Verify => {
            let report = run_verify(&cfg)?;
            print!("{}", report.to_text());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Numerical("verification checks failed".into()))
            }
        }
        Mode::Sweep => {
            let summary = run_sweep(&cfg, c.output())?;
            for p in &summary.points {
                match p.grad_evals_to_eps {
                    Some(g) => println!("kappa_g {}: {} gradient evaluations", p.kappa_g, g),
                    None => println!("kappa_g {}: epsilon not reached", p.kappa_g),
                }
            }
            if let Some(s) = summary.slope {
                println!("log-log slope {s:.3}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DACCGD_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
