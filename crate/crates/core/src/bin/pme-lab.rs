use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pme_lab::battery::{battery, BatteryOptions};
use pme_lab::config::ExperimentConfig;
use pme_lab::runner::{exit_code, run};
use pme_lab::stationary::ThetaOracle;

#[derive(Parser)]
#[command(name = "pme-lab", version, about = "Porous medium equation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments listed in a TOML config.
    Run { config: PathBuf },
    /// Run the acceptance battery.
    Battery {
        /// Criterion number or name substring.
        #[arg(long)]
        filter: Option<String>,
        /// Directory for report.csv and the battery tables.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the randomized invariants.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Reference solutions.
    Oracle {
        #[command(subcommand)]
        which: Oracle,
    },
}

#[derive(Subcommand)]
enum Oracle {
    /// First-integral reference profile on (0, L).
    Theta {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Number of equispaced interior samples to print.
        #[arg(long, default_value_t = 9)]
        samples: usize,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let outcome = ExperimentConfig::load(&config).and_then(|cfg| run(&cfg));
            match &outcome {
                Ok(rec) => {
                    for (k, v) in &rec.summary {
                        println!("{k:<32} {v:.10e}");
                    }
                    for c in &rec.checks {
                        let status = if c.pass { "pass" } else { "FAIL" };
                        println!("{status} {:<36} measured {:.6e} target {}", c.criterion, c.measured, c.target);
                    }
                    println!("artifacts in {}", rec.config.output_dir.display());
                }
                Err(e) => eprintln!("error: {e}"),
            }
            code(exit_code(&outcome))
        }
        Command::Battery { filter, out, seed } => {
            let opts = BatteryOptions { seed, filter, out, ..Default::default() };
            match battery(&opts) {
                Ok(report) => {
                    for c in &report.criteria {
                        println!("{}", c.line());
                    }
                    code(if report.passed() { 0 } else { 4 })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(3)
                }
            }
        }
        Command::Oracle { which: Oracle::Theta { p, length, samples } } => match ThetaOracle::new(p, length, 1e-13) {
            Ok(o) => {
                println!("p          {p}");
                println!("length     {length}");
                println!("theta_max  {:.15e}", o.theta_max);
                println!("energy     {:.15e}", o.energy);
                println!("slope      {:.15e}", o.slope);
                println!("x theta");
                for k in 1..=samples {
                    let x = length * k as f64 / (samples + 1) as f64;
                    match o.sample(x) {
                        Ok(v) => println!("{x:.6} {v:.15e}"),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return code(3);
                        }
                    }
                }
                code(0)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(if matches!(e, pme_lab::Error::InvalidInitialData(_)) { 2 } else { 3 })
            }
        },
    }
}
