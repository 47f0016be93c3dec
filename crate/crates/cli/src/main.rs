use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimetic_core::harness::{self, verify, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mimetic-curv", version, about = "Mimetic operators on curvilinear grids: experiments and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config and/or flags; flags override the file.
    Run {
        config: Option<PathBuf>,
        /// poisson_annulus, poisson_sinusoidal, poisson_3d, wave_annulus or gauss_check
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        order: Option<usize>,
        /// Comma-separated refinement sweep, e.g. 20,40,80
        #[arg(long, value_delimiter = ',')]
        cells: Option<Vec<usize>>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write VTK snapshots of the finest run.
        #[arg(long)]
        fields: bool,
    },
    /// Run the acceptance checks and print one line per check.
    Verify {
        /// Restrict to these check numbers.
        #[arg(value_delimiter = ',')]
        only: Vec<usize>,
    },
    /// Regenerate every convergence table as CSV.
    Tables {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> mimetic_core::Result<bool> {
    match cli.command {
        Command::Run { config, experiment, order, cells, dt, out, fields } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_json_file(path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(e) = experiment {
                cfg.experiment = Experiment::parse(&e)?;
            }
            if let Some(k) = order {
                cfg.order = k;
            }
            if let Some(c) = cells {
                cfg.cells = c;
            }
            if let Some(dt) = dt {
                cfg.dt = dt;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            cfg.emit_fields |= fields;
            let result = harness::run_experiment(&cfg)?;
            println!("{}", result.summary.trim_end());
            for f in &result.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(result.ok)
        }
        Command::Verify { only } => {
            let mut ok = true;
            for c in verify::run_selected(&only) {
                println!("{}", c.line());
                ok &= c.passed;
            }
            Ok(ok)
        }
        Command::Tables { out } => {
            let mut ok = true;
            for r in harness::run_tables(&out)? {
                for f in &r.files {
                    println!("{}", f.display());
                }
                ok &= r.ok;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
