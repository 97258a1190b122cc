use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use twopoint_cli::commands;
use twopoint_cli::config::resolve_out_dir;
use twopoint_cli::{CliError, CliResult, RunConfig};

/// Fit survivorship-corrected journey-time distributions to two-point
/// re-identification surveys.
#[derive(Parser)]
#[command(name = "twopoint", version, about)]
struct Cli {
    /// Output directory [default: config `output_dir`, then $TWOPOINT_OUT_DIR, then .]
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the configured model; writes fit.json, marginals.csv, downstream_rate.csv, zones.json.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Simulate a survey; writes survey.csv and survivors.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// K-S goodness of fit of records against a saved fit; writes ks.json.
    Evaluate {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Draw replicated datasets from a saved fit.
    Replicate {
        #[arg(long)]
        fit: PathBuf,
        /// Records per dataset [default: the fitted sample size]
        #[arg(short)]
        n: Option<usize>,
        /// Number of datasets.
        #[arg(short, default_value_t = 1)]
        m: usize,
        /// Master seed [default: the seed stored in the fit]
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fisher-interval coverage over repeated simulations; writes coverage.json.
    Coverage {
        #[arg(long)]
        config: PathBuf,
        #[arg(short = 'R', long = "replications")]
        replications: usize,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Fit { config, input } => {
            let cfg = RunConfig::load(&config)?;
            let (report, paths) = commands::fit(&cfg, &input, &resolve_out_dir(out, Some(&cfg)))?;
            let f = &report.fit;
            println!(
                "{}: n = {} ({} excluded), params = {:?}, mean journey = {:.4} h, naive mean = {:.4} h",
                report.model,
                f.n,
                report.excluded.len(),
                f.params,
                f.mean_journey,
                f.naive_mean
            );
            print_paths(&paths);
        }
        Command::Simulate { config } => {
            let cfg = RunConfig::load(&config)?;
            let (survey, paths) = commands::simulate(&cfg, &resolve_out_dir(out, Some(&cfg)))?;
            println!(
                "{} vehicles, {} observed (survivor fraction {:.4})",
                survey.vehicles.len(),
                survey.survivors.len(),
                survey.survivor_fraction
            );
            print_paths(&paths);
        }
        Command::Evaluate { fit, input, alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            let (o, path) = commands::evaluate(&fit, &input, alpha, &resolve_out_dir(out, None))?;
            println!(
                "D = {:.5}, critical = {:.5}, p = {:.4}, {}",
                o.ks.statistic,
                o.ks.critical_value,
                o.ks.p_value,
                if o.ks.reject { "rejected" } else { "not rejected" }
            );
            print_paths(&[path]);
        }
        Command::Replicate { fit, n, m, seed } => {
            let entries = commands::replicate(&fit, n, m, seed, &resolve_out_dir(out, None))?;
            for e in &entries {
                println!("{} ({} records, acceptance {:.4})", e.file.display(), e.records, e.acceptance_rate);
            }
        }
        Command::Coverage { config, replications } => {
            let cfg = RunConfig::load(&config)?;
            let (o, path) = commands::coverage(&cfg, replications, &resolve_out_dir(out, Some(&cfg)))?;
            let c = &o.coverage;
            match c.mean_coverage {
                Some(v) => println!("mean coverage {v:.3} over {} runs ({} failed)", c.replications - c.failures, c.failures),
                None => println!("parameter coverage {:?} ({} failed)", c.param_coverage, c.failures),
            }
            print_paths(&[path]);
        }
    }
    Ok(())
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
