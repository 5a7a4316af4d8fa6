use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ldknn::{generate, Family, SyntheticSpec};

mod config;
mod report;
mod run;

#[derive(Parser)]
#[command(name = "ldknn", version, about = "Local-distribution kNN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic two-class dataset as CSV.
    Gen {
        /// t1, t2, t3 or t4.
        #[arg(long, value_parser = parse_family)]
        family: Family,
        /// Number of feature columns.
        #[arg(long)]
        p: usize,
        /// Samples per class.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate every configured classifier on every configured dataset.
    Run { config: PathBuf },
    /// Rank classifiers across datasets and run the Friedman and Bonferroni-Dunn tests.
    Report {
        /// Aggregate CSV files written by `run`.
        #[arg(long, num_args = 1.., required = true)]
        aggregates: Vec<PathBuf>,
        /// Control classifier for the post-hoc test.
        #[arg(long)]
        control: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: ldknn::Error| e.to_string())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen { family, p, n, seed, out } => {
            let d = generate(&SyntheticSpec::new(family, p, n, seed))?;
            let file = std::fs::File::create(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            d.write_csv(std::io::BufWriter::new(file))
                .with_context(|| format!("writing {}", out.display()))?;
            println!("n={} d={} classes={}", d.len(), d.n_dims(), d.n_classes());
        }
        Command::Run { config } => run::cmd_run(&config)?,
        Command::Report { aggregates, control, alpha, out } => {
            report::cmd_report(&aggregates, &control, alpha, &out)?
        }
    }
    Ok(())
}
