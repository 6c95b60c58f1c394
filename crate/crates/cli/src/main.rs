use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dynsched::metrics::{ExperimentOptions, EXPERIMENTS};

use dynsched_cli::commands;
use dynsched_cli::config::ScenarioConfig;

#[derive(Parser)]
#[command(name = "dynsched", version, about = "Batch front end for the dynamic scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explicit frame length; outputs are flagged out-of-theory.
    #[arg(long = "override-T", alias = "override-t")]
    override_t: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ScenarioConfig, PathBuf)> {
        let mut cfg = ScenarioConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.override_t.is_some() {
            cfg.override_t = self.override_t;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the interference matrix and validate it.
    BuildMatrix(Common),
    /// Run the configured static scheduler on the config's request set.
    RunStatic(Common),
    /// Run the frame protocol for `horizon` frames.
    RunDynamic(Common),
    /// Check an adversarial trace against the model's matrix.
    ValidateTrace {
        #[command(flatten)]
        common: Common,
        /// Trace file; defaults to the config's injection file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a named acceptance experiment.
    Experiment {
        name: String,
        /// Single seed; shorthand for `--seeds N`.
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Seed list `1,2,3` or inclusive range `1..10` (default 1..10).
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Overrides the experiment's horizon (frames or trials).
        #[arg(long)]
        frames: Option<u64>,
    },
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim_start_matches('=').trim().parse()?);
        if a > b {
            bail!("empty seed range {s}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse::<u64>().with_context(|| format!("bad seed `{x}`")))
        .collect()
}

fn print_to(out: &Path, text: &str) {
    print!("{text}");
    eprintln!("outputs written to {}", out.display());
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::BuildMatrix(c) => {
            let (cfg, out) = c.load()?;
            print_to(&out, &commands::build_matrix(&cfg, &out)?);
        }
        Command::RunStatic(c) => {
            let (cfg, out) = c.load()?;
            print_to(&out, &commands::run_static(&cfg, &out)?);
        }
        Command::RunDynamic(c) => {
            let (cfg, out) = c.load()?;
            print_to(&out, &commands::run_dynamic(&cfg, &out)?);
        }
        Command::ValidateTrace { common, trace } => {
            let (cfg, _) = common.load()?;
            let (text, ok) = commands::validate_trace(&cfg, trace.as_deref())?;
            print!("{text}");
            if !ok {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Experiment {
            name,
            seed,
            seeds,
            out,
            jobs,
            frames,
        } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                bail!("unknown experiment `{name}`; registered: {}", EXPERIMENTS.join(", "));
            }
            let seeds = match (seed, seeds) {
                (Some(s), _) => vec![s],
                (None, Some(list)) => parse_seeds(&list)?,
                (None, None) => (1..=10).collect(),
            };
            let mut opts = ExperimentOptions::new(seeds);
            opts.jobs = jobs;
            opts.frames = frames;
            let report = commands::experiment(&name, &opts, &out)?;
            print_to(&out, &report.to_text());
            if !report.passed() {
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists_and_ranges() {
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("1, 4,9").unwrap(), vec![1, 4, 9]);
        assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_seeds("2..=3").unwrap(), vec![2, 3]);
        assert!(parse_seeds("5..2").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
