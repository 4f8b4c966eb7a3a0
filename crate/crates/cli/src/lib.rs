//! The `stabcheck` experiment runner.
//!
//! Every subcommand reads an optional JSON [`ExperimentConfig`], applies the
//! command-line overrides, runs, and writes a CSV (or gnuplot data) table
//! whose `#` header records the master seed and a hash of the resolved
//! configuration. Output depends only on the configuration and seed, not on
//! the worker count.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use output::{Format, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] stabcheck_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stabcheck",
    version,
    about = "Budgeted black-box stability testing experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of Monte-Carlo trials or random cases (overrides the configuration).
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Estimate delta*_eps by Monte Carlo and, when feasible, exactly.
    EstimateStability,
    /// One run of the binomial test, with its trace saved to disk.
    RunBinomTest,
    /// Monte-Carlo power of the binomial test over a grid.
    PowerExperiment,
    /// Instability and coupling behaviour of the adversarial learners.
    AdversarialDemo,
    /// All power-ceiling terms for the configured inputs.
    Bounds,
    /// Randomized partition and multinomial lemma suites.
    LemmaCheck,
    /// Run the kind named in the configuration's `kind` field.
    Run,
}

impl Command {
    fn kind(self) -> Option<&'static str> {
        match self {
            Command::EstimateStability => Some("estimate-stability"),
            Command::RunBinomTest => Some("run-binom-test"),
            Command::PowerExperiment => Some("power-experiment"),
            Command::AdversarialDemo => Some("adversarial-demo"),
            Command::Bounds => Some("bounds"),
            Command::LemmaCheck => Some("lemma-check"),
            Command::Run => None,
        }
    }
}

/// Loads the configuration and applies the command-line overrides.
pub fn resolve(cli: &Cli) -> Result<(String, ExperimentConfig), CliError> {
    let mut cfg = match &cli.common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let kind = match (cli.command.kind(), cfg.kind.as_deref()) {
        (Some(k), Some(c)) if k != c => {
            return Err(CliError::Usage(format!(
                "subcommand '{k}' given a configuration for '{c}'"
            )))
        }
        (Some(k), _) => k.to_string(),
        (None, Some(c)) if config::KINDS.contains(&c) => c.to_string(),
        (None, Some(c)) => return Err(CliError::Usage(format!("unknown experiment kind '{c}'"))),
        (None, None) => {
            return Err(CliError::Usage(
                "'run' needs a configuration with a 'kind' field".into(),
            ))
        }
    };
    cfg.kind = Some(kind.clone());
    if let Some(s) = cli.common.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.common.trials {
        cfg.trials = t;
    }
    if let Some(o) = &cli.common.out {
        cfg.out = Some(o.clone());
    }
    if cfg.trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    Ok((kind, cfg))
}

/// Runs a resolved experiment and returns the rendered output.
pub fn execute(kind: &str, cfg: &ExperimentConfig, format: Format) -> Result<String, CliError> {
    let mut passed = true;
    let table = match kind {
        "estimate-stability" => experiments::estimate_stability(cfg)?,
        "run-binom-test" => {
            let trace = cfg
                .trace
                .clone()
                .or_else(|| cfg.out.as_ref().map(|o| o.with_extension("trace.jsonl")));
            experiments::run_binom_test(cfg, trace)?
        }
        "power-experiment" => experiments::power_experiment(cfg)?,
        "adversarial-demo" => experiments::adversarial_demo(cfg)?,
        "bounds" => experiments::bounds(cfg)?,
        "lemma-check" => {
            let (t, ok) = experiments::lemma_check(cfg)?;
            passed = ok;
            t
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment kind '{other}'"
            )))
        }
    };
    let header = vec![
        format!("stabcheck {kind}"),
        format!("seed={} config_hash={:016x}", cfg.seed, cfg.hash()),
    ];
    let text = table.render(format, &header);
    if !passed {
        return Err(CliError::CheckFailed(text));
    }
    Ok(text)
}

fn write_output(cfg: &ExperimentConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let (kind, cfg) = resolve(cli)?;
    let job = || match execute(&kind, &cfg, cli.common.format) {
        Ok(text) => write_output(&cfg, &text),
        Err(CliError::CheckFailed(text)) => {
            write_output(&cfg, &text)?;
            Err(CliError::CheckFailed(
                "lemma suite reported failures".into(),
            ))
        }
        Err(e) => Err(e),
    };
    match cli.common.workers {
        Some(0) => Err(CliError::Usage("workers must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(job),
        None => job(),
    }
}
