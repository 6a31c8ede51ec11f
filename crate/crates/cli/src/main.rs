use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use frontier::pipeline::{Outcome, Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "frontier", version, about = "Emergence, prescience and disruption indicators from publication records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic corpus with planted ground truth.
    Synth,
    /// Validate, normalize and filter the input records.
    Ingest,
    /// Summarize the per-year author-keyword hypergraphs.
    Hypergraph,
    /// Sample random walks over the hypergraphs.
    Walks,
    /// Train the yearly embeddings.
    Embed,
    /// Rank emerging areas and tag emergent papers.
    Emergence,
    /// Fit factor models and score prescience.
    Prescience,
    /// Score CD5 disruption.
    Disruption,
    /// National shares, rates and citation curves.
    Report,
    /// Series at the 1%, 5% and 10% thresholds.
    Sweep,
    /// Retrain without one country's papers and pair the series.
    Exclude,
    /// Run every stage in order.
    All,
}

impl Command {
    fn stage(self) -> Stage {
        match self {
            Command::Synth => Stage::Synth,
            Command::Ingest => Stage::Ingest,
            Command::Hypergraph => Stage::Hypergraph,
            Command::Walks => Stage::Walks,
            Command::Embed => Stage::Embed,
            Command::Emergence => Stage::Emergence,
            Command::Prescience => Stage::Prescience,
            Command::Disruption => Stage::Disruption,
            Command::Report => Stage::Report,
            Command::Sweep => Stage::Sweep,
            Command::Exclude => Stage::Exclude,
            Command::All => Stage::All,
        }
    }
}

#[derive(Args)]
struct Overrides {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Input records (overrides `corpus`).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// deterministic | parallel
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    top_pct: Option<f64>,
    /// any | first | last | corresponding | unanimous
    #[arg(long, global = true)]
    attribution: Option<String>,
    #[arg(long, global = true)]
    exclude_country: Option<String>,
    /// content | context | both
    #[arg(long, global = true)]
    variant: Option<String>,
    /// Analysed years as `A..B`.
    #[arg(long, global = true)]
    years: Option<String>,
    /// Any other config key, as `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Overrides {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => PipelineConfig::default(),
        };
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else { bail!("--set expects key=value, got {kv:?}") };
            cfg.set(k.trim(), v.trim())?;
        }
        let flags = [
            ("workdir", self.workdir.as_ref().map(|p| p.display().to_string())),
            ("corpus", self.corpus.as_ref().map(|p| p.display().to_string())),
            ("seed", self.seed.map(|s| s.to_string())),
            ("mode", self.mode.clone()),
            ("top_pct", self.top_pct.map(|p| p.to_string())),
            ("attribution", self.attribution.clone()),
            ("exclude_country", self.exclude_country.clone()),
            ("variant", self.variant.clone()),
            ("years", self.years.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v).with_context(|| format!("--{}", k.replace('_', "-")))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.opts.config()?;
    let pipeline = Pipeline::new(cfg)?;
    for (stage, outcome) in pipeline.run(cli.command.stage())? {
        match outcome {
            Outcome::Ran => println!("{stage}: done"),
            Outcome::UpToDate => println!("{stage}: up to date"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
