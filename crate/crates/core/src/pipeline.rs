//! Stage orchestration over a working directory.
//!
//! Every stage reads the artifacts of earlier stages from the working
//! directory and writes its own into a directory named after it. The hash of
//! a stage covers the configuration keys it depends on and the content of its
//! input artifacts; it is recorded in `manifest.json` and embedded in every
//! artifact the stage writes. A stage whose hash is unchanged and whose
//! outputs are intact is skipped.

use std::cell::OnceCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, attribute_countries, AttributionStrategy, Corpus, IngestOptions, InputFormat, Taxonomy, View};
use crate::disruption::{self, CitationGraph};
use crate::embedding::{self, EmbeddingSpace, TrainConfig, TrainMode};
use crate::emergence::{self, EmergenceConfig, EmergingSet, FieldYearCounts, YearInputs};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, NodeKind, WalkConfig, WalkCorpus};
use crate::prescience::{self, FactorModel, FitConfig, Objective, Variant};
use crate::report::{self, CountryGroups, CountrySeries, Measure, ReportConfig, ScoreTable, Scored, SeriesRow};
use crate::seed::stream_seed;
use crate::select::Direction;
use crate::synthgen::{self, SynthSpec};

const MANIFEST: &str = "manifest.json";
/// Bumped when artifact layouts change so old manifests read as stale.
const LAYOUT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    Synth,
    Ingest,
    Hypergraph,
    Walks,
    Embed,
    Emergence,
    Prescience,
    Disruption,
    Report,
    Sweep,
    Exclude,
    All,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::Hypergraph,
        Stage::Walks,
        Stage::Embed,
        Stage::Emergence,
        Stage::Prescience,
        Stage::Disruption,
        Stage::Report,
        Stage::Sweep,
        Stage::Exclude,
        Stage::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Hypergraph => "hypergraph",
            Stage::Walks => "walks",
            Stage::Embed => "embed",
            Stage::Emergence => "emergence",
            Stage::Prescience => "prescience",
            Stage::Disruption => "disruption",
            Stage::Report => "report",
            Stage::Sweep => "sweep",
            Stage::Exclude => "exclude",
            Stage::All => "all",
        }
    }

    /// Directory the stage writes into, relative to the working directory.
    fn dir(self) -> &'static str {
        match self {
            Stage::Embed => "embeddings",
            other => other.name(),
        }
    }

    /// Stages whose artifacts this stage reads.
    fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Synth | Stage::Ingest | Stage::All => &[],
            Stage::Hypergraph | Stage::Walks | Stage::Prescience | Stage::Disruption => &[Stage::Ingest],
            Stage::Embed => &[Stage::Walks],
            Stage::Emergence => &[Stage::Ingest, Stage::Embed],
            Stage::Report | Stage::Sweep => &[Stage::Ingest, Stage::Emergence, Stage::Prescience, Stage::Disruption],
            Stage::Exclude => &[Stage::Ingest, Stage::Emergence, Stage::Prescience],
        }
    }

    /// Configuration keys the stage's output depends on.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Stage::Synth => &["synth_preset", "synth_spec", "seed", "input_format"],
            Stage::Ingest => &["input_format", "allow_reviews", "languages", "taxonomy"],
            Stage::Hypergraph => &["years", "hypergraph_span", "lookback"],
            Stage::Walks => &["years", "hypergraph_span", "lookback", "walks_per_keyword", "walk_length", "alpha", "seed"],
            Stage::Embed => &["embedding_dim", "context_window", "negatives", "epochs", "min_count", "seed", "mode"],
            Stage::Emergence => {
                &["years", "hypergraph_span", "lookback", "growth_years", "area_size", "candidate_min_count", "top_area_pct", "top_pct", "credit_k"]
            }
            Stage::Prescience => &[
                "years",
                "hypergraph_span",
                "prescience_lag",
                "variant",
                "factor_dims",
                "factor_epochs",
                "factor_objective",
                "factor_negatives",
                "factor_lr",
                "freeze_salience",
                "seed",
                "mode",
            ],
            Stage::Disruption => &["disruption_window"],
            Stage::Report => &["years", "prescience_lag", "top_pct", "attribution", "country_groups", "variant", "citation_bins"],
            Stage::Sweep => &["years", "prescience_lag", "attribution", "country_groups", "variant"],
            Stage::Exclude => &["exclude_country", "years", "prescience_lag", "top_pct", "attribution", "country_groups", "variant"],
            Stage::All => &[],
        }
    }

    fn code(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// Flat `key = value` pipeline configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Input records; when unset the synthetic corpus of the `synth` stage
    /// is used.
    pub corpus: Option<PathBuf>,
    pub input_format: InputFormat,
    pub workdir: PathBuf,
    /// Analysed years; defaults to the corpus range minus the warm-up years
    /// needed by convergence and growth.
    pub years: Option<(i32, i32)>,
    pub hypergraph_span: u32,
    pub disruption_window: i32,
    pub prescience_lag: i32,
    pub lookback: usize,
    pub growth_years: usize,
    pub area_size: usize,
    pub candidate_min_count: u64,
    pub credit_k: usize,
    pub embedding_dim: usize,
    pub context_window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub walks_per_keyword: usize,
    pub walk_length: usize,
    pub alpha: f64,
    pub factor_dims: usize,
    pub factor_epochs: usize,
    pub factor_objective: Objective,
    pub factor_negatives: usize,
    pub factor_lr: f64,
    pub freeze_salience: bool,
    pub top_area_pct: f64,
    pub top_pct: f64,
    pub attribution: AttributionStrategy,
    pub seed: u64,
    pub mode: TrainMode,
    pub variants: Vec<Variant>,
    pub exclude_country: Option<String>,
    pub country_groups: Option<PathBuf>,
    pub allow_reviews: bool,
    pub languages: BTreeSet<String>,
    pub taxonomy: Option<PathBuf>,
    pub synth_preset: Option<String>,
    pub synth_spec: Option<PathBuf>,
    pub citation_bins: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            input_format: InputFormat::Records,
            workdir: PathBuf::from("work"),
            years: None,
            hypergraph_span: 5,
            disruption_window: disruption::DEFAULT_WINDOW,
            prescience_lag: 2,
            lookback: 3,
            growth_years: 5,
            area_size: 25,
            candidate_min_count: 1,
            credit_k: 10,
            embedding_dim: 100,
            context_window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 1,
            walks_per_keyword: 10,
            walk_length: 20,
            alpha: 1.0,
            factor_dims: 25,
            factor_epochs: 50,
            factor_objective: Objective::Exact,
            factor_negatives: 5,
            factor_lr: 0.1,
            freeze_salience: false,
            top_area_pct: 0.01,
            top_pct: 0.05,
            attribution: AttributionStrategy::AnyAuthor,
            seed: 1,
            mode: TrainMode::Deterministic,
            variants: Variant::BOTH.to_vec(),
            exclude_country: None,
            country_groups: None,
            allow_reviews: false,
            languages: BTreeSet::from(["en".to_string()]),
            taxonomy: None,
            synth_preset: None,
            synth_spec: None,
            citation_bins: 100,
        }
    }
}

fn parse_years(v: &str) -> Result<(i32, i32)> {
    let bad = || Error::Config(format!("years must look like A..B, got {v:?}"));
    let (a, b) = v.split_once("..").ok_or_else(bad)?;
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    Ok((a, b))
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
}

impl PipelineConfig {
    /// Parse `key = value` lines; `#` starts a comment line. Unknown keys are
    /// errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Load a config file. Relative input paths inside it resolve against the
    /// file's directory; `workdir` stays relative to the current directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = PipelineConfig::parse(&text)?;
        if let Some(base) = path.parent() {
            let fix = |p: &mut PathBuf| {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            };
            for p in [&mut cfg.corpus, &mut cfg.country_groups, &mut cfg.taxonomy, &mut cfg.synth_spec].into_iter().flatten() {
                fix(p);
            }
        }
        Ok(cfg)
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "corpus" => self.corpus = opt_path(v),
            "input_format" => self.input_format = v.parse()?,
            "workdir" => self.workdir = PathBuf::from(v),
            "years" => self.years = if v.is_empty() || v == "auto" { None } else { Some(parse_years(v)?) },
            "hypergraph_span" => self.hypergraph_span = parse_num(key, v)?,
            "disruption_window" => self.disruption_window = parse_num(key, v)?,
            "prescience_lag" => self.prescience_lag = parse_num(key, v)?,
            "lookback" => self.lookback = parse_num(key, v)?,
            "growth_years" => self.growth_years = parse_num(key, v)?,
            "area_size" => self.area_size = parse_num(key, v)?,
            "candidate_min_count" => self.candidate_min_count = parse_num(key, v)?,
            "credit_k" => self.credit_k = parse_num(key, v)?,
            "embedding_dim" => self.embedding_dim = parse_num(key, v)?,
            "context_window" => self.context_window = parse_num(key, v)?,
            "negatives" => self.negatives = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "min_count" => self.min_count = parse_num(key, v)?,
            "walks_per_keyword" => self.walks_per_keyword = parse_num(key, v)?,
            "walk_length" => self.walk_length = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "factor_dims" => self.factor_dims = parse_num(key, v)?,
            "factor_epochs" => self.factor_epochs = parse_num(key, v)?,
            "factor_objective" => self.factor_objective = v.parse()?,
            "factor_negatives" => self.factor_negatives = parse_num(key, v)?,
            "factor_lr" => self.factor_lr = parse_num(key, v)?,
            "freeze_salience" => self.freeze_salience = parse_num(key, v)?,
            "top_area_pct" => self.top_area_pct = parse_num(key, v)?,
            "top_pct" => self.top_pct = parse_num(key, v)?,
            "attribution" => self.attribution = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "mode" => self.mode = v.parse()?,
            "variant" => {
                self.variants = match v.to_lowercase().as_str() {
                    "both" => Variant::BOTH.to_vec(),
                    other => vec![other.parse()?],
                }
            }
            "exclude_country" => {
                self.exclude_country = (!v.is_empty() && v != "none").then(|| v.to_uppercase());
            }
            "country_groups" => self.country_groups = opt_path(v),
            "allow_reviews" => self.allow_reviews = parse_num(key, v)?,
            "languages" => {
                self.languages = v.split(',').map(|l| l.trim().to_lowercase()).filter(|l| !l.is_empty()).collect();
            }
            "taxonomy" => self.taxonomy = opt_path(v),
            "synth_preset" => self.synth_preset = (!v.is_empty() && v != "none").then(|| v.to_string()),
            "synth_spec" => self.synth_spec = opt_path(v),
            "citation_bins" => self.citation_bins = parse_num(key, v)?,
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hypergraph_span", self.hypergraph_span as usize),
            ("lookback", self.lookback),
            ("growth_years", self.growth_years),
            ("area_size", self.area_size),
            ("credit_k", self.credit_k),
            ("embedding_dim", self.embedding_dim),
            ("context_window", self.context_window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("min_count", self.min_count),
            ("walks_per_keyword", self.walks_per_keyword),
            ("factor_epochs", self.factor_epochs),
            ("citation_bins", self.citation_bins),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be positive")));
            }
        }
        if self.disruption_window < 1 || self.prescience_lag < 1 {
            return Err(Error::Config("disruption_window and prescience_lag must be positive".into()));
        }
        if self.factor_dims < 2 {
            return Err(Error::Config("factor_dims must be at least 2".into()));
        }
        if self.growth_years < 3 {
            return Err(Error::Config("growth_years must be at least 3".into()));
        }
        for (k, p) in [("top_area_pct", self.top_area_pct), ("top_pct", self.top_pct)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("{k} must be in (0, 1], got {p}")));
            }
        }
        if !(self.factor_lr > 0.0 && self.factor_lr.is_finite()) {
            return Err(Error::Config("factor_lr must be positive".into()));
        }
        if let Some((a, b)) = self.years {
            if a > b {
                return Err(Error::Config(format!("empty year range {a}..{b}")));
            }
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no prescience variant selected".into()));
        }
        if self.languages.is_empty() {
            return Err(Error::Config("languages must not be empty".into()));
        }
        WalkConfig { length: self.walk_length, alpha: self.alpha, rng_seed: 0 }.validate()
    }

    fn variant_name(&self) -> String {
        self.variants.iter().map(|v| v.name()).collect::<Vec<_>>().join(",")
    }

    /// Canonical text of one key for hashing. Files are represented by
    /// their content digest so the hash does not depend on where they live.
    fn hash_value(&self, key: &str) -> Result<String> {
        let path_digest = |p: &Option<PathBuf>| -> Result<String> {
            match p {
                Some(p) => file_digest(p),
                None => Ok("none".into()),
            }
        };
        Ok(match key {
            "input_format" => format!("{:?}", self.input_format),
            "hypergraph_span" => self.hypergraph_span.to_string(),
            "disruption_window" => self.disruption_window.to_string(),
            "prescience_lag" => self.prescience_lag.to_string(),
            "lookback" => self.lookback.to_string(),
            "growth_years" => self.growth_years.to_string(),
            "area_size" => self.area_size.to_string(),
            "candidate_min_count" => self.candidate_min_count.to_string(),
            "credit_k" => self.credit_k.to_string(),
            "embedding_dim" => self.embedding_dim.to_string(),
            "context_window" => self.context_window.to_string(),
            "negatives" => self.negatives.to_string(),
            "epochs" => self.epochs.to_string(),
            "min_count" => self.min_count.to_string(),
            "walks_per_keyword" => self.walks_per_keyword.to_string(),
            "walk_length" => self.walk_length.to_string(),
            "alpha" => self.alpha.to_string(),
            "factor_dims" => self.factor_dims.to_string(),
            "factor_epochs" => self.factor_epochs.to_string(),
            "factor_objective" => self.factor_objective.name().to_string(),
            "factor_negatives" => self.factor_negatives.to_string(),
            "factor_lr" => self.factor_lr.to_string(),
            "freeze_salience" => self.freeze_salience.to_string(),
            "top_area_pct" => self.top_area_pct.to_string(),
            "top_pct" => self.top_pct.to_string(),
            "attribution" => self.attribution.name().to_string(),
            "seed" => self.seed.to_string(),
            "mode" => self.mode.name().to_string(),
            "variant" => self.variant_name(),
            "exclude_country" => self.exclude_country.clone().unwrap_or_default(),
            "country_groups" => path_digest(&self.country_groups)?,
            "allow_reviews" => self.allow_reviews.to_string(),
            "languages" => self.languages.iter().cloned().collect::<Vec<_>>().join(","),
            "taxonomy" => path_digest(&self.taxonomy)?,
            "synth_preset" => self.synth_preset.clone().unwrap_or_default(),
            "synth_spec" => path_digest(&self.synth_spec)?,
            "citation_bins" => self.citation_bins.to_string(),
            other => return Err(Error::Invariant(format!("no hash value for key {other:?}"))),
        })
    }
}

fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct StageRecord {
    hash: String,
    /// Output path relative to the working directory → content digest.
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Manifest {
    stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    fn load(dir: &Path) -> Result<Manifest> {
        let path = dir.join(MANIFEST);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::Format { what: "manifest", reason: e.to_string() }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(Error::io(&path, e)),
        }
    }

    fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format { what: "manifest", reason: e.to_string() })?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
}

/// Resolved year layout of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Years {
    pub first: i32,
    pub last: i32,
    /// Analysed years.
    pub start: i32,
    pub end: i32,
    pub lookback: i32,
    pub lag: i32,
}

impl Years {
    /// Years with an embedding space.
    pub fn embedding(&self) -> std::ops::RangeInclusive<i32> {
        (self.start - self.lookback).max(self.first)..=self.end
    }

    /// Years with a factor model.
    pub fn models(&self) -> std::ops::RangeInclusive<i32> {
        self.start..=(self.end + self.lag).min(self.last)
    }

    /// Years whose papers receive a prescience score.
    pub fn scored(&self) -> std::ops::RangeInclusive<i32> {
        self.start..=self.end.min(self.last - self.lag)
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    workdir: PathBuf,
    /// Directory holding the synth and ingest artifacts; differs from
    /// `workdir` for exclusion sub-runs.
    root: PathBuf,
    /// Country whose papers are withheld from training.
    exclude: Option<String>,
    corpus: OnceCell<Corpus>,
    train: OnceCell<Corpus>,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn clean_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    ensure_dir(dir)
}

fn list_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if !dir.exists() {
        return Ok(());
    }
    let mut entries: Vec<PathBuf> =
        fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>().map_err(|e| Error::io(dir, e))?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            list_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

fn rel(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let workdir = cfg.workdir.clone();
        Ok(Pipeline { root: workdir.clone(), workdir, cfg, exclude: None, corpus: OnceCell::new(), train: OnceCell::new() })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn workdir(&self) -> &Path {
        &self.workdir
    }

    /// Path of an artifact relative to the stage's working directory.
    pub fn artifact(&self, stage: Stage, name: &str) -> PathBuf {
        self.stage_base(stage).join(stage.dir()).join(name)
    }

    fn stage_base(&self, stage: Stage) -> &Path {
        match stage {
            Stage::Synth | Stage::Ingest => &self.root,
            _ => &self.workdir,
        }
    }

    /// Working directory of the exclusion run for `country`.
    pub fn exclusion_dir(&self, country: &str) -> PathBuf {
        self.workdir.join("exclude").join(country)
    }

    fn sub_pipeline(&self, country: &str) -> Pipeline {
        let workdir = self.exclusion_dir(country);
        Pipeline {
            cfg: PipelineConfig { workdir: workdir.clone(), ..self.cfg.clone() },
            workdir,
            root: self.root.clone(),
            exclude: Some(country.to_string()),
            corpus: OnceCell::new(),
            train: OnceCell::new(),
        }
    }

    /// Stages executed by `all`, in order.
    pub fn chain(&self) -> Vec<Stage> {
        let mut chain = Vec::new();
        if self.cfg.corpus.is_none() {
            chain.push(Stage::Synth);
        }
        chain.extend([
            Stage::Ingest,
            Stage::Hypergraph,
            Stage::Walks,
            Stage::Embed,
            Stage::Emergence,
            Stage::Prescience,
            Stage::Disruption,
            Stage::Report,
            Stage::Sweep,
        ]);
        if self.cfg.exclude_country.is_some() {
            chain.push(Stage::Exclude);
        }
        chain
    }

    /// Run one stage, or the whole chain for [`Stage::All`].
    pub fn run(&self, stage: Stage) -> Result<Vec<(Stage, Outcome)>> {
        if stage == Stage::All {
            return self.run_chain(&self.chain());
        }
        Ok(vec![(stage, self.run_stage(stage)?)])
    }

    pub fn run_chain(&self, stages: &[Stage]) -> Result<Vec<(Stage, Outcome)>> {
        stages.iter().map(|&s| self.run_stage(s).map(|o| (s, o))).collect()
    }

    fn manifest_dir(&self, stage: Stage) -> &Path {
        self.stage_base(stage)
    }

    /// Content digests of an upstream stage's outputs, or the error naming
    /// the stage to run.
    fn inputs_of(&self, upstream: Stage) -> Result<Vec<(String, String)>> {
        let base = self.manifest_dir(upstream);
        let manifest = Manifest::load(base)?;
        let missing = |artifact: String| Error::MissingArtifact { artifact, stage: upstream.name() };
        let record = manifest.stages.get(upstream.name()).ok_or_else(|| missing(format!("{}/", upstream.dir())))?;
        let mut out = Vec::new();
        for (rel_path, recorded) in &record.outputs {
            let p = base.join(rel_path);
            if !p.exists() {
                return Err(missing(rel_path.clone()));
            }
            let digest = file_digest(&p)?;
            if digest != *recorded {
                log::warn!("{rel_path} changed since {upstream} wrote it");
            }
            out.push((rel_path.clone(), digest));
        }
        Ok(out)
    }

    fn stage_hash(&self, stage: Stage) -> Result<String> {
        let mut h = Sha256::new();
        h.update(format!("layout={LAYOUT_VERSION}\nstage={stage}\n"));
        for &k in stage.keys() {
            let v = if k == "years" { format!("{:?}", self.years()?) } else { self.cfg.hash_value(k)? };
            h.update(format!("{k}={v}\n"));
        }
        if let Some(c) = &self.exclude {
            h.update(format!("train_exclusion={c}\n"));
        }
        match stage {
            Stage::Ingest => {
                let src = self.source()?;
                h.update(format!("input={}\n", file_digest(&src)?));
            }
            _ => {
                for &up in stage.upstream() {
                    for (p, d) in self.inputs_of(up)? {
                        h.update(format!("{up}:{p}={d}\n"));
                    }
                }
            }
        }
        Ok(hex::encode(h.finalize()))
    }

    fn up_to_date(&self, stage: Stage, hash: &str) -> Result<bool> {
        let base = self.manifest_dir(stage);
        let manifest = Manifest::load(base)?;
        let Some(record) = manifest.stages.get(stage.name()) else { return Ok(false) };
        if record.hash != hash {
            return Ok(false);
        }
        for (rel_path, digest) in &record.outputs {
            let p = base.join(rel_path);
            if !p.exists() || file_digest(&p)? != *digest {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn run_stage(&self, stage: Stage) -> Result<Outcome> {
        if stage == Stage::All {
            return Err(Error::Config("`all` is not a single stage".into()));
        }
        let hash = self.stage_hash(stage)?;
        if self.up_to_date(stage, &hash)? {
            log::info!("{stage}: up to date");
            return Ok(Outcome::UpToDate);
        }
        log::info!("{stage}: running");
        let comment = format!("config={hash} stage={stage}");
        let base = self.manifest_dir(stage).to_path_buf();
        let outputs = if stage == Stage::Exclude {
            self.run_exclude(&comment)?
        } else {
            let dir = base.join(stage.dir());
            clean_dir(&dir)?;
            match stage {
                Stage::Synth => self.run_synth(&dir, &comment)?,
                Stage::Ingest => self.run_ingest(&dir, &comment)?,
                Stage::Hypergraph => self.run_hypergraph(&dir, &comment)?,
                Stage::Walks => self.run_walks(&dir, &comment)?,
                Stage::Embed => self.run_embed(&dir, &comment)?,
                Stage::Emergence => self.run_emergence(&dir, &comment)?,
                Stage::Prescience => self.run_prescience(&dir, &comment)?,
                Stage::Disruption => self.run_disruption(&dir, &comment)?,
                Stage::Report => self.run_report(&dir, &comment)?,
                Stage::Sweep => self.run_sweep(&dir, &comment)?,
                Stage::Exclude | Stage::All => unreachable!(),
            };
            let mut files = Vec::new();
            list_files(&dir, &mut files)?;
            files
        };
        let mut record = StageRecord { hash, outputs: BTreeMap::new() };
        for p in outputs {
            record.outputs.insert(rel(&base, &p), file_digest(&p)?);
        }
        let mut manifest = Manifest::load(&base)?;
        manifest.stages.insert(stage.name().to_string(), record);
        manifest.save(&base)?;
        Ok(Outcome::Ran)
    }

    fn seed_for(&self, stage: Stage, index: i64) -> u64 {
        stream_seed(self.cfg.seed, (stage.code() << 40) ^ (index as u64 & 0xff_ffff_ffff))
    }

    // ---- corpus access ----

    fn source(&self) -> Result<PathBuf> {
        match &self.cfg.corpus {
            Some(p) => Ok(p.clone()),
            None => {
                let p = self.artifact(Stage::Synth, "synthetic.jsonl");
                if !p.exists() {
                    return Err(Error::MissingArtifact { artifact: "synth/synthetic.jsonl".into(), stage: "synth" });
                }
                Ok(p)
            }
        }
    }

    /// The ingested, filtered corpus.
    pub fn corpus(&self) -> Result<&Corpus> {
        if let Some(c) = self.corpus.get() {
            return Ok(c);
        }
        let path = self.artifact(Stage::Ingest, "corpus.jsonl");
        if !path.exists() {
            return Err(Error::MissingArtifact { artifact: "ingest/corpus.jsonl".into(), stage: "ingest" });
        }
        let ingested = corpus::ingest(&path, corpus::SCHEMA_VERSION)?;
        if !ingested.rejections.is_empty() {
            return Err(Error::Invariant(format!("{} records of {} no longer validate", ingested.rejections.len(), path.display())));
        }
        Ok(self.corpus.get_or_init(|| ingested.corpus))
    }

    /// Corpus the models are trained on: the full corpus, or the papers
    /// without an author from the excluded country.
    pub fn train_corpus(&self) -> Result<&Corpus> {
        if let Some(c) = self.train.get() {
            return Ok(c);
        }
        let full = self.corpus()?;
        let train = match &self.exclude {
            None => full.clone(),
            Some(cc) => full.filter(|p| !attribute_countries(p, AttributionStrategy::AnyAuthor).contains(cc)),
        };
        Ok(self.train.get_or_init(|| train))
    }

    pub fn years(&self) -> Result<Years> {
        let (first, last) = self.corpus()?.year_range().ok_or(Error::EmptyCorpus)?;
        let warmup = self.cfg.lookback.max(self.cfg.growth_years - 1) as i32;
        let (start, end) = match self.cfg.years {
            Some((a, b)) => (a.max(first), b.min(last)),
            None => ((first + warmup).min(last), last),
        };
        if start > end {
            return Err(Error::Config(format!("analysed years {start}..{end} fall outside the corpus range {first}..{last}")));
        }
        Ok(Years { first, last, start, end, lookback: self.cfg.lookback as i32, lag: self.cfg.prescience_lag })
    }

    fn report_config(&self) -> Result<ReportConfig> {
        let groups = match &self.cfg.country_groups {
            Some(p) => CountryGroups::load(p)?,
            None => CountryGroups::default(),
        };
        Ok(ReportConfig { attribution: self.cfg.attribution, groups })
    }

    // ---- stages ----

    fn run_synth(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let spec = match (&self.cfg.synth_spec, &self.cfg.synth_preset) {
            (Some(p), _) => synthgen::load_spec(p)?,
            (None, Some(name)) => SynthSpec::preset(name, self.cfg.seed)?,
            (None, None) => return Err(Error::Config("synth needs synth_preset or synth_spec".into())),
        };
        let (corpus, truth) = synthgen::generate(&spec)?;
        // written in the format ingest will read it back in
        let out = dir.join("synthetic.jsonl");
        match self.cfg.input_format {
            InputFormat::Records => corpus.export_with_comment(&out, Some(comment))?,
            InputFormat::OpenAlex => synthgen::export_openalex(&corpus, &out)?,
        }
        truth.write_with_comment(&dir.join("ground_truth.csv"), Some(comment))?;
        log::info!("synth: {} papers, {} planted rows", corpus.len(), truth.rows.len());
        Ok(Vec::new())
    }

    fn run_ingest(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let src = self.source()?;
        let taxonomy = self.cfg.taxonomy.as_deref().map(Taxonomy::load).transpose()?;
        let opts = IngestOptions { year_range: None, taxonomy, format: self.cfg.input_format };
        let ingested = corpus::ingest_with(&src, corpus::SCHEMA_VERSION, &opts)?;
        let filtered = ingested.corpus.filter_articles(self.cfg.allow_reviews, &self.cfg.languages);
        if filtered.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        log::info!(
            "ingest: {} records read, {} rejected, {} kept after article/language filter",
            ingested.corpus.len() + ingested.rejections.len(),
            ingested.rejections.len(),
            filtered.len()
        );
        filtered.export_with_comment(&dir.join("corpus.jsonl"), Some(comment))?;
        corpus::write_rejections(&dir.join("rejections.csv"), &ingested.rejections, Some(comment))?;
        Ok(Vec::new())
    }

    fn run_hypergraph(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let years = self.years()?;
        let train = self.train_corpus()?;
        let mut w = report::csv_writer(&dir.join("summary.csv"), Some(comment))?;
        w.write_record(["year", "window_start", "papers", "edges", "authors", "keywords"])?;
        for y in years.embedding() {
            let view = train.window(y, self.cfg.hypergraph_span);
            let g = Hypergraph::build(&view);
            w.write_record([
                y.to_string(),
                (y - self.cfg.hypergraph_span as i32 + 1).to_string(),
                view.len().to_string(),
                g.edge_count().to_string(),
                g.count_kind(NodeKind::Author).to_string(),
                g.count_kind(NodeKind::Keyword).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
        Ok(Vec::new())
    }

    fn run_walks(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let years = self.years()?;
        let train = self.train_corpus()?;
        for y in years.embedding() {
            let g = Hypergraph::build(&train.window(y, self.cfg.hypergraph_span));
            let keywords = g.keyword_nodes().len();
            if keywords == 0 {
                log::warn!("walks: no keyword papers in the window ending {y}");
                continue;
            }
            let wc = WalkConfig { length: self.cfg.walk_length, alpha: self.cfg.alpha, rng_seed: self.seed_for(Stage::Walks, y as i64) };
            let walks = g.generate_walks(&wc, keywords * self.cfg.walks_per_keyword)?;
            walks.write_with_comment(&dir.join(format!("{y}.walks")), Some(comment))?;
        }
        Ok(Vec::new())
    }

    fn run_embed(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let years = self.years()?;
        for y in years.embedding() {
            let path = self.artifact(Stage::Walks, &format!("{y}.walks"));
            if !path.exists() {
                continue;
            }
            let walks = WalkCorpus::read(&path)?;
            let tc = TrainConfig {
                dim: self.cfg.embedding_dim,
                context_window: self.cfg.context_window,
                negatives_per_positive: self.cfg.negatives,
                epochs: self.cfg.epochs,
                min_count: self.cfg.min_count,
                seed: self.seed_for(Stage::Embed, y as i64),
                mode: self.cfg.mode,
                ..TrainConfig::default()
            };
            let mut space = embedding::train(&walks, &tc)?;
            space.year = y;
            space.trained_on = format!("window {}..{y} {comment}", y - self.cfg.hypergraph_span as i32 + 1);
            space.write(&dir.join(format!("{y}.femb")))?;
        }
        Ok(Vec::new())
    }

    /// Embedding spaces of the embedding years that have one.
    pub fn load_spaces(&self) -> Result<BTreeMap<i32, EmbeddingSpace>> {
        let mut out = BTreeMap::new();
        for y in self.years()?.embedding() {
            let p = self.artifact(Stage::Embed, &format!("{y}.femb"));
            if p.exists() {
                out.insert(y, EmbeddingSpace::read(&p)?);
            }
        }
        Ok(out)
    }

    fn emergence_config(&self) -> EmergenceConfig {
        EmergenceConfig {
            area_size: self.cfg.area_size,
            lookback: self.cfg.lookback,
            growth_years: self.cfg.growth_years,
            top_area_pct: self.cfg.top_area_pct,
            top_paper_pct: self.cfg.top_pct,
            min_count: self.cfg.candidate_min_count,
            credit_k: self.cfg.credit_k,
        }
    }

    fn run_emergence(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let years = self.years()?;
        let full = self.corpus()?;
        let train = self.train_corpus()?;
        let spaces = self.load_spaces()?;
        let ecfg = self.emergence_config();
        let counts = FieldYearCounts::build(train);
        let fields = full.fields();

        let mut all_sets: Vec<EmergingSet> = Vec::new();
        let mut distances = Vec::new();
        let mut stats_w = report::csv_writer(&dir.join("stats.csv"), Some(comment))?;
        stats_w.write_record([
            "year",
            "candidates",
            "missing_from_space",
            "undefined_convergence",
            "growth_not_converged",
            "undefined_prevalence",
            "areas",
            "papers_measured",
            "papers_unmeasured",
        ])?;
        let mut credit_w = report::csv_writer(&dir.join("credit.csv"), Some(comment))?;
        credit_w.write_record(["year", "field", "central_keyword", "country", "scientists"])?;

        for y in years.start..=years.end {
            let Some(current) = spaces.get(&y) else {
                log::warn!("emergence: no embedding for {y}, year skipped");
                continue;
            };
            let window: Vec<&EmbeddingSpace> = (y - years.lookback..=y).filter_map(|t| spaces.get(&t)).collect();
            let inputs = YearInputs { year: y, spaces: window, counts: &counts };
            let (ranked, stats) = emergence::score_year(&inputs, &fields, &ecfg)?;
            let sets: Vec<EmergingSet> =
                ranked.iter().map(|(f, cands)| emergence::select_emerging(y, f, cands, ecfg.top_area_pct)).collect();
            let (rows, unmeasured) = emergence::paper_distances(full.in_year(y), current, &sets);
            let credit_view = train.window(y, self.cfg.hypergraph_span);
            for s in &sets {
                for c in &s.areas {
                    match emergence::emergence_credit(&c.area, current, &credit_view, ecfg.credit_k) {
                        Ok(credit) => {
                            for (country, n) in &credit.countries {
                                credit_w.write_record([y.to_string(), s.field.clone(), c.area.central.clone(), country.clone(), n.to_string()])?;
                            }
                        }
                        Err(e) => log::warn!("emergence: no credit for {} in {y}: {e}", c.area.central),
                    }
                }
            }
            stats_w.write_record([
                y.to_string(),
                stats.candidates_considered.to_string(),
                stats.missing_from_space.to_string(),
                stats.undefined_convergence.to_string(),
                stats.growth_not_converged.to_string(),
                stats.undefined_prevalence.to_string(),
                sets.iter().map(|s| s.areas.len()).sum::<usize>().to_string(),
                rows.len().to_string(),
                unmeasured.to_string(),
            ])?;
            distances.extend(rows);
            all_sets.extend(sets);
        }
        stats_w.flush().map_err(|e| Error::io(dir, e))?;
        credit_w.flush().map_err(|e| Error::io(dir, e))?;
        emergence::write_emerging_sets(&dir.join("emerging_sets.csv"), &all_sets, Some(comment))?;
        emergence::write_paper_tags(&dir.join("paper_distances.csv"), &distances, Some(comment))?;
        let tags = emergence::tag_emergent_papers(&distances, self.cfg.top_pct);
        emergence::write_paper_tags(&dir.join("paper_tags.csv"), &tags, Some(comment))?;
        Ok(Vec::new())
    }

    fn fit_config(&self, variant: Variant, year: i32) -> FitConfig {
        FitConfig {
            dims: self.cfg.factor_dims,
            epochs: self.cfg.factor_epochs,
            objective: self.cfg.factor_objective,
            negatives: self.cfg.factor_negatives,
            learning_rate: self.cfg.factor_lr,
            freeze_salience: self.cfg.freeze_salience,
            seed: self.seed_for(Stage::Prescience, ((variant as i64) << 32) | (year as i64 & 0xffff_ffff)),
            mode: self.cfg.mode,
            ..FitConfig::default()
        }
    }

    fn run_prescience(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let years = self.years()?;
        let full = self.corpus()?;
        let train = self.train_corpus()?;
        let mut stats_w = report::csv_writer(&dir.join("stats.csv"), Some(comment))?;
        stats_w.write_record(["variant", "year", "scored", "too_small", "out_of_vocabulary"])?;
        for &variant in &self.cfg.variants {
            let mut models: BTreeMap<i32, FactorModel> = BTreeMap::new();
            for y in years.models() {
                let edges = prescience::combinations(&train.window(y, self.cfg.hypergraph_span), variant);
                if edges.is_empty() {
                    log::warn!("prescience: no {variant} combinations in the window ending {y}");
                    continue;
                }
                let (mut model, fit) = prescience::fit(&edges, y, variant, &self.fit_config(variant, y))?;
                log::info!(
                    "prescience: {variant} {y}: {} nodes, {} combinations, final log-likelihood {:.4}",
                    model.len(),
                    fit.observed,
                    fit.log_likelihood.last().copied().unwrap_or(f64::NAN)
                );
                model.trained_on = format!("window {}..{y} {comment}", y - self.cfg.hypergraph_span as i32 + 1);
                model.write(&dir.join(format!("model_{variant}_{y}.ffac")))?;
                models.insert(y, model);
            }
            let mut rows = Vec::new();
            for y in years.scored() {
                let (Some(m0), Some(m1)) = (models.get(&y), models.get(&(y + years.lag))) else { continue };
                let (scores, stats) = prescience::score_papers(full.in_year(y), m0, m1);
                stats_w.write_record([
                    variant.name().to_string(),
                    y.to_string(),
                    stats.scored.to_string(),
                    stats.too_small.to_string(),
                    stats.out_of_vocabulary.to_string(),
                ])?;
                rows.extend(scores);
            }
            prescience::write_scores(&dir.join(format!("scores_{variant}.csv")), &rows, Some(comment))?;
        }
        stats_w.flush().map_err(|e| Error::io(dir, e))?;
        Ok(Vec::new())
    }

    fn run_disruption(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let full = self.corpus()?;
        let g = CitationGraph::from_corpus(full);
        let (scores, stats) = disruption::score_all(&g, self.cfg.disruption_window);
        log::info!(
            "disruption: {} scored, {} without references, {} without citers",
            stats.scored,
            stats.no_references,
            stats.no_citers
        );
        disruption::write_scores(&dir.join("scores.csv"), &scores, full, Some(comment))?;
        let mut w = report::csv_writer(&dir.join("stats.csv"), Some(comment))?;
        w.write_record(["scored", "no_references", "no_citers"])?;
        w.write_record([stats.scored.to_string(), stats.no_references.to_string(), stats.no_citers.to_string()])?;
        w.flush().map_err(|e| Error::io(dir, e))?;
        Ok(Vec::new())
    }

    // ---- score tables ----

    fn require(&self, stage: Stage, name: &str) -> Result<PathBuf> {
        let p = self.artifact(stage, name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact { artifact: format!("{}/{name}", stage.dir()), stage: stage.name() })
        }
    }

    /// Per-paper scores of a tag-based measure with the analysed years it
    /// covers. `None` for measures without a per-paper score or variants
    /// not run.
    pub fn score_table(&self, measure: Measure) -> Result<Option<(ScoreTable, (i32, i32))>> {
        let years = self.years()?;
        let analysed = (years.start, years.end);
        let in_years = |y: i32, (a, b): (i32, i32)| y >= a && y <= b;
        Ok(match measure {
            Measure::Emergence => {
                let rows = emergence::read_paper_tags(&self.require(Stage::Emergence, "paper_distances.csv")?)?;
                let rows = rows
                    .into_iter()
                    .map(|r| Scored { paper_id: r.paper_id, field: r.field, year: r.year, score: r.distance })
                    .collect();
                Some((ScoreTable { rows, direction: Direction::Lowest }, analysed))
            }
            Measure::ContentPrescience | Measure::ContextPrescience => {
                let variant = if measure == Measure::ContentPrescience { Variant::Content } else { Variant::Context };
                if !self.cfg.variants.contains(&variant) {
                    return Ok(None);
                }
                let rows = prescience::read_scores(&self.require(Stage::Prescience, &format!("scores_{variant}.csv"))?)?;
                let rows = rows
                    .into_iter()
                    .map(|s| Scored { paper_id: s.paper_id, field: s.field, year: s.year, score: s.prescience })
                    .collect();
                let scored = years.scored();
                Some((ScoreTable { rows, direction: Direction::Highest }, (*scored.start(), *scored.end())))
            }
            Measure::Disruption => {
                let rows = disruption::read_scores(&self.require(Stage::Disruption, "scores.csv")?)?;
                let rows = rows
                    .into_iter()
                    .filter(|(_, s)| in_years(s.year, analysed))
                    .map(|(field, s)| Scored { paper_id: s.paper_id, field, year: s.year, score: s.d_value })
                    .collect();
                Some((ScoreTable { rows, direction: Direction::Highest }, analysed))
            }
            Measure::TopCited => {
                let full = self.corpus()?;
                let view = full.view().restrict(|p| in_years(p.year, analysed));
                Some((report::top_cited_table(&view), analysed))
            }
            Measure::Citations | Measure::Publications => None,
        })
    }

    fn view_of(&self, (a, b): (i32, i32)) -> Result<View<'_>> {
        Ok(self.corpus()?.view().restrict(|p| p.year >= a && p.year <= b))
    }

    /// Series of every measure at threshold `pct`.
    pub fn series(&self, pct: f64, cfg: &ReportConfig) -> Result<Vec<CountrySeries>> {
        let years = self.years()?;
        let mut out = Vec::new();
        for m in Measure::ALL {
            match m {
                Measure::Citations => out.push(report::citation_series(&self.view_of((years.start, years.end))?, cfg)),
                Measure::Publications => {
                    let view = self.view_of((years.start, years.end))?;
                    let all = view.iter().map(|p| p.paper_id.clone()).collect();
                    out.push(report::country_series(m, &all, &view, cfg));
                }
                _ => {
                    let Some((table, span)) = self.score_table(m)? else { continue };
                    out.push(report::country_series(m, &table.tags(pct), &self.view_of(span)?, cfg));
                }
            }
        }
        Ok(out)
    }

    fn run_report(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let rcfg = self.report_config()?;
        let series = self.series(self.cfg.top_pct, &rcfg)?;
        let rows: Vec<SeriesRow> = series.iter().flat_map(|s| s.rows.iter().cloned()).collect();
        report::write_series_csv(&dir.join("series.csv"), &rows, Some(comment))?;
        report::write_plotdata(&dir.join("plotdata"), &rows)?;

        let mut w = report::csv_writer(&dir.join("unknown_fraction.csv"), Some(comment))?;
        w.write_record(["measure", "year", "tagged", "tagged_known", "unknown_fraction"])?;
        for s in &series {
            let Some(measure) = s.rows.first().map(|r| r.measure) else { continue };
            for (y, t) in &s.totals {
                w.write_record([
                    measure.name().to_string(),
                    y.to_string(),
                    t.tagged.to_string(),
                    t.tagged_known.to_string(),
                    t.unknown_fraction().to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;

        let full = self.corpus()?;
        let citations: HashMap<String, Option<u64>> = full.records().iter().map(|p| (p.paper_id.clone(), p.citation_count)).collect();
        for &variant in &self.cfg.variants {
            let scores = prescience::read_scores(&self.require(Stage::Prescience, &format!("scores_{variant}.csv"))?)?;
            let mut seen = BTreeSet::new();
            let rows: Vec<(String, f64, f64)> = scores
                .into_iter()
                .filter(|s| seen.insert(s.paper_id.clone()))
                .map(|s| (s.paper_id, s.s_pub, s.prescience))
                .collect();
            let curves = report::prescience_citation_curve(&rows, &citations, self.cfg.citation_bins, variant.name());
            report::write_curve(&dir.join(format!("citation_curve_{variant}_surprise.tsv")), &curves.surprise)?;
            report::write_curve(&dir.join(format!("citation_curve_{variant}_prescience.tsv")), &curves.prescience)?;
            if curves.excluded > 0 {
                log::info!("report: {} {variant} scores without citation counts left out of the curve", curves.excluded);
            }
        }

        let credit_path = self.require(Stage::Emergence, "credit.csv")?;
        let mut per_year: BTreeMap<i32, BTreeMap<String, u64>> = BTreeMap::new();
        for rec in report::csv_reader(&credit_path)?.records() {
            let rec = rec?;
            let year: i32 = rec.get(0).unwrap_or("").parse().map_err(|_| Error::Format { what: "credit csv", reason: "bad year".into() })?;
            let n: u64 = rec.get(4).unwrap_or("").parse().map_err(|_| Error::Format { what: "credit csv", reason: "bad count".into() })?;
            *per_year.entry(year).or_default().entry(rec.get(3).unwrap_or("").to_string()).or_default() += n;
        }
        let mut w = report::csv_writer(&dir.join("emergence_credit_shares.csv"), Some(comment))?;
        w.write_record(["year", "country", "scientists", "share"])?;
        for (y, countries) in per_year {
            let total: u64 = countries.values().sum();
            for (c, n) in countries {
                w.write_record([y.to_string(), c, n.to_string(), (n as f64 / total as f64).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
        Ok(Vec::new())
    }

    fn run_sweep(&self, dir: &Path, comment: &str) -> Result<Vec<PathBuf>> {
        let rcfg = self.report_config()?;
        let mut by_pct: BTreeMap<String, Vec<SeriesRow>> = BTreeMap::new();
        let mut counts = report::csv_writer(&dir.join("tag_counts.csv"), Some(comment))?;
        counts.write_record(["measure", "pct", "tagged", "scored"])?;
        for m in Measure::ALL {
            let Some((table, span)) = self.score_table(m)? else { continue };
            let view = self.view_of(span)?;
            let scored: BTreeSet<&str> = table.rows.iter().map(|r| r.paper_id.as_str()).collect();
            for level in report::threshold_sweep(m, &table, &report::SWEEP_PCTS, &view, &rcfg)? {
                let name = format!("series_p{:02}.csv", (level.pct * 100.0).round() as u32);
                counts.write_record([m.name().to_string(), level.pct.to_string(), level.tags.len().to_string(), scored.len().to_string()])?;
                by_pct.entry(name).or_default().extend(level.series.rows);
            }
        }
        counts.flush().map_err(|e| Error::io(dir, e))?;
        for (name, rows) in by_pct {
            report::write_series_csv(&dir.join(name), &rows, Some(comment))?;
        }
        Ok(Vec::new())
    }

    fn run_exclude(&self, comment: &str) -> Result<Vec<PathBuf>> {
        let cc = self.cfg.exclude_country.clone().ok_or_else(|| Error::Config("exclude needs exclude_country".into()))?;
        let full = self.corpus()?;
        let years = self.years()?;
        let sub = self.sub_pipeline(&cc);
        sub.run_chain(&[Stage::Hypergraph, Stage::Walks, Stage::Embed, Stage::Emergence, Stage::Prescience])?;

        let rcfg = self.report_config()?;
        let out_dir = self.workdir.join(Stage::Exclude.dir());
        ensure_dir(&out_dir)?;
        let paired = out_dir.join(format!("paired_series_{cc}.csv"));
        let mut w = report::csv_writer(&paired, Some(comment))?;
        w.write_record([
            "run", "measure", "country", "year", "share", "rate", "count", "ci_low", "ci_high", "share_ci_low", "share_ci_high",
        ])?;
        for m in [Measure::Emergence, Measure::ContentPrescience, Measure::ContextPrescience] {
            for (run, p) in [("full", self), ("excluded", &sub)] {
                let Some((table, span)) = p.score_table(m)? else { continue };
                let series = report::country_series(m, &table.tags(self.cfg.top_pct), &self.view_of(span)?, &rcfg);
                for r in series.rows {
                    w.write_record([
                        run.to_string(),
                        m.name().to_string(),
                        r.country,
                        r.year.to_string(),
                        r.share.to_string(),
                        r.rate.to_string(),
                        r.count.to_string(),
                        r.ci_low.to_string(),
                        r.ci_high.to_string(),
                        r.share_ci_low.to_string(),
                        r.share_ci_high.to_string(),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&paired, e))?;

        let undefined = out_dir.join(format!("undefined_cells_{cc}.csv"));
        let mut w = report::csv_writer(&undefined, Some(comment))?;
        w.write_record(["field", "year", "reason"])?;
        let train = sub.train_corpus()?;
        let span = self.cfg.hypergraph_span;
        for f in full.fields() {
            for y in *years.embedding().start()..=*years.models().end() {
                let has = |c: &Corpus| c.window(y, span).iter().any(|p| p.in_field(&f) && !p.keywords.is_empty());
                if has(full) && !has(train) {
                    w.write_record([f.clone(), y.to_string(), "no training papers after exclusion".to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&undefined, e))?;
        Ok(vec![paired, undefined])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let cfg = PipelineConfig::parse(
            "# comment\ncorpus = data.jsonl\nyears = 2012..2018\ntop_pct = 0.1\nvariant = content\nmode = parallel\nattribution = first_author\n",
        )
        .unwrap();
        assert_eq!(cfg.corpus, Some(PathBuf::from("data.jsonl")));
        assert_eq!(cfg.years, Some((2012, 2018)));
        assert_eq!(cfg.top_pct, 0.1);
        assert_eq!(cfg.variants, vec![Variant::Content]);
        assert_eq!(cfg.mode, TrainMode::Parallel);
        assert_eq!(cfg.attribution, AttributionStrategy::FirstAuthor);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::parse("colour = blue").is_err());
        assert!(PipelineConfig::parse("years = 2018").is_err());
        assert!(PipelineConfig::parse("no equals sign").is_err());
        let mut cfg = PipelineConfig::default();
        cfg.top_pct = 0.0;
        assert!(cfg.validate().is_err());
        cfg.top_pct = 1.5;
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig { embedding_dim: 0, ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig { years: Some((2019, 2015)), ..PipelineConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
        }
    }

    #[test]
    fn year_layout() {
        let y = Years { first: 2011, last: 2020, start: 2015, end: 2020, lookback: 3, lag: 2 };
        assert_eq!(y.embedding(), 2012..=2020);
        assert_eq!(y.models(), 2015..=2020);
        assert_eq!(y.scored(), 2015..=2018);
    }
}
