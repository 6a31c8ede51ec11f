//! Poisson latent-factor propensity model, surprisal, and prescience.
//!
//! Each node `i` (a keyword for the content variant, a referenced venue for
//! the context variant) has a simplex loading vector `theta_i` over `D` latent
//! dimensions and a positive salience `r_i`. A combination `h` appears at rate
//!
//! ```text
//! lambda_h = sum_d prod_{i in h} theta_id * prod_{i in h} r_i
//! ```
//!
//! and its surprisal is `-ln sum_d prod_{i in h} theta_id`. Prescience is the
//! drop in a paper's surprisal between the model of its publication year and
//! the model two years later.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PaperRecord, View};
use crate::embedding::{ByteReader, TrainMode};
use crate::error::{Error, Result};
use crate::seed::{stream_rng, stream_seed};
use crate::select::{self, Direction};

/// Floor on the proximity sum so disjoint supports give a finite surprisal.
pub const PROXIMITY_FLOOR: f64 = 1e-300;

/// Surprisal at the floor, `-ln(1e-300)`.
pub fn novelty_cap() -> f64 {
    -PROXIMITY_FLOOR.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Content,
    Context,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Content, Variant::Context];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Content => "content",
            Variant::Context => "context",
        }
    }

    /// Nodes of `p` in this variant's universe: keywords, or distinct
    /// referenced venues.
    pub fn combination_of(self, p: &PaperRecord) -> Vec<String> {
        match self {
            Variant::Content => p.keywords.clone(),
            Variant::Context => p.distinct_venues(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "content" => Ok(Variant::Content),
            "context" => Ok(Variant::Context),
            other => Err(Error::Config(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub year: i32,
    pub variant: Variant,
    pub dims: usize,
    /// Window and configuration the model was fitted on.
    pub trained_on: String,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    /// Row-major `nodes x dims`, rows on the simplex.
    theta: Vec<f64>,
    salience: Vec<f64>,
}

impl FactorModel {
    /// Assemble a model, checking that rows are on the simplex and salience
    /// is positive.
    pub fn new(year: i32, variant: Variant, dims: usize, nodes: Vec<String>, theta: Vec<f64>, salience: Vec<f64>) -> Result<Self> {
        if dims == 0 || theta.len() != nodes.len() * dims || salience.len() != nodes.len() {
            return Err(Error::Invariant("factor model shape mismatch".into()));
        }
        for (i, row) in theta.chunks_exact(dims).enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > 1e-6 {
                return Err(Error::Invariant(format!("theta row of {:?} is not on the simplex (sum {s})", nodes[i])));
            }
        }
        if let Some(i) = salience.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::Invariant(format!("salience of {:?} is {}", nodes[i], salience[i])));
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Invariant(format!("duplicate node {n:?}")));
            }
        }
        Ok(FactorModel { year, variant, dims, trained_on: String::new(), nodes, index, theta, salience })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn contains(&self, node: &str) -> bool {
        self.index.contains_key(node)
    }

    pub fn theta(&self, node: &str) -> Option<&[f64]> {
        self.index.get(node).map(|&i| self.row(i))
    }

    pub fn salience(&self, node: &str) -> Option<f64> {
        self.index.get(node).map(|&i| self.salience[i])
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.dims..(i + 1) * self.dims]
    }

    pub fn resolve<S: AsRef<str>>(&self, members: &[S]) -> Result<Vec<usize>> {
        members
            .iter()
            .map(|m| self.index.get(m.as_ref()).copied().ok_or_else(|| Error::OutOfVocabulary(m.as_ref().to_string())))
            .collect()
    }

    /// `sum_d prod_{i in h} theta_id`.
    fn proximity(&self, h: &[usize]) -> f64 {
        (0..self.dims).map(|d| h.iter().map(|&i| self.theta[i * self.dims + d]).product::<f64>()).sum()
    }

    /// Expected rate of combination `members`.
    pub fn propensity<S: AsRef<str>>(&self, members: &[S]) -> Result<f64> {
        let h = self.resolve(members)?;
        Ok(self.proximity(&h) * h.iter().map(|&i| self.salience[i]).product::<f64>())
    }

    /// Surprisal of combination `members`; salience does not enter.
    pub fn novelty<S: AsRef<str>>(&self, members: &[S]) -> Result<f64> {
        let h = self.resolve(members)?;
        Ok(self.novelty_idx(&h).0)
    }

    /// Surprisal and whether the floor was engaged.
    fn novelty_idx(&self, h: &[usize]) -> (f64, bool) {
        // a simplex row sums to one; rounding would leave a ~1e-16 residue
        if h.len() == 1 {
            return (0.0, false);
        }
        let s = self.proximity(h);
        if s < PROXIMITY_FLOOR {
            return (novelty_cap(), true);
        }
        ((-s.ln()).max(0.0), false)
    }

    /// Binary layout (little endian): magic `FFAC`, version u32, year i32,
    /// variant u32 (0 content, 1 context), dims u32, count u32, trained_on
    /// (u32 length + utf-8), node table (same string encoding), theta f64
    /// row-major, salience f64.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"FFAC");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&self.year.to_le_bytes());
        buf.extend_from_slice(&(self.variant as u32).to_le_bytes());
        buf.extend_from_slice(&(self.dims as u32).to_le_bytes());
        buf.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        for n in std::iter::once(&self.trained_on).chain(&self.nodes) {
            buf.extend_from_slice(&(n.len() as u32).to_le_bytes());
            buf.extend_from_slice(n.as_bytes());
        }
        for x in self.theta.iter().chain(&self.salience) {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        w.write_all(&buf).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        let mut r = ByteReader { bytes: &bytes, pos: 0 };
        if r.take(4)? != b"FFAC" || r.u32()? != 1 {
            return Err(Error::Format { what: "factor model", reason: "bad header".into() });
        }
        let year = r.u32()? as i32;
        let variant = match r.u32()? {
            0 => Variant::Content,
            1 => Variant::Context,
            v => return Err(Error::Format { what: "factor model", reason: format!("variant {v}") }),
        };
        let dims = r.u32()? as usize;
        let count = r.u32()? as usize;
        let trained_on = r.string()?;
        let nodes = (0..count).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let theta = (0..count * dims).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let salience = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let mut m = FactorModel::new(year, variant, dims, nodes, theta, salience)?;
        m.trained_on = trained_on;
        Ok(m)
    }
}

/// Which likelihood the fit maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Objective {
    /// Poisson likelihood over every combination of each observed
    /// cardinality; the sum of rates over all k-subsets is evaluated in
    /// closed form through elementary symmetric polynomials.
    #[default]
    Exact,
    /// Observed combinations plus `negatives` uniformly sampled unobserved
    /// ones per observed combination.
    Sampled,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Exact => "exact",
            Objective::Sampled => "sampled",
        }
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Objective::Exact),
            "sampled" => Ok(Objective::Sampled),
            other => Err(Error::Config(format!("unknown factor objective {other:?} (exact | sampled)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub dims: usize,
    pub epochs: usize,
    pub objective: Objective,
    /// Unobserved same-cardinality combinations sampled per observed one
    /// (sampled objective only).
    pub negatives: usize,
    pub learning_rate: f64,
    /// Learning rate is multiplied by `decay_factor` every `decay_every` epochs.
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Cap on `|y - lambda|` per update (sampled objective only).
    pub grad_clip: f64,
    pub init_scale: f64,
    pub freeze_salience: bool,
    pub seed: u64,
    pub mode: TrainMode,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            dims: 25,
            epochs: 50,
            objective: Objective::Exact,
            negatives: 5,
            learning_rate: 0.1,
            decay_every: 15,
            decay_factor: 0.5,
            grad_clip: 5.0,
            init_scale: 0.5,
            freeze_salience: false,
            seed: 1,
            mode: TrainMode::Deterministic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Sampled Poisson log-likelihood per epoch (without the `ln y!` term).
    pub log_likelihood: Vec<f64>,
    pub observed: usize,
}

/// Combinations of papers in `view` for `variant`, keeping only those with at
/// least two nodes.
pub fn combinations(view: &View<'_>, variant: Variant) -> Vec<Vec<String>> {
    view.iter().map(|p| variant.combination_of(p)).filter(|c| c.len() >= 2).collect()
}

struct Params {
    dims: usize,
    logits: Vec<f64>,
    log_r: Vec<f64>,
}

struct Sample {
    nodes: Vec<u32>,
    y: f64,
}

impl Params {
    /// `(ln proximity, responsibilities q_d)` for `h`, reusing `log_theta`.
    fn eval(&self, h: &[u32], log_theta: &mut Vec<f64>, q: &mut [f64]) -> f64 {
        let d = self.dims;
        log_theta.clear();
        for &i in h {
            let row = &self.logits[i as usize * d..(i as usize + 1) * d];
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            log_theta.extend(row.iter().map(|x| x - lse));
        }
        for (k, qk) in q.iter_mut().enumerate() {
            *qk = (0..h.len()).map(|j| log_theta[j * d + k]).sum();
        }
        let m = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = q.iter().map(|x| (x - m).exp()).sum();
        let log_s = m + s.ln();
        for qk in q.iter_mut() {
            *qk = (*qk - log_s).exp();
        }
        log_s
    }
}

/// Ascent step on one sample; returns its log-likelihood term.
fn sgd_step(p: &mut Params, s: &Sample, lr: f64, cfg: &FitConfig, lt: &mut Vec<f64>, q: &mut [f64]) -> f64 {
    let d = p.dims;
    let log_s = p.eval(&s.nodes, lt, q);
    let log_r: f64 = s.nodes.iter().map(|&i| p.log_r[i as usize]).sum();
    let log_lambda = log_s + log_r;
    let lambda = log_lambda.exp();
    let ll = s.y * log_lambda - lambda;
    let g = (s.y - lambda).clamp(-cfg.grad_clip, cfg.grad_clip) * lr;
    for (j, &i) in s.nodes.iter().enumerate() {
        let base = i as usize * d;
        for k in 0..d {
            let theta = lt[j * d + k].exp();
            p.logits[base + k] += g * (q[k] - theta);
        }
        if !cfg.freeze_salience {
            p.log_r[i as usize] += g;
        }
    }
    ll
}

/// Fit a factor model to observed combinations by stochastic ascent on a
/// sampled Poisson likelihood: every distinct observed combination with its
/// count, plus `negatives` unobserved same-cardinality combinations per
/// observed one (count 0), resampled each epoch.
pub fn fit(edges: &[Vec<String>], year: i32, variant: Variant, cfg: &FitConfig) -> Result<(FactorModel, FitReport)> {
    if cfg.dims < 2 {
        return Err(Error::Config(format!("factor model needs at least 2 dimensions, got {}", cfg.dims)));
    }
    // universe in first-seen order, distinct combinations with counts
    let mut index: HashMap<&str, u32> = HashMap::new();
    let mut nodes: Vec<String> = Vec::new();
    let mut observed: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for e in edges {
        let mut h: Vec<u32> = Vec::with_capacity(e.len());
        for n in e {
            let id = *index.entry(n.as_str()).or_insert_with(|| {
                nodes.push(n.clone());
                (nodes.len() - 1) as u32
            });
            if !h.contains(&id) {
                h.push(id);
            }
        }
        if h.len() >= 2 {
            h.sort_unstable();
            *observed.entry(h).or_default() += 1.0;
        }
    }
    if observed.is_empty() {
        return Err(Error::Config("no combination with two or more nodes to fit".into()));
    }
    let n = nodes.len();
    let d = cfg.dims;
    let mut degree = vec![0f64; n];
    for (h, &y) in &observed {
        for &i in h {
            degree[i as usize] += y;
        }
    }
    let mean_degree = degree.iter().sum::<f64>() / n as f64;

    let mut rng = stream_rng(cfg.seed, 0);
    let normal = Normal::new(0.0, cfg.init_scale).map_err(|e| Error::Config(e.to_string()))?;
    let mut params = Params {
        dims: d,
        logits: (0..n * d).map(|_| normal.sample(&mut rng)).collect(),
        log_r: degree.iter().map(|&k| (k.max(0.5) / mean_degree).ln()).collect(),
    };

    let positives: Vec<Sample> = observed.iter().map(|(h, &y)| Sample { nodes: h.clone(), y }).collect();
    let mut report = FitReport { log_likelihood: Vec::with_capacity(cfg.epochs), observed: positives.len() };
    match cfg.objective {
        Objective::Exact => fit_exact(&mut params, &positives, cfg, &mut report)?,
        Objective::Sampled => fit_sampled(&mut params, &positives, &observed, cfg, &mut report)?,
    }

    let mut theta = Vec::with_capacity(n * d);
    for i in 0..n {
        let row = &params.logits[i * d..(i + 1) * d];
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
        let s: f64 = e.iter().sum();
        theta.extend(e.iter().map(|x| x / s));
    }
    let salience = params.log_r.iter().map(|x| x.exp().max(f64::MIN_POSITIVE)).collect();
    Ok((FactorModel::new(year, variant, d, nodes, theta, salience)?, report))
}

fn fit_sampled(
    params: &mut Params,
    positives: &[Sample],
    observed: &BTreeMap<Vec<u32>, f64>,
    cfg: &FitConfig,
    report: &mut FitReport,
) -> Result<()> {
    let n = params.logits.len() / params.dims;
    let d = params.dims;
    let observed_set: HashSet<&Vec<u32>> = observed.keys().collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate * cfg.decay_factor.powi((epoch / cfg.decay_every.max(1)) as i32);
        let mut erng = stream_rng(stream_seed(cfg.seed, 1), epoch as u64);
        let mut samples: Vec<&Sample> = positives.iter().collect();
        let negatives: Vec<Sample> = positives
            .iter()
            .flat_map(|p| std::iter::repeat_n(p.nodes.len(), cfg.negatives))
            .filter_map(|size| sample_unobserved(n, size, &observed_set, &mut erng).map(|h| Sample { nodes: h, y: 0.0 }))
            .collect();
        samples.extend(negatives.iter());
        samples.shuffle(&mut erng);

        let ll = match cfg.mode {
            TrainMode::Deterministic => {
                let mut lt = Vec::new();
                let mut q = vec![0.0; d];
                samples.iter().map(|s| sgd_step(params, s, lr, cfg, &mut lt, &mut q)).sum::<f64>()
            }
            TrainMode::Parallel => parallel_epoch(params, &samples, lr, cfg),
        };
        if !ll.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                detail: format!("log-likelihood {ll} over {} samples at learning rate {lr}", samples.len()),
            });
        }
        report.log_likelihood.push(ll);
    }
    Ok(())
}

/// Positive combinations per minibatch of the exact objective; the number of
/// steps per epoch is capped so large vocabularies stay affordable.
const EXACT_BATCH: usize = 512;
const EXACT_MAX_STEPS: usize = 16;

/// Adam ascent on the exact Poisson likelihood
/// `sum_obs y ln lambda_h - sum_{k} sum_{|h| = k} lambda_h`, `k` ranging over
/// 2 up to the largest observed cardinality. Each step uses a minibatch of
/// observed combinations (rescaled to the full set) and the full rate sum.
fn fit_exact(params: &mut Params, positives: &[Sample], cfg: &FitConfig, report: &mut FitReport) -> Result<()> {
    let k_max = positives.iter().map(|s| s.nodes.len()).max().unwrap_or(2);
    let steps = positives.len().div_ceil(EXACT_BATCH).clamp(1, EXACT_MAX_STEPS);
    let parallel = cfg.mode == TrainMode::Parallel;
    let mut adam = Adam::new(params.logits.len(), params.log_r.len());
    let mut order: Vec<usize> = (0..positives.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate * cfg.decay_factor.powi((epoch / cfg.decay_every.max(1)) as i32);
        let mut erng = stream_rng(stream_seed(cfg.seed, 1), epoch as u64);
        order.shuffle(&mut erng);
        let chunk = order.len().div_ceil(steps);
        for batch in order.chunks(chunk) {
            let scale = positives.len() as f64 / batch.len() as f64;
            let mut grad = Gradient::zeros(params);
            positive_gradient(params, positives, batch, scale, parallel, &mut grad);
            rate_sum_gradient(params, k_max, parallel, &mut grad);
            adam.step(params, &grad, lr, cfg.freeze_salience);
        }
        let ll = exact_objective(params, positives, k_max);
        if !ll.is_finite() {
            return Err(Error::NonFinite { epoch, detail: format!("log-likelihood {ll} at learning rate {lr}") });
        }
        report.log_likelihood.push(ll);
    }
    Ok(())
}

struct Gradient {
    logits: Vec<f64>,
    log_r: Vec<f64>,
}

impl Gradient {
    fn zeros(p: &Params) -> Self {
        Gradient { logits: vec![0.0; p.logits.len()], log_r: vec![0.0; p.log_r.len()] }
    }

    fn add(&mut self, other: &Gradient) {
        for (a, b) in self.logits.iter_mut().zip(&other.logits) {
            *a += b;
        }
        for (a, b) in self.log_r.iter_mut().zip(&other.log_r) {
            *a += b;
        }
    }
}

fn softmax_rows(p: &Params) -> Vec<f64> {
    let d = p.dims;
    let mut theta = Vec::with_capacity(p.logits.len());
    for row in p.logits.chunks(d) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let start = theta.len();
        theta.extend(row.iter().map(|x| (x - m).exp()));
        let s: f64 = theta[start..].iter().sum();
        for t in &mut theta[start..] {
            *t /= s;
        }
    }
    theta
}

/// Gradient of `scale * sum_{h in batch} y_h ln lambda_h`.
fn positive_gradient(p: &Params, positives: &[Sample], batch: &[usize], scale: f64, parallel: bool, grad: &mut Gradient) {
    let d = p.dims;
    let accumulate = |part: &[usize], g: &mut Gradient| {
        let mut lt = Vec::new();
        let mut q = vec![0.0; d];
        for &b in part {
            let s = &positives[b];
            p.eval(&s.nodes, &mut lt, &mut q);
            let w = s.y * scale;
            for (j, &i) in s.nodes.iter().enumerate() {
                let base = i as usize * d;
                for k in 0..d {
                    g.logits[base + k] += w * (q[k] - lt[j * d + k].exp());
                }
                g.log_r[i as usize] += w;
            }
        }
    };
    if parallel {
        let parts: Vec<Gradient> = batch
            .par_chunks(64)
            .map(|part| {
                let mut g = Gradient::zeros(p);
                accumulate(part, &mut g);
                g
            })
            .collect();
        for g in &parts {
            grad.add(g);
        }
    } else {
        accumulate(batch, grad);
    }
}

/// Per latent dimension `d`, with `x_i = theta_id r_i`: the rate sum
/// `sum_{k=2..=k_max} e_k(x)` and, for every node, its derivative
/// `sum_{k=2..=k_max} e_{k-1}(x without i)`. Leave-one-out polynomials come
/// from prefix and suffix products, which stay stable when one `x_i`
/// dominates.
fn rate_sum_column(x: &[f64], k_max: usize) -> (f64, Vec<f64>) {
    let n = x.len();
    let width = k_max + 1;
    let mut prefix = vec![0.0; (n + 1) * width];
    prefix[0] = 1.0;
    for i in 0..n {
        let (done, rest) = prefix.split_at_mut((i + 1) * width);
        let prev = &done[i * width..];
        let next = &mut rest[..width];
        next[0] = 1.0;
        for k in 1..width {
            next[k] = prev[k] + x[i] * prev[k - 1];
        }
    }
    let total: f64 = prefix[n * width + 2..(n + 1) * width].iter().sum();
    let mut suffix = vec![0.0; width];
    suffix[0] = 1.0;
    let mut deriv = vec![0.0; n];
    for i in (0..n).rev() {
        let pre = &prefix[i * width..(i + 1) * width];
        // coefficients 1..k_max-1 of pre * suffix
        let mut sum = 0.0;
        for k in 1..k_max {
            for j in 0..=k {
                sum += pre[j] * suffix[k - j];
            }
        }
        deriv[i] = sum;
        for k in (1..width).rev() {
            suffix[k] += x[i] * suffix[k - 1];
        }
    }
    (total, deriv)
}

/// Subtract the gradient of the rate sum over all combinations.
fn rate_sum_gradient(p: &Params, k_max: usize, parallel: bool, grad: &mut Gradient) {
    let d = p.dims;
    let n = p.log_r.len();
    let theta = softmax_rows(p);
    let r: Vec<f64> = p.log_r.iter().map(|x| x.exp()).collect();
    let column = |k: usize| {
        let x: Vec<f64> = (0..n).map(|i| theta[i * d + k] * r[i]).collect();
        rate_sum_column(&x, k_max).1
    };
    let derivs: Vec<Vec<f64>> = if parallel { (0..d).into_par_iter().map(column).collect() } else { (0..d).map(column).collect() };
    for i in 0..n {
        let row = &theta[i * d..(i + 1) * d];
        // dP/dx_ik = derivs[k][i]; x_ik = theta_ik r_i
        let mean: f64 = (0..d).map(|k| row[k] * derivs[k][i]).sum();
        grad.log_r[i] -= r[i] * mean;
        for k in 0..d {
            grad.logits[i * d + k] -= r[i] * row[k] * (derivs[k][i] - mean);
        }
    }
}

fn exact_objective(p: &Params, positives: &[Sample], k_max: usize) -> f64 {
    let d = p.dims;
    let n = p.log_r.len();
    let mut lt = Vec::new();
    let mut q = vec![0.0; d];
    let mut ll = 0.0;
    for s in positives {
        let log_s = p.eval(&s.nodes, &mut lt, &mut q);
        let log_r: f64 = s.nodes.iter().map(|&i| p.log_r[i as usize]).sum();
        ll += s.y * (log_s + log_r);
    }
    let theta = softmax_rows(p);
    let r: Vec<f64> = p.log_r.iter().map(|x| x.exp()).collect();
    for k in 0..d {
        let x: Vec<f64> = (0..n).map(|i| theta[i * d + k] * r[i]).collect();
        ll -= rate_sum_column(&x, k_max).0;
    }
    ll
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n_logits: usize, n_r: usize) -> Self {
        Adam { m: vec![0.0; n_logits + n_r], v: vec![0.0; n_logits + n_r], t: 0 }
    }

    /// Ascent step on logits followed by log-salience.
    fn step(&mut self, p: &mut Params, g: &Gradient, lr: f64, freeze_salience: bool) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let nl = p.logits.len();
        let mut update = |idx: usize, param: &mut f64, grad: f64| {
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            *m = Self::B1 * *m + (1.0 - Self::B1) * grad;
            *v = Self::B2 * *v + (1.0 - Self::B2) * grad * grad;
            *param += lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        };
        for (i, (param, &grad)) in p.logits.iter_mut().zip(&g.logits).enumerate() {
            update(i, param, grad);
        }
        if !freeze_salience {
            for (i, (param, &grad)) in p.log_r.iter_mut().zip(&g.log_r).enumerate() {
                update(nl + i, param, grad);
            }
        }
    }
}

/// Shards run independent ascent on copies of the parameters; their deltas
/// are summed back.
fn parallel_epoch(params: &mut Params, samples: &[&Sample], lr: f64, cfg: &FitConfig) -> f64 {
    let shards = rayon::current_num_threads().max(1);
    let chunk = samples.len().div_ceil(shards).max(1);
    let base_logits = params.logits.clone();
    let base_r = params.log_r.clone();
    let d = params.dims;
    let results: Vec<(Vec<f64>, Vec<f64>, f64)> = samples
        .par_chunks(chunk)
        .map(|part| {
            let mut local = Params { dims: d, logits: base_logits.clone(), log_r: base_r.clone() };
            let mut lt = Vec::new();
            let mut q = vec![0.0; d];
            let ll = part.iter().map(|s| sgd_step(&mut local, s, lr, cfg, &mut lt, &mut q)).sum();
            (local.logits, local.log_r, ll)
        })
        .collect();
    let mut ll = 0.0;
    for (logits, log_r, part_ll) in results {
        for (p, (new, old)) in params.logits.iter_mut().zip(logits.iter().zip(&base_logits)) {
            *p += new - old;
        }
        for (p, (new, old)) in params.log_r.iter_mut().zip(log_r.iter().zip(&base_r)) {
            *p += new - old;
        }
        ll += part_ll;
    }
    ll
}

fn sample_unobserved<R: Rng + ?Sized>(n: usize, size: usize, observed: &HashSet<&Vec<u32>>, rng: &mut R) -> Option<Vec<u32>> {
    if size > n {
        return None;
    }
    for _ in 0..20 {
        let mut h: Vec<u32> = rand::seq::index::sample(rng, n, size).into_iter().map(|i| i as u32).collect();
        h.sort_unstable();
        if !observed.contains(&h) {
            return Some(h);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unscored {
    /// Fewer than two nodes in the variant's universe.
    TooSmall,
    /// Some member is missing from the named year's vocabulary.
    OutOfVocabulary { year: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurprisePair {
    pub at_publication: f64,
    pub later: f64,
    pub capped: bool,
}

/// Surprisal of `p`'s combination under the publication-year model and the
/// later model. A member missing from either vocabulary excludes the paper.
pub fn surprise_pair(at_pub: &FactorModel, later: &FactorModel, p: &PaperRecord) -> std::result::Result<SurprisePair, Unscored> {
    let members = at_pub.variant.combination_of(p);
    if members.len() < 2 {
        return Err(Unscored::TooSmall);
    }
    let h0 = at_pub.resolve(&members).map_err(|_| Unscored::OutOfVocabulary { year: at_pub.year })?;
    let h1 = later.resolve(&members).map_err(|_| Unscored::OutOfVocabulary { year: later.year })?;
    let (s0, c0) = at_pub.novelty_idx(&h0);
    let (s1, c1) = later.novelty_idx(&h1);
    Ok(SurprisePair { at_publication: s0, later: s1, capped: c0 || c1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrescienceScore {
    pub paper_id: String,
    pub year: i32,
    pub field: String,
    pub variant: Variant,
    pub s_pub: f64,
    pub s_later: f64,
    pub prescience: f64,
    pub capped_flag: bool,
}

pub fn prescience_score(p: &PaperRecord, field: &str, variant: Variant, pair: SurprisePair) -> PrescienceScore {
    PrescienceScore {
        paper_id: p.paper_id.clone(),
        year: p.year,
        field: field.to_string(),
        variant,
        s_pub: pair.at_publication,
        s_later: pair.later,
        prescience: pair.at_publication - pair.later,
        capped_flag: pair.capped,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreStats {
    pub scored: usize,
    pub too_small: usize,
    pub out_of_vocabulary: usize,
}

/// Score every paper of `papers`, one row per listed field.
pub fn score_papers<'a>(
    papers: impl Iterator<Item = &'a PaperRecord>,
    at_pub: &FactorModel,
    later: &FactorModel,
) -> (Vec<PrescienceScore>, ScoreStats) {
    let mut rows = Vec::new();
    let mut stats = ScoreStats::default();
    for p in papers {
        match surprise_pair(at_pub, later, p) {
            Ok(pair) => {
                stats.scored += 1;
                for f in &p.field {
                    rows.push(prescience_score(p, f, at_pub.variant, pair));
                }
            }
            Err(Unscored::TooSmall) => stats.too_small += 1,
            Err(Unscored::OutOfVocabulary { .. }) => stats.out_of_vocabulary += 1,
        }
    }
    (rows, stats)
}

fn tag(scores: &[PrescienceScore], field: &str, year: i32, variant: Variant, pct: f64, dir: Direction) -> Vec<String> {
    let items: Vec<(String, f64)> = scores
        .iter()
        .filter(|s| s.field == field && s.year == year && s.variant == variant)
        .map(|s| (s.paper_id.clone(), s.prescience))
        .collect();
    select::select(&items, pct, dir)
}

/// Top `pct` of the field-year by prescience, ties included.
pub fn tag_prescient(scores: &[PrescienceScore], field: &str, year: i32, pct: f64, variant: Variant) -> Vec<String> {
    tag(scores, field, year, variant, pct, Direction::Highest)
}

/// Bottom `pct` of the field-year by prescience (most negative first).
pub fn tag_declining(scores: &[PrescienceScore], field: &str, year: i32, pct: f64, variant: Variant) -> Vec<String> {
    tag(scores, field, year, variant, pct, Direction::Lowest)
}

pub fn write_scores(path: &Path, rows: &[PrescienceScore], header_comment: Option<&str>) -> Result<()> {
    let mut w = crate::report::csv_writer(path, header_comment)?;
    w.write_record(["paper_id", "year", "field", "variant", "s_pub", "s_later", "prescience", "capped_flag"])?;
    for r in rows {
        w.write_record([
            r.paper_id.clone(),
            r.year.to_string(),
            r.field.clone(),
            r.variant.name().to_string(),
            r.s_pub.to_string(),
            r.s_later.to_string(),
            r.prescience.to_string(),
            r.capped_flag.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<PrescienceScore>> {
    let mut out = Vec::new();
    for rec in crate::report::csv_reader(path)?.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Format { what: "prescience csv", reason: format!("bad {what}") };
        let f = |i: usize| rec.get(i).unwrap_or("");
        out.push(PrescienceScore {
            paper_id: f(0).to_string(),
            year: f(1).parse().map_err(|_| bad("year"))?,
            field: f(2).to_string(),
            variant: f(3).parse()?,
            s_pub: f(4).parse().map_err(|_| bad("s_pub"))?,
            s_later: f(5).parse().map_err(|_| bad("s_later"))?,
            prescience: f(6).parse().map_err(|_| bad("prescience"))?,
            capped_flag: f(7).parse().map_err(|_| bad("capped_flag"))?,
        });
    }
    Ok(out)
}
