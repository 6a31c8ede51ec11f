//! Skip-gram node embeddings with negative sampling, trained on walk
//! corpora, plus exact cosine-distance queries.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{keyword_token, WalkCorpus};
use crate::seed::{stream_rng, stream_seed};

const MAGIC: &[u8; 4] = b"FEMB";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TrainMode {
    /// Single update stream; bitwise reproducible for a fixed seed.
    #[default]
    Deterministic,
    /// Lock-free concurrent updates; runs may differ.
    Parallel,
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "deterministic" => Ok(TrainMode::Deterministic),
            "parallel" => Ok(TrainMode::Parallel),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

impl TrainMode {
    pub fn name(self) -> &'static str {
        match self {
            TrainMode::Deterministic => "deterministic",
            TrainMode::Parallel => "parallel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub context_window: usize,
    pub negatives_per_positive: usize,
    pub epochs: usize,
    pub lr_initial: f32,
    pub lr_final: f32,
    pub min_count: usize,
    pub seed: u64,
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            context_window: 5,
            negatives_per_positive: 5,
            epochs: 5,
            lr_initial: 0.025,
            lr_final: 0.0001,
            min_count: 1,
            seed: 1,
            mode: TrainMode::Deterministic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.dim, self.context_window, self.negatives_per_positive, self.epochs, self.min_count];
        if positive.contains(&0) {
            return Err(Error::Config("embedding dim, window, negatives, epochs and min_count must be positive".into()));
        }
        if !(self.lr_initial > 0.0 && self.lr_final > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFilter {
    Keyword,
    Author,
    Any,
}

impl KindFilter {
    fn accepts(self, token: &str) -> bool {
        match self {
            KindFilter::Keyword => token.starts_with("K:"),
            KindFilter::Author => token.starts_with("A:"),
            KindFilter::Any => true,
        }
    }
}

/// `1 - u.v / (|u| |v|)`, clamped to `[0, 2]`.
pub fn cosine_distance<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(distance_with_norms(u, v, nu, nv))
}

fn norm<T: Copy + Into<f64>>(u: &[T]) -> f64 {
    u.iter().map(|&x| {
        let x: f64 = x.into();
        x * x
    })
    .sum::<f64>()
    .sqrt()
}

fn distance_with_norms<T: Copy + Into<f64>>(u: &[T], v: &[T], nu: f64, nv: f64) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(&a, &b)| a.into() * b.into()).sum();
    (1.0 - dot / (nu * nv)).clamp(0.0, 2.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbors {
    pub items: Vec<(String, f64)>,
    /// Fewer than `k` nodes of the requested kind were available.
    pub short: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub vector: Vec<f64>,
    pub used: usize,
    pub missing: usize,
}

/// One year's node vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    pub year: i32,
    pub dim: usize,
    /// Window and configuration the space was trained on.
    pub trained_on: String,
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<f32>,
    norms: Vec<f64>,
}

impl EmbeddingSpace {
    pub fn from_vectors(year: i32, dim: usize, rows: Vec<(String, Vec<f32>)>) -> Result<Self> {
        let mut nodes = Vec::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (node, v) in rows {
            if v.len() != dim {
                return Err(Error::DimMismatch(dim, v.len()));
            }
            nodes.push(node);
            vectors.extend_from_slice(&v);
        }
        Self::assemble(year, dim, String::new(), nodes, vectors)
    }

    fn assemble(year: i32, dim: usize, trained_on: String, nodes: Vec<String>, vectors: Vec<f32>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Format { what: "embedding space", reason: format!("duplicate node {n:?}") });
            }
        }
        let norms = vectors.chunks_exact(dim.max(1)).map(norm).collect();
        Ok(EmbeddingSpace { year, dim, trained_on, nodes, index, vectors, norms })
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

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Result<&[f32]> {
        let i = *self.index.get(token).ok_or_else(|| Error::KeyMissing(token.to_string()))?;
        Ok(self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Keyword strings (without the `K:` prefix) present in the space.
    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().filter_map(|n| n.strip_prefix("K:"))
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<f64> {
        let ia = *self.index.get(a).ok_or_else(|| Error::KeyMissing(a.to_string()))?;
        let ib = *self.index.get(b).ok_or_else(|| Error::KeyMissing(b.to_string()))?;
        self.distance_idx(ia, ib)
    }

    fn distance_idx(&self, a: usize, b: usize) -> Result<f64> {
        if self.norms[a] == 0.0 || self.norms[b] == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(distance_with_norms(self.row(a), self.row(b), self.norms[a], self.norms[b]))
    }

    /// `k` nearest nodes of the requested kind to `center` (a node token),
    /// ascending distance, ties by token. Exhaustive scan.
    pub fn nearest_neighbors(&self, center: &str, k: usize, filter: KindFilter) -> Result<Neighbors> {
        let c = *self.index.get(center).ok_or_else(|| Error::KeyMissing(center.to_string()))?;
        let cv = self.row(c);
        self.nearest_to(cv, self.norms[c], k, |i| i != c && filter.accepts(&self.nodes[i]))
    }

    /// `k` nearest nodes to an arbitrary query vector among nodes accepted by
    /// `keep`.
    pub fn nearest_to_vector(&self, query: &[f64], k: usize, keep: impl Fn(&str) -> bool) -> Result<Neighbors> {
        if query.len() != self.dim {
            return Err(Error::DimMismatch(self.dim, query.len()));
        }
        let nq = norm(query);
        if nq == 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut scored = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if keep(node) && self.norms[i] > 0.0 {
                let dot: f64 = query.iter().zip(self.row(i)).map(|(&a, &b)| a * f64::from(b)).sum();
                scored.push((i, (1.0 - dot / (nq * self.norms[i])).clamp(0.0, 2.0)));
            }
        }
        Ok(self.take_nearest(scored, k))
    }

    fn nearest_to(&self, cv: &[f32], cn: f64, k: usize, keep: impl Fn(usize) -> bool) -> Result<Neighbors> {
        if cn == 0.0 {
            return Err(Error::ZeroVector);
        }
        let scored: Vec<(usize, f64)> = (0..self.nodes.len())
            .filter(|&i| keep(i) && self.norms[i] > 0.0)
            .map(|i| (i, distance_with_norms(cv, self.row(i), cn, self.norms[i])))
            .collect();
        Ok(self.take_nearest(scored, k))
    }

    fn take_nearest(&self, mut scored: Vec<(usize, f64)>, k: usize) -> Neighbors {
        let short = scored.len() < k;
        let cmp = |a: &(usize, f64), b: &(usize, f64)| {
            a.1.total_cmp(&b.1).then_with(|| self.nodes[a.0].cmp(&self.nodes[b.0]))
        };
        if k == 0 {
            return Neighbors { items: Vec::new(), short: false };
        }
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Neighbors { items: scored.into_iter().map(|(i, d)| (self.nodes[i].clone(), d)).collect(), short }
    }

    /// Mean vector of the keywords present in the space.
    pub fn centroid<S: AsRef<str>>(&self, keywords: &[S]) -> Result<Centroid> {
        let mut acc = vec![0.0f64; self.dim];
        let (mut used, mut missing) = (0usize, 0usize);
        for kw in keywords {
            match self.index.get(&keyword_token(kw.as_ref())) {
                Some(&i) => {
                    for (a, &x) in acc.iter_mut().zip(self.row(i)) {
                        *a += f64::from(x);
                    }
                    used += 1;
                }
                None => missing += 1,
            }
        }
        if used == 0 {
            return Err(Error::Unrepresentable);
        }
        for a in &mut acc {
            *a /= used as f64;
        }
        Ok(Centroid { vector: acc, used, missing })
    }

    /// Binary layout (little endian): magic `FEMB`, version u32, year i32,
    /// dim u32, count u32, trained_on (u32 length + utf-8), node table
    /// (u32 length + utf-8 per node), then `count * dim` f32 row-major.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut buf = Vec::with_capacity(64 + self.vectors.len() * 4);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(&self.year.to_le_bytes());
        buf.extend_from_slice(&(self.dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        put_str(&mut buf, &self.trained_on);
        for n in &self.nodes {
            put_str(&mut buf, n);
        }
        for x in &self.vectors {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        w.write_all(&buf).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
        let mut r = ByteReader { bytes: &bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format { what: "embedding space", reason: "bad magic".into() });
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format { what: "embedding space", reason: format!("version {version}") });
        }
        let year = r.u32()? as i32;
        let dim = r.u32()? as usize;
        let count = r.u32()? as usize;
        let trained_on = r.string()?;
        let nodes = (0..count).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let raw = r.take(count * dim * 4)?;
        let vectors = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Self::assemble(year, dim, trained_on, nodes, vectors)
    }

    /// `node<TAB>x1,x2,...` per line, for inspection.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (i, n) in self.nodes.iter().enumerate() {
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            writeln!(w, "{n}\t{}", row.join(",")).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

pub(crate) struct ByteReader<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::Format {
            what: "binary artifact",
            reason: "truncated".into(),
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|e| Error::Format { what: "binary artifact", reason: e.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean skip-gram loss per positive pair, one entry per epoch.
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: u64,
}

pub fn train(walks: &WalkCorpus, cfg: &TrainConfig) -> Result<EmbeddingSpace> {
    Ok(train_with_report(walks, cfg)?.0)
}

/// Shared weight matrix. Rows are read into and written from local buffers;
/// concurrent writers in parallel mode may interleave (hogwild).
struct Weights {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl Weights {
    fn new(rows: usize, dim: usize, init: impl FnMut() -> f32) -> Self {
        let mut init = init;
        Weights { data: (0..rows * dim).map(|_| AtomicU32::new(init().to_bits())).collect(), dim }
    }

    fn load(&self, row: usize, out: &mut [f32]) {
        let base = row * self.dim;
        for (o, a) in out.iter_mut().zip(&self.data[base..base + self.dim]) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn store(&self, row: usize, vals: &[f32]) {
        let base = row * self.dim;
        for (v, a) in vals.iter().zip(&self.data[base..base + self.dim]) {
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }

    fn into_vec(self) -> Vec<f32> {
        self.data.into_iter().map(|a| f32::from_bits(a.into_inner())).collect()
    }
}

struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("nonempty vocabulary");
        let x = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct Sgns<'a> {
    cfg: &'a TrainConfig,
    input: Weights,
    output: Weights,
    negatives: NegativeTable,
    total_pairs_budget: f64,
    progress: AtomicU64,
}

struct Scratch {
    center: Vec<f32>,
    target: Vec<f32>,
    grad: Vec<f32>,
}

impl Sgns<'_> {
    fn lr(&self) -> f32 {
        let done = self.progress.load(Ordering::Relaxed) as f64 / self.total_pairs_budget;
        let lr = self.cfg.lr_initial - (self.cfg.lr_initial - self.cfg.lr_final) * done.min(1.0) as f32;
        lr.max(self.cfg.lr_final)
    }

    /// Train on the walks in `walks`; returns (summed loss, pair count).
    fn run<R: Rng + ?Sized>(&self, walks: &[Vec<u32>], rng: &mut R) -> (f64, u64) {
        let dim = self.cfg.dim;
        let mut s = Scratch { center: vec![0.0; dim], target: vec![0.0; dim], grad: vec![0.0; dim] };
        let (mut loss, mut pairs) = (0.0f64, 0u64);
        for walk in walks {
            let lr = self.lr();
            for (i, &center) in walk.iter().enumerate() {
                let reach = rng.random_range(1..=self.cfg.context_window);
                let lo = i.saturating_sub(reach);
                let hi = (i + reach).min(walk.len() - 1);
                for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    loss += self.pair(center as usize, ctx as usize, lr, rng, &mut s);
                    pairs += 1;
                }
            }
            let walk_pairs = walk.len() as u64 * 2 * self.cfg.context_window as u64;
            self.progress.fetch_add(walk_pairs, Ordering::Relaxed);
        }
        (loss, pairs)
    }

    fn pair<R: Rng + ?Sized>(&self, center: usize, ctx: usize, lr: f32, rng: &mut R, s: &mut Scratch) -> f64 {
        self.input.load(center, &mut s.center);
        s.grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0f64;
        for n in 0..=self.cfg.negatives_per_positive {
            let (target, label) = if n == 0 {
                (ctx, 1.0f32)
            } else {
                let t = self.negatives.sample(rng);
                if t == ctx {
                    continue;
                }
                (t, 0.0)
            };
            self.output.load(target, &mut s.target);
            let f: f32 = s.center.iter().zip(&s.target).map(|(a, b)| a * b).sum();
            let p = sigmoid(f);
            loss -= if label > 0.0 { f64::from(p.max(1e-7)).ln() } else { f64::from((1.0 - p).max(1e-7)).ln() };
            let g = (label - p) * lr;
            for k in 0..s.grad.len() {
                s.grad[k] += g * s.target[k];
                s.target[k] += g * s.center[k];
            }
            self.output.store(target, &s.target);
        }
        for (c, g) in s.center.iter_mut().zip(&s.grad) {
            *c += g;
        }
        self.input.store(center, &s.center);
        loss
    }
}

/// Train and also return per-epoch loss.
pub fn train_with_report(walks: &WalkCorpus, cfg: &TrainConfig) -> Result<(EmbeddingSpace, TrainReport)> {
    cfg.validate()?;
    if walks.walks.iter().all(|w| w.len() < 2) {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = vec![0u64; walks.vocab.len()];
    for w in &walks.walks {
        for &t in w {
            counts[t as usize] += 1;
        }
    }
    // compact vocabulary: tokens with enough occurrences, in vocab order
    let mut remap = vec![u32::MAX; walks.vocab.len()];
    let mut kept = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c as usize >= cfg.min_count {
            remap[i] = kept.len() as u32;
            kept.push(i);
        }
    }
    let seqs: Vec<Vec<u32>> = walks
        .walks
        .iter()
        .map(|w| w.iter().map(|&t| remap[t as usize]).filter(|&t| t != u32::MAX).collect::<Vec<_>>())
        .filter(|w| w.len() >= 2)
        .collect();
    if seqs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let kept_counts: Vec<u64> = kept.iter().map(|&i| counts[i]).collect();
    let mut init_rng = stream_rng(cfg.seed, u64::MAX);
    let dim = cfg.dim;
    let input = Weights::new(kept.len(), dim, || (init_rng.random::<f32>() - 0.5) / dim as f32);
    let output = Weights::new(kept.len(), dim, || 0.0);
    let tokens: u64 = seqs.iter().map(|w| w.len() as u64).sum();
    let sgns = Sgns {
        cfg,
        input,
        output,
        negatives: NegativeTable::new(&kept_counts),
        total_pairs_budget: (tokens * 2 * cfg.context_window as u64 * cfg.epochs as u64) as f64,
        progress: AtomicU64::new(0),
    };

    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut pairs_per_epoch = 0;
    for epoch in 0..cfg.epochs {
        let (loss, pairs) = match cfg.mode {
            TrainMode::Deterministic => {
                let mut rng = stream_rng(cfg.seed, epoch as u64);
                sgns.run(&seqs, &mut rng)
            }
            TrainMode::Parallel => {
                let shards = rayon::current_num_threads().max(1);
                let chunk = seqs.len().div_ceil(shards);
                seqs.par_chunks(chunk.max(1))
                    .enumerate()
                    .map(|(i, part)| {
                        let mut rng = stream_rng(stream_seed(cfg.seed, epoch as u64), i as u64);
                        sgns.run(part, &mut rng)
                    })
                    .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
            }
        };
        if !loss.is_finite() {
            return Err(Error::NonFinite { epoch, detail: "skip-gram loss".into() });
        }
        pairs_per_epoch = pairs;
        epoch_loss.push(loss / pairs.max(1) as f64);
    }

    let nodes = kept.iter().map(|&i| walks.vocab[i].clone()).collect();
    let space = EmbeddingSpace::assemble(0, dim, String::new(), nodes, sgns.input.into_vec())?;
    Ok((space, TrainReport { epoch_loss, pairs_per_epoch }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_distance_limits() {
        let u = [1.0f64, 2.0, 3.0];
        assert!(cosine_distance(&u, &u).unwrap().abs() < 1e-12);
        assert!((cosine_distance(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine_distance(&[1.0f64, -2.0], &[-1.0, 2.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(cosine_distance(&[0.0f64, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
        assert!(matches!(cosine_distance(&[1.0f64], &[1.0, 0.0]), Err(Error::DimMismatch(1, 2))));
    }

    fn space(rows: &[(&str, [f32; 2])]) -> EmbeddingSpace {
        EmbeddingSpace::from_vectors(2020, 2, rows.iter().map(|(n, v)| (n.to_string(), v.to_vec())).collect())
            .unwrap()
    }

    #[test]
    fn neighbors_k_zero_and_short() {
        let s = space(&[("K:a", [1.0, 0.0]), ("K:b", [0.0, 1.0]), ("A:x", [1.0, 1.0])]);
        assert!(s.nearest_neighbors("K:a", 0, KindFilter::Any).unwrap().items.is_empty());
        let n = s.nearest_neighbors("K:a", 5, KindFilter::Keyword).unwrap();
        assert!(n.short);
        assert_eq!(n.items.len(), 1);
        assert!(matches!(s.nearest_neighbors("K:zz", 1, KindFilter::Any), Err(Error::KeyMissing(_))));
    }

    #[test]
    fn neighbor_ties_are_lexicographic() {
        let s = space(&[("K:c", [1.0, 0.0]), ("K:q", [0.0, 1.0]), ("K:b", [0.0, 1.0]), ("K:a", [0.0, 1.0])]);
        let n = s.nearest_neighbors("K:c", 3, KindFilter::Keyword).unwrap();
        let ids: Vec<&str> = n.items.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["K:a", "K:b", "K:q"]);
    }

    #[test]
    fn centroid_cases() {
        let s = space(&[("K:a", [1.0, 0.0]), ("K:b", [-1.0, 0.0]), ("K:c", [0.5, 2.0])]);
        assert_eq!(s.centroid(&["c"]).unwrap().vector, vec![0.5, 2.0]);
        let z = s.centroid(&["a", "b", "missing"]).unwrap();
        assert_eq!(z.vector, vec![0.0, 0.0]);
        assert_eq!((z.used, z.missing), (2, 1));
        assert!(matches!(s.centroid(&["nope"]), Err(Error::Unrepresentable)));
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = space(&[("K:a b", [1.5, -0.25]), ("A:x", [0.0, 3.0])]);
        s.trained_on = "2016..=2020".into();
        let p = dir.path().join("s.bin");
        s.write(&p).unwrap();
        assert_eq!(EmbeddingSpace::read(&p).unwrap(), s);
        s.write_text(&dir.path().join("s.txt")).unwrap();
    }

    #[test]
    fn empty_corpus_is_fatal() {
        let wc = WalkCorpus { vocab: vec!["K:a".into()], walks: vec![vec![0]] };
        assert!(matches!(train(&wc, &TrainConfig::default()), Err(Error::EmptyCorpus)));
    }
}
