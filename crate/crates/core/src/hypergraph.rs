//! Author/keyword hypergraph of a year window and the generalized random walk
//! over it.
//!
//! Each paper with at least one keyword becomes a hyperedge joining its
//! keyword nodes and author nodes. A walk step samples one incident hyperedge
//! uniformly, picks a node kind (author with probability `alpha / (alpha + 1)`,
//! keyword otherwise, falling back to whichever kind the edge has), and then
//! a member of that kind uniformly, excluding the current node. When the
//! current node is the only member of the chosen kind the walk stays put, so
//! the kind choice stays exactly balanced at `alpha = 1`.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::View;
use crate::error::{Error, Result};
use crate::seed::stream_rng;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Author,
    Keyword,
}

impl NodeKind {
    pub fn prefix(self) -> &'static str {
        match self {
            NodeKind::Author => "A:",
            NodeKind::Keyword => "K:",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HyperNode {
    pub kind: NodeKind,
    pub id: String,
}

impl HyperNode {
    pub fn author(id: impl Into<String>) -> Self {
        HyperNode { kind: NodeKind::Author, id: id.into() }
    }

    pub fn keyword(id: impl Into<String>) -> Self {
        HyperNode { kind: NodeKind::Keyword, id: id.into() }
    }

    /// `A:<id>` or `K:<keyword>`.
    pub fn token(&self) -> String {
        format!("{}{}", self.kind.prefix(), self.id)
    }

    pub fn parse_token(token: &str) -> Option<HyperNode> {
        if let Some(id) = token.strip_prefix("A:") {
            Some(HyperNode::author(id))
        } else {
            token.strip_prefix("K:").map(HyperNode::keyword)
        }
    }
}

impl fmt::Display for HyperNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.id)
    }
}

/// Token key used by embedding spaces for a keyword.
pub fn keyword_token(kw: &str) -> String {
    format!("K:{kw}")
}

pub fn author_token(id: &str) -> String {
    format!("A:{id}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperEdge {
    pub paper_id: String,
    pub authors: Vec<NodeId>,
    pub keywords: Vec<NodeId>,
}

impl HyperEdge {
    pub fn size(&self) -> usize {
        self.authors.len() + self.keywords.len()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.authors.contains(&node) || self.keywords.contains(&node)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    nodes: Vec<HyperNode>,
    index: HashMap<HyperNode, NodeId>,
    edges: Vec<HyperEdge>,
    incidence: Vec<Vec<u32>>,
    walkable: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub length: usize,
    pub alpha: f64,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig { length: 20, alpha: 1.0, rng_seed: 0 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::Config(format!("walk length {} < 2", self.length)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be a nonnegative real, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn author_probability(&self) -> f64 {
        self.alpha / (self.alpha + 1.0)
    }
}

impl Hypergraph {
    /// One hyperedge per paper with at least one keyword; all of that
    /// paper's authors join the edge.
    pub fn build(view: &View<'_>) -> Hypergraph {
        let mut g = Hypergraph {
            nodes: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            incidence: Vec::new(),
            walkable: Vec::new(),
        };
        for rec in view.iter().filter(|r| !r.keywords.is_empty()) {
            let mut authors = Vec::with_capacity(rec.authors.len());
            for a in &rec.authors {
                let id = g.intern(HyperNode::author(a.author_id.as_str()));
                if !authors.contains(&id) {
                    authors.push(id);
                }
            }
            let keywords: Vec<NodeId> = rec.keywords.iter().map(|k| g.intern(HyperNode::keyword(k.as_str()))).collect();
            let edge = HyperEdge { paper_id: rec.paper_id.clone(), authors, keywords };
            let e = g.edges.len() as u32;
            let walkable = edge.size() >= 2;
            for &n in edge.authors.iter().chain(&edge.keywords) {
                g.incidence[n as usize].push(e);
                if walkable {
                    g.walkable[n as usize].push(e);
                }
            }
            g.edges.push(edge);
        }
        g
    }

    fn intern(&mut self, node: HyperNode) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.index.insert(node.clone(), id);
        self.nodes.push(node);
        self.incidence.push(Vec::new());
        self.walkable.push(Vec::new());
        id
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[HyperNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &HyperNode {
        &self.nodes[id as usize]
    }

    pub fn lookup(&self, node: &HyperNode) -> Option<NodeId> {
        self.index.get(node).copied()
    }

    pub fn edges(&self) -> &[HyperEdge] {
        &self.edges
    }

    pub fn incident(&self, id: NodeId) -> &[u32] {
        &self.incidence[id as usize]
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.incidence[id as usize].len()
    }

    pub fn keyword_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len() as NodeId).filter(|&i| self.nodes[i as usize].kind == NodeKind::Keyword).collect()
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// One step of the generalized walk from `current`.
    pub fn step<R: Rng + ?Sized>(&self, current: NodeId, cfg: &WalkConfig, rng: &mut R) -> Result<NodeId> {
        let incident = &self.walkable[current as usize];
        if incident.is_empty() {
            return Err(Error::NoIncidentEdge(self.nodes[current as usize].token()));
        }
        let edge = &self.edges[incident[rng.random_range(0..incident.len())] as usize];
        let pick_author = if edge.authors.is_empty() {
            false
        } else if edge.keywords.is_empty() {
            true
        } else {
            rng.random::<f64>() < cfg.author_probability()
        };
        let pool = if pick_author { &edge.authors } else { &edge.keywords };
        let others = pool.len() - usize::from(pool.contains(&current));
        if others == 0 {
            return Ok(current);
        }
        let mut k = rng.random_range(0..others);
        for &n in pool {
            if n == current {
                continue;
            }
            if k == 0 {
                return Ok(n);
            }
            k -= 1;
        }
        unreachable!("pool holds {others} nodes other than current")
    }

    fn walk_from<R: Rng + ?Sized>(&self, start: NodeId, cfg: &WalkConfig, rng: &mut R) -> Vec<NodeId> {
        let mut walk = Vec::with_capacity(cfg.length);
        walk.push(start);
        let mut cur = start;
        while walk.len() < cfg.length {
            match self.step(cur, cfg, rng) {
                Ok(next) => {
                    walk.push(next);
                    cur = next;
                }
                Err(_) => break,
            }
        }
        walk
    }

    /// `n_walks` walks, each started at a uniformly drawn keyword node. Walk
    /// `i` draws from its own stream seeded by `(rng_seed, i)`.
    pub fn generate_walks(&self, cfg: &WalkConfig, n_walks: usize) -> Result<WalkCorpus> {
        cfg.validate()?;
        let starts = self.keyword_nodes();
        if starts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let walks: Vec<Vec<NodeId>> = (0..n_walks as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(cfg.rng_seed, i);
                let start = starts[rng.random_range(0..starts.len())];
                self.walk_from(start, cfg, &mut rng)
            })
            .collect();
        Ok(WalkCorpus { vocab: self.nodes.iter().map(HyperNode::token).collect(), walks })
    }
}

/// Walk sequences over a token vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub vocab: Vec<String>,
    pub walks: Vec<Vec<NodeId>>,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    /// Build from token sequences, interning tokens in first-seen order.
    pub fn from_tokens<S: AsRef<str>>(walks: &[Vec<S>]) -> WalkCorpus {
        let mut index: HashMap<String, NodeId> = HashMap::new();
        let mut vocab = Vec::new();
        let walks = walks
            .iter()
            .map(|w| {
                w.iter()
                    .map(|t| {
                        *index.entry(t.as_ref().to_string()).or_insert_with(|| {
                            vocab.push(t.as_ref().to_string());
                            (vocab.len() - 1) as NodeId
                        })
                    })
                    .collect()
            })
            .collect();
        WalkCorpus { vocab, walks }
    }

    /// One walk per line, tokens separated by tabs (keywords may contain
    /// spaces).
    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_with_comment(path, None)
    }

    /// As [`WalkCorpus::write`], with an optional leading `# comment` line.
    pub fn write_with_comment(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        if let Some(c) = comment {
            writeln!(w, "# {c}").map_err(|e| Error::io(path, e))?;
        }
        for walk in &self.walks {
            let line: Vec<&str> = walk.iter().map(|&n| self.vocab[n as usize].as_str()).collect();
            writeln!(w, "{}", line.join("\t")).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<WalkCorpus> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut walks = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split('\t').collect();
            if let Some(bad) = toks.iter().find(|t| HyperNode::parse_token(t).is_none()) {
                return Err(Error::Format { what: "walk corpus", reason: format!("bad token {bad:?}") });
            }
            walks.push(toks.into_iter().map(str::to_string).collect::<Vec<_>>());
        }
        Ok(WalkCorpus::from_tokens(&walks))
    }
}
