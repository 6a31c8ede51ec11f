//! CD disruption index over a citation graph.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::select::{self, Direction};

pub const DEFAULT_WINDOW: i32 = 5;

/// Citation edges between papers of one corpus. References to papers outside
/// the corpus are dropped, as are self-citations and duplicate edges.
#[derive(Debug, Clone)]
pub struct CitationGraph {
    ids: Vec<String>,
    years: Vec<i32>,
    index: HashMap<String, u32>,
    /// `refs[i]`: papers cited by `i`, sorted and distinct.
    refs: Vec<Vec<u32>>,
    /// `citers[i]`: papers citing `i`, sorted and distinct.
    citers: Vec<Vec<u32>>,
}

impl CitationGraph {
    pub fn from_corpus(corpus: &Corpus) -> CitationGraph {
        let nodes = corpus.records().iter().map(|p| (p.paper_id.clone(), p.year));
        let edges = corpus
            .records()
            .iter()
            .flat_map(|p| p.references.iter().map(move |r| (p.paper_id.clone(), r.clone())));
        CitationGraph::from_edges(nodes, edges)
    }

    /// Build from `(id, year)` nodes and `citing -> cited` edges; edges with
    /// an unknown endpoint are ignored.
    pub fn from_edges(nodes: impl IntoIterator<Item = (String, i32)>, edges: impl IntoIterator<Item = (String, String)>) -> CitationGraph {
        let mut ids = Vec::new();
        let mut years = Vec::new();
        let mut index = HashMap::new();
        for (id, year) in nodes {
            if !index.contains_key(&id) {
                index.insert(id.clone(), ids.len() as u32);
                ids.push(id);
                years.push(year);
            }
        }
        let mut refs = vec![Vec::new(); ids.len()];
        let mut citers = vec![Vec::new(); ids.len()];
        for (a, b) in edges {
            let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) else { continue };
            if i != j {
                refs[i as usize].push(j);
                citers[j as usize].push(i);
            }
        }
        for v in refs.iter_mut().chain(citers.iter_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        CitationGraph { ids, years, index, refs, citers }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.refs.iter().map(Vec::len).sum()
    }

    pub fn references(&self, paper_id: &str) -> Vec<&str> {
        self.lookup(paper_id, &self.refs)
    }

    pub fn citers(&self, paper_id: &str) -> Vec<&str> {
        self.lookup(paper_id, &self.citers)
    }

    fn lookup<'a>(&'a self, paper_id: &str, adj: &'a [Vec<u32>]) -> Vec<&'a str> {
        self.index
            .get(paper_id)
            .map(|&i| adj[i as usize].iter().map(|&j| self.ids[j as usize].as_str()).collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisruptionScore {
    pub paper_id: String,
    pub year: i32,
    pub n_f: u32,
    pub n_b: u32,
    pub n_r: u32,
    pub d_value: f64,
    pub window_years: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Undefined {
    UnknownPaper,
    NoReferences,
    NoCiters,
}

/// CD index of `focal` with subsequent papers published in
/// `(year, year + window]`.
pub fn cd_index(g: &CitationGraph, focal: &str, window: i32) -> std::result::Result<DisruptionScore, Undefined> {
    let &f = g.index.get(focal).ok_or(Undefined::UnknownPaper)?;
    let f = f as usize;
    if g.refs[f].is_empty() {
        return Err(Undefined::NoReferences);
    }
    let year = g.years[f];
    let in_window = |p: u32| {
        let y = g.years[p as usize];
        y > year && y <= year + window
    };
    let mut n_f = 0;
    let mut n_b = 0;
    for &c in &g.citers[f] {
        if !in_window(c) {
            continue;
        }
        if g.refs[c as usize].iter().any(|r| g.refs[f].binary_search(r).is_ok()) {
            n_b += 1;
        } else {
            n_f += 1;
        }
    }
    if n_f + n_b == 0 {
        return Err(Undefined::NoCiters);
    }
    let mut ref_only: Vec<u32> = g.refs[f]
        .iter()
        .flat_map(|&r| g.citers[r as usize].iter().copied())
        .filter(|&c| c as usize != f && in_window(c) && g.citers[f].binary_search(&c).is_err())
        .collect();
    ref_only.sort_unstable();
    ref_only.dedup();
    let n_r = ref_only.len() as u32;
    let d_value = (n_f as f64 - n_b as f64) / (n_f + n_b + n_r) as f64;
    Ok(DisruptionScore { paper_id: g.ids[f].clone(), year, n_f, n_b, n_r, d_value, window_years: window })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DisruptionStats {
    pub scored: usize,
    pub no_references: usize,
    pub no_citers: usize,
}

/// Score every paper of the graph in parallel; output follows graph order.
pub fn score_all(g: &CitationGraph, window: i32) -> (Vec<DisruptionScore>, DisruptionStats) {
    let results: Vec<_> = (0..g.len()).into_par_iter().map(|i| cd_index(g, &g.ids[i], window)).collect();
    let mut stats = DisruptionStats::default();
    let mut scores = Vec::new();
    for r in results {
        match r {
            Ok(s) => {
                stats.scored += 1;
                scores.push(s);
            }
            Err(Undefined::NoReferences) => stats.no_references += 1,
            Err(Undefined::NoCiters) => stats.no_citers += 1,
            Err(Undefined::UnknownPaper) => {}
        }
    }
    (scores, stats)
}

/// Top `pct` of the scored papers of `field` in `year` by D, ties inclusive.
pub fn tag_disruptive(scores: &[DisruptionScore], corpus: &Corpus, field: &str, year: i32, pct: f64) -> BTreeSet<String> {
    let items: Vec<(String, f64)> = scores
        .iter()
        .filter(|s| s.year == year && corpus.get(&s.paper_id).is_some_and(|p| p.in_field(field)))
        .map(|s| (s.paper_id.clone(), s.d_value))
        .collect();
    select::select(&items, pct, Direction::Highest).into_iter().collect()
}

/// CSV with columns `paper_id, year, field, n_f, n_b, n_r, d_value`, one row
/// per listed field of the paper.
pub fn write_scores(path: &Path, scores: &[DisruptionScore], corpus: &Corpus, header_comment: Option<&str>) -> Result<()> {
    let mut w = crate::report::csv_writer(path, header_comment)?;
    w.write_record(["paper_id", "year", "field", "n_f", "n_b", "n_r", "d_value"])?;
    for s in scores {
        let fields = corpus.get(&s.paper_id).map(|p| p.field.clone()).unwrap_or_default();
        for f in &fields {
            w.write_record([
                s.paper_id.clone(),
                s.year.to_string(),
                f.clone(),
                s.n_f.to_string(),
                s.n_b.to_string(),
                s.n_r.to_string(),
                s.d_value.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows as `(field, score)`.
pub fn read_scores(path: &Path) -> Result<Vec<(String, DisruptionScore)>> {
    let mut out = Vec::new();
    for rec in crate::report::csv_reader(path)?.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Format { what: "disruption csv", reason: format!("bad {what}") };
        let f = |i: usize| rec.get(i).unwrap_or("");
        out.push((
            f(2).to_string(),
            DisruptionScore {
                paper_id: f(0).to_string(),
                year: f(1).parse().map_err(|_| bad("year"))?,
                n_f: f(3).parse().map_err(|_| bad("n_f"))?,
                n_b: f(4).parse().map_err(|_| bad("n_b"))?,
                n_r: f(5).parse().map_err(|_| bad("n_r"))?,
                d_value: f(6).parse().map_err(|_| bad("d_value"))?,
                window_years: DEFAULT_WINDOW,
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[(&str, i32)], edges: &[(&str, &str)]) -> CitationGraph {
        CitationGraph::from_edges(
            nodes.iter().map(|(a, y)| (a.to_string(), *y)),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string())),
        )
    }

    #[test]
    fn eclipsing_pattern_is_one() {
        let g = graph(
            &[("r", 2000), ("f", 2001), ("c1", 2002), ("c2", 2003), ("c3", 2004)],
            &[("f", "r"), ("c1", "f"), ("c2", "f"), ("c3", "f")],
        );
        let s = cd_index(&g, "f", 5).unwrap();
        assert_eq!((s.n_f, s.n_b, s.n_r), (3, 0, 0));
        assert_eq!(s.d_value, 1.0);
    }

    #[test]
    fn consolidating_pattern_is_minus_one() {
        let g = graph(
            &[("r", 2000), ("f", 2001), ("c1", 2002), ("c2", 2003)],
            &[("f", "r"), ("c1", "f"), ("c1", "r"), ("c2", "f"), ("c2", "r")],
        );
        assert_eq!(cd_index(&g, "f", 5).unwrap().d_value, -1.0);
    }

    #[test]
    fn seven_node_mixed_graph() {
        let g = graph(
            &[("r1", 1999), ("r2", 1999), ("f", 2000), ("a", 2001), ("b", 2002), ("c", 2003), ("d", 2004)],
            &[("f", "r1"), ("f", "r2"), ("a", "f"), ("b", "f"), ("c", "f"), ("c", "r1"), ("d", "r2")],
        );
        let s = cd_index(&g, "f", 5).unwrap();
        assert_eq!((s.n_f, s.n_b, s.n_r), (2, 1, 1));
        assert_eq!(s.d_value, 0.25);
    }

    #[test]
    fn window_and_same_year_bounds() {
        let g = graph(
            &[("r", 2000), ("f", 2001), ("same", 2001), ("late", 2007), ("edge", 2006)],
            &[("f", "r"), ("same", "f"), ("late", "f"), ("edge", "f")],
        );
        let s = cd_index(&g, "f", 5).unwrap();
        assert_eq!((s.n_f, s.n_b, s.n_r), (1, 0, 0));
    }

    #[test]
    fn undefined_cases() {
        let g = graph(&[("r", 2000), ("f", 2001), ("lonely", 2001)], &[("f", "r"), ("lonely", "r")]);
        assert_eq!(cd_index(&g, "f", 5), Err(Undefined::NoCiters));
        assert_eq!(cd_index(&g, "r", 5), Err(Undefined::NoReferences));
        assert_eq!(cd_index(&g, "zz", 5), Err(Undefined::UnknownPaper));
    }

    #[test]
    fn duplicates_self_loops_and_phantoms_dropped() {
        let g = graph(&[("a", 2000), ("b", 2001)], &[("b", "a"), ("b", "a"), ("b", "b"), ("b", "ghost")]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.references("b"), vec!["a"]);
    }

    #[test]
    fn tag_single_disruptor() {
        use crate::corpus::PaperRecord;
        let records: Vec<PaperRecord> = (0..40)
            .map(|i| {
                serde_json::from_str(&format!(r#"{{"paper_id":"p{i}","year":2000,"keywords":[],"ref_venues":[],"references":[],"authors":[],"field":"f"}}"#))
                    .unwrap()
            })
            .collect();
        let (corpus, _) = Corpus::from_records(records);
        let scores: Vec<DisruptionScore> = (0..40)
            .map(|i| DisruptionScore {
                paper_id: format!("p{i}"),
                year: 2000,
                n_f: 0,
                n_b: 1,
                n_r: 0,
                d_value: if i == 7 { 1.0 } else { -1.0 },
                window_years: 5,
            })
            .collect();
        // quota is 2 of 40; the 39 tied -1 scores all sit on the boundary
        let tags = tag_disruptive(&scores, &corpus, "f", 2000, 0.05);
        assert_eq!(tags.len(), 40);
        let tags = tag_disruptive(&scores, &corpus, "f", 2000, 0.01);
        assert_eq!(tags.into_iter().collect::<Vec<_>>(), vec!["p7".to_string()]);
    }
}
