//! Emerging keyword areas and emergent papers.
//!
//! An area is a central keyword plus its nearest keyword neighbours in a
//! year's embedding space. Each candidate area gets four scores (pairwise
//! convergence over the last three years, exponential growth rate of the
//! central keyword's annual counts in the field, its prevalence in the field,
//! and the R² of the growth fit); the four rankings are averaged and the top
//! slice per field is the emerging set. Papers closest to any emerging area of
//! their fields are tagged emergent.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperRecord, View};
use crate::embedding::{cosine_distance, EmbeddingSpace, KindFilter};
use crate::error::{Error, Result};
use crate::hypergraph::{author_token, keyword_token};
use crate::seed::stream_rng;
use crate::select::{self, Direction};

#[derive(Debug, Clone, PartialEq)]
pub struct EmergenceConfig {
    /// Central keyword plus neighbours.
    pub area_size: usize,
    /// Years of distance change averaged by the convergence score.
    pub lookback: usize,
    /// Years of annual counts fed to the growth fit.
    pub growth_years: usize,
    pub top_area_pct: f64,
    pub top_paper_pct: f64,
    /// Minimum occurrences in the field-year for a keyword to be a candidate.
    pub min_count: u64,
    /// Closest scientists credited per area.
    pub credit_k: usize,
}

impl Default for EmergenceConfig {
    fn default() -> Self {
        EmergenceConfig {
            area_size: 25,
            lookback: 3,
            growth_years: 5,
            top_area_pct: 0.01,
            top_paper_pct: 0.05,
            min_count: 1,
            credit_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub central: String,
    /// Central keyword first, then neighbours by ascending distance.
    pub members: Vec<String>,
    pub field: String,
    pub year: i32,
    /// The space held fewer keywords than the configured area size.
    pub short: bool,
}

/// Central keyword plus its `size - 1` nearest keyword neighbours.
pub fn area_of(space: &EmbeddingSpace, central: &str, size: usize) -> Result<Area> {
    let nn = space.nearest_neighbors(&keyword_token(central), size.saturating_sub(1), KindFilter::Keyword)?;
    let mut members = Vec::with_capacity(size);
    members.push(central.to_string());
    members.extend(nn.items.into_iter().map(|(tok, _)| tok["K:".len()..].to_string()));
    Ok(Area { central: central.to_string(), members, field: String::new(), year: space.year, short: nn.short })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    /// Negated mean distance change; positive means converging.
    pub score: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Convergence of `members` over `spaces`, ordered oldest to newest. Each
/// consecutive pair of spaces contributes one slice of distance changes; a
/// keyword pair missing from either space of a slice is skipped for that
/// slice. `None` when some space holds fewer than two members.
pub fn convergence_score(spaces: &[&EmbeddingSpace], members: &[String]) -> Option<Convergence> {
    if spaces.len() < 2 {
        return None;
    }
    let tokens: Vec<String> = members.iter().map(|m| keyword_token(m)).collect();
    for s in spaces {
        if tokens.iter().filter(|t| s.contains(t)).count() < 2 {
            return None;
        }
    }
    let (mut sum, mut used, mut skipped) = (0.0f64, 0usize, 0usize);
    for w in spaces.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        for i in 0..tokens.len() {
            for j in i + 1..tokens.len() {
                match (cur.distance(&tokens[i], &tokens[j]), prev.distance(&tokens[i], &tokens[j])) {
                    (Ok(now), Ok(before)) => {
                        sum += now - before;
                        used += 1;
                    }
                    _ => skipped += 1,
                }
            }
        }
    }
    if used == 0 {
        return None;
    }
    Some(Convergence { score: -(sum / used as f64), pairs_used: used, pairs_skipped: skipped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r2: f64,
    /// False when the optimum sits on the edge of the search interval or the
    /// objective was not finite.
    pub converged: bool,
}

pub const GROWTH_B_RANGE: (f64, f64) = (-2.0, 3.0);
const GROWTH_GRID: usize = 500;
const GOLDEN_TOL: f64 = 1e-4;

/// Least-squares fit of `a e^{bt} + c` to `counts` at `t = 0, 1, ...`.
///
/// The rate `b` is found by a grid scan of the search interval followed by
/// golden-section refinement inside the best grid bracket; `(a, c)` have a
/// closed form for each `b`. A constant series (including all zeros) returns
/// `b = 0` and `r2 = 0`.
pub fn frequency_growth(counts: &[f64]) -> GrowthFit {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let ss_tot: f64 = counts.iter().map(|y| (y - mean).powi(2)).sum();
    if counts.len() < 3 || !(ss_tot > 0.0) {
        return GrowthFit { a: 0.0, b: 0.0, c: mean, r2: 0.0, converged: ss_tot.is_finite() };
    }
    let (lo, hi) = GROWTH_B_RANGE;
    let step = (hi - lo) / GROWTH_GRID as f64;
    let grid_b = |i: usize| lo + step * i as f64;
    let mut best = 0usize;
    let mut best_sse = f64::INFINITY;
    for i in 0..=GROWTH_GRID {
        let sse = linear_part(counts, grid_b(i)).2;
        if sse < best_sse {
            best_sse = sse;
            best = i;
        }
    }
    let (mut x0, mut x1) = (grid_b(best.saturating_sub(1)), grid_b((best + 1).min(GROWTH_GRID)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let sse = |b: f64| linear_part(counts, b).2;
    let mut c = x1 - phi * (x1 - x0);
    let mut d = x0 + phi * (x1 - x0);
    let (mut fc, mut fd) = (sse(c), sse(d));
    while x1 - x0 > GOLDEN_TOL {
        if fc < fd {
            x1 = d;
            d = c;
            fd = fc;
            c = x1 - phi * (x1 - x0);
            fc = sse(c);
        } else {
            x0 = c;
            c = d;
            fc = fd;
            d = x0 + phi * (x1 - x0);
            fd = sse(d);
        }
    }
    let mut b = 0.5 * (x0 + x1);
    if sse(b) > best_sse {
        b = grid_b(best);
    }
    let (a, cc, ss_res) = linear_part(counts, b);
    let converged = ss_res.is_finite() && best != 0 && best != GROWTH_GRID;
    GrowthFit { a, b, c: cc, r2: 1.0 - ss_res / ss_tot, converged }
}

/// Closed-form `(a, c, sse)` for fixed `b`.
fn linear_part(y: &[f64], b: f64) -> (f64, f64, f64) {
    let n = y.len() as f64;
    let x: Vec<f64> = (0..y.len()).map(|t| (b * t as f64).exp()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let a = if sxx > 1e-12 * (1.0 + mx * mx) { sxy / sxx } else { 0.0 };
    let c = my - a * mx;
    let sse = x.iter().zip(y).map(|(xi, yi)| (yi - a * xi - c).powi(2)).sum();
    (a, c, sse)
}

/// Keyword occurrence counts per (field, year). Keywords are deduplicated
/// within a paper, so an occurrence is a paper using the keyword.
#[derive(Debug, Clone, Default)]
pub struct FieldYearCounts {
    cells: HashMap<(String, i32), (HashMap<String, u64>, u64)>,
}

impl FieldYearCounts {
    pub fn build(corpus: &Corpus) -> Self {
        Self::from_records(corpus.records().iter())
    }

    pub fn from_records<'a>(records: impl Iterator<Item = &'a PaperRecord>) -> Self {
        let mut cells: HashMap<(String, i32), (HashMap<String, u64>, u64)> = HashMap::new();
        for r in records {
            for f in &r.field {
                let cell = cells.entry((f.clone(), r.year)).or_default();
                for k in &r.keywords {
                    *cell.0.entry(k.clone()).or_default() += 1;
                    cell.1 += 1;
                }
            }
        }
        FieldYearCounts { cells }
    }

    pub fn count(&self, kw: &str, field: &str, year: i32) -> u64 {
        self.cells.get(&(field.to_string(), year)).and_then(|c| c.0.get(kw)).copied().unwrap_or(0)
    }

    pub fn total(&self, field: &str, year: i32) -> u64 {
        self.cells.get(&(field.to_string(), year)).map_or(0, |c| c.1)
    }

    pub fn prevalence(&self, kw: &str, field: &str, year: i32) -> Option<f64> {
        let total = self.total(field, year);
        (total > 0).then(|| self.count(kw, field, year) as f64 / total as f64)
    }

    /// Counts for `year - span + 1 ..= year`, oldest first.
    pub fn series(&self, kw: &str, field: &str, year: i32, span: usize) -> Vec<f64> {
        (0..span as i32).rev().map(|back| self.count(kw, field, year - back) as f64).collect()
    }

    pub fn keywords(&self, field: &str, year: i32) -> Vec<(&str, u64)> {
        let mut v: Vec<(&str, u64)> = self
            .cells
            .get(&(field.to_string(), year))
            .map(|c| c.0.iter().map(|(k, &n)| (k.as_str(), n)).collect())
            .unwrap_or_default();
        v.sort();
        v
    }
}

/// Share of keyword occurrences in `field` papers of `year` that are `kw`.
pub fn prevalence(kw: &str, field: &str, year: i32, view: &View<'_>) -> Option<f64> {
    FieldYearCounts::from_records(view.iter().filter(|r| r.year == year && r.in_field(field))).prevalence(kw, field, year)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergenceScores {
    pub convergence: f64,
    pub growth_b: f64,
    pub prevalence: f64,
    pub fit_r2: f64,
    pub final_rank_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub area: Area,
    pub scores: EmergenceScores,
}

/// Fractional ranks, 1 for the largest value, tied values sharing the mean
/// of their positions.
fn descending_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Average the four per-metric rankings; best (smallest) final score first.
pub fn rank_areas(mut candidates: Vec<Candidate>) -> Vec<Candidate> {
    let metric = |f: fn(&EmergenceScores) -> f64| -> Vec<f64> {
        descending_ranks(&candidates.iter().map(|c| f(&c.scores)).collect::<Vec<_>>())
    };
    let ranks = [
        metric(|s| s.convergence),
        metric(|s| s.growth_b),
        metric(|s| s.prevalence),
        metric(|s| s.fit_r2),
    ];
    for (i, c) in candidates.iter_mut().enumerate() {
        c.scores.final_rank_score = Some(ranks.iter().map(|r| r[i]).sum::<f64>() / 4.0);
    }
    candidates.sort_by(|a, b| {
        let (fa, fb) = (a.scores.final_rank_score.unwrap_or(f64::INFINITY), b.scores.final_rank_score.unwrap_or(f64::INFINITY));
        fa.total_cmp(&fb).then_with(|| a.area.central.cmp(&b.area.central))
    });
    candidates
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmergingSet {
    pub year: i32,
    pub field: String,
    pub areas: Vec<Candidate>,
    pub candidates: usize,
}

/// Top `ceil(top_pct * N)` of already ranked candidates.
pub fn select_emerging(year: i32, field: &str, ranked: &[Candidate], top_pct: f64) -> EmergingSet {
    let q = select::quota(top_pct, ranked.len());
    EmergingSet { year, field: field.to_string(), areas: ranked[..q].to_vec(), candidates: ranked.len() }
}

/// Exclusion counters for one analysed year.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoringStats {
    pub candidates_considered: usize,
    pub missing_from_space: usize,
    pub undefined_convergence: usize,
    pub growth_not_converged: usize,
    pub undefined_prevalence: usize,
}

/// Everything the emergence stage needs for one analysed year.
pub struct YearInputs<'a> {
    pub year: i32,
    /// Spaces for `year - lookback ..= year`, oldest first.
    pub spaces: Vec<&'a EmbeddingSpace>,
    pub counts: &'a FieldYearCounts,
}

/// Score and rank candidate areas of every field for one year.
pub fn score_year(
    inputs: &YearInputs<'_>,
    fields: &[String],
    cfg: &EmergenceConfig,
) -> Result<(BTreeMap<String, Vec<Candidate>>, ScoringStats)> {
    let current = *inputs.spaces.last().ok_or_else(|| Error::Config("no embedding space for year".into()))?;
    let year = inputs.year;
    let mut stats = ScoringStats::default();

    let mut per_field: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    let mut centrals: BTreeSet<&str> = BTreeSet::new();
    for f in fields {
        let kws: Vec<&str> = inputs
            .counts
            .keywords(f, year)
            .into_iter()
            .filter(|&(_, n)| n >= cfg.min_count)
            .map(|(k, _)| k)
            .collect();
        stats.candidates_considered += kws.len();
        for &k in &kws {
            centrals.insert(k);
        }
        per_field.insert(f.clone(), kws);
    }

    // areas and convergence do not depend on the field
    let centrals: Vec<&str> = centrals.into_iter().collect();
    let shared: HashMap<&str, Option<(Area, Option<Convergence>)>> = centrals
        .par_iter()
        .map(|&k| {
            let area = match area_of(current, k, cfg.area_size) {
                Ok(a) => a,
                Err(_) => return (k, None),
            };
            let conv = convergence_score(&inputs.spaces, &area.members);
            (k, Some((area, conv)))
        })
        .collect();

    let mut out = BTreeMap::new();
    for (field, kws) in per_field {
        let mut cands = Vec::new();
        for k in kws {
            let Some((area, conv)) = shared.get(k).and_then(|x| x.as_ref()) else {
                stats.missing_from_space += 1;
                continue;
            };
            let Some(conv) = conv else {
                stats.undefined_convergence += 1;
                continue;
            };
            let fit = frequency_growth(&inputs.counts.series(k, &field, year, cfg.growth_years));
            if !fit.converged {
                stats.growth_not_converged += 1;
                continue;
            }
            let Some(prev) = inputs.counts.prevalence(k, &field, year) else {
                stats.undefined_prevalence += 1;
                continue;
            };
            let mut area = area.clone();
            area.field = field.clone();
            cands.push(Candidate {
                area,
                scores: EmergenceScores {
                    convergence: conv.score,
                    growth_b: fit.b,
                    prevalence: prev,
                    fit_r2: fit.r2,
                    final_rank_score: None,
                },
            });
        }
        out.insert(field, rank_areas(cands));
    }
    Ok((out, stats))
}

/// Minimum cosine distance between a paper's keyword centroid and the
/// centroids of `area_centroids`.
pub fn paper_distance(p: &PaperRecord, space: &EmbeddingSpace, area_centroids: &[Vec<f64>]) -> Result<f64> {
    if area_centroids.is_empty() {
        return Err(Error::Config("no emerging areas to measure against".into()));
    }
    let c = space.centroid(&p.keywords)?;
    let mut best = f64::INFINITY;
    for a in area_centroids {
        match cosine_distance(&c.vector, a) {
            Ok(d) => best = best.min(d),
            Err(Error::ZeroVector) if a.iter().all(|x| *x == 0.0) => continue,
            Err(e) => return Err(e),
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::ZeroVector)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperDistance {
    pub paper_id: String,
    pub year: i32,
    pub field: String,
    pub distance: f64,
}

/// Distances of `papers` to the emerging areas of each of their fields.
/// Returns the rows and the number of papers that could not be scored.
pub fn paper_distances<'a>(
    papers: impl Iterator<Item = &'a PaperRecord>,
    space: &EmbeddingSpace,
    sets: &[EmergingSet],
) -> (Vec<PaperDistance>, usize) {
    let mut centroids: HashMap<&str, Vec<Vec<f64>>> = HashMap::new();
    for s in sets {
        let entry = centroids.entry(s.field.as_str()).or_default();
        for c in &s.areas {
            if let Ok(cen) = space.centroid(&c.area.members) {
                entry.push(cen.vector);
            }
        }
    }
    let mut rows = Vec::new();
    let mut excluded = 0;
    for p in papers.filter(|p| !p.keywords.is_empty()) {
        let mut any = false;
        for f in &p.field {
            let Some(cs) = centroids.get(f.as_str()).filter(|c| !c.is_empty()) else { continue };
            match paper_distance(p, space, cs) {
                Ok(d) => {
                    any = true;
                    rows.push(PaperDistance { paper_id: p.paper_id.clone(), year: p.year, field: f.clone(), distance: d });
                }
                Err(_) => {}
            }
        }
        if !any {
            excluded += 1;
        }
    }
    (rows, excluded)
}

/// Smallest-distance `top_pct` of papers per (field, year), boundary ties
/// included.
pub fn tag_emergent_papers(rows: &[PaperDistance], top_pct: f64) -> Vec<PaperDistance> {
    let mut groups: BTreeMap<(&str, i32), Vec<(String, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.field.as_str(), r.year)).or_default().push((r.paper_id.clone(), r.distance));
    }
    let mut tagged = Vec::new();
    for ((field, year), items) in groups {
        let keep: HashSet<String> = select::select(&items, top_pct, Direction::Lowest).into_iter().collect();
        for (id, d) in items {
            if keep.contains(&id) {
                tagged.push(PaperDistance { paper_id: id, year, field: field.to_string(), distance: d });
            }
        }
    }
    tagged
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Credit {
    pub countries: BTreeMap<String, usize>,
    pub authors: Vec<String>,
    pub short: bool,
}

/// Countries of the `k` authors closest to the area centroid among authors
/// with a window paper using the central keyword. An author contributes each
/// of their countries once.
pub fn emergence_credit(area: &Area, space: &EmbeddingSpace, view: &View<'_>, k: usize) -> Result<Credit> {
    let centroid = space.centroid(&area.members)?;
    let mut countries_of: HashMap<String, BTreeSet<String>> = HashMap::new();
    for p in view.iter().filter(|p| p.keywords.iter().any(|kw| *kw == area.central)) {
        for a in &p.authors {
            countries_of.entry(author_token(&a.author_id)).or_default().extend(a.effective_countries());
        }
    }
    let nn = space.nearest_to_vector(&centroid.vector, k, |tok| countries_of.contains_key(tok))?;
    let mut credit = Credit { short: nn.short, ..Credit::default() };
    for (tok, _) in nn.items {
        for c in &countries_of[&tok] {
            *credit.countries.entry(c.clone()).or_default() += 1;
        }
        credit.authors.push(tok["A:".len()..].to_string());
    }
    Ok(credit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftReport {
    pub close_pairs: usize,
    pub close_cooccurring: usize,
    pub far_pairs: usize,
    pub far_cooccurring: usize,
    /// `None` when the close bucket is empty or nothing co-occurs far apart.
    pub lift: Option<f64>,
}

/// How much more often keyword pairs within `threshold` cosine distance in
/// `space` co-occur in papers of `view_next` than pairs further apart.
///
/// All pairs are used when there are at most `max_pairs`, otherwise
/// `max_pairs` distinct pairs are sampled with `seed`. When no pair is far
/// apart the reference rate is the overall rate, so the lift is 1.
pub fn cooccurrence_lift(
    space: &EmbeddingSpace,
    view_next: &View<'_>,
    threshold: f64,
    max_pairs: usize,
    seed: u64,
) -> Result<LiftReport> {
    if space.is_empty() || view_next.is_empty() {
        return Err(Error::Config("co-occurrence lift needs a nonempty space and view".into()));
    }
    let kws: Vec<&str> = space.keywords().collect();
    let mut postings: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, p) in view_next.iter().enumerate() {
        for k in &p.keywords {
            postings.entry(k.as_str()).or_default().push(i);
        }
    }
    let co = |a: &str, b: &str| -> bool {
        match (postings.get(a), postings.get(b)) {
            (Some(x), Some(y)) => sorted_intersect(x, y),
            _ => false,
        }
    };
    let n = kws.len();
    let total = n * n.saturating_sub(1) / 2;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if total <= max_pairs {
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j));
            }
        }
    } else {
        let mut rng = stream_rng(seed, 0);
        let mut seen = HashSet::new();
        while pairs.len() < max_pairs {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i != j && seen.insert((i.min(j), i.max(j))) {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    let mut r = LiftReport { close_pairs: 0, close_cooccurring: 0, far_pairs: 0, far_cooccurring: 0, lift: None };
    for (i, j) in pairs {
        let d = space.distance(&keyword_token(kws[i]), &keyword_token(kws[j]))?;
        let hit = co(kws[i], kws[j]);
        if d <= threshold {
            r.close_pairs += 1;
            r.close_cooccurring += usize::from(hit);
        } else {
            r.far_pairs += 1;
            r.far_cooccurring += usize::from(hit);
        }
    }
    let close_rate = r.close_cooccurring as f64 / r.close_pairs as f64;
    r.lift = if r.close_pairs == 0 {
        None
    } else if r.far_pairs == 0 {
        Some(1.0)
    } else if r.far_cooccurring == 0 {
        None
    } else {
        Some(close_rate / (r.far_cooccurring as f64 / r.far_pairs as f64))
    };
    Ok(r)
}

fn sorted_intersect(a: &[usize], b: &[usize]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// `year,field,central_keyword,members,convergence,growth_b,prevalence,r2,final_rank_score`;
/// members are `;`-joined.
pub fn write_emerging_sets(path: &Path, sets: &[EmergingSet], header_comment: Option<&str>) -> Result<()> {
    let mut w = crate::report::csv_writer(path, header_comment)?;
    w.write_record(["year", "field", "central_keyword", "members", "convergence", "growth_b", "prevalence", "r2", "final_rank_score"])?;
    for s in sets {
        for c in &s.areas {
            w.write_record([
                s.year.to_string(),
                s.field.clone(),
                c.area.central.clone(),
                c.area.members.join(";"),
                c.scores.convergence.to_string(),
                c.scores.growth_b.to_string(),
                c.scores.prevalence.to_string(),
                c.scores.fit_r2.to_string(),
                c.scores.final_rank_score.map_or(String::new(), |x| x.to_string()),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_emerging_sets(path: &Path) -> Result<Vec<EmergingSet>> {
    let mut sets: BTreeMap<(i32, String), EmergingSet> = BTreeMap::new();
    for rec in crate::report::csv_reader(path)?.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            get(i).parse().map_err(|_| Error::Format { what: "emerging set csv", reason: format!("bad number {:?}", get(i)) })
        };
        let year: i32 =
            get(0).parse().map_err(|_| Error::Format { what: "emerging set csv", reason: "bad year".into() })?;
        let field = get(1).to_string();
        let members: Vec<String> = get(3).split(';').map(str::to_string).collect();
        let cand = Candidate {
            area: Area { central: get(2).to_string(), short: members.len() < 25, members, field: field.clone(), year },
            scores: EmergenceScores {
                convergence: num(4)?,
                growth_b: num(5)?,
                prevalence: num(6)?,
                fit_r2: num(7)?,
                final_rank_score: get(8).parse().ok(),
            },
        };
        sets.entry((year, field.clone()))
            .or_insert_with(|| EmergingSet { year, field, areas: Vec::new(), candidates: 0 })
            .areas
            .push(cand);
    }
    Ok(sets.into_values().collect())
}

pub fn write_paper_tags(path: &Path, rows: &[PaperDistance], header_comment: Option<&str>) -> Result<()> {
    let mut w = crate::report::csv_writer(path, header_comment)?;
    w.write_record(["paper_id", "year", "field", "distance"])?;
    for r in rows {
        w.write_record([r.paper_id.clone(), r.year.to_string(), r.field.clone(), r.distance.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_paper_tags(path: &Path) -> Result<Vec<PaperDistance>> {
    let mut out = Vec::new();
    for rec in crate::report::csv_reader(path)?.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}
