//! Synthetic corpora with planted ground truth.
//!
//! Papers are drawn from a mixture of keyword clusters. Each field has a set
//! of static clusters with their own keywords, venues and author pools; the
//! planted signals are schedules layered on top:
//!
//! * an emergent cluster whose paper count grows as `a e^{bt}` and whose two
//!   keyword subgroups start out in separate papers and increasingly mix (so
//!   the area converges); papers mixing them carry a hub keyword;
//! * merging pairs: two static clusters never co-occur before a pivot year,
//!   a few papers combine them at the pivot (the planted prescient papers),
//!   and combining is common afterwards;
//! * diverging pairs: the reverse, with the pivot-year combinations planted as
//!   declining;
//! * a national vocabulary used only by one country, combined with a static
//!   cluster from the pivot year on;
//! * disruptive papers whose references are never cited again after them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::corpus::{AuthorRef, Corpus, PaperRecord};
use crate::error::{Error, Result};
use crate::seed::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    pub fields: usize,
    pub clusters_per_field: usize,
    pub keywords_per_cluster: usize,
    pub venues_per_cluster: usize,
    pub authors_per_cluster: usize,
    /// Papers drawn from the static clusters of each field per year.
    pub papers_per_field_year: usize,
    pub keywords_per_paper: (usize, usize),
    pub authors_per_paper: (usize, usize),
    pub venues_per_paper: (usize, usize),
    pub references_per_paper: (usize, usize),
    /// Papers mixing two random static clusters of their field.
    pub cross_cluster_rate: f64,
    pub review_rate: f64,
    pub non_english_rate: f64,
    /// Country mixture for author affiliations.
    pub countries: Vec<(String, f64)>,
    pub dual_affiliation_rate: f64,
    pub unknown_country_rate: f64,
    pub emergent: Vec<EmergentPlan>,
    pub merging: Vec<PairPlan>,
    pub diverging: Vec<PairPlan>,
    pub national: Option<NationalPlan>,
    /// Fraction of papers planted as disruptive.
    pub disruptive_fraction: f64,
    /// Mean citation count of ordinary papers.
    pub base_citations: f64,
    /// Extra mean citations for planted prescient papers.
    pub citation_boost: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 1,
            first_year: 2010,
            last_year: 2020,
            fields: 2,
            clusters_per_field: 6,
            keywords_per_cluster: 15,
            venues_per_cluster: 4,
            authors_per_cluster: 60,
            papers_per_field_year: 300,
            keywords_per_paper: (3, 6),
            authors_per_paper: (1, 4),
            venues_per_paper: (2, 5),
            references_per_paper: (3, 8),
            cross_cluster_rate: 0.02,
            review_rate: 0.0,
            non_english_rate: 0.0,
            countries: default_countries(),
            dual_affiliation_rate: 0.05,
            unknown_country_rate: 0.02,
            emergent: Vec::new(),
            merging: Vec::new(),
            diverging: Vec::new(),
            national: None,
            disruptive_fraction: 0.0,
            base_citations: 5.0,
            citation_boost: 0.0,
        }
    }
}

fn default_countries() -> Vec<(String, f64)> {
    [("US", 0.30), ("CN", 0.25), ("DE", 0.10), ("GB", 0.10), ("JP", 0.08), ("FR", 0.07), ("IN", 0.05), ("KR", 0.05)]
        .into_iter()
        .map(|(c, w)| (c.to_string(), w))
        .collect()
}

/// A cluster growing exponentially towards `target_year`, planted as emergent
/// in that year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergentPlan {
    pub field: usize,
    pub target_year: i32,
    /// Growth rate b* of the annual paper count.
    pub growth_b: f64,
    /// Papers in `target_year`; other years follow `papers * e^{b (y - target)}`.
    pub papers_at_target: f64,
    /// Keywords besides the hub, split evenly across two subgroups.
    pub keywords: usize,
    pub keywords_per_paper: (usize, usize),
    /// Years over which subgroup mixing ramps from 0 to `max_mixing`.
    pub mixing_years: i32,
    pub max_mixing: f64,
}

/// Schedule of combinations between static clusters `a` and `b` of `field`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPlan {
    pub field: usize,
    pub a: usize,
    pub b: usize,
    pub pivot_year: i32,
    /// Fraction of the pair's papers combining both clusters before the pivot.
    pub rate_before: f64,
    /// Exact number of combining papers in the pivot year; `None` applies
    /// `rate_before`.
    pub planted_at_pivot: Option<usize>,
    pub rate_after: f64,
    /// Mixture weight of each cluster of the pair (others weigh 1).
    pub weight: f64,
    /// Weight multiplier after the pivot.
    pub volume_after: f64,
}

/// Vocabulary used only by `country`, combined with static cluster `partner`
/// from the pivot year on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NationalPlan {
    pub country: String,
    pub field: usize,
    pub partner: usize,
    pub keywords: usize,
    pub papers_per_year: usize,
    pub pivot_year: i32,
    pub planted_at_pivot: usize,
    pub rate_after: f64,
}

/// Planted items, one row per (measure, id).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub measure: String,
    pub id: String,
    /// `key=value` pairs separated by `;`.
    pub params: String,
}

pub mod measure {
    pub const EMERGENT_AREA: &str = "emergent_area";
    pub const EMERGENT_PAPER: &str = "emergent_paper";
    pub const PRESCIENT_PAPER: &str = "prescient_paper";
    pub const DECLINING_PAPER: &str = "declining_paper";
    pub const NATIONAL_PRESCIENT_PAPER: &str = "national_prescient_paper";
    pub const NATIONAL_KEYWORD: &str = "national_keyword";
    pub const DISRUPTIVE_PAPER: &str = "disruptive_paper";
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub rows: Vec<TruthRow>,
}

impl GroundTruth {
    fn push(&mut self, measure: &str, id: impl Into<String>, params: String) {
        self.rows.push(TruthRow { measure: measure.to_string(), id: id.into(), params });
    }

    pub fn ids(&self, measure: &str) -> BTreeSet<String> {
        self.rows.iter().filter(|r| r.measure == measure).map(|r| r.id.clone()).collect()
    }

    pub fn rows_of<'a>(&'a self, measure: &'a str) -> impl Iterator<Item = &'a TruthRow> + 'a {
        self.rows.iter().filter(move |r| r.measure == measure)
    }

    /// Value of `key` in a row's parameters.
    pub fn param<'a>(row: &'a TruthRow, key: &str) -> Option<&'a str> {
        row.params.split(';').filter_map(|kv| kv.split_once('=')).find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        self.write_with_comment(path, None)
    }

    pub fn write_with_comment(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let mut w = crate::report::csv_writer(path, comment)?;
        w.write_record(["measure", "id", "params"])?;
        for r in &self.rows {
            w.write_record([&r.measure, &r.id, &r.params])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for rec in crate::report::csv_reader(path)?.deserialize() {
            rows.push(rec?);
        }
        Ok(GroundTruth { rows })
    }
}

struct Cluster {
    keywords: Vec<String>,
    venues: Vec<String>,
    authors: Vec<usize>,
}

struct Author {
    id: String,
    countries: BTreeSet<String>,
}

struct Draft {
    record: PaperRecord,
    clusters: Vec<usize>,
    attractiveness: f64,
    disruptive: bool,
    prescient: bool,
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    rng: ChaCha8Rng,
    clusters: Vec<Cluster>,
    authors: Vec<Author>,
    country_index: WeightedIndex<f64>,
    papers: Vec<Draft>,
    /// Papers by cluster and year, for reference sampling.
    by_cluster_year: HashMap<(usize, i32), Vec<usize>>,
    /// Papers no longer cited, as references of a disruptive paper.
    eclipsed: Vec<bool>,
    truth: GroundTruth,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Infeasible(msg()))
    }
}

fn check_range(name: &str, r: (usize, usize)) -> Result<()> {
    check(r.0 <= r.1, || format!("{name} range {}..{} is empty", r.0, r.1))
}

fn fraction(name: &str, x: f64) -> Result<()> {
    check((0.0..=1.0).contains(&x), || format!("{name} = {x} is not a fraction"))
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        check(self.first_year <= self.last_year, || "first_year after last_year".into())?;
        check(self.fields >= 1 && self.clusters_per_field >= 2, || "need at least one field and two clusters".into())?;
        check(self.keywords_per_cluster >= 1 && self.venues_per_cluster >= 1 && self.authors_per_cluster >= 1, || {
            "clusters need keywords, venues and authors".into()
        })?;
        for (name, r) in [
            ("keywords_per_paper", self.keywords_per_paper),
            ("authors_per_paper", self.authors_per_paper),
            ("venues_per_paper", self.venues_per_paper),
            ("references_per_paper", self.references_per_paper),
        ] {
            check_range(name, r)?;
        }
        check(self.keywords_per_paper.0 >= 1 && self.authors_per_paper.0 >= 1, || "papers need keywords and authors".into())?;
        for (name, x) in [
            ("cross_cluster_rate", self.cross_cluster_rate),
            ("review_rate", self.review_rate),
            ("non_english_rate", self.non_english_rate),
            ("dual_affiliation_rate", self.dual_affiliation_rate),
            ("unknown_country_rate", self.unknown_country_rate),
            ("disruptive_fraction", self.disruptive_fraction),
        ] {
            fraction(name, x)?;
        }
        check(self.review_rate + self.non_english_rate <= 1.0, || "review and non-English rates sum above 1".into())?;
        check(!self.countries.is_empty() && self.countries.iter().all(|(_, w)| *w >= 0.0), || {
            "country mixture must be non-empty with nonnegative weights".into()
        })?;
        check(self.base_citations >= 0.0 && self.citation_boost >= 0.0, || "citation means must be nonnegative".into())?;
        let years = self.first_year..=self.last_year;
        for e in &self.emergent {
            check(e.field < self.fields, || format!("emergent field {} out of range", e.field))?;
            check(years.contains(&e.target_year), || format!("emergent target year {} outside the corpus", e.target_year))?;
            check(e.keywords >= 2 && e.papers_at_target > 0.0 && e.mixing_years >= 1, || "degenerate emergent plan".into())?;
            check_range("emergent keywords_per_paper", e.keywords_per_paper)?;
            fraction("max_mixing", e.max_mixing)?;
        }
        for p in self.merging.iter().chain(&self.diverging) {
            check(p.field < self.fields, || format!("pair field {} out of range", p.field))?;
            check(p.a != p.b && p.a < self.clusters_per_field && p.b < self.clusters_per_field, || {
                format!("pair clusters {} and {} invalid", p.a, p.b)
            })?;
            check(years.contains(&p.pivot_year), || format!("pivot year {} outside the corpus", p.pivot_year))?;
            fraction("rate_before", p.rate_before)?;
            fraction("rate_after", p.rate_after)?;
            check(p.weight > 0.0 && p.volume_after > 0.0, || "pair weights must be positive".into())?;
        }
        if let Some(n) = &self.national {
            check(n.field < self.fields && n.partner < self.clusters_per_field, || "national plan out of range".into())?;
            check(years.contains(&n.pivot_year), || "national pivot outside the corpus".into())?;
            check(n.planted_at_pivot <= n.papers_per_year, || "more planted national papers than national papers".into())?;
            check(n.keywords >= 2, || "national vocabulary needs two keywords".into())?;
            fraction("national rate_after", n.rate_after)?;
        }
        Ok(())
    }

    /// Named fixture presets used by the test suite and the `synth` stage.
    pub fn preset(name: &str, seed: u64) -> Result<SynthSpec> {
        let base = SynthSpec { seed, ..SynthSpec::default() };
        Ok(match name {
            "standard" => SynthSpec {
                emergent: vec![emergent(0, 2018), emergent(1, 2018)],
                merging: vec![merging(0, 0, 1, 2016)],
                disruptive_fraction: 0.03,
                citation_boost: 40.0,
                review_rate: 0.05,
                non_english_rate: 0.03,
                ..base
            },
            "mini" => SynthSpec {
                first_year: 2011,
                last_year: 2020,
                clusters_per_field: 4,
                keywords_per_cluster: 12,
                authors_per_cluster: 20,
                papers_per_field_year: 50,
                review_rate: 0.12,
                non_english_rate: 0.03,
                merging: vec![PairPlan { planted_at_pivot: Some(2), ..merging(0, 0, 1, 2016) }],
                disruptive_fraction: 0.05,
                citation_boost: 20.0,
                ..base
            },
            "emergence" => SynthSpec {
                first_year: 2012,
                last_year: 2019,
                fields: 5,
                clusters_per_field: 8,
                keywords_per_cluster: 30,
                authors_per_cluster: 40,
                papers_per_field_year: 400,
                cross_cluster_rate: 0.01,
                // planted papers are about 5% of the target year
                emergent: (0..5).map(|f| EmergentPlan { papers_at_target: 21.0, ..emergent(f, 2019) }).collect(),
                ..base
            },
            // prescience fixtures: at least as many clusters as factor
            // dimensions, so no cluster's loadings are split between spare
            // factors differently from one model year to the next
            "merging" => SynthSpec {
                first_year: 2010,
                last_year: 2020,
                fields: 1,
                clusters_per_field: 30,
                keywords_per_cluster: 12,
                venues_per_cluster: 8,
                papers_per_field_year: 1500,
                merging: vec![PairPlan { rate_after: 0.8, volume_after: 2.0, ..merging(0, 0, 1, 2018) }],
                ..base
            },
            // Eight pairs merge in 2018 so about a tenth of that year is prescient and
            // highly cited, while random cross-cluster papers are surprising but never catch on.
            "citation" => SynthSpec {
                first_year: 2010,
                last_year: 2020,
                fields: 1,
                clusters_per_field: 30,
                keywords_per_cluster: 12,
                venues_per_cluster: 8,
                papers_per_field_year: 1500,
                cross_cluster_rate: 0.15,
                merging: (0..8)
                    .map(|i| PairPlan { rate_after: 0.8, volume_after: 2.0, ..merging(0, 2 * i, 2 * i + 1, 2018) })
                    .collect(),
                citation_boost: 40.0,
                ..base
            },
            "stationary" => SynthSpec {
                first_year: 2010,
                last_year: 2020,
                fields: 1,
                clusters_per_field: 30,
                keywords_per_cluster: 12,
                venues_per_cluster: 8,
                papers_per_field_year: 1500,
                ..base
            },
            "diverging" => SynthSpec {
                first_year: 2010,
                last_year: 2020,
                fields: 1,
                clusters_per_field: 30,
                keywords_per_cluster: 12,
                venues_per_cluster: 8,
                papers_per_field_year: 1500,
                cross_cluster_rate: 0.005,
                diverging: vec![PairPlan {
                    field: 0,
                    a: 0,
                    b: 1,
                    pivot_year: 2018,
                    rate_before: 0.4,
                    planted_at_pivot: None,
                    rate_after: 0.0,
                    weight: 0.5,
                    volume_after: 4.0,
                }],
                ..base
            },
            "national" => SynthSpec {
                first_year: 2010,
                last_year: 2020,
                fields: 1,
                clusters_per_field: 8,
                keywords_per_cluster: 12,
                papers_per_field_year: 500,
                national: Some(NationalPlan {
                    country: "KR".into(),
                    field: 0,
                    partner: 0,
                    keywords: 10,
                    papers_per_year: 40,
                    pivot_year: 2018,
                    planted_at_pivot: 12,
                    rate_after: 0.6,
                }),
                ..base
            },
            other => return Err(Error::Config(format!("unknown synthetic preset {other:?}"))),
        })
    }
}

fn emergent(field: usize, target_year: i32) -> EmergentPlan {
    EmergentPlan {
        field,
        target_year,
        growth_b: 0.8,
        papers_at_target: 16.0,
        keywords: 24,
        keywords_per_paper: (5, 8),
        mixing_years: 3,
        max_mixing: 1.0,
    }
}

fn merging(field: usize, a: usize, b: usize, pivot_year: i32) -> PairPlan {
    PairPlan {
        field,
        a,
        b,
        pivot_year,
        rate_before: 0.0,
        planted_at_pivot: Some(20),
        rate_after: 0.5,
        weight: 1.0,
        volume_after: 1.0,
    }
}

/// Largest-remainder split of `total` by `weights`.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut rest: Vec<usize> = (0..weights.len()).collect();
    rest.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let missing = total - out.iter().sum::<usize>();
    for &i in rest.iter().take(missing) {
        out[i] += 1;
    }
    out
}

#[derive(Clone, Copy)]
enum Kind {
    /// Static cluster papers, possibly mixing a second cluster.
    Static { primary: usize, secondary: Option<usize> },
    Emergent { plan: usize, mixed: bool, subgroup: usize },
    National { mixed: bool },
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SynthSpec) -> Result<Self> {
        let weights: Vec<f64> = spec.countries.iter().map(|c| c.1).collect();
        let country_index = WeightedIndex::new(&weights).map_err(|e| Error::Infeasible(format!("country mixture: {e}")))?;
        Ok(Generator {
            spec,
            rng: stream_rng(spec.seed, 0),
            clusters: Vec::new(),
            authors: Vec::new(),
            country_index,
            papers: Vec::new(),
            by_cluster_year: HashMap::new(),
            eclipsed: Vec::new(),
            truth: GroundTruth::default(),
        })
    }

    fn add_cluster(&mut self, prefix: &str, keywords: Vec<String>, n_authors: usize, fixed_country: Option<&str>) -> usize {
        let venues = (0..self.spec.venues_per_cluster).map(|v| format!("{prefix} venue {v}")).collect();
        let mut authors = Vec::with_capacity(n_authors);
        for j in 0..n_authors {
            let countries = match fixed_country {
                Some(c) => BTreeSet::from([c.to_string()]),
                None => self.draw_countries(),
            };
            authors.push(self.authors.len());
            self.authors.push(Author { id: format!("{prefix}-a{j:03}"), countries });
        }
        self.clusters.push(Cluster { keywords, venues, authors });
        self.clusters.len() - 1
    }

    fn draw_countries(&mut self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if self.rng.random::<f64>() < self.spec.unknown_country_rate {
            return out;
        }
        out.insert(self.spec.countries[self.country_index.sample(&mut self.rng)].0.clone());
        if self.rng.random::<f64>() < self.spec.dual_affiliation_rate {
            out.insert(self.spec.countries[self.country_index.sample(&mut self.rng)].0.clone());
        }
        out
    }

    fn pick<T: Clone>(&mut self, pool: &[T], range: (usize, usize)) -> Vec<T> {
        let k = self.rng.random_range(range.0..=range.1).min(pool.len());
        index::sample(&mut self.rng, pool.len(), k).into_iter().map(|i| pool[i].clone()).collect()
    }

    /// Split a draw of `range` items between two pools.
    fn pick_mixed<T: Clone>(&mut self, a: &[T], b: &[T], range: (usize, usize)) -> Vec<T> {
        let k = self.rng.random_range(range.0.max(2)..=range.1.max(2));
        let ka = self.rng.random_range(1..k);
        let mut out = self.pick(a, (ka, ka));
        out.extend(self.pick(b, (k - ka, k - ka)));
        out
    }

    fn run(mut self) -> Result<(Corpus, GroundTruth)> {
        let spec = self.spec;
        // static clusters of field f are f * clusters_per_field + c
        for f in 0..spec.fields {
            for c in 0..spec.clusters_per_field {
                let prefix = format!("f{f}-c{c}");
                let kws = (0..spec.keywords_per_cluster).map(|k| format!("{prefix}-k{k:02}")).collect();
                self.add_cluster(&prefix, kws, spec.authors_per_cluster, None);
            }
        }
        // emergent plans: hub cluster followed by its two subgroups
        let mut emergent_clusters = Vec::new();
        for (i, e) in spec.emergent.iter().enumerate() {
            let prefix = format!("f{}-e{i}", e.field);
            let hub = format!("{prefix}-hub");
            let half = e.keywords / 2;
            let mut ids = Vec::new();
            for (s, n) in [(0, half), (1, e.keywords - half)] {
                let kws = (0..n).map(|k| format!("{prefix}-s{s}-k{k:02}")).collect();
                ids.push(self.add_cluster(&format!("{prefix}-s{s}"), kws, spec.authors_per_cluster / 2 + 1, None));
            }
            let members: Vec<String> = std::iter::once(hub.clone())
                .chain(ids.iter().flat_map(|&c| self.clusters[c].keywords.clone()))
                .collect();
            self.truth.push(
                measure::EMERGENT_AREA,
                hub.clone(),
                format!("field={};year={};b={};members={}", field_name(e.field), e.target_year, e.growth_b, members.join("|")),
            );
            emergent_clusters.push((hub, ids));
        }
        let national_cluster = spec.national.as_ref().map(|n| {
            let prefix = format!("nat-{}", n.country.to_lowercase());
            let kws: Vec<String> = (0..n.keywords).map(|k| format!("{prefix}-k{k:02}")).collect();
            for k in &kws {
                self.truth.push(measure::NATIONAL_KEYWORD, k.clone(), format!("country={}", n.country));
            }
            self.add_cluster(&prefix, kws, spec.authors_per_cluster, Some(&n.country))
        });
        self.eclipsed = Vec::new();

        let mut seq = 0usize;
        for year in spec.first_year..=spec.last_year {
            for f in 0..spec.fields {
                let mut kinds = self.static_kinds(f, year);
                for (i, e) in spec.emergent.iter().enumerate().filter(|(_, e)| e.field == f) {
                    let n = (e.papers_at_target * (e.growth_b * (year - e.target_year) as f64).exp()).round() as usize;
                    let ramp = ((year - (e.target_year - e.mixing_years)) as f64 / e.mixing_years as f64).clamp(0.0, 1.0);
                    let mix = ramp * e.max_mixing;
                    for _ in 0..n {
                        let mixed = self.rng.random::<f64>() < mix;
                        let subgroup = self.rng.random_range(0..2);
                        kinds.push((Kind::Emergent { plan: i, mixed, subgroup }, None));
                    }
                }
                if let Some(n) = spec.national.as_ref().filter(|n| n.field == f) {
                    let mixed = if year < n.pivot_year {
                        0
                    } else if year == n.pivot_year {
                        n.planted_at_pivot
                    } else {
                        (n.papers_per_year as f64 * n.rate_after).round() as usize
                    };
                    for i in 0..n.papers_per_year {
                        kinds.push((Kind::National { mixed: i < mixed }, None));
                    }
                }
                for (kind, planted) in kinds {
                    let id = format!("p{year}-f{f}-{seq:06}");
                    seq += 1;
                    self.make_paper(id, year, f, kind, planted, &emergent_clusters, national_cluster)?;
                }
            }
        }
        self.finish()
    }

    /// Static-cluster papers of one field-year, with pair schedules applied.
    /// The second element marks planted papers with their truth measure.
    fn static_kinds(&mut self, f: usize, year: i32) -> Vec<(Kind, Option<&'static str>)> {
        let spec = self.spec;
        let k = spec.clusters_per_field;
        let mut weights = vec![1.0; k];
        let pairs: Vec<(&PairPlan, &'static str)> = spec
            .merging
            .iter()
            .map(|p| (p, measure::PRESCIENT_PAPER))
            .chain(spec.diverging.iter().map(|p| (p, measure::DECLINING_PAPER)))
            .filter(|(p, _)| p.field == f)
            .collect();
        for (p, _) in &pairs {
            let w = p.weight * if year > p.pivot_year { p.volume_after } else { 1.0 };
            weights[p.a] = w;
            weights[p.b] = w;
        }
        let counts = apportion(spec.papers_per_field_year, &weights);
        let mut out = Vec::new();
        let mut paired = vec![false; k];
        for (p, m) in &pairs {
            paired[p.a] = true;
            paired[p.b] = true;
            let total = counts[p.a] + counts[p.b];
            let cross = if year < p.pivot_year {
                (total as f64 * p.rate_before).round() as usize
            } else if year == p.pivot_year {
                p.planted_at_pivot.unwrap_or((total as f64 * p.rate_before).round() as usize)
            } else {
                (total as f64 * p.rate_after).round() as usize
            }
            .min(total);
            let planted = if year == p.pivot_year { Some(*m) } else { None };
            for i in 0..total {
                let primary = if i % 2 == 0 { p.a } else { p.b };
                let other = if primary == p.a { p.b } else { p.a };
                let kind = Kind::Static { primary: f * k + primary, secondary: (i < cross).then_some(f * k + other) };
                out.push((kind, if i < cross { planted } else { None }));
            }
        }
        for c in (0..k).filter(|&c| !paired[c]) {
            for _ in 0..counts[c] {
                let secondary = if self.rng.random::<f64>() < spec.cross_cluster_rate {
                    let mut o = self.rng.random_range(0..k - 1);
                    if o >= c {
                        o += 1;
                    }
                    (!paired[o]).then_some(f * k + o)
                } else {
                    None
                };
                out.push((Kind::Static { primary: f * k + c, secondary }, None));
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn make_paper(
        &mut self,
        id: String,
        year: i32,
        f: usize,
        kind: Kind,
        planted: Option<&'static str>,
        emergent_clusters: &[(String, Vec<usize>)],
        national_cluster: Option<usize>,
    ) -> Result<()> {
        let spec = self.spec;
        let (clusters, mut keywords): (Vec<usize>, Vec<String>) = match kind {
            Kind::Static { primary, secondary: None } => {
                let kws = self.clusters[primary].keywords.clone();
                (vec![primary], self.pick(&kws, spec.keywords_per_paper))
            }
            Kind::Static { primary, secondary: Some(s) } => {
                let (a, b) = (self.clusters[primary].keywords.clone(), self.clusters[s].keywords.clone());
                (vec![primary, s], self.pick_mixed(&a, &b, spec.keywords_per_paper))
            }
            Kind::Emergent { plan, mixed, subgroup } => {
                let e = &spec.emergent[plan];
                let (hub, ids) = &emergent_clusters[plan];
                let range = (e.keywords_per_paper.0.saturating_sub(1).max(1), e.keywords_per_paper.1.saturating_sub(1).max(1));
                // the hub only joins papers that bridge the subgroups, so it
                // cannot link them before mixing starts
                let mut kws = Vec::new();
                let clusters = if mixed {
                    kws.push(hub.clone());
                    let (a, b) = (self.clusters[ids[0]].keywords.clone(), self.clusters[ids[1]].keywords.clone());
                    kws.extend(self.pick_mixed(&a, &b, range));
                    ids.clone()
                } else {
                    let pool = self.clusters[ids[subgroup]].keywords.clone();
                    kws.extend(self.pick(&pool, e.keywords_per_paper));
                    vec![ids[subgroup]]
                };
                (clusters, kws)
            }
            Kind::National { mixed } => {
                let nc = national_cluster.expect("national paper without national cluster");
                let pool = self.clusters[nc].keywords.clone();
                if mixed {
                    let partner = f * spec.clusters_per_field + spec.national.as_ref().map_or(0, |n| n.partner);
                    let other = self.clusters[partner].keywords.clone();
                    (vec![nc, partner], self.pick_mixed(&pool, &other, spec.keywords_per_paper))
                } else {
                    (vec![nc], self.pick(&pool, spec.keywords_per_paper))
                }
            }
        };
        keywords.sort();

        // authors: split across the clusters involved; national papers only
        // draw from the national pool so the vocabulary stays national
        let author_pools: Vec<Vec<usize>> = match national_cluster.filter(|n| clusters.contains(n)) {
            Some(n) => vec![self.clusters[n].authors.clone()],
            None => clusters.iter().map(|&c| self.clusters[c].authors.clone()).collect(),
        };
        let n_auth = self.rng.random_range(spec.authors_per_paper.0..=spec.authors_per_paper.1);
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..n_auth {
            let pool = &author_pools[i % author_pools.len()];
            let cand = pool[self.rng.random_range(0..pool.len())];
            if !chosen.contains(&cand) {
                chosen.push(cand);
            }
        }
        let corresponding = self.rng.random_range(0..chosen.len());
        let authors = chosen
            .iter()
            .enumerate()
            .map(|(i, &a)| AuthorRef {
                author_id: self.authors[a].id.clone(),
                countries: self.authors[a].countries.clone(),
                position: i as u32 + 1,
                is_corresponding: i == corresponding,
            })
            .collect();

        let mut venues: Vec<String> = Vec::new();
        for (i, &c) in clusters.iter().enumerate() {
            let pool = self.clusters[c].venues.clone();
            let range = if clusters.len() > 1 { (1, (spec.venues_per_paper.1 / 2).max(1)) } else { spec.venues_per_paper };
            let picked = self.pick(&pool, range);
            if i == 0 || !picked.is_empty() {
                venues.extend(picked);
            }
        }

        let references = self.draw_references(&clusters, year);
        let is_review = self.rng.random::<f64>() < spec.review_rate;
        let language = if !is_review && self.rng.random::<f64>() < spec.non_english_rate / (1.0 - spec.review_rate).max(1e-9) {
            "de".to_string()
        } else {
            "en".to_string()
        };
        let disruptive = self.rng.random::<f64>() < spec.disruptive_fraction && !references.is_empty();
        let prescient = matches!(planted, Some(measure::PRESCIENT_PAPER));
        let national_planted = matches!(kind, Kind::National { mixed: true })
            && spec.national.as_ref().is_some_and(|n| n.pivot_year == year);

        let record = PaperRecord {
            paper_id: id.clone(),
            year,
            keywords,
            ref_venues: venues,
            references: references.iter().map(|&r| self.papers[r].record.paper_id.clone()).collect(),
            authors,
            field: vec![field_name(f)],
            is_review,
            language,
            citation_count: None,
        };
        if disruptive {
            for &r in &references {
                self.eclipsed[r] = true;
            }
        }
        if let Some(m) = planted {
            self.truth.push(m, id.clone(), format!("year={year};field={}", field_name(f)));
        }
        if national_planted {
            let c = &spec.national.as_ref().unwrap().country;
            self.truth.push(measure::NATIONAL_PRESCIENT_PAPER, id.clone(), format!("year={year};country={c}"));
        }
        if let Kind::Emergent { plan, .. } = kind {
            if spec.emergent[plan].target_year == year {
                self.truth.push(measure::EMERGENT_PAPER, id.clone(), format!("year={year};field={}", field_name(f)));
            }
        }
        if disruptive {
            self.truth.push(measure::DISRUPTIVE_PAPER, id.clone(), format!("year={year}"));
        }

        let idx = self.papers.len();
        for &c in &clusters {
            self.by_cluster_year.entry((c, year)).or_default().push(idx);
        }
        self.eclipsed.push(false);
        self.papers.push(Draft {
            record,
            clusters,
            attractiveness: if disruptive { 5.0 } else { 1.0 },
            disruptive,
            prescient: prescient || national_planted,
        });
        Ok(())
    }

    fn draw_references(&mut self, clusters: &[usize], year: i32) -> Vec<usize> {
        let mut pool: Vec<usize> = Vec::new();
        for &c in clusters {
            for y in year - 5..year {
                if let Some(v) = self.by_cluster_year.get(&(c, y)) {
                    pool.extend(v.iter().copied().filter(|&p| !self.eclipsed[p]));
                }
            }
        }
        pool.sort_unstable();
        pool.dedup();
        if pool.is_empty() {
            return Vec::new();
        }
        let k = self.rng.random_range(self.spec.references_per_paper.0..=self.spec.references_per_paper.1).min(pool.len());
        let weights: Vec<f64> = pool.iter().map(|&p| self.papers[p].attractiveness).collect();
        let mut chosen = match index::sample_weighted(&mut self.rng, pool.len(), |i| weights[i], k) {
            Ok(ix) => ix.into_iter().map(|i| pool[i]).collect::<Vec<_>>(),
            Err(_) => Vec::new(),
        };
        chosen.sort_unstable();
        // citing a disruptive paper replaces citing its predecessors
        let drop: BTreeSet<String> = chosen
            .iter()
            .filter(|&&p| self.papers[p].disruptive)
            .flat_map(|&p| self.papers[p].record.references.clone())
            .collect();
        chosen.retain(|&p| !drop.contains(&self.papers[p].record.paper_id));
        chosen
    }

    fn finish(mut self) -> Result<(Corpus, GroundTruth)> {
        let spec = self.spec;
        let base = Poisson::new(spec.base_citations.max(1e-9)).map_err(|e| Error::Infeasible(e.to_string()))?;
        let boost = Poisson::new(spec.citation_boost.max(1e-9)).map_err(|e| Error::Infeasible(e.to_string()))?;
        let mut cite_rng = stream_rng(spec.seed, 1);
        let mut records = Vec::with_capacity(self.papers.len());
        for d in self.papers.drain(..) {
            let mut r = d.record;
            let mut c: f64 = base.sample(&mut cite_rng);
            if d.prescient && spec.citation_boost > 0.0 {
                c += boost.sample(&mut cite_rng);
            }
            r.citation_count = Some(c as u64);
            debug_assert!(!d.clusters.is_empty());
            r.normalize().map_err(Error::Infeasible)?;
            records.push(r);
        }
        let (corpus, dups) = Corpus::from_records(records);
        if !dups.is_empty() {
            return Err(Error::Invariant("generator produced duplicate ids".into()));
        }
        Ok((corpus, self.truth))
    }
}

pub fn field_name(f: usize) -> String {
    format!("field{f}")
}

/// Generate a corpus and its ground truth. Deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<(Corpus, GroundTruth)> {
    spec.validate()?;
    Generator::new(spec)?.run()
}

/// Generate and write `corpus.jsonl`-style output plus the truth CSV.
pub fn generate_to(spec: &SynthSpec, corpus_path: &Path, truth_path: &Path) -> Result<(Corpus, GroundTruth)> {
    let (corpus, truth) = generate(spec)?;
    corpus.export(corpus_path)?;
    truth.write(truth_path)?;
    Ok((corpus, truth))
}

pub fn load_spec(path: &Path) -> Result<SynthSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format { what: "synthetic spec", reason: e.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorEval {
    pub measure: String,
    pub planted: usize,
    pub tagged: usize,
    pub hits: usize,
    pub precision: f64,
    pub recall: f64,
    /// Probability that a planted item outscores a non-planted one, when
    /// scores were supplied.
    pub auc: Option<f64>,
}

/// Mann-Whitney AUC of `positives` against the rest of `scores`; higher
/// scores count as more positive.
pub fn rank_auc(scores: &[(String, f64)], positives: &BTreeSet<String>) -> Option<f64> {
    let pos: Vec<f64> = scores.iter().filter(|(id, _)| positives.contains(id)).map(|s| s.1).collect();
    let neg: Vec<f64> = scores.iter().filter(|(id, _)| !positives.contains(id)).map(|s| s.1).collect();
    auc(&pos, &neg)
}

/// AUC of two score samples, ties counting one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Option<f64> {
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mean_rank * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Precision, recall and (optionally) AUC of tag sets against the planted
/// sets of the same measure. Every tagged and planted id must be in `ids`.
pub fn evaluate_detectors(
    tags: &BTreeMap<String, BTreeSet<String>>,
    scores: &BTreeMap<String, Vec<(String, f64)>>,
    truth: &GroundTruth,
    ids: &BTreeSet<String>,
) -> Result<Vec<DetectorEval>> {
    let mut out = Vec::new();
    for (m, tagged) in tags {
        let planted = truth.ids(m);
        if let Some(bad) = tagged.iter().chain(&planted).find(|id| !ids.contains(*id)) {
            return Err(Error::IdMismatch(format!("{bad:?} ({m}) is not in the corpus")));
        }
        let hits = tagged.intersection(&planted).count();
        out.push(DetectorEval {
            measure: m.clone(),
            planted: planted.len(),
            tagged: tagged.len(),
            hits,
            precision: if tagged.is_empty() { 0.0 } else { hits as f64 / tagged.len() as f64 },
            recall: if planted.is_empty() { 0.0 } else { hits as f64 / planted.len() as f64 },
            auc: scores.get(m).and_then(|s| rank_auc(s, &planted)),
        });
    }
    Ok(out)
}

/// OpenAlex work objects for a corpus, one per line. Countries become
/// institution country codes, keywords become `keywords` entries, referenced
/// venues are carried by the referenced works' primary sources plus a
/// `referenced_sources` extension for references outside the sample.
pub fn export_openalex(corpus: &Corpus, path: &Path) -> Result<()> {
    use std::io::Write;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for p in corpus.records() {
        let n = p.authors.len();
        let authorships: Vec<serde_json::Value> = p
            .authors
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let position = if i == 0 {
                    "first"
                } else if i + 1 == n {
                    "last"
                } else {
                    "middle"
                };
                serde_json::json!({
                    "author_position": position,
                    "author": {"id": format!("https://openalex.org/{}", a.author_id)},
                    "institutions": a.countries.iter().map(|c| serde_json::json!({"country_code": c})).collect::<Vec<_>>(),
                    "countries": a.countries,
                    "is_corresponding": a.is_corresponding,
                })
            })
            .collect();
        let work = serde_json::json!({
            "id": format!("https://openalex.org/{}", p.paper_id),
            "publication_year": p.year,
            "type": if p.is_review { "review" } else { "article" },
            "language": p.language,
            "cited_by_count": p.citation_count.unwrap_or(0),
            "keywords": p.keywords.iter().map(|k| serde_json::json!({"display_name": k, "score": 0.5})).collect::<Vec<_>>(),
            "primary_topic": {"field": {"display_name": p.field.first().cloned().unwrap_or_default()}},
            "authorships": authorships,
            "referenced_works": p.references.iter().map(|r| format!("https://openalex.org/{r}")).collect::<Vec<_>>(),
            "referenced_sources": p.ref_venues,
        });
        writeln!(w, "{work}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
