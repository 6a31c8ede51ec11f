//! National indicators from tagged paper sets: shares, per-paper rates,
//! Wilson intervals, threshold sweeps, citation curves and file export.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{attribute_countries, AttributionStrategy, View, UNKNOWN};
use crate::error::{Error, Result};
use crate::select::{self, Direction};

/// Thresholds of the robustness sweep.
pub const SWEEP_PCTS: [f64; 3] = [0.01, 0.05, 0.10];

/// CSV writer that first emits `# <comment>` when a comment is given.
pub fn csv_writer(path: &Path, header_comment: Option<&str>) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    if let Some(c) = header_comment {
        writeln!(w, "# {c}").map_err(|e| Error::io(path, e))?;
    }
    Ok(csv::Writer::from_writer(w))
}

/// CSV reader with a header row, skipping `#` comment lines.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    Emergence,
    ContentPrescience,
    ContextPrescience,
    Disruption,
    TopCited,
    Citations,
    Publications,
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::Emergence,
        Measure::ContentPrescience,
        Measure::ContextPrescience,
        Measure::Disruption,
        Measure::TopCited,
        Measure::Citations,
        Measure::Publications,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Emergence => "emergence",
            Measure::ContentPrescience => "content_prescience",
            Measure::ContextPrescience => "context_prescience",
            Measure::Disruption => "disruption",
            Measure::TopCited => "top_cited",
            Measure::Citations => "citations",
            Measure::Publications => "publications",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown measure {s:?}")))
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn confidence_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials >= 1 && successes <= trials, "need 0 <= successes <= trials and trials >= 1");
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Region aggregates, one `REGION: CC, CC, ...` line each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountryGroups {
    pub groups: BTreeMap<String, BTreeSet<String>>,
}

impl CountryGroups {
    pub fn parse(text: &str) -> Result<Self> {
        let mut groups = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, members) = line.split_once(':').ok_or_else(|| Error::Format {
                what: "country groups",
                reason: format!("line {}: expected `REGION: CC, CC`", i + 1),
            })?;
            let members: BTreeSet<String> =
                members.split(',').map(|c| c.trim().to_uppercase()).filter(|c| !c.is_empty()).collect();
            groups.insert(name.trim().to_string(), members);
        }
        Ok(CountryGroups { groups })
    }

    pub fn load(path: &Path) -> Result<Self> {
        CountryGroups::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// `countries` plus every region containing one of them.
    pub fn expand(&self, countries: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = countries.clone();
        for (name, members) in &self.groups {
            if !members.is_disjoint(countries) {
                out.insert(name.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportConfig {
    pub attribution: AttributionStrategy,
    pub groups: CountryGroups,
}

/// One `(measure, country, year)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub measure: Measure,
    pub country: String,
    pub year: i32,
    pub share: f64,
    pub rate: f64,
    pub count: u64,
    /// Wilson interval of the rate.
    pub ci_low: f64,
    pub ci_high: f64,
    pub share_ci_low: f64,
    pub share_ci_high: f64,
}

/// Per-year denominators of a series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct YearTotals {
    pub tagged: u64,
    /// Tagged papers with at least one known attributed country.
    pub tagged_known: u64,
}

impl YearTotals {
    pub fn unknown_fraction(&self) -> f64 {
        if self.tagged == 0 {
            0.0
        } else {
            (self.tagged - self.tagged_known) as f64 / self.tagged as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CountrySeries {
    pub rows: Vec<SeriesRow>,
    pub totals: BTreeMap<i32, YearTotals>,
}

fn known(countries: BTreeSet<String>) -> BTreeSet<String> {
    countries.into_iter().filter(|c| c != UNKNOWN).collect()
}

/// Shares and rates of `tags` within `view`, per country and year.
///
/// share = tagged papers attributed to the country / tagged papers with a
/// known country; rate = tagged papers attributed to the country / all papers
/// attributed to it. Countries with no papers in a year are omitted.
pub fn country_series(measure: Measure, tags: &BTreeSet<String>, view: &View<'_>, cfg: &ReportConfig) -> CountrySeries {
    let mut papers: BTreeMap<(i32, String), u64> = BTreeMap::new();
    let mut tagged: BTreeMap<(i32, String), u64> = BTreeMap::new();
    let mut totals: BTreeMap<i32, YearTotals> = BTreeMap::new();
    for p in view.iter() {
        let countries = cfg.groups.expand(&known(attribute_countries(p, cfg.attribution)));
        let is_tagged = tags.contains(&p.paper_id);
        if is_tagged {
            let t = totals.entry(p.year).or_default();
            t.tagged += 1;
            if !countries.is_empty() {
                t.tagged_known += 1;
            }
        }
        for c in countries {
            *papers.entry((p.year, c.clone())).or_default() += 1;
            if is_tagged {
                *tagged.entry((p.year, c)).or_default() += 1;
            }
        }
    }
    let mut rows = Vec::new();
    for ((year, country), n) in papers {
        let k = tagged.get(&(year, country.clone())).copied().unwrap_or(0);
        let denom = totals.get(&year).map_or(0, |t| t.tagged_known);
        let (ci_low, ci_high) = confidence_interval(k, n);
        let (share, (share_ci_low, share_ci_high)) =
            if denom > 0 { (k as f64 / denom as f64, confidence_interval(k, denom)) } else { (0.0, (0.0, 0.0)) };
        rows.push(SeriesRow {
            measure,
            country,
            year,
            share,
            rate: k as f64 / n as f64,
            count: k,
            ci_low,
            ci_high,
            share_ci_low,
            share_ci_high,
        });
    }
    rows.sort_by(|a, b| (a.country.as_str(), a.year).cmp(&(b.country.as_str(), b.year)));
    CountrySeries { rows, totals }
}

/// Share of `tags` per country over the whole view. Empty tags give an empty
/// map.
pub fn country_shares(tags: &BTreeSet<String>, view: &View<'_>, cfg: &ReportConfig) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut denom = 0u64;
    for p in view.iter().filter(|p| tags.contains(&p.paper_id)) {
        let countries = cfg.groups.expand(&known(attribute_countries(p, cfg.attribution)));
        if countries.is_empty() {
            continue;
        }
        denom += 1;
        for c in countries {
            *counts.entry(c).or_default() += 1;
        }
    }
    counts.into_iter().map(|(c, k)| (c, k as f64 / denom as f64)).collect()
}

/// Tagged fraction of each country's own papers over the whole view.
pub fn per_paper_rate(tags: &BTreeSet<String>, view: &View<'_>, cfg: &ReportConfig) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for p in view.iter() {
        let t = tags.contains(&p.paper_id) as u64;
        for c in cfg.groups.expand(&known(attribute_countries(p, cfg.attribution))) {
            let e = counts.entry(c).or_default();
            e.0 += t;
            e.1 += 1;
        }
    }
    counts.into_iter().map(|(c, (k, n))| (c, k as f64 / n as f64)).collect()
}

/// Citation-weighted series: a country's share of the year's citations to
/// papers with known countries, and its mean citations per paper as the
/// rate. Intervals are not defined for this measure and are written as NaN.
pub fn citation_series(view: &View<'_>, cfg: &ReportConfig) -> CountrySeries {
    let mut sums: BTreeMap<(i32, String), (u64, u64)> = BTreeMap::new();
    let mut year_total: BTreeMap<i32, u64> = BTreeMap::new();
    let mut totals: BTreeMap<i32, YearTotals> = BTreeMap::new();
    for p in view.iter() {
        let Some(cites) = p.citation_count else { continue };
        let countries = cfg.groups.expand(&known(attribute_countries(p, cfg.attribution)));
        let t = totals.entry(p.year).or_default();
        t.tagged += 1;
        if countries.is_empty() {
            continue;
        }
        t.tagged_known += 1;
        *year_total.entry(p.year).or_default() += cites;
        for c in countries {
            let e = sums.entry((p.year, c)).or_default();
            e.0 += cites;
            e.1 += 1;
        }
    }
    let rows = sums
        .into_iter()
        .map(|((year, country), (cites, n))| {
            let total = year_total[&year];
            SeriesRow {
                measure: Measure::Citations,
                country,
                year,
                share: if total > 0 { cites as f64 / total as f64 } else { 0.0 },
                rate: cites as f64 / n as f64,
                count: cites,
                ci_low: f64::NAN,
                ci_high: f64::NAN,
                share_ci_low: f64::NAN,
                share_ci_high: f64::NAN,
            }
        })
        .collect::<Vec<_>>();
    let mut series = CountrySeries { rows, totals };
    series.rows.sort_by(|a, b| (a.country.as_str(), a.year).cmp(&(b.country.as_str(), b.year)));
    series
}

/// A per-paper score within one field-year cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub paper_id: String,
    pub field: String,
    pub year: i32,
    pub score: f64,
}

/// Scores of one measure with the direction that counts as "top".
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<Scored>,
    pub direction: Direction,
}

impl ScoreTable {
    fn cells(&self) -> BTreeMap<(&str, i32), Vec<(String, f64)>> {
        let mut cells: BTreeMap<(&str, i32), Vec<(String, f64)>> = BTreeMap::new();
        for r in &self.rows {
            cells.entry((r.field.as_str(), r.year)).or_default().push((r.paper_id.clone(), r.score));
        }
        cells
    }

    /// Tags per `(field, year)` cell.
    pub fn tags_by_cell(&self, pct: f64) -> BTreeMap<(String, i32), BTreeSet<String>> {
        self.cells()
            .into_iter()
            .map(|((f, y), items)| ((f.to_string(), y), select::select(&items, pct, self.direction).into_iter().collect()))
            .collect()
    }

    /// Union over field-years of the top `pct` of each cell.
    pub fn tags(&self, pct: f64) -> BTreeSet<String> {
        self.tags_by_cell(pct).into_values().flatten().collect()
    }
}

/// Top papers by citation count per field-year.
pub fn top_cited_table(view: &View<'_>) -> ScoreTable {
    let rows = view
        .iter()
        .filter_map(|p| p.citation_count.map(|c| (p, c)))
        .flat_map(|(p, c)| {
            p.field.iter().map(move |f| Scored { paper_id: p.paper_id.clone(), field: f.clone(), year: p.year, score: c as f64 })
        })
        .collect();
    ScoreTable { rows, direction: Direction::Highest }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepLevel {
    pub pct: f64,
    pub tags: BTreeSet<String>,
    pub series: CountrySeries,
}

/// Tag sets and series at each threshold. Fails when a smaller threshold's
/// tags are not contained in a larger one's in some field-year.
pub fn threshold_sweep(
    measure: Measure,
    table: &ScoreTable,
    pcts: &[f64],
    view: &View<'_>,
    cfg: &ReportConfig,
) -> Result<Vec<SweepLevel>> {
    let mut sorted = pcts.to_vec();
    sorted.sort_by(f64::total_cmp);
    let by_cell: Vec<_> = sorted.iter().map(|&p| table.tags_by_cell(p)).collect();
    for pair in by_cell.windows(2) {
        for (cell, small) in &pair[0] {
            let large = pair[1].get(cell);
            if !small.iter().all(|id| large.is_some_and(|l| l.contains(id))) {
                return Err(Error::Invariant(format!("{measure} tags not nested in {} {}", cell.0, cell.1)));
            }
        }
    }
    Ok(sorted
        .iter()
        .zip(by_cell)
        .map(|(&pct, cells)| {
            let tags: BTreeSet<String> = cells.into_values().flatten().collect();
            let series = country_series(measure, &tags, view, cfg);
            SweepLevel { pct, tags, series }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    /// `(bin midpoint percentile, fraction of the bin in the global top 10%
    /// by citations)`; empty bins are skipped.
    pub points: Vec<(f64, f64)>,
    pub marker_percentile: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationCurves {
    pub surprise: Curve,
    pub prescience: Curve,
    pub excluded: usize,
    /// Fraction of included papers in the global top 10%.
    pub base_rate: f64,
}

/// Top-10%-cited fraction as a function of percentile rank of surprise and of
/// prescience. Rows are `(paper_id, surprise, prescience)`.
pub fn prescience_citation_curve(
    rows: &[(String, f64, f64)],
    citations: &HashMap<String, Option<u64>>,
    bins: usize,
    label: &str,
) -> CitationCurves {
    let bins = bins.max(1);
    let mut kept = Vec::new();
    let mut excluded = 0;
    for (id, s, p) in rows {
        match citations.get(id).copied().flatten() {
            Some(c) if s.is_finite() && p.is_finite() => kept.push((id.clone(), *s, *p, c)),
            _ => excluded += 1,
        }
    }
    let items: Vec<(String, f64)> = kept.iter().map(|(id, _, _, c)| (id.clone(), *c as f64)).collect();
    let top: BTreeSet<String> = select::select(&items, 0.10, Direction::Highest).into_iter().collect();
    let base_rate = if kept.is_empty() { 0.0 } else { top.len() as f64 / kept.len() as f64 };
    let curve = |score: fn(&(String, f64, f64, u64)) -> f64, name: &str| {
        let mut order: Vec<&(String, f64, f64, u64)> = kept.iter().collect();
        order.sort_by(|a, b| score(a).total_cmp(&score(b)).then_with(|| a.0.cmp(&b.0)));
        let n = order.len();
        let mut hits = vec![(0usize, 0usize); bins];
        for (rank, r) in order.iter().enumerate() {
            let b = rank * bins / n;
            hits[b].1 += 1;
            hits[b].0 += top.contains(&r.0) as usize;
        }
        let points = hits
            .iter()
            .enumerate()
            .filter(|(_, h)| h.1 > 0)
            .map(|(b, h)| ((b as f64 + 0.5) * 100.0 / bins as f64, h.0 as f64 / h.1 as f64))
            .collect();
        Curve { label: format!("{label}_{name}"), points, marker_percentile: 95.0 }
    };
    CitationCurves { surprise: curve(|r| r.1, "surprise"), prescience: curve(|r| r.2, "prescience"), excluded, base_rate }
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        x.to_string()
    }
}

/// Long-form CSV: `measure, country, year, share, rate, count, ci_low,
/// ci_high, share_ci_low, share_ci_high`; the rate interval is `ci_*`.
pub fn write_series_csv(path: &Path, rows: &[SeriesRow], header_comment: Option<&str>) -> Result<()> {
    let mut w = csv_writer(path, header_comment)?;
    w.write_record([
        "measure",
        "country",
        "year",
        "share",
        "rate",
        "count",
        "ci_low",
        "ci_high",
        "share_ci_low",
        "share_ci_high",
    ])?;
    for r in rows {
        w.write_record([
            r.measure.name().to_string(),
            r.country.clone(),
            r.year.to_string(),
            fmt_f(r.share),
            fmt_f(r.rate),
            r.count.to_string(),
            fmt_f(r.ci_low),
            fmt_f(r.ci_high),
            fmt_f(r.share_ci_low),
            fmt_f(r.share_ci_high),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_series_csv(path: &Path) -> Result<Vec<SeriesRow>> {
    let mut out = Vec::new();
    for rec in csv_reader(path)?.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Format { what: "series csv", reason: format!("bad {what}") };
        let f = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, what: &str| f(i).parse::<f64>().map_err(|_| bad(what));
        out.push(SeriesRow {
            measure: f(0).parse()?,
            country: f(1).to_string(),
            year: f(2).parse().map_err(|_| bad("year"))?,
            share: num(3, "share")?,
            rate: num(4, "rate")?,
            count: f(5).parse().map_err(|_| bad("count"))?,
            ci_low: num(6, "ci_low")?,
            ci_high: num(7, "ci_high")?,
            share_ci_low: num(8, "share_ci_low")?,
            share_ci_high: num(9, "share_ci_high")?,
        });
    }
    Ok(out)
}

/// One file per panel (`<measure>_share.tsv`, `<measure>_rate.tsv`) with
/// columns `country, x, y, band_low, band_high`. Returns the written paths.
pub fn write_plotdata(dir: &Path, rows: &[SeriesRow]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut by_measure: BTreeMap<Measure, Vec<&SeriesRow>> = BTreeMap::new();
    for r in rows {
        by_measure.entry(r.measure).or_default().push(r);
    }
    let mut written = Vec::new();
    for (m, rs) in by_measure {
        for panel in ["share", "rate"] {
            let path = dir.join(format!("{}_{panel}.tsv", m.name()));
            let mut out = String::from("country\tx\ty\tband_low\tband_high\n");
            for r in &rs {
                let (y, lo, hi) =
                    if panel == "share" { (r.share, r.share_ci_low, r.share_ci_high) } else { (r.rate, r.ci_low, r.ci_high) };
                out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.country, r.year, fmt_f(y), fmt_f(lo), fmt_f(hi)));
            }
            fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Curve panel with columns `x, y`; the marker percentile is a comment line.
pub fn write_curve(path: &Path, curve: &Curve) -> Result<()> {
    let mut out = format!("# {} marker={}\nx\ty\n", curve.label, curve.marker_percentile);
    for (x, y) in &curve.points {
        out.push_str(&format!("{x}\t{y}\n"));
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorRef, Corpus, PaperRecord};

    fn paper(id: &str, year: i32, countries: &[&[&str]]) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            year,
            keywords: vec![],
            ref_venues: vec![],
            references: vec![],
            authors: countries
                .iter()
                .enumerate()
                .map(|(i, cs)| AuthorRef {
                    author_id: format!("{id}-a{i}"),
                    countries: cs.iter().map(|c| c.to_string()).collect(),
                    position: i as u32 + 1,
                    is_corresponding: i == 0,
                })
                .collect(),
            field: vec!["f".into()],
            is_review: false,
            language: "en".into(),
            citation_count: None,
        }
    }

    #[test]
    fn wilson_boundaries_and_midpoint() {
        assert_eq!(confidence_interval(0, 100).0, 0.0);
        assert_eq!(confidence_interval(5, 5).1, 1.0);
        let (lo, hi) = confidence_interval(50, 100);
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
        assert!((hi - lo - 0.1918).abs() < 1e-3, "width {}", hi - lo);
    }

    #[test]
    fn shares_any_author() {
        let mut records = Vec::new();
        for i in 0..10 {
            let cs: &[&[&str]] = if i < 4 { &[&["US"], &["DE"]] } else { &[&["DE"]] };
            records.push(paper(&format!("p{i}"), 2020, cs));
        }
        let (corpus, _) = Corpus::from_records(records);
        let tags: BTreeSet<String> = (0..10).map(|i| format!("p{i}")).collect();
        let shares = country_shares(&tags, &corpus.view(), &ReportConfig::default());
        assert!((shares["US"] - 0.4).abs() < 1e-12);
        assert!((shares["DE"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_coauthorship_sums_to_two() {
        let records: Vec<_> = (0..5).map(|i| paper(&format!("p{i}"), 2020, &[&["US"], &["CN"]])).collect();
        let (corpus, _) = Corpus::from_records(records);
        let tags: BTreeSet<String> = corpus.view().ids().into_iter().map(String::from).collect();
        let shares = country_shares(&tags, &corpus.view(), &ReportConfig::default());
        assert_eq!(shares["US"], 1.0);
        assert_eq!(shares["CN"], 1.0);
        assert!(country_shares(&BTreeSet::new(), &corpus.view(), &ReportConfig::default()).is_empty());
    }

    #[test]
    fn rate_counts_own_papers() {
        let records: Vec<_> = (0..100).map(|i| paper(&format!("p{i:03}"), 2020, &[&["FR"]])).collect();
        let (corpus, _) = Corpus::from_records(records);
        let five: BTreeSet<String> = (0..5).map(|i| format!("p{i:03}")).collect();
        let rates = per_paper_rate(&five, &corpus.view(), &ReportConfig::default());
        assert!((rates["FR"] - 0.05).abs() < 1e-12);
        let all: BTreeSet<String> = (0..100).map(|i| format!("p{i:03}")).collect();
        assert_eq!(per_paper_rate(&all, &corpus.view(), &ReportConfig::default())["FR"], 1.0);
    }

    #[test]
    fn unknown_only_papers_leave_share_denominator() {
        let records = vec![paper("a", 2020, &[&["US"]]), paper("b", 2020, &[&[]])];
        let (corpus, _) = Corpus::from_records(records);
        let tags: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let s = country_series(Measure::Emergence, &tags, &corpus.view(), &ReportConfig::default());
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].share, 1.0);
        assert_eq!(s.totals[&2020].unknown_fraction(), 0.5);
    }

    #[test]
    fn groups_expand_regions() {
        let g = CountryGroups::parse("EU: DE, FR\n# comment\nNA: US, CA\n").unwrap();
        let e = g.expand(&BTreeSet::from(["DE".to_string()]));
        assert!(e.contains("EU") && e.contains("DE") && !e.contains("NA"));
        assert!(CountryGroups::parse("nonsense").is_err());
    }

    #[test]
    fn single_bin_curve_equals_base_rate() {
        let rows: Vec<(String, f64, f64)> = (0..50).map(|i| (format!("p{i}"), i as f64, -(i as f64))).collect();
        let cites: HashMap<String, Option<u64>> = (0..50).map(|i| (format!("p{i}"), Some(i as u64))).collect();
        let c = prescience_citation_curve(&rows, &cites, 1, "content");
        assert_eq!(c.prescience.points.len(), 1);
        assert!((c.prescience.points[0].1 - c.base_rate).abs() < 1e-12);
        assert!((c.base_rate - 0.1).abs() < 1e-12);
    }

    #[test]
    fn sweep_is_nested() {
        let rows = (0..300)
            .map(|i| Scored { paper_id: format!("p{i}"), field: "f".into(), year: 2020, score: ((i * 37) % 101) as f64 })
            .collect();
        let table = ScoreTable { rows, direction: Direction::Highest };
        let (corpus, _) = Corpus::from_records((0..300).map(|i| paper(&format!("p{i}"), 2020, &[&["US"]])));
        let levels = threshold_sweep(Measure::Disruption, &table, &SWEEP_PCTS, &corpus.view(), &ReportConfig::default()).unwrap();
        assert_eq!(levels.len(), 3);
        assert!(levels[0].tags.is_subset(&levels[1].tags) && levels[1].tags.is_subset(&levels[2].tags));
    }
}
