//! Publication records: ingestion, validation, filtering, indexing, country
//! attribution and year-window views.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Sentinel country for authors without a resolvable affiliation.
pub const UNKNOWN: &str = "UNKNOWN";

/// Record schema understood by [`ingest`].
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRef {
    pub author_id: String,
    #[serde(default)]
    pub countries: BTreeSet<String>,
    pub position: u32,
    #[serde(default)]
    pub is_corresponding: bool,
}

impl AuthorRef {
    /// Countries with the empty set read as `{UNKNOWN}`.
    pub fn effective_countries(&self) -> BTreeSet<String> {
        if self.countries.is_empty() {
            BTreeSet::from([UNKNOWN.to_string()])
        } else {
            self.countries.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub year: i32,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub ref_venues: Vec<String>,
    #[serde(default)]
    pub references: Vec<String>,
    pub authors: Vec<AuthorRef>,
    /// Field labels. A single label is written as a plain string, several as
    /// an array; both forms are accepted on input.
    #[serde(default, serialize_with = "ser_fields", deserialize_with = "de_fields")]
    pub field: Vec<String>,
    #[serde(default)]
    pub is_review: bool,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citation_count: Option<u64>,
}

fn default_language() -> String {
    "en".to_string()
}

fn ser_fields<S: Serializer>(fields: &[String], s: S) -> std::result::Result<S::Ok, S::Error> {
    match fields {
        [] => s.serialize_str(""),
        [one] => s.serialize_str(one),
        many => many.serialize(s),
    }
}

fn de_fields<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(String),
        Many(Vec<String>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(s) if s.trim().is_empty() => Vec::new(),
        OneOrMany::One(s) => vec![s],
        OneOrMany::Many(v) => v,
    })
}

/// Lowercase, trim and collapse internal whitespace. No stemming.
pub fn normalize_keyword(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn is_country_code(code: &str) -> bool {
    code == UNKNOWN || ((2..=3).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_uppercase()))
}

impl PaperRecord {
    /// Normalize in place and check the record invariants. Returns the reason
    /// for rejection when the record cannot be repaired.
    pub fn normalize(&mut self) -> std::result::Result<(), String> {
        if self.paper_id.trim().is_empty() {
            return Err("empty paper_id".into());
        }
        self.keywords = dedup_normalized(&self.keywords);
        self.ref_venues = self
            .ref_venues
            .iter()
            .map(|v| normalize_keyword(v))
            .filter(|v| !v.is_empty())
            .collect();
        let mut seen = HashSet::new();
        let own = self.paper_id.clone();
        self.references.retain(|r| *r != own && seen.insert(r.clone()));
        self.field = self.field.iter().map(|f| f.trim().to_string()).filter(|f| !f.is_empty()).collect();
        self.field.dedup();
        self.language = self.language.trim().to_lowercase();

        if self.authors.is_empty() {
            return Err("no authors".into());
        }
        let mut positions = HashSet::new();
        for a in &mut self.authors {
            if !positions.insert(a.position) {
                return Err(format!("duplicate author position {}", a.position));
            }
            let mut countries = BTreeSet::new();
            for c in &a.countries {
                let c = c.trim().to_uppercase();
                if !is_country_code(&c) {
                    return Err(format!("invalid country code {c:?}"));
                }
                countries.insert(c);
            }
            // an explicit UNKNOWN next to a real country carries no information
            if countries.len() > 1 {
                countries.remove(UNKNOWN);
            }
            a.countries = countries;
        }
        self.authors.sort_by_key(|a| a.position);
        Ok(())
    }

    /// Distinct referenced venues, first occurrence order.
    pub fn distinct_venues(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.ref_venues.iter().filter(|v| seen.insert(v.as_str())).cloned().collect()
    }

    pub fn in_field(&self, field: &str) -> bool {
        self.field.iter().any(|f| f == field)
    }
}

fn dedup_normalized(raw: &[String]) -> Vec<String> {
    let mut seen = HashSet::new();
    raw.iter()
        .map(|k| normalize_keyword(k))
        .filter(|k| !k.is_empty() && seen.insert(k.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttributionStrategy {
    #[default]
    AnyAuthor,
    FirstAuthor,
    LastAuthor,
    CorrespondingAuthor,
    Unanimous,
}

impl AttributionStrategy {
    pub const ALL: [AttributionStrategy; 5] = [
        AttributionStrategy::AnyAuthor,
        AttributionStrategy::FirstAuthor,
        AttributionStrategy::LastAuthor,
        AttributionStrategy::CorrespondingAuthor,
        AttributionStrategy::Unanimous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttributionStrategy::AnyAuthor => "any",
            AttributionStrategy::FirstAuthor => "first",
            AttributionStrategy::LastAuthor => "last",
            AttributionStrategy::CorrespondingAuthor => "corresponding",
            AttributionStrategy::Unanimous => "unanimous",
        }
    }
}

impl fmt::Display for AttributionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttributionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_lowercase().as_str() {
            "any" | "anyauthor" | "any_author" => AttributionStrategy::AnyAuthor,
            "first" | "firstauthor" | "first_author" => AttributionStrategy::FirstAuthor,
            "last" | "lastauthor" | "last_author" => AttributionStrategy::LastAuthor,
            "corresponding" | "correspondingauthor" | "corresponding_author" => {
                AttributionStrategy::CorrespondingAuthor
            }
            "unanimous" => AttributionStrategy::Unanimous,
            other => return Err(Error::Config(format!("unknown attribution strategy {other:?}"))),
        })
    }
}

/// Countries credited with `p` under `strategy`.
///
/// An empty result means the paper is unattributable under the strategy
/// (no corresponding author flagged, or no single country shared by all
/// authors). `UNKNOWN` is only returned when no known country qualifies.
pub fn attribute_countries(p: &PaperRecord, strategy: AttributionStrategy) -> BTreeSet<String> {
    let mut out = match strategy {
        AttributionStrategy::AnyAuthor => {
            p.authors.iter().flat_map(|a| a.effective_countries()).collect::<BTreeSet<_>>()
        }
        AttributionStrategy::FirstAuthor => p
            .authors
            .iter()
            .min_by_key(|a| a.position)
            .map(AuthorRef::effective_countries)
            .unwrap_or_default(),
        AttributionStrategy::LastAuthor => p
            .authors
            .iter()
            .max_by_key(|a| a.position)
            .map(AuthorRef::effective_countries)
            .unwrap_or_default(),
        AttributionStrategy::CorrespondingAuthor => p
            .authors
            .iter()
            .filter(|a| a.is_corresponding)
            .flat_map(|a| a.effective_countries())
            .collect(),
        AttributionStrategy::Unanimous => {
            let mut it = p.authors.iter().map(AuthorRef::effective_countries);
            let first = it.next().unwrap_or_default();
            let common = it.fold(first, |acc, c| acc.intersection(&c).cloned().collect());
            if common.len() == 1 {
                common
            } else {
                BTreeSet::new()
            }
        }
    };
    if out.len() > 1 {
        out.remove(UNKNOWN);
    }
    out
}

/// Field taxonomy: the admissible labels plus a keyword to field fallback for
/// records that arrive without a label.
///
/// Text format, one entry per line, `#` starts a comment:
///
/// ```text
/// computer science
/// medicine
/// deep learning -> computer science
/// ```
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Taxonomy {
    pub labels: BTreeSet<String>,
    pub keyword_fallback: BTreeMap<String, String>,
}

impl Taxonomy {
    pub fn parse(text: &str) -> Result<Self> {
        let mut tax = Taxonomy::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((kw, field)) = line.split_once("->") {
                let (kw, field) = (normalize_keyword(kw), field.trim().to_string());
                if kw.is_empty() || field.is_empty() {
                    return Err(Error::Format { what: "taxonomy", reason: format!("line {}: empty mapping side", n + 1) });
                }
                tax.labels.insert(field.clone());
                tax.keyword_fallback.insert(kw, field);
            } else {
                tax.labels.insert(line.to_string());
            }
        }
        Ok(tax)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn apply(&self, rec: &mut PaperRecord) -> std::result::Result<(), String> {
        if rec.field.is_empty() {
            let mut fallback: Vec<String> =
                rec.keywords.iter().filter_map(|k| self.keyword_fallback.get(k).cloned()).collect();
            fallback.dedup();
            rec.field = fallback;
        }
        match rec.field.iter().find(|f| !self.labels.contains(*f)) {
            Some(bad) => Err(format!("field {bad:?} not in taxonomy")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

/// Layout of an input line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputFormat {
    /// One record per line, fields as [`PaperRecord`].
    #[default]
    Records,
    /// One OpenAlex work object per line.
    OpenAlex,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "records" => Ok(InputFormat::Records),
            "openalex" => Ok(InputFormat::OpenAlex),
            other => Err(Error::Config(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub year_range: Option<(i32, i32)>,
    pub taxonomy: Option<Taxonomy>,
    pub format: InputFormat,
}

#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub rejections: Vec<Rejection>,
}

/// Read a line-delimited record file with default options.
pub fn ingest(path: &Path, schema_version: &str) -> Result<Ingested> {
    ingest_with(path, schema_version, &IngestOptions::default())
}

pub fn ingest_with(path: &Path, schema_version: &str, opts: &IngestOptions) -> Result<Ingested> {
    if schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion(schema_version.to_string()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut rejections = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(&line, opts) {
            Ok(rec) => records.push((lineno, rec)),
            Err(reason) => rejections.push(Rejection { line: lineno, reason }),
        }
    }
    let mut corpus = Corpus::default();
    for (lineno, rec) in records {
        let id = rec.paper_id.clone();
        if !corpus.push(rec) {
            rejections.push(Rejection { line: lineno, reason: format!("duplicate paper_id {id:?}") });
        }
    }
    rejections.sort_by_key(|r| r.line);
    Ok(Ingested { corpus, rejections })
}

fn parse_line(line: &str, opts: &IngestOptions) -> std::result::Result<PaperRecord, String> {
    let mut rec: PaperRecord = match opts.format {
        InputFormat::Records => serde_json::from_str(line).map_err(|e| format!("parse error: {e}"))?,
        InputFormat::OpenAlex => {
            let v: serde_json::Value = serde_json::from_str(line).map_err(|e| format!("parse error: {e}"))?;
            openalex_work(&v)?
        }
    };
    rec.normalize()?;
    if let Some((lo, hi)) = opts.year_range {
        if rec.year < lo || rec.year > hi {
            return Err(format!("year {} outside {lo}..{hi}", rec.year));
        }
    }
    if let Some(tax) = &opts.taxonomy {
        tax.apply(&mut rec)?;
    }
    Ok(rec)
}

fn openalex_id(v: &serde_json::Value) -> Option<String> {
    let s = v.as_str()?;
    Some(s.rsplit('/').next().unwrap_or(s).to_string())
}

fn str_list(v: &serde_json::Value, key: &str) -> Vec<String> {
    v.get(key).and_then(|x| x.as_array()).map_or_else(Vec::new, |a| {
        a.iter()
            .filter_map(|x| x.as_str().map(str::to_string).or_else(|| x.get("display_name")?.as_str().map(str::to_string)))
            .collect()
    })
}

/// Map an OpenAlex work to a record. Venues of references come from the
/// `referenced_sources` list; author countries from `countries`, falling back
/// to institution country codes.
fn openalex_work(v: &serde_json::Value) -> std::result::Result<PaperRecord, String> {
    let paper_id = v.get("id").and_then(openalex_id).ok_or("missing id")?;
    let year = v.get("publication_year").and_then(|y| y.as_i64()).ok_or("missing publication_year")? as i32;
    let mut authors = Vec::new();
    for (i, a) in v.get("authorships").and_then(|x| x.as_array()).into_iter().flatten().enumerate() {
        let author_id = a.get("author").and_then(|x| x.get("id")).and_then(openalex_id).ok_or("authorship without author id")?;
        let mut countries: BTreeSet<String> = str_list(a, "countries").into_iter().collect();
        if countries.is_empty() {
            for inst in a.get("institutions").and_then(|x| x.as_array()).into_iter().flatten() {
                if let Some(c) = inst.get("country_code").and_then(|c| c.as_str()) {
                    countries.insert(c.to_string());
                }
            }
        }
        authors.push(AuthorRef {
            author_id,
            countries,
            position: i as u32 + 1,
            is_corresponding: a.get("is_corresponding").and_then(|x| x.as_bool()).unwrap_or(false),
        });
    }
    let field = v
        .pointer("/primary_topic/field/display_name")
        .and_then(|f| f.as_str())
        .map_or_else(Vec::new, |f| vec![f.to_string()]);
    Ok(PaperRecord {
        paper_id,
        year,
        keywords: str_list(v, "keywords"),
        ref_venues: str_list(v, "referenced_sources"),
        references: v
            .get("referenced_works")
            .and_then(|x| x.as_array())
            .map_or_else(Vec::new, |a| a.iter().filter_map(openalex_id).collect()),
        authors,
        field,
        is_review: v.get("type").and_then(|t| t.as_str()) == Some("review"),
        language: v.get("language").and_then(|l| l.as_str()).unwrap_or("en").to_string(),
        citation_count: v.get("cited_by_count").and_then(|c| c.as_u64()),
    })
}

pub fn write_rejections(path: &Path, rejections: &[Rejection], header_comment: Option<&str>) -> Result<()> {
    let mut w = crate::report::csv_writer(path, header_comment)?;
    w.write_record(["line", "reason"])?;
    for r in rejections {
        w.write_record([r.line.to_string(), r.reason.clone()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Indexed, immutable collection of records.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<PaperRecord>,
    by_id: HashMap<String, usize>,
    by_year: BTreeMap<i32, Vec<usize>>,
    by_field: BTreeMap<String, Vec<usize>>,
    by_keyword: HashMap<String, Vec<usize>>,
    by_author: HashMap<String, Vec<usize>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Corpus {
    /// Build from already-normalized records; later duplicates of an id are
    /// dropped and returned.
    pub fn from_records(records: impl IntoIterator<Item = PaperRecord>) -> (Corpus, Vec<PaperRecord>) {
        let mut corpus = Corpus::default();
        let mut dups = Vec::new();
        for rec in records {
            if corpus.by_id.contains_key(&rec.paper_id) {
                dups.push(rec);
            } else {
                corpus.push(rec);
            }
        }
        (corpus, dups)
    }

    fn push(&mut self, rec: PaperRecord) -> bool {
        if self.by_id.contains_key(&rec.paper_id) {
            return false;
        }
        let idx = self.records.len();
        self.by_id.insert(rec.paper_id.clone(), idx);
        self.by_year.entry(rec.year).or_default().push(idx);
        for f in &rec.field {
            self.by_field.entry(f.clone()).or_default().push(idx);
        }
        for k in &rec.keywords {
            self.by_keyword.entry(k.clone()).or_default().push(idx);
        }
        let mut seen = HashSet::new();
        for a in &rec.authors {
            if seen.insert(&a.author_id) {
                self.by_author.entry(a.author_id.clone()).or_default().push(idx);
            }
        }
        self.records.push(rec);
        true
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PaperRecord] {
        &self.records
    }

    pub fn get(&self, paper_id: &str) -> Option<&PaperRecord> {
        self.by_id.get(paper_id).map(|&i| &self.records[i])
    }

    pub fn index_of(&self, paper_id: &str) -> Option<usize> {
        self.by_id.get(paper_id).copied()
    }

    pub fn years(&self) -> Vec<i32> {
        self.by_year.keys().copied().collect()
    }

    pub fn year_range(&self) -> Option<(i32, i32)> {
        Some((*self.by_year.keys().next()?, *self.by_year.keys().next_back()?))
    }

    pub fn fields(&self) -> Vec<String> {
        self.by_field.keys().cloned().collect()
    }

    pub fn in_year(&self, year: i32) -> impl Iterator<Item = &PaperRecord> {
        self.by_year.get(&year).into_iter().flatten().map(|&i| &self.records[i])
    }

    pub fn in_field(&self, field: &str) -> impl Iterator<Item = &PaperRecord> {
        self.by_field.get(field).into_iter().flatten().map(|&i| &self.records[i])
    }

    pub fn with_keyword(&self, keyword: &str) -> impl Iterator<Item = &PaperRecord> {
        self.by_keyword.get(keyword).into_iter().flatten().map(|&i| &self.records[i])
    }

    pub fn by_author(&self, author_id: &str) -> impl Iterator<Item = &PaperRecord> {
        self.by_author.get(author_id).into_iter().flatten().map(|&i| &self.records[i])
    }

    /// Keep records matching `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&PaperRecord) -> bool) -> Corpus {
        Corpus::from_records(self.records.iter().filter(|r| keep(r)).cloned()).0
    }

    /// Drop reviews unless `allow_reviews`, and records whose language is not
    /// in `languages`. Idempotent.
    pub fn filter_articles(&self, allow_reviews: bool, languages: &BTreeSet<String>) -> Corpus {
        self.filter(|r| (allow_reviews || !r.is_review) && languages.contains(&r.language))
    }

    /// Records with `end_year - span < year <= end_year`.
    pub fn window(&self, end_year: i32, span: u32) -> View<'_> {
        assert!(span >= 1, "window span must be at least 1");
        let lo = end_year - span as i32 + 1;
        let mut idx: Vec<usize> = self.by_year.range(lo..=end_year).flat_map(|(_, v)| v.iter().copied()).collect();
        idx.sort_unstable();
        View { corpus: self, idx }
    }

    pub fn view(&self) -> View<'_> {
        View { corpus: self, idx: (0..self.records.len()).collect() }
    }

    /// Write as line-delimited records readable by [`ingest`].
    pub fn export(&self, path: &Path) -> Result<()> {
        self.export_with_comment(path, None)
    }

    /// As [`Corpus::export`], with an optional leading `# comment` line that
    /// ingestion skips.
    pub fn export_with_comment(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        if let Some(c) = comment {
            writeln!(w, "# {c}").map_err(|e| Error::io(path, e))?;
        }
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(|e| Error::Format { what: "record", reason: e.to_string() })?;
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Immutable subset of a corpus, in corpus order.
#[derive(Debug, Clone)]
pub struct View<'a> {
    corpus: &'a Corpus,
    idx: Vec<usize>,
}

impl<'a> View<'a> {
    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a PaperRecord> + '_ {
        let corpus = self.corpus;
        self.idx.iter().map(move |&i| &corpus.records[i])
    }

    pub fn contains(&self, paper_id: &str) -> bool {
        self.corpus.index_of(paper_id).is_some_and(|i| self.idx.binary_search(&i).is_ok())
    }

    pub fn ids(&self) -> Vec<&'a str> {
        self.iter().map(|r| r.paper_id.as_str()).collect()
    }

    pub fn year(&self, year: i32) -> View<'a> {
        self.restrict(|r| r.year == year)
    }

    pub fn restrict(&self, mut keep: impl FnMut(&PaperRecord) -> bool) -> View<'a> {
        let idx = self.idx.iter().copied().filter(|&i| keep(&self.corpus.records[i])).collect();
        View { corpus: self.corpus, idx }
    }

    /// Owned copy, for stages that need to retrain on a subset.
    pub fn to_corpus(&self) -> Corpus {
        Corpus::from_records(self.iter().cloned()).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn author(id: &str, countries: &[&str], position: u32) -> AuthorRef {
        AuthorRef {
            author_id: id.into(),
            countries: countries.iter().map(|c| c.to_string()).collect(),
            position,
            is_corresponding: false,
        }
    }

    fn paper(id: &str, year: i32, authors: Vec<AuthorRef>) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            year,
            keywords: vec!["a".into()],
            ref_venues: vec![],
            references: vec![],
            authors,
            field: vec!["f".into()],
            is_review: false,
            language: "en".into(),
            citation_count: None,
        }
    }

    #[test]
    fn keyword_normalization() {
        assert_eq!(normalize_keyword("  Deep   Learning\t"), "deep learning");
        let mut p = paper("p", 2020, vec![author("x", &["us"], 0)]);
        p.keywords = vec!["Graph ".into(), "graph".into(), " ".into(), "Graphs".into()];
        p.references = vec!["p".into(), "q".into(), "q".into()];
        p.normalize().unwrap();
        assert_eq!(p.keywords, vec!["graph", "graphs"]);
        assert_eq!(p.references, vec!["q"]);
        assert_eq!(p.authors[0].countries, BTreeSet::from(["US".to_string()]));
    }

    #[test]
    fn normalize_rejects_bad_records() {
        let mut p = paper("p", 2020, vec![]);
        assert!(p.normalize().is_err());
        let mut p = paper("p", 2020, vec![author("x", &["US"], 0), author("y", &["CN"], 0)]);
        assert!(p.normalize().unwrap_err().contains("position"));
        let mut p = paper("p", 2020, vec![author("x", &["usa1"], 0)]);
        assert!(p.normalize().unwrap_err().contains("country"));
    }

    #[test]
    fn any_author_gives_full_credit() {
        let p = paper("p", 2020, vec![author("x", &["US"], 0), author("y", &["CN"], 1)]);
        let got = attribute_countries(&p, AttributionStrategy::AnyAuthor);
        assert_eq!(got, BTreeSet::from(["CN".to_string(), "US".to_string()]));
    }

    #[test]
    fn single_author_every_strategy() {
        let mut a = author("x", &["US"], 0);
        a.is_corresponding = true;
        let p = paper("p", 2020, vec![a]);
        for s in AttributionStrategy::ALL {
            assert_eq!(attribute_countries(&p, s), BTreeSet::from(["US".to_string()]), "{s}");
        }
    }

    #[test]
    fn unanimous_and_first() {
        let p = paper("p", 2020, vec![author("x", &["US"], 0), author("y", &["US"], 1), author("z", &["CN"], 2)]);
        assert!(attribute_countries(&p, AttributionStrategy::Unanimous).is_empty());
        assert_eq!(attribute_countries(&p, AttributionStrategy::FirstAuthor), BTreeSet::from(["US".to_string()]));
        assert_eq!(attribute_countries(&p, AttributionStrategy::LastAuthor), BTreeSet::from(["CN".to_string()]));
        assert!(attribute_countries(&p, AttributionStrategy::CorrespondingAuthor).is_empty());
    }

    #[test]
    fn unanimous_requires_exactly_one_common_country() {
        let p = paper("p", 2020, vec![author("x", &["US", "CN"], 0), author("y", &["US", "CN"], 1)]);
        assert!(attribute_countries(&p, AttributionStrategy::Unanimous).is_empty());
        let p = paper("p", 2020, vec![author("x", &["US", "CN"], 0), author("y", &["US"], 1)]);
        assert_eq!(attribute_countries(&p, AttributionStrategy::Unanimous), BTreeSet::from(["US".to_string()]));
    }

    #[test]
    fn unknown_only_when_nothing_known() {
        let p = paper("p", 2020, vec![author("x", &[], 0), author("y", &["DE"], 1)]);
        assert_eq!(attribute_countries(&p, AttributionStrategy::AnyAuthor), BTreeSet::from(["DE".to_string()]));
        assert_eq!(attribute_countries(&p, AttributionStrategy::FirstAuthor), BTreeSet::from([UNKNOWN.to_string()]));
    }

    #[test]
    fn window_boundaries() {
        let recs = (2014..=2021).map(|y| paper(&format!("p{y}"), y, vec![author("x", &["US"], 0)]));
        let (c, _) = Corpus::from_records(recs);
        let w = c.window(2020, 5);
        let years: Vec<i32> = w.iter().map(|r| r.year).collect();
        assert_eq!(years, vec![2016, 2017, 2018, 2019, 2020]);
        assert_eq!(c.window(2020, 1).iter().map(|r| r.year).collect::<Vec<_>>(), vec![2020]);
        assert!(c.window(1990, 5).is_empty());
    }

    #[test]
    fn filter_defaults() {
        let mut review = paper("r", 2020, vec![author("x", &["US"], 0)]);
        review.is_review = true;
        let mut zh = paper("z", 2020, vec![author("x", &["US"], 0)]);
        zh.language = "zh".into();
        let (c, _) = Corpus::from_records(vec![paper("a", 2020, vec![author("x", &["US"], 0)]), review, zh]);
        let en = BTreeSet::from(["en".to_string()]);
        let f = c.filter_articles(false, &en);
        assert_eq!(f.records().iter().map(|r| r.paper_id.as_str()).collect::<Vec<_>>(), vec!["a"]);
        assert_eq!(f.filter_articles(false, &en), f);
    }

    #[test]
    fn taxonomy_fallback() {
        let tax = Taxonomy::parse("medicine\n# comment\nDeep  Learning -> computer science\n").unwrap();
        assert!(tax.labels.contains("medicine") && tax.labels.contains("computer science"));
        let mut p = paper("p", 2020, vec![author("x", &["US"], 0)]);
        p.field.clear();
        p.keywords = vec!["deep learning".into()];
        tax.apply(&mut p).unwrap();
        assert_eq!(p.field, vec!["computer science"]);
        p.field = vec!["astrology".into()];
        assert!(tax.apply(&mut p).is_err());
    }

    #[test]
    fn field_accepts_string_or_list() {
        let one: PaperRecord = serde_json::from_str(
            r#"{"paper_id":"p","year":2020,"authors":[{"author_id":"a","position":0}],"field":"physics"}"#,
        )
        .unwrap();
        assert_eq!(one.field, vec!["physics"]);
        let many: PaperRecord = serde_json::from_str(
            r#"{"paper_id":"p","year":2020,"authors":[{"author_id":"a","position":0}],"field":["a","b"]}"#,
        )
        .unwrap();
        assert_eq!(many.field, vec!["a", "b"]);
        assert!(serde_json::to_string(&one).unwrap().contains(r#""field":"physics""#));
    }
}
