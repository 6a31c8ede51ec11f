//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs without the libtest harness so every line is printed even
//! when an earlier criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use res::*;
use frontier::corpus::AttributionStrategy;
use frontier::disruption::{cd_index, CitationGraph};
use frontier::emergence::{self, frequency_growth};
use frontier::pipeline::{Pipeline, PipelineConfig, Stage};
use frontier::prescience::{self, FactorModel, FitConfig, PrescienceScore, Variant};
use frontier::report::{self, Measure};
use frontier::synthgen::{self, GroundTruth, SynthSpec};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::{disruption_oracle, oracle_novelty, oracle_propensity, random_graph, random_model, relative_error};

/// Minimal error plumbing so every criterion can use `?`.
mod res {
    pub type Res<T> = std::result::Result<T, String>;

    pub trait Ctx<T> {
        fn ctx(self, what: &str) -> Res<T>;
    }

    impl<T, E: std::fmt::Display> Ctx<T> for std::result::Result<T, E> {
        fn ctx(self, what: &str) -> Res<T> {
            self.map_err(|e| format!("{what}: {e}"))
        }
    }

    impl<T> Ctx<T> for Option<T> {
        fn ctx(self, what: &str) -> Res<T> {
            self.ok_or_else(|| what.to_string())
        }
    }
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Res<Verdict> {
    Ok(Verdict { pass, detail })
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temporary directory")
}

fn pipeline(workdir: &Path, keys: &[(&str, &str)]) -> Res<Pipeline> {
    let mut cfg = PipelineConfig::default();
    cfg.workdir = workdir.to_path_buf();
    for (k, v) in keys {
        cfg.set(k, v).ctx(k)?;
    }
    cfg.validate().ctx("config")?;
    Pipeline::new(cfg).ctx("pipeline")
}

fn truth(p: &Pipeline) -> Res<GroundTruth> {
    GroundTruth::read(&p.artifact(Stage::Synth, "ground_truth.csv")).ctx("ground truth")
}

fn scores(p: &Pipeline, v: Variant) -> Res<Vec<PrescienceScore>> {
    prescience::read_scores(&p.artifact(Stage::Prescience, &format!("scores_{v}.csv"))).ctx("prescience scores")
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

// ---- 1: disruption ----

fn disruption_oracle_equivalence() -> Res<Verdict> {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut focal, mut mismatches) = (0usize, 0usize);
    for _ in 0..1000 {
        let g = random_graph(&mut rng, 50);
        let window = rng.random_range(1..=8);
        let cg = CitationGraph::from_edges(g.nodes.iter().cloned(), g.edges.iter().cloned());
        for (id, _) in &g.nodes {
            focal += 1;
            let got = cd_index(&cg, id, window).ok().map(|s| (s.n_f, s.n_b, s.n_r));
            mismatches += (got != disruption_oracle(&g, id, window)) as usize;
        }
    }
    // limit cases: citers that ignore the references, and citers that cite both
    let nodes = [("f", 2000), ("r1", 1998), ("r2", 1999), ("c1", 2001), ("c2", 2003)].map(|(a, y)| (a.to_string(), y));
    let edge = |a: &str, b: &str| (a.to_string(), b.to_string());
    let eclipse = CitationGraph::from_edges(nodes.clone(), [edge("f", "r1"), edge("f", "r2"), edge("c1", "f"), edge("c2", "f")]);
    let consolidate = CitationGraph::from_edges(
        nodes,
        [edge("f", "r1"), edge("f", "r2"), edge("c1", "f"), edge("c1", "r1"), edge("c2", "f"), edge("c2", "r2")],
    );
    let d_plus = cd_index(&eclipse, "f", 5).map_err(|e| format!("eclipse case: {e:?}"))?.d_value;
    let d_minus = cd_index(&consolidate, "f", 5).map_err(|e| format!("consolidation case: {e:?}"))?.d_value;
    let elapsed = t.elapsed();
    verdict(
        mismatches == 0 && d_plus == 1.0 && d_minus == -1.0 && elapsed < Duration::from_secs(10),
        format!("{focal} focal papers, {mismatches} mismatches, D limits {d_plus}/{d_minus}, {}", secs(elapsed)),
    )
}

// ---- 2: propensity and novelty ----

fn evaluation_oracles() -> Res<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_nov, mut worst_prop) = (0f64, 0f64);
    let mut chain_violations = 0;
    let mut singleton_nonzero = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(2..=12);
        let dims = rng.random_range(2..=30);
        let rm = random_model(&mut rng, n, dims);
        let m = FactorModel::new(2020, Variant::Content, dims, rm.nodes.clone(), rm.theta.concat(), rm.salience.clone())
            .ctx("model")?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let size = rng.random_range(1..=n.min(6));
        let h = &order[..size];
        let names: Vec<&str> = h.iter().map(|&i| rm.nodes[i].as_str()).collect();
        worst_nov = worst_nov.max((m.novelty(&names).ctx("novelty")? - oracle_novelty(&rm, h)).abs());
        worst_prop = worst_prop.max(relative_error(m.propensity(&names).ctx("propensity")?, oracle_propensity(&rm, h)));
        singleton_nonzero += (m.novelty(&names[..1]).ctx("novelty")? != 0.0) as usize;
        // grow the combination one node at a time
        let mut prev = 0.0;
        for k in 1..=n {
            let chain: Vec<&str> = order[..k].iter().map(|&i| rm.nodes[i].as_str()).collect();
            let nov = m.novelty(&chain).ctx("novelty")?;
            chain_violations += (nov < prev) as usize;
            prev = nov;
        }
    }
    let mut uniform_worst = 0f64;
    for dims in 1..=64 {
        let nodes: Vec<String> = (0..3).map(|i| format!("u{i}")).collect();
        let m = FactorModel::new(2020, Variant::Content, dims, nodes, vec![1.0 / dims as f64; 3 * dims], vec![1.0; 3])
            .ctx("uniform model")?;
        uniform_worst = uniform_worst.max((m.novelty(&["u0", "u2"]).ctx("novelty")? - (dims as f64).ln()).abs());
    }
    verdict(
        worst_nov <= 1e-12 && worst_prop <= 1e-12 && singleton_nonzero == 0 && uniform_worst <= 1e-12 && chain_violations == 0,
        format!(
            "max |novelty err| {worst_nov:.1e}, max rel propensity err {worst_prop:.1e}, |h|=1 nonzero {singleton_nonzero}, \
             uniform ln D err {uniform_worst:.1e}, chain violations {chain_violations}"
        ),
    )
}

// ---- 3: factor-model discrimination ----

fn factor_discrimination() -> Res<Verdict> {
    let t = Instant::now();
    let (corpus, _) = synthgen::generate(&SynthSpec::preset("standard", 1).ctx("preset")?).ctx("generate")?;
    let corpus = corpus.filter_articles(false, &["en".to_string()].into());
    let mut parts = Vec::new();
    let mut worst = f64::INFINITY;
    for variant in [Variant::Content, Variant::Context] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut edges = prescience::combinations(&corpus.window(2018, 5), variant);
        edges.shuffle(&mut rng);
        let held = edges.split_off(edges.len() * 9 / 10);
        let (m, _) = prescience::fit(&edges, 2018, variant, &FitConfig::default()).ctx("fit")?;
        let nodes = m.nodes();
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for h in &held {
            let mut h = h.clone();
            h.sort();
            h.dedup();
            if h.len() < 2 || !h.iter().all(|x| m.contains(x)) {
                continue;
            }
            pos.push(m.propensity(&h).ctx("propensity")?);
            let random: Vec<&str> = index::sample(&mut rng, nodes.len(), h.len()).into_iter().map(|i| nodes[i].as_str()).collect();
            neg.push(m.propensity(&random).ctx("propensity")?);
        }
        let auc = synthgen::auc(&pos, &neg).ctx("no held-out combinations")?;
        worst = worst.min(auc);
        parts.push(format!("{variant} AUC {auc:.3} ({} held out)", pos.len()));
    }
    let elapsed = t.elapsed();
    verdict(worst >= 0.90 && elapsed < Duration::from_secs(300), format!("{}, {}", parts.join(", "), secs(elapsed)))
}

// ---- 4: exponential fit ----

fn exponential_fit_recovery() -> Res<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(1.0, 0.05).ctx("noise")?;
    let mut errors = Vec::new();
    let mut flagged = 0;
    for _ in 0..500 {
        let b: f64 = rng.random_range(-0.5..=1.0);
        let a: f64 = rng.random_range(5.0..50.0);
        let c: f64 = rng.random_range(0.0..20.0);
        let clean: Vec<f64> = (0..5).map(|t| a * (b * t as f64).exp() + c).collect();
        // straight line through the same endpoints
        let line: Vec<f64> = (0..5).map(|t| clean[0] + (clean[4] - clean[0]) * t as f64 / 4.0).collect();
        let exp_series: Vec<f64> = clean.iter().map(|y| y * noise.sample(&mut rng)).collect();
        let lin_series: Vec<f64> = line.iter().map(|y| y * noise.sample(&mut rng)).collect();
        let fit = frequency_growth(&exp_series);
        errors.push((fit.b - b).abs());
        flagged += (frequency_growth(&lin_series).r2 < fit.r2) as usize;
    }
    errors.sort_by(f64::total_cmp);
    let median = 0.5 * (errors[249] + errors[250]);
    let share = flagged as f64 / 500.0;
    verdict(median <= 0.05 && share >= 0.90, format!("median |b_hat - b| {median:.3}, linear R2 below exponential in {:.1}%", 100.0 * share))
}

// ---- 5: planted emergence ----

fn planted_emergence() -> Res<Verdict> {
    let t = Instant::now();
    let dir = tempdir();
    let p = pipeline(dir.path(), &[("synth_preset", "emergence"), ("seed", "1")])?;
    p.run_chain(&[Stage::Synth, Stage::Ingest, Stage::Hypergraph, Stage::Walks, Stage::Embed, Stage::Emergence]).ctx("run")?;
    let truth = truth(&p)?;
    let sets = emergence::read_emerging_sets(&p.artifact(Stage::Emergence, "emerging_sets.csv")).ctx("emerging sets")?;
    let mut planted = 0;
    let mut recovered = 0;
    let mut target_years = BTreeSet::new();
    for row in truth.rows_of("emergent_area") {
        let field = GroundTruth::param(row, "field").ctx("field")?;
        let year: i32 = GroundTruth::param(row, "year").ctx("year")?.parse().ctx("year")?;
        let members: BTreeSet<&str> = GroundTruth::param(row, "members").ctx("members")?.split('|').collect();
        target_years.insert(year);
        planted += 1;
        let hit = sets
            .iter()
            .filter(|s| s.year == year && s.field == field)
            .flat_map(|s| &s.areas)
            .any(|c| members.contains(c.area.central.as_str()));
        recovered += hit as usize;
    }
    let tags: BTreeSet<String> = emergence::read_paper_tags(&p.artifact(Stage::Emergence, "paper_tags.csv"))
        .ctx("paper tags")?
        .into_iter()
        .filter(|r| target_years.contains(&r.year))
        .map(|r| r.paper_id)
        .collect();
    let papers = truth.ids("emergent_paper");
    let hits = tags.intersection(&papers).count();
    let area_recall = recovered as f64 / planted.max(1) as f64;
    let recall = hits as f64 / papers.len().max(1) as f64;
    let precision = hits as f64 / tags.len().max(1) as f64;
    let elapsed = t.elapsed();
    verdict(
        planted > 0 && area_recall >= 0.8 && recall >= 0.8 && precision >= 0.5 && elapsed < Duration::from_secs(600),
        format!(
            "areas {recovered}/{planted} in the top 1%, papers recall {recall:.3} precision {precision:.3} at 5%, {}",
            secs(elapsed)
        ),
    )
}

// ---- 6: planted prescience ----

fn prescience_fixture(dir: &Path, preset: &str, extra: &[(&str, &str)]) -> Res<Pipeline> {
    let mut keys = vec![("synth_preset", preset), ("seed", "1")];
    keys.extend_from_slice(extra);
    let p = pipeline(dir, &keys)?;
    p.run_chain(&[Stage::Synth, Stage::Ingest, Stage::Prescience]).ctx(preset)?;
    Ok(p)
}

fn tagged(rows: &[PrescienceScore], v: Variant, pct: f64, top: bool) -> BTreeSet<String> {
    let cells: BTreeSet<(String, i32)> = rows.iter().map(|s| (s.field.clone(), s.year)).collect();
    cells
        .iter()
        .flat_map(|(f, y)| if top { prescience::tag_prescient(rows, f, *y, pct, v) } else { prescience::tag_declining(rows, f, *y, pct, v) })
        .collect()
}

fn planted_prescience() -> Res<Verdict> {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();

    let dir = tempdir();
    let p = prescience_fixture(dir.path(), "merging", &[])?;
    let planted = truth(&p)?.ids("prescient_paper");
    for v in [Variant::Content, Variant::Context] {
        let hits = tagged(&scores(&p, v)?, v, 0.05, true).intersection(&planted).count();
        let recall = hits as f64 / planted.len().max(1) as f64;
        ok &= recall >= 0.8;
        parts.push(format!("merging {v} recall {recall:.2}"));
    }

    // stationary: one corpus, two training seeds
    let dir = tempdir();
    let gen = pipeline(dir.path(), &[("synth_preset", "stationary"), ("seed", "1")])?;
    gen.run(Stage::Synth).ctx("stationary synth")?;
    let corpus = gen.artifact(Stage::Synth, "synthetic.jsonl");
    let corpus = corpus.to_str().ctx("path")?;
    let runs: Vec<Pipeline> = ["1", "2"]
        .iter()
        .map(|seed| {
            let p = pipeline(&dir.path().join(format!("seed{seed}")), &[("corpus", corpus), ("seed", seed)])?;
            p.run_chain(&[Stage::Ingest, Stage::Prescience]).ctx("stationary")?;
            Ok(p)
        })
        .collect::<Res<_>>()?;
    for v in [Variant::Content, Variant::Context] {
        let a = scores(&runs[0], v)?;
        let b: HashMap<(String, String), f64> =
            scores(&runs[1], v)?.into_iter().map(|s| ((s.paper_id, s.field), s.prescience)).collect();
        let diffs: Vec<f64> = a.iter().filter_map(|s| b.get(&(s.paper_id.clone(), s.field.clone())).map(|q| (s.prescience - q).abs())).collect();
        let band = diffs.iter().sum::<f64>() / diffs.len().max(1) as f64;
        let mean = |rows: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = rows.collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let m1 = mean(&mut a.iter().map(|s| s.prescience));
        let m2 = mean(&mut b.values().copied());
        ok &= !diffs.is_empty() && m1.abs() <= band && m2.abs() <= band;
        parts.push(format!("stationary {v} means {m1:.3}/{m2:.3} band {band:.3}"));
    }

    let dir = tempdir();
    let p = prescience_fixture(dir.path(), "diverging", &[])?;
    let planted = truth(&p)?.ids("declining_paper");
    for v in [Variant::Content, Variant::Context] {
        let hits = tagged(&scores(&p, v)?, v, 0.05, false).intersection(&planted).count();
        let recall = hits as f64 / planted.len().max(1) as f64;
        ok &= recall >= 0.8;
        parts.push(format!("diverging {v} recall {recall:.2}"));
    }
    parts.push(secs(t.elapsed()));
    verdict(ok, parts.join(", "))
}

// ---- 7: robustness battery ----

fn read_rows(path: &Path) -> Res<Vec<HashMap<String, String>>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).ctx("open csv")?;
    r.deserialize().collect::<Result<Vec<HashMap<String, String>>, _>>().ctx("read csv")
}

fn robustness_battery() -> Res<Verdict> {
    let t = Instant::now();
    let dir = tempdir();
    let p = pipeline(dir.path(), &[("synth_preset", "national"), ("seed", "1")])?;
    p.run(Stage::All).ctx("all")?;

    let mut nested = true;
    let mut cells = 0;
    for m in [Measure::Emergence, Measure::ContentPrescience, Measure::ContextPrescience, Measure::Disruption, Measure::TopCited] {
        let (table, _) = p.score_table(m).ctx("score table")?.ctx("measure not run")?;
        let levels: Vec<_> = [0.01, 0.05, 0.10].iter().map(|&q| table.tags_by_cell(q)).collect();
        for (cell, small) in &levels[0] {
            cells += 1;
            let mid = levels[1].get(cell).ctx("cell missing")?;
            let large = levels[2].get(cell).ctx("cell missing")?;
            nested &= small.is_subset(mid) && mid.is_subset(large);
        }
    }

    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for a in AttributionStrategy::ALL {
        let mut cfg = p.config().clone();
        cfg.attribution = a;
        let q = Pipeline::new(cfg).ctx("pipeline")?;
        q.run(Stage::Report).ctx(a.name())?;
        let mut by_cell: BTreeMap<(String, String), f64> = BTreeMap::new();
        for row in read_rows(&q.artifact(Stage::Report, "series.csv"))? {
            if row["measure"] == Measure::Publications.name() || row["measure"] == Measure::Citations.name() {
                continue;
            }
            let share: f64 = row["share"].parse().ctx("share")?;
            *by_cell.entry((row["measure"].clone(), row["year"].clone())).or_default() += share;
        }
        sums.insert(a.name(), by_cell.values().cloned().fold(0.0, f64::max));
    }
    let any_over = sums["any"] > 1.0;
    let unanimous_ok = sums["unanimous"] <= 1.0 + 1e-9;

    let mut cfg = p.config().clone();
    cfg.exclude_country = Some("KR".into());
    let q = Pipeline::new(cfg).ctx("pipeline")?;
    q.run(Stage::Exclude).ctx("exclude")?;
    let mut rates: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in read_rows(&q.artifact(Stage::Exclude, "paired_series_KR.csv"))? {
        if row["country"] == "KR" && row["measure"] == Measure::ContentPrescience.name() {
            rates.entry(row["run"].clone()).or_default().push(row["rate"].parse().ctx("rate")?);
        }
    }
    let mean = |k: &str| rates.get(k).map(|v| v.iter().sum::<f64>() / v.len() as f64);
    let (full, excluded) = (mean("full").ctx("no full KR rows")?, mean("excluded").ctx("no excluded KR rows")?);
    verdict(
        nested && any_over && unanimous_ok && excluded < full,
        format!(
            "nested in {cells} cells: {nested}, max share sums {}, KR content rate {full:.4} -> {excluded:.4}, {}",
            sums.iter().map(|(k, v)| format!("{k} {v:.2}")).collect::<Vec<_>>().join(" "),
            secs(t.elapsed())
        ),
    )
}

// ---- 8: citation curves ----

fn citation_curves() -> Res<Verdict> {
    let t = Instant::now();
    let dir = tempdir();
    let p = prescience_fixture(dir.path(), "citation", &[("years", "2018..2018")])?;
    let citations: HashMap<String, Option<u64>> =
        p.corpus().ctx("corpus")?.records().iter().map(|r| (r.paper_id.clone(), r.citation_count)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for v in [Variant::Content, Variant::Context] {
        let rows: Vec<(String, f64, f64)> = scores(&p, v)?.into_iter().map(|s| (s.paper_id, s.s_pub, s.prescience)).collect();
        let curves = report::prescience_citation_curve(&rows, &citations, 20, v.name());
        let top: Vec<String> = curves
            .surprise
            .points
            .iter()
            .zip(&curves.prescience.points)
            .filter(|(s, _)| s.0 >= 90.0)
            .map(|(s, q)| {
                ok &= q.1 > s.1;
                format!("{:.1}: {:.3} vs {:.3}", s.0, q.1, s.1)
            })
            .collect();
        ok &= !top.is_empty();
        parts.push(format!("{v} [{}]", top.join("; ")));
    }
    parts.push(secs(t.elapsed()));
    verdict(ok, format!("prescience vs surprise {}", parts.join(", ")))
}

// ---- 9: determinism and scale ----

fn files(root: &Path) -> Res<BTreeMap<PathBuf, Vec<u8>>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).ctx("read dir")? {
            let path = e.ctx("dir entry")?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).ctx("prefix")?.to_path_buf(), fs::read(&path).ctx("read")?);
            }
        }
    }
    Ok(out)
}

fn determinism_and_scale() -> Res<Verdict> {
    let conf = common::fixtures().join("mini/pipeline.conf");
    let dir = tempdir();
    let mut runs = Vec::new();
    let mut slowest = Duration::ZERO;
    for name in ["a", "b"] {
        let mut cfg = PipelineConfig::load(&conf).ctx("mini config")?;
        cfg.workdir = dir.path().join(name);
        let t = Instant::now();
        Pipeline::new(cfg).ctx("pipeline")?.run(Stage::All).ctx("mini all")?;
        slowest = slowest.max(t.elapsed());
        runs.push(files(&dir.path().join(name))?);
    }
    let identical = runs[0] == runs[1];

    let spec = SynthSpec {
        papers_per_field_year: 4546,
        clusters_per_field: 20,
        authors_per_cluster: 400,
        ..SynthSpec::preset("standard", 1).ctx("preset")?
    };
    let big = tempdir();
    let spec_path = big.path().join("spec.json");
    fs::write(&spec_path, serde_json::to_vec(&spec).ctx("spec json")?).ctx("write spec")?;
    let p = pipeline(&big.path().join("work"), &[("synth_spec", spec_path.to_str().ctx("path")?)])?;
    p.run_chain(&[Stage::Synth, Stage::Ingest]).ctx("big corpus")?;
    let n = p.corpus().ctx("corpus")?.len();
    let t = Instant::now();
    p.run_chain(&[Stage::Hypergraph, Stage::Walks, Stage::Embed]).ctx("big embed")?;
    let scale = t.elapsed();
    let threads = rayon::current_num_threads();
    verdict(
        identical && slowest < Duration::from_secs(600) && scale < Duration::from_secs(1800),
        format!(
            "mini all x2: {} files, identical {identical}, slowest {}; {n}-paper hypergraph+walks+embed {} on {threads} thread(s)",
            runs[0].len(),
            secs(slowest),
            secs(scale)
        ),
    )
}

// ---- 10: OpenAlex smoke ----

fn openalex_smoke() -> Res<Verdict> {
    let t = Instant::now();
    let dir = tempdir();
    let spec = SynthSpec {
        papers_per_field_year: 2273,
        clusters_per_field: 20,
        authors_per_cluster: 300,
        ..SynthSpec::preset("standard", 1).ctx("preset")?
    };
    let (corpus, _) = synthgen::generate(&spec).ctx("generate")?;
    let sample = dir.path().join("openalex.jsonl");
    synthgen::export_openalex(&corpus, &sample).ctx("export")?;
    let p = pipeline(&dir.path().join("work"), &[("corpus", sample.to_str().ctx("path")?), ("input_format", "openalex")])?;
    p.run(Stage::All).ctx("all")?;
    let rows = report::read_series_csv(&p.artifact(Stage::Report, "series.csv")).ctx("series")?;
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    let bad: Vec<_> = rows
        .iter()
        .filter(|r| {
            if r.measure == Measure::Citations {
                // mean citations per paper, no interval
                return !(unit(r.share) && r.rate >= 0.0 && r.ci_low.is_nan() && r.ci_high.is_nan());
            }
            !(unit(r.share)
                && unit(r.rate)
                && r.ci_low <= r.rate
                && r.rate <= r.ci_high
                && unit(r.ci_low)
                && unit(r.ci_high)
                && r.share_ci_low <= r.share
                && r.share <= r.share_ci_high)
        })
        .collect();
    let measures: BTreeSet<&str> = rows.iter().map(|r| r.measure.name()).collect();
    verdict(
        corpus.len() >= 50_000 && !rows.is_empty() && bad.is_empty(),
        format!(
            "{} records, {} series rows over {} measures, {} malformed{}, {}",
            corpus.len(),
            rows.len(),
            measures.len(),
            bad.len(),
            bad.first().map(|r| format!(" (first: {r:?})")).unwrap_or_default(),
            secs(t.elapsed())
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Res<Verdict>); 10] = [
        (1, "disruption oracle", disruption_oracle_equivalence),
        (2, "propensity/novelty oracles", evaluation_oracles),
        (3, "factor-model AUC", factor_discrimination),
        (4, "exponential fit", exponential_fit_recovery),
        (5, "planted emergence", planted_emergence),
        (6, "planted prescience", planted_prescience),
        (7, "robustness battery", robustness_battery),
        (8, "citation curves", citation_curves),
        (9, "determinism and scale", determinism_and_scale),
        (10, "OpenAlex smoke", openalex_smoke),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (n, name, run) in criteria {
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!("criterion {n:>2} ({name}): {} {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
