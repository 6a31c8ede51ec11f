use frontier::corpus::{AuthorRef, Corpus, PaperRecord};
use frontier::embedding::EmbeddingSpace;
use frontier::emergence::{self, convergence_score, frequency_growth, Area, Candidate, EmergenceScores};
use frontier::synthgen::{self, SynthSpec};
use proptest::prelude::*;

fn space(year: i32, rows: &[(&str, [f32; 2])]) -> EmbeddingSpace {
    EmbeddingSpace::from_vectors(year, 2, rows.iter().map(|(t, v)| (t.to_string(), v.to_vec())).collect()).unwrap()
}

fn candidate(central: &str, conv: f64, b: f64, prev: f64, r2: f64) -> Candidate {
    Candidate {
        area: Area { central: central.into(), members: vec![central.into()], field: "f".into(), year: 2020, short: false },
        scores: EmergenceScores { convergence: conv, growth_b: b, prevalence: prev, fit_r2: r2, final_rank_score: None },
    }
}

proptest! {
    #[test]
    fn noise_free_growth_is_recovered(b in -1.5f64..2.5, a in 1.0f64..50.0, c in 0.0f64..20.0) {
        let y: Vec<f64> = (0..5).map(|t| a * (b * t as f64).exp() + c).collect();
        let fit = frequency_growth(&y);
        prop_assert!((fit.b - b).abs() < 1e-3, "b {} fitted {}", b, fit.b);
        prop_assert!(fit.r2 > 0.9999);
        prop_assert!(fit.converged);
    }
}

#[test]
fn flat_and_degenerate_series() {
    let flat = frequency_growth(&[3.0; 5]);
    assert_eq!((flat.b, flat.r2), (0.0, 0.0));
    assert_eq!(frequency_growth(&[0.0; 5]).r2, 0.0);
    // growth faster than the search interval allows sits on its edge
    let steep: Vec<f64> = (0..5).map(|t| (4.0 * t as f64).exp()).collect();
    assert!(!frequency_growth(&steep).converged);
}

#[test]
fn convergence_sign_follows_distance_change() {
    let apart = space(2018, &[("K:a", [1.0, 0.0]), ("K:b", [0.0, 1.0])]);
    let closer = space(2019, &[("K:a", [1.0, 0.0]), ("K:b", [1.0, 0.2])]);
    let members = vec!["a".to_string(), "b".to_string()];
    let conv = convergence_score(&[&apart, &closer], &members).unwrap();
    assert!(conv.score > 0.0);
    assert_eq!(conv.pairs_used, 1);
    assert!(convergence_score(&[&closer, &apart], &members).unwrap().score < 0.0);
    let lonely = space(2020, &[("K:a", [1.0, 0.0])]);
    assert!(convergence_score(&[&apart, &lonely], &members).is_none());
    assert!(convergence_score(&[&apart], &members).is_none());
}

#[test]
fn ranking_averages_metric_ranks_and_selection_rounds_up() {
    let mut cands: Vec<Candidate> = (0..150).map(|i| candidate(&format!("k{i:03}"), 0.0, 0.0, 0.0, 0.0)).collect();
    cands.push(candidate("best", 1.0, 1.0, 1.0, 1.0));
    let ranked = emergence::rank_areas(cands);
    assert_eq!(ranked[0].area.central, "best");
    assert_eq!(ranked[0].scores.final_rank_score, Some(1.0));
    // the 150 tied candidates share the mean of positions 2..=151, then sort by keyword
    assert_eq!(ranked[1].scores.final_rank_score, Some(76.5));
    assert_eq!(ranked[1].area.central, "k000");
    let set = emergence::select_emerging(2020, "f", &ranked, 0.01);
    assert_eq!((set.areas.len(), set.candidates), (2, 151));
}

#[test]
fn close_keywords_cooccur_more() {
    let s = space(2019, &[("K:a", [1.0, 0.0]), ("K:b", [1.0, 0.05]), ("K:c", [0.0, 1.0]), ("K:d", [-1.0, 0.1])]);
    let paper = |i: usize, kws: &[&str]| PaperRecord {
        paper_id: format!("p{i}"),
        year: 2020,
        keywords: kws.iter().map(|k| k.to_string()).collect(),
        ref_venues: vec![],
        references: vec![],
        authors: vec![AuthorRef { author_id: "x".into(), countries: Default::default(), position: 1, is_corresponding: false }],
        field: vec!["f".into()],
        is_review: false,
        language: "en".into(),
        citation_count: None,
    };
    let mut records: Vec<PaperRecord> = (0..10).map(|i| paper(i, &["a", "b"])).collect();
    records.push(paper(10, &["a", "c"]));
    records.push(paper(11, &["c", "d"]));
    let (corpus, _) = Corpus::from_records(records);
    let r = emergence::cooccurrence_lift(&s, &corpus.view(), 0.1, 100, 1).unwrap();
    assert_eq!(r.close_pairs, 1);
    assert_eq!(r.close_cooccurring, 1);
    assert!(r.lift.unwrap() > 1.0);
}

#[test]
fn synthetic_corpora_are_seeded_and_self_consistent() {
    let spec = SynthSpec::preset("mini", 7).unwrap();
    let (a, truth) = synthgen::generate(&spec).unwrap();
    let (b, _) = synthgen::generate(&spec).unwrap();
    assert_eq!(a.records(), b.records());
    let (other, _) = synthgen::generate(&SynthSpec::preset("mini", 8).unwrap()).unwrap();
    assert_ne!(a.records(), other.records());
    let ids: std::collections::BTreeSet<&str> = a.records().iter().map(|p| p.paper_id.as_str()).collect();
    for row in truth.rows.iter().filter(|r| r.measure.ends_with("_paper")) {
        assert!(ids.contains(row.id.as_str()), "{} not in the corpus", row.id);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spec.json");
    std::fs::write(&path, serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(synthgen::load_spec(&path).unwrap(), spec);
    let mut bad = spec.clone();
    bad.merging[0].b = bad.merging[0].a;
    assert!(bad.validate().is_err());
    assert!(SynthSpec::preset("no-such-preset", 1).is_err());
}
