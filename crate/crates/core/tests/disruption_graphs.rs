mod common;

use frontier::corpus::{AuthorRef, Corpus, PaperRecord};
use frontier::disruption::{self, cd_index, CitationGraph, Undefined};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{disruption_oracle, random_graph};

fn build(g: &common::RandomGraph) -> CitationGraph {
    CitationGraph::from_edges(g.nodes.iter().cloned(), g.edges.iter().cloned())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_set_algebra(seed in any::<u64>(), window in 1i32..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 30);
        let cg = build(&g);
        for (id, _) in &g.nodes {
            let got = cd_index(&cg, id, window).ok().map(|s| (s.n_f, s.n_b, s.n_r));
            prop_assert_eq!(got, disruption_oracle(&g, id, window));
        }
    }

    #[test]
    fn counts_grow_with_window(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, 30);
        let cg = build(&g);
        for (id, _) in &g.nodes {
            let mut prev = (0, 0, 0);
            for w in 1..10 {
                if let Ok(s) = cd_index(&cg, id, w) {
                    prop_assert!(s.n_f >= prev.0 && s.n_b >= prev.1 && s.n_r >= prev.2);
                    prop_assert!((-1.0..=1.0).contains(&s.d_value));
                    if s.d_value == 1.0 {
                        prop_assert!(s.n_b == 0 && s.n_r == 0 && s.n_f > 0);
                    }
                    if s.d_value == -1.0 {
                        prop_assert!(s.n_f == 0 && s.n_r == 0 && s.n_b > 0);
                    }
                    prev = (s.n_f, s.n_b, s.n_r);
                }
            }
        }
    }
}

fn paper(id: &str, year: i32, refs: &[&str]) -> PaperRecord {
    PaperRecord {
        paper_id: id.into(),
        year,
        keywords: vec![],
        ref_venues: vec![],
        references: refs.iter().map(|r| r.to_string()).collect(),
        authors: vec![AuthorRef { author_id: "a".into(), countries: Default::default(), position: 1, is_corresponding: false }],
        field: vec!["f".into()],
        is_review: false,
        language: "en".into(),
        citation_count: None,
    }
}

#[test]
fn partition_covers_every_subsequent_paper() {
    // r1, r2 <- focal(2010) <- c1 (only focal), c2 (focal + r1), c3 (r2 only), c4 (both refs, no focal)
    let (c, _) = Corpus::from_records(vec![
        paper("r1", 2005, &[]),
        paper("r2", 2006, &[]),
        paper("focal", 2010, &["r1", "r2"]),
        paper("c1", 2011, &["focal"]),
        paper("c2", 2012, &["focal", "r1"]),
        paper("c3", 2013, &["r2"]),
        paper("c4", 2015, &["r1", "r2"]),
        paper("late", 2016, &["focal"]),
    ]);
    let g = CitationGraph::from_corpus(&c);
    let s = cd_index(&g, "focal", 5).unwrap();
    assert_eq!((s.n_f, s.n_b, s.n_r), (1, 1, 2));
    assert_eq!(s.d_value, 0.0);
    assert_eq!(cd_index(&g, "r1", 5), Err(Undefined::NoReferences));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scores.csv");
    let (scores, stats) = disruption::score_all(&g, 5);
    assert_eq!(stats.scored, scores.len());
    disruption::write_scores(&path, &scores, &c, Some("config=x stage=disruption")).unwrap();
    let back = disruption::read_scores(&path).unwrap();
    assert_eq!(back.into_iter().map(|(_, s)| s).collect::<Vec<_>>(), scores);
}
