use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sustext_core::classify::{fit_tfidf, threshold_predict, PredictionSet, ScoreKind, ScoreMatrix};
use sustext_core::corpus::{filter_passages, split_dataset, Passage};
use sustext_core::hpo::{
    encode_config, log_ei, suggest, ConfigSpace, ParamKind, ParamSpec, Trial,
};
use sustext_core::metrics::evaluate;
use sustext_core::schema::{KeywordLexicon, LabelMap, LabelSet};

fn passage(id: String, text: String, gold: Option<LabelSet>) -> Passage {
    Passage {
        id,
        document_id: "doc".into(),
        sentence_indices: [0, 2],
        text,
        matched_brands: BTreeSet::new(),
        matched_issue_keywords: BTreeMap::new(),
        gold_labels: gold,
    }
}

// None of these words is part of a brand or keyword.
const FILLER: &[&str] = &[
    "the", "report", "said", "factory", "season", "garments", "new", "store", "staff", "about",
    "was", "many", "visited", "shops", "retail", "price", "blue", "jackets",
];

fn lexicon_items() -> Vec<String> {
    let lex = KeywordLexicon::builtin();
    lex.brands
        .iter()
        .cloned()
        .chain(lex.issue_keywords.values().flatten().cloned())
        .collect()
}

fn label_map(rows: &[Vec<bool>], prefix: &str) -> LabelMap {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let set = row.iter().enumerate().filter(|(_, &b)| b).map(|(c, _)| c).collect();
            (format!("{prefix}{i}"), set)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_partition(n in 10usize..400, seed in any::<u64>()) {
        let ps: Vec<Passage> = (0..n)
            .map(|i| passage(format!("p{i}"), String::new(), Some(LabelSet::new())))
            .collect();
        let s = split_dataset(&ps, seed).unwrap();
        let pool = n * 7 / 10;
        prop_assert_eq!(s.train_ids.len(), pool * 8 / 10);
        prop_assert_eq!(s.val_ids.len(), pool - pool * 8 / 10);
        prop_assert_eq!(s.test_ids.len(), n - pool);
        let all: BTreeSet<&String> = s.train_ids.iter().chain(&s.val_ids).chain(&s.test_ids).collect();
        prop_assert_eq!(all.len(), n);
        // Input order does not matter.
        let mut rev = ps.clone();
        rev.reverse();
        prop_assert_eq!(split_dataset(&rev, seed).unwrap(), s);
    }

    #[test]
    fn filter_keeps_exactly_passages_with_lexicon_hits(
        texts in prop::collection::vec(
            prop::collection::vec((any::<bool>(), 0usize..1000), 1..12), 1..20)
    ) {
        let items = lexicon_items();
        let mut expected = BTreeSet::new();
        let ps: Vec<Passage> = texts
            .iter()
            .enumerate()
            .map(|(i, words)| {
                let mut planted = false;
                let text = words
                    .iter()
                    .map(|&(lexical, k)| {
                        // Roughly one word in eight comes from the lexicon.
                        if lexical && k % 4 == 0 {
                            planted = true;
                            items[k % items.len()].clone()
                        } else {
                            FILLER[k % FILLER.len()].to_string()
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(if i % 2 == 0 { " " } else { ", " });
                if planted {
                    expected.insert(format!("p{i}"));
                }
                passage(format!("p{i}"), text, None)
            })
            .collect();
        let kept = filter_passages(ps, &KeywordLexicon::builtin());
        let ids: BTreeSet<String> = kept.iter().map(|p| p.id.clone()).collect();
        prop_assert_eq!(ids, expected);
        for p in &kept {
            prop_assert!(!p.matched_brands.is_empty() || !p.matched_issue_keywords.is_empty());
        }
    }

    #[test]
    fn tfidf_vectors_are_unit_or_zero(
        docs in prop::collection::vec("[a-z ]{0,60}", 1..8),
        probe in "[a-zA-Z ,.]{0,80}",
        n in 1usize..=4,
    ) {
        let Ok(model) = fit_tfidf(&docs, n) else { return Ok(()) };
        for text in docs.iter().chain(std::iter::once(&probe)) {
            let v = model.transform(text);
            prop_assert!(v.is_zero() || (v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_threshold_predicts_subsets(
        rows in prop::collection::vec(prop::collection::vec(-8.0f64..8.0, 19), 1..10),
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m = ScoreMatrix {
            kind: ScoreKind::Logit,
            passage_ids: (0..rows.len()).map(|i| format!("p{i}")).collect(),
            rows,
        };
        let low = threshold_predict(&m, lo).unwrap();
        let high = threshold_predict(&m, hi).unwrap();
        for (id, set) in &high.labels {
            prop_assert!(set.is_subset(&low.labels[id]));
        }
    }

    #[test]
    fn metrics_are_bounded_and_invariant_under_reordering(
        gold in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 1..12),
        pred in prop::collection::vec(prop::collection::vec(any::<bool>(), 5), 12),
        shift in 0usize..5,
    ) {
        let pred = &pred[..gold.len()];
        let g = label_map(&gold, "p");
        prop_assume!(g.values().any(|s| !s.is_empty()));
        let p = PredictionSet::new(label_map(pred, "p"));
        let r = evaluate(&p, &g, 5).unwrap();
        for s in [r.micro, r.macro_, r.weighted] {
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        // Renaming passages changes nothing.
        let g2 = label_map(&gold, "q");
        let p2 = PredictionSet::new(label_map(pred, "q"));
        prop_assert_eq!(&evaluate(&p2, &g2, 5).unwrap(), &r);
        // Relabeling classes by a rotation permutes per-class scores only.
        let rot = |rows: &[Vec<bool>]| -> Vec<Vec<bool>> {
            rows.iter().map(|r| (0..5).map(|c| r[(c + shift) % 5]).collect()).collect()
        };
        let r3 = evaluate(&PredictionSet::new(label_map(&rot(pred), "p")), &label_map(&rot(&gold), "p"), 5).unwrap();
        prop_assert_eq!(r3.micro, r.micro);
        prop_assert!((r3.macro_.f1 - r.macro_.f1).abs() < 1e-12);
        prop_assert!((r3.weighted.f1 - r.weighted.f1).abs() < 1e-12);
    }

    #[test]
    fn log_ei_monotone(incumbent in -5.0f64..5.0, std in 0.01f64..5.0) {
        let means: Vec<f64> = (0..100).map(|i| incumbent - 10.0 * std + i as f64 * 0.2 * std).collect();
        let vals: Vec<f64> = means.iter().map(|&m| log_ei(m, std, incumbent).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] > w[0]), "{:?}", vals);
        // Below the incumbent, more uncertainty means more expected improvement.
        let mean = incumbent - 1.0;
        let by_std: Vec<f64> = (1..=100).map(|k| log_ei(mean, 0.05 * k as f64, incumbent).unwrap()).collect();
        prop_assert!(by_std.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn suggestions_stay_in_space(seed in any::<u64>(), n_hist in 0usize..25) {
        let space = mixed_space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let history: Vec<Trial> = (0..n_hist)
            .map(|i| {
                let config = space.sample(&mut rng);
                let objective = if i % 7 == 3 { f64::NEG_INFINITY } else { encode_config(&space, &config).unwrap().iter().sum() };
                Trial { index: i, seed, config, objective }
            })
            .collect();
        let c = suggest(&space, &history, &mut rng);
        let x = encode_config(&space, &c).unwrap();
        prop_assert!(x.iter().all(|v| (0.0..=2.0).contains(v)));
        let again = encode_config(&space, &space.decode(&x)).unwrap();
        prop_assert!(x.iter().zip(&again).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

fn mixed_space() -> ConfigSpace {
    let spec = |name: &str, kind| ParamSpec {
        name: name.into(),
        kind,
    };
    ConfigSpace::new(vec![
        spec("lr", ParamKind::LogFloat { lower: 1e-6, upper: 1e-2 }),
        spec("c", ParamKind::LinearFloat { lower: 0.1, upper: 10.0 }),
        spec("threshold", ParamKind::SteppedFloat { lower: 0.3, upper: 0.6, step: 0.01 }),
        spec("epochs", ParamKind::Integer { lower: 15, upper: 35 }),
        spec(
            "scheduler",
            ParamKind::Categorical {
                choices: vec!["linear".into(), "cosine".into(), "constant".into()],
            },
        ),
    ])
    .unwrap()
}
