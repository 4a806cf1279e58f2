mod common;

use std::collections::HashMap;

use common::fixture;
use oilcast::sentiment::{aggregate_daily, score_text, SentimentLexicon, SentimentVector};
use proptest::prelude::*;

fn reference_rows() -> Vec<(String, [f64; 4])> {
    let text = std::fs::read_to_string(fixture("vader_reference.tsv")).unwrap();
    text.lines()
        .skip(1)
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            let v: Vec<f64> = cols[1..5].iter().map(|c| c.parse().unwrap()).collect();
            (cols[0].to_string(), [v[0], v[1], v[2], v[3]])
        })
        .collect()
}

#[test]
fn matches_reference_scorer_on_fixture() {
    let lex = SentimentLexicon::default();
    let rows = reference_rows();
    assert_eq!(rows.len(), 200);
    let mut worst: f64 = 0.0;
    for (text, want) in &rows {
        let got = score_text(text, &lex);
        worst = worst.max((got.compound - want[3]).abs());
        // Reference values are rounded to 3 (proportions) and 4 (compound) places.
        assert!((got.compound - want[3]).abs() <= 5e-5 + 1e-12, "{text}: {got:?} vs {want:?}");
        for (g, w) in [got.neg, got.neu, got.pos].iter().zip(&want[..3]) {
            assert!((g - w).abs() <= 5e-4 + 1e-12, "{text}: {got:?} vs {want:?}");
        }
        if !text.trim().is_empty() {
            assert!((got.neg + got.neu + got.pos - 1.0).abs() < 1e-6);
        }
    }
    assert!(worst <= 0.05);
}

#[test]
fn headline_example_proportions() {
    let lex = SentimentLexicon::default();
    let s = score_text(
        "Crude oil on the New York Mercantile Exchange dropped to $54.40 during early afternoon trading, \
         marking a fifth day of lower oil prices.",
        &lex,
    );
    assert!((s.neg - 0.22).abs() <= 0.02);
    assert!((s.neu - 0.78).abs() <= 0.02);
    assert!(s.pos.abs() <= 0.02);
    assert!(s.compound < 0.0);
}

fn arb_vector() -> impl Strategy<Value = SentimentVector> {
    (0.0f64..1.0, 0.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b, c)| {
        let neg = a * (1.0 - b);
        let pos = (1.0 - neg) * b;
        SentimentVector { neg, neu: 1.0 - neg - pos, pos, compound: c }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn single_token_compound_is_antisymmetric(v in -4.0f64..4.0) {
        let up = SentimentLexicon::with_valences(HashMap::from([("zorp".to_string(), v)]));
        let down = SentimentLexicon::with_valences(HashMap::from([("zorp".to_string(), -v)]));
        let a = score_text("zorp", &up).compound;
        let b = score_text("zorp", &down).compound;
        prop_assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn proportions_sum_to_one(words in prop::collection::vec(
        prop::sample::select(vec!["oil", "rally", "slump", "not", "very", "GOOD", "but", "bad", "!", "??", "crisis", "gains", "kind", "of", "least", "no"]),
        1..25,
    )) {
        let text = words.join(" ");
        let s = score_text(&text, &SentimentLexicon::default());
        prop_assert!((s.neg + s.neu + s.pos - 1.0).abs() < 1e-6);
        prop_assert!((-1.0..=1.0).contains(&s.compound));
    }

    #[test]
    fn aggregate_permutation_invariant_and_idempotent(
        mut xs in prop::collection::vec(arb_vector(), 1..10),
        k in 1usize..6,
    ) {
        let a = aggregate_daily(&xs);
        xs.reverse();
        let b = aggregate_daily(&xs);
        for (u, v) in a.to_array().iter().zip(b.to_array()) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        let same = vec![xs[0]; k];
        let m = aggregate_daily(&same);
        for (u, v) in m.to_array().iter().zip(xs[0].to_array()) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }
}
