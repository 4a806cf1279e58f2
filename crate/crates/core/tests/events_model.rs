mod common;

use chrono::NaiveDate;
use common::fixture;
use oilcast::events::odee::{generate_corpus, purity, GenerativeSpec};
use oilcast::events::{
    argmax_from_factors, assemble_events, load_embeddings, read_annotated_corpus, schema::load_gold,
    schema_match_eval, ClusterItem, EmbeddingTable, EventRecord, GoldEvent, NewsCluster, OdeeConfig, OdeeParams,
    Sentence, Token, ARG_DIM, MAX_EVENTS, MAX_EVENT_TOKENS, TYPE_DIM,
};
use oilcast::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn train_generated(spec: &GenerativeSpec, k: usize, seed: u64) -> (oilcast::events::odee::GeneratedCorpus, OdeeParams, Vec<f64>) {
    let corpus = generate_corpus(spec, seed);
    let cfg = OdeeConfig { k, epochs: 40, seed, ..Default::default() };
    let (params, report) = OdeeParams::train(&corpus.clusters, &cfg).unwrap();
    (corpus, params, report.elbo)
}

#[test]
fn generated_corpus_elbo_and_purity() {
    let spec = GenerativeSpec::default();
    for seed in [17, 18, 19] {
        let (corpus, params, elbo) = train_generated(&spec, 3, seed);
        let smooth: Vec<f64> = elbo.chunks(5).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        for w in smooth.windows(2) {
            assert!(w[1] >= w[0] - 1e-3, "seed {seed}: {smooth:?}");
        }
        let mut pred = Vec::new();
        for c in &corpus.clusters {
            let t = params.infer_type(c).unwrap();
            pred.extend(params.assign_slots(c, &t).unwrap().slots);
        }
        let truth: Vec<usize> = corpus.slots.concat();
        assert!(purity(&pred, &truth) >= 0.8, "seed {seed}");
    }
}

#[test]
fn type_vectors_cluster_by_ground_truth_type() {
    let (corpus, params, _) = train_generated(&GenerativeSpec::default(), 3, 23);
    let types: Vec<_> = corpus.clusters.iter().map(|c| params.infer_type(c).unwrap()).collect();
    let (mut same, mut ns, mut cross, mut nc) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..types.len() {
        assert_eq!(types[i].as_slice().len(), TYPE_DIM);
        for j in i + 1..types.len() {
            let c = types[i].cosine(&types[j]);
            if corpus.types[i] == corpus.types[j] {
                same += c;
                ns += 1.0;
            } else {
                cross += c;
                nc += 1.0;
            }
        }
    }
    assert!(same / ns > cross / nc, "same {} cross {}", same / ns, cross / nc);
    let a = params.infer_type(&corpus.clusters[0]).unwrap();
    let b = params.infer_type(&corpus.clusters[0].clone()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn held_out_elbo_prefers_true_k() {
    let spec = GenerativeSpec { clusters: 120, ..Default::default() };
    let train = generate_corpus(&spec, 31);
    let held_out = generate_corpus(&GenerativeSpec { clusters: 40, ..spec.clone() }, 31);
    // Same seed gives the same model parameters; take disjoint clusters.
    let held: Vec<_> = held_out.clusters.into_iter().collect();
    let fit = |k| {
        let cfg = OdeeConfig { k, epochs: 30, seed: 5, ..Default::default() };
        OdeeParams::train(&train.clusters, &cfg).unwrap().0
    };
    let e3 = fit(3).elbo(&held, 4, 9).unwrap();
    let e1 = fit(1).elbo(&held, 4, 9).unwrap();
    assert!(e3 > e1, "K=3 {e3} vs K=1 {e1}");
}

#[test]
fn single_slot_model_assigns_zero() {
    let corpus = generate_corpus(&GenerativeSpec { clusters: 1, ..Default::default() }, 2);
    let cfg = OdeeConfig { k: 1, epochs: 3, ..Default::default() };
    let (params, _) = OdeeParams::train(&corpus.clusters, &cfg).unwrap();
    let c = &corpus.clusters[0];
    let s = params.assign_slots(c, &params.infer_type(c).unwrap()).unwrap();
    assert!(s.slots.iter().all(|v| *v == 0));
}

#[test]
fn argmax_invariant_under_positive_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let k = rng.random_range(1..8);
        let mut f = || (0..k).map(|_| rng.random_range(1e-6..1.0)).collect::<Vec<f64>>();
        let (p, h, x) = (f(), f(), f());
        let scale: f64 = 10f64.powf(rng.random_range(-6.0..6.0));
        let base = argmax_from_factors(&p, &h, &x);
        let scaled: Vec<f64> = p.iter().map(|v| v * scale).collect();
        assert_eq!(base, argmax_from_factors(&scaled, &h, &x));
        let hs: Vec<f64> = h.iter().map(|v| v * scale).collect();
        let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
        assert_eq!(base, argmax_from_factors(&p, &hs, &xs));
    }
}

fn fixture_clusters() -> (Vec<NewsCluster>, EmbeddingTable) {
    let emb = load_embeddings(fixture("annotated/embeddings.txt")).unwrap();
    let docs = read_annotated_corpus(fixture("annotated/manifest.jsonl")).unwrap();
    (NewsCluster::from_docs(docs, &emb).unwrap(), emb)
}

fn extract(params: &OdeeParams, c: &NewsCluster, emb: &EmbeddingTable) -> EventRecord {
    let t = params.infer_type(c).unwrap();
    let slots = params.assign_slots(c, &t).unwrap();
    assemble_events(c, &slots, t, emb).unwrap()
}

#[test]
fn headline_sentence_events() {
    let (clusters, emb) = fixture_clusters();
    assert_eq!(clusters.len(), 3);
    let cfg = OdeeConfig { k: 2, epochs: 5, ..Default::default() };
    let (params, _) = OdeeParams::train(&clusters, &cfg).unwrap();
    let rec = extract(&params, &clusters[0], &emb);
    let triggers: Vec<&str> = rec.real_events().map(|e| e.trigger.as_str()).collect();
    assert!(triggers.contains(&"died") && triggers.contains(&"fired"), "{triggers:?}");
    for trig in ["died", "fired"] {
        let ev = rec.real_events().find(|e| e.trigger == trig).unwrap();
        let args: Vec<&str> = ev.arguments.iter().map(|a| a.text.as_str()).collect();
        for want in ["Baghdad", "cameraman", "American tank"] {
            assert!(args.contains(&want), "{trig}: {args:?}");
        }
    }
    let gold = load_gold(fixture("annotated/gold_events.jsonl")).unwrap();
    let pred: Vec<GoldEvent> = rec.real_events().map(GoldEvent::from).collect();
    let scores = schema_match_eval(&pred, &gold);
    assert_eq!(scores.recall, 1.0);
}

#[test]
fn record_dimensions_hold_on_fixture_corpus() {
    let (clusters, emb) = fixture_clusters();
    let cfg = OdeeConfig { k: 2, epochs: 2, ..Default::default() };
    let (params, _) = OdeeParams::train(&clusters, &cfg).unwrap();
    for c in &clusters {
        let rec = extract(&params, c, &emb);
        assert_eq!(rec.events.len(), MAX_EVENTS);
        assert!(rec.events.iter().all(|e| e.tokens.len() <= MAX_EVENT_TOKENS));
        assert_eq!(rec.type_vec.as_slice().len(), TYPE_DIM);
        assert_eq!(rec.arg_embedding.len(), ARG_DIM);
    }
    let last = extract(&params, &clusters[2], &emb);
    assert_eq!(last.real_events().count(), 2);
    assert_eq!(last.events.iter().filter(|e| e.is_padding()).count(), 3);
}

fn tok(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Token {
    Token {
        id,
        form: form.into(),
        lemma: form.to_lowercase(),
        upos: upos.into(),
        xpos: "_".into(),
        feats: "_".into(),
        head,
        deprel: deprel.into(),
        misc: "_".into(),
    }
}

fn hand_cluster(tokens: Vec<Token>) -> NewsCluster {
    let emb = EmbeddingTable::new(3);
    let items = vec![ClusterItem { id: "x".into(), sentences: vec![Sentence { sent_id: None, text: None, tokens }] }];
    NewsCluster::from_annotated(NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(), items, &emb).unwrap()
}

#[test]
fn three_candidates_pad_to_five_and_long_events_trim() {
    let c = hand_cluster(vec![
        tok(1, "Alice", "PROPN", 2, "nsubj"),
        tok(2, "rose", "VERB", 0, "root"),
        tok(3, "Bob", "PROPN", 4, "nsubj"),
        tok(4, "said", "VERB", 2, "parataxis"),
        tok(5, "Carol", "PROPN", 6, "nsubj"),
        tok(6, "fell", "VERB", 2, "conj"),
    ]);
    let params = OdeeParams::train(std::slice::from_ref(&c), &OdeeConfig { k: 1, epochs: 1, ..Default::default() }).unwrap().0;
    let emb = EmbeddingTable::new(3);
    let rec = extract(&params, &c, &emb);
    assert_eq!(rec.real_events().count(), 3);
    assert_eq!(rec.events.len(), 5);

    let mut tokens = vec![tok(1, "hit", "VERB", 0, "root")];
    for i in 0..24 {
        tokens.push(tok(i + 2, &format!("thing{i}"), "NOUN", 1, "obj"));
    }
    let c = hand_cluster(tokens);
    let params = OdeeParams::train(std::slice::from_ref(&c), &OdeeConfig { k: 1, epochs: 1, ..Default::default() }).unwrap().0;
    let rec = extract(&params, &c, &emb);
    let ev = rec.real_events().next().unwrap();
    assert_eq!(ev.tokens.len(), MAX_EVENT_TOKENS);
    assert_eq!(ev.tokens[0], "hit");
    assert_eq!(ev.tokens[19], "thing18");
}

#[test]
fn missing_annotations_are_reported() {
    let emb = EmbeddingTable::new(2);
    let items = vec![ClusterItem { id: "raw".into(), sentences: vec![] }];
    let err = NewsCluster::from_annotated(NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(), items, &emb).unwrap_err();
    assert!(matches!(err, Error::MissingAnnotations(_)));
    assert!(err.to_string().contains("preproc"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn record_invariants_on_random_corpora(seed in 0u64..10_000, n in 1usize..6, ents in 2usize..8) {
        let spec = GenerativeSpec { clusters: n, entities_per_cluster: ents, feat_dim: 4, ..Default::default() };
        let corpus = generate_corpus(&spec, seed);
        let cfg = OdeeConfig { k: 2, epochs: 1, seed, ..Default::default() };
        let (params, _) = OdeeParams::train(&corpus.clusters, &cfg).unwrap();
        let emb = EmbeddingTable::new(7);
        for c in &corpus.clusters {
            let rec = extract(&params, c, &emb);
            prop_assert_eq!(rec.events.len(), MAX_EVENTS);
            prop_assert!(rec.events.iter().all(|e| e.tokens.len() <= MAX_EVENT_TOKENS));
            prop_assert_eq!(rec.type_vec.as_slice().len(), TYPE_DIM);
            prop_assert_eq!(rec.arg_embedding.len(), ARG_DIM);
        }
    }
}
