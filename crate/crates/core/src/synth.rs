//! Deterministic synthetic market: trading-day prices, a news stream with
//! pre-parsed CoNLL-U annotations and a type-clustered embedding table.
//!
//! The next-day price change depends on three channels: a nonlinear
//! autoregression on the previous change, the latent event type of the
//! previous day's news cluster and the previous day's compound sentiment
//! scaled by the conditional volatility.

use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{write_conllu, write_embeddings, AnnotatedDoc, EmbeddingTable, ManifestEntry, Sentence, Token};
use crate::ingest::{top_items, write_price_csv, RawNewsItem, ITEMS_PER_DAY};
use crate::sentiment::{aggregate_daily, score_text, SentimentLexicon};
use crate::timeseries::PriceSeries;

/// Term every relevant headline contains.
pub const FILTER_TERM: &str = "oil";

struct TypeVocab {
    subjects: &'static [&'static str],
    verbs: &'static [&'static str],
    objects: &'static [&'static str],
    places: &'static [&'static str],
}

const TYPES: &[TypeVocab] = &[
    TypeVocab {
        subjects: &["militants", "insurgents", "raiders"],
        verbs: &["halted", "seized", "sabotaged", "disrupted"],
        objects: &["pipelines", "terminals", "refineries"],
        places: &["Basra", "Lagos", "Kirkuk"],
    },
    TypeVocab {
        subjects: &["OPEC", "ministers", "producers"],
        verbs: &["reduced", "trimmed", "curbed", "capped"],
        objects: &["output", "quotas", "production"],
        places: &["Vienna", "Riyadh", "Algiers"],
    },
    TypeVocab {
        subjects: &["factories", "airlines", "refiners"],
        verbs: &["raised", "expanded", "lifted", "doubled"],
        objects: &["imports", "purchases", "consumption"],
        places: &["Shanghai", "Delhi", "Seoul"],
    },
    TypeVocab {
        subjects: &["traders", "shippers", "hedgers"],
        verbs: &["added", "stored", "accumulated", "built"],
        objects: &["stockpiles", "inventories", "barrels"],
        places: &["Cushing", "Houston", "Rotterdam"],
    },
];

const POSITIVE: &[&str] = &["optimistic", "confident", "hopeful", "pleased", "relieved"];
const NEGATIVE: &[&str] = &["worried", "pessimistic", "nervous", "anxious", "fearful", "upset"];
const NEUTRAL_MOOD: &str = "divided";
const GENERAL: &[&str] = &["oil", "in", "Analysts", "are", "."];
const DISTRACTORS: &[&str] = &[
    "Football club signed a striker",
    "Council approved a new library",
    "Orchestra announced its winter season",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub days: usize,
    pub start: NaiveDate,
    pub base_price: f64,
    /// Probability that a trading day has a news cluster.
    pub news_prob: f64,
    pub min_items: usize,
    pub max_items: usize,
    pub distractor_prob: f64,
    pub embedding_dim: usize,
    pub ar: f64,
    /// Weight on `|Δy_{t-1}| − abs_center`.
    pub abs_ar: f64,
    pub abs_center: f64,
    pub mean_reversion: f64,
    /// Next-day price effect per event type.
    pub event_effects: Vec<f64>,
    /// Weight on `compound · σ_t`.
    pub sentiment_effect: f64,
    /// Probability an item follows the day's mood.
    pub mood_consistency: f64,
    pub garch: [f64; 3],
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            days: 2000,
            start: NaiveDate::from_ymd_opt(2007, 1, 2).expect("valid date"),
            base_price: 70.0,
            news_prob: 0.85,
            min_items: 2,
            max_items: 5,
            distractor_prob: 0.3,
            embedding_dim: 50,
            ar: 0.1,
            abs_ar: 0.8,
            abs_center: 1.0,
            mean_reversion: 0.02,
            event_effects: vec![1.2, 0.6, -0.6, -1.2],
            sentiment_effect: 1.5,
            mood_consistency: 0.8,
            garch: [0.05, 0.10, 0.85],
        }
    }
}

/// Ground truth for one trading day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDay {
    pub date: NaiveDate,
    pub event_type: Option<usize>,
    /// −1, 0 or 1.
    pub mood: i8,
    pub compound: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub seed: u64,
    pub prices: PriceSeries,
    pub news: Vec<RawNewsItem>,
    pub docs: Vec<AnnotatedDoc>,
    pub embeddings: EmbeddingTable,
    pub truth: Vec<SyntheticDay>,
}

/// Paths written by [`SyntheticCorpus::write`], relative to its directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFiles {
    pub prices: PathBuf,
    pub news: PathBuf,
    pub manifest: PathBuf,
    pub embeddings: PathBuf,
    pub truth: PathBuf,
}

fn trading_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn token(id: usize, form: &str, upos: &str, head: usize, deprel: &str) -> Token {
    Token {
        id,
        form: form.to_string(),
        lemma: form.to_lowercase(),
        upos: upos.to_string(),
        xpos: "_".to_string(),
        feats: "_".to_string(),
        head,
        deprel: deprel.to_string(),
        misc: "_".to_string(),
    }
}

fn sentence(sent_id: String, tokens: Vec<Token>) -> Sentence {
    let mut text = String::new();
    for t in &tokens {
        if !text.is_empty() && t.upos != "PUNCT" {
            text.push(' ');
        }
        text.push_str(&t.form);
    }
    Sentence {
        sent_id: Some(sent_id),
        text: Some(text),
        tokens,
    }
}

/// `Subj verb oil obj in Place .`
fn event_sentence(id: String, subj: &str, verb: &str, obj: &str, place: &str) -> Sentence {
    let subj_pos = if subj.chars().next().is_some_and(char::is_uppercase) { "PROPN" } else { "NOUN" };
    let subj_form = if subj_pos == "PROPN" {
        subj.to_string()
    } else {
        let mut c = subj.chars();
        c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
    };
    sentence(
        id,
        vec![
            token(1, &subj_form, subj_pos, 2, "nsubj"),
            token(2, verb, "VERB", 0, "root"),
            token(3, "oil", "NOUN", 4, "compound"),
            token(4, obj, "NOUN", 2, "obj"),
            token(5, "in", "ADP", 6, "case"),
            token(6, place, "PROPN", 2, "obl"),
            token(7, ".", "PUNCT", 2, "punct"),
        ],
    )
}

/// `Analysts are adj .`
fn mood_sentence(id: String, adj: &str) -> Sentence {
    sentence(
        id,
        vec![
            token(1, "Analysts", "NOUN", 3, "nsubj"),
            token(2, "are", "AUX", 3, "cop"),
            token(3, adj, "ADJ", 0, "root"),
            token(4, ".", "PUNCT", 3, "punct"),
        ],
    )
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn build_embeddings<R: Rng>(dim: usize, rng: &mut R) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim);
    for vocab in TYPES {
        let proto: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        for group in [vocab.subjects, vocab.verbs, vocab.objects, vocab.places] {
            for w in group {
                let v = proto.iter().map(|p| p + 0.5 * gaussian(rng)).collect();
                table.insert(w.to_lowercase(), v)?;
            }
        }
    }
    for w in GENERAL {
        table.insert(w.to_lowercase(), (0..dim).map(|_| gaussian(rng)).collect())?;
    }
    Ok(table)
}

pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCorpus> {
    if spec.days < 30 {
        return Err(Error::InsufficientData {
            what: "synthetic market days",
            needed: 30,
            got: spec.days,
        });
    }
    if spec.min_items == 0 || spec.min_items > spec.max_items || spec.max_items > ITEMS_PER_DAY {
        return Err(Error::InvalidInput(format!(
            "items per day must satisfy 1 <= min <= max <= {ITEMS_PER_DAY}"
        )));
    }
    if spec.event_effects.is_empty() || spec.event_effects.len() > TYPES.len() {
        return Err(Error::InvalidInput(format!("between 1 and {} event types", TYPES.len())));
    }
    let [a0, a1, b1] = spec.garch;
    if a0 <= 0.0 || a1 < 0.0 || b1 < 0.0 || a1 + b1 >= 1.0 {
        return Err(Error::InvalidInput("synthetic GARCH parameters must be stationary".into()));
    }
    let lex = SentimentLexicon::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let embeddings = build_embeddings(spec.embedding_dim, &mut rng)?;
    let dates = trading_days(spec.start, spec.days);

    let mut news = Vec::new();
    let mut docs = Vec::new();
    let mut truth = Vec::with_capacity(spec.days);
    for &date in &dates {
        let mut day = SyntheticDay {
            date,
            event_type: None,
            mood: 0,
            compound: 0.0,
            sigma2: 0.0,
        };
        let mut items = Vec::new();
        if rng.random_bool(spec.news_prob) {
            let k = rng.random_range(0..spec.event_effects.len());
            let mood = rng.random_range(-1i8..=1);
            day.event_type = Some(k);
            day.mood = mood;
            let n = rng.random_range(spec.min_items..=spec.max_items);
            let vocab = &TYPES[k];
            for j in 0..n {
                let id = format!("{date}-{j}");
                let (subj, verb, obj, place) = (
                    pick(&mut rng, vocab.subjects),
                    pick(&mut rng, vocab.verbs),
                    pick(&mut rng, vocab.objects),
                    pick(&mut rng, vocab.places),
                );
                let item_mood = if rng.random_bool(spec.mood_consistency) { mood } else { rng.random_range(-1i8..=1) };
                let adj = match item_mood {
                    1 => pick(&mut rng, POSITIVE),
                    -1 => pick(&mut rng, NEGATIVE),
                    _ => NEUTRAL_MOOD,
                };
                let headline = event_sentence(format!("{id}-1"), subj, verb, obj, place);
                let body = mood_sentence(format!("{id}-2"), adj);
                items.push(RawNewsItem {
                    date,
                    headline: headline.text.clone().unwrap_or_default(),
                    body: body.text.clone().unwrap_or_default(),
                    source: "synthetic".into(),
                    id: Some(id.clone()),
                });
                docs.push(AnnotatedDoc {
                    item_id: id,
                    date,
                    sentences: vec![headline, body],
                });
            }
            let kept = top_items(&items, ITEMS_PER_DAY, &lex);
            let scores: Vec<_> = kept.iter().map(|it| score_text(&it.text(), &lex)).collect();
            day.compound = aggregate_daily(&scores).compound;
        }
        if rng.random_bool(spec.distractor_prob) {
            items.push(RawNewsItem {
                date,
                headline: pick(&mut rng, DISTRACTORS).to_string(),
                body: String::new(),
                source: "synthetic".into(),
                id: Some(format!("{date}-x")),
            });
        }
        news.extend(items);
        truth.push(day);
    }

    let mut prices = Vec::with_capacity(spec.days);
    let mut y = spec.base_price;
    let mut dy = 0.0;
    let mut sigma2 = a0 / (1.0 - a1 - b1);
    let mut shock = 0.0f64;
    prices.push(y);
    truth[0].sigma2 = sigma2;
    for t in 1..spec.days {
        sigma2 = a0 + a1 * shock * shock + b1 * sigma2;
        shock = sigma2.sqrt() * gaussian(&mut rng);
        let prev = &truth[t - 1];
        let event = prev.event_type.map_or(0.0, |k| spec.event_effects[k]);
        dy = spec.ar * dy + spec.abs_ar * (dy.abs() - spec.abs_center) - spec.mean_reversion * (y - spec.base_price)
            + event
            + spec.sentiment_effect * prev.compound * sigma2.sqrt()
            + shock;
        y += dy;
        if y <= 0.0 {
            return Err(Error::Degenerate(format!(
                "synthetic price went non-positive on {}; lower the effect sizes",
                dates[t]
            )));
        }
        truth[t].sigma2 = sigma2;
        prices.push(y);
    }

    Ok(SyntheticCorpus {
        spec: spec.clone(),
        seed,
        prices: PriceSeries::new(dates, prices)?,
        news,
        docs,
        embeddings,
        truth,
    })
}

impl SyntheticCorpus {
    /// Writes `prices.csv`, `news.jsonl`, `annotated/<date>.conllu`,
    /// `annotated/manifest.jsonl`, `embeddings.txt` and `truth.jsonl`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<SyntheticFiles> {
        use std::io::Write;
        let dir = dir.as_ref();
        let annotated = dir.join("annotated");
        std::fs::create_dir_all(&annotated)?;
        let files = SyntheticFiles {
            prices: "prices.csv".into(),
            news: "news.jsonl".into(),
            manifest: PathBuf::from("annotated").join("manifest.jsonl"),
            embeddings: "embeddings.txt".into(),
            truth: "truth.jsonl".into(),
        };
        write_price_csv(dir.join(&files.prices), &self.prices)?;

        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(&files.news))?);
        let mut line_of = std::collections::HashMap::new();
        for (i, item) in self.news.iter().enumerate() {
            writeln!(out, "{}", serde_json::to_string(item)?)?;
            if let Some(id) = &item.id {
                line_of.insert(id.clone(), i + 1);
            }
        }
        out.flush()?;

        let mut manifest = std::io::BufWriter::new(std::fs::File::create(dir.join(&files.manifest))?);
        let mut start = 0;
        while start < self.docs.len() {
            let date = self.docs[start].date;
            let end = start + self.docs[start..].iter().take_while(|d| d.date == date).count();
            let group = &self.docs[start..end];
            let name = format!("{date}.conllu");
            std::fs::write(annotated.join(&name), write_conllu(group))?;
            let item_ids: Vec<String> = group.iter().map(|d| d.item_id.clone()).collect();
            let entry = ManifestEntry {
                date,
                conllu: name,
                source_lines: item_ids.iter().filter_map(|id| line_of.get(id).copied()).collect(),
                item_ids,
                source: Some(format!("../{}", files.news.display())),
            };
            writeln!(manifest, "{}", serde_json::to_string(&entry)?)?;
            start = end;
        }
        manifest.flush()?;

        write_embeddings(dir.join(&files.embeddings), &self.embeddings)?;
        let mut truth = std::io::BufWriter::new(std::fs::File::create(dir.join(&files.truth))?);
        for d in &self.truth {
            writeln!(truth, "{}", serde_json::to_string(d)?)?;
        }
        truth.flush()?;
        Ok(files)
    }
}
