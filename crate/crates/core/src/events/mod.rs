//! Open-domain event extraction at desk scale.
//!
//! A news cluster (one day of related items with dependency parses) yields
//! entity mentions. A latent event-type model ([`odee`]) explains each
//! cluster's entities with a per-cluster type vector and per-entity slots;
//! [`assemble`] turns triggers and their arguments into at most five events.

pub mod assemble;
pub mod conllu;
pub mod embeddings;
pub mod odee;
pub mod schema;

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assemble::{assemble_events, supersense, Argument, Event};
pub use conllu::{load_manifest, parse_conllu, read_annotated_corpus, write_conllu, AnnotatedDoc, ManifestEntry, Sentence, Token};
pub use embeddings::{load_embeddings, write_embeddings, EmbeddingTable};
pub use odee::{argmax_from_factors, OdeeConfig, OdeeParams, SlotAssignment, TrainReport};
pub use schema::{schema_match_eval, GoldEvent, SchemaScores};

pub const TYPE_DIM: usize = 100;
pub const ARG_DIM: usize = 200;
pub const MAX_EVENTS: usize = 5;
pub const MAX_EVENT_TOKENS: usize = 20;
/// Filler token for padded events.
pub const PAD_TOKEN: &str = "<pad>";

/// Latent event type of a cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EventTypeVector(Vec<f64>);

impl EventTypeVector {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.len() != TYPE_DIM {
            return Err(Error::DimensionMismatch {
                what: "event type vector",
                expected: TYPE_DIM,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("event type vector".into()));
        }
        Ok(EventTypeVector(v))
    }

    pub fn zeros() -> Self {
        EventTypeVector(vec![0.0; TYPE_DIM])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn cosine(&self, other: &EventTypeVector) -> f64 {
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        let na = self.0.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb = other.0.iter().map(|a| a * a).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    }
}

impl TryFrom<Vec<f64>> for EventTypeVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EventTypeVector> for Vec<f64> {
    fn from(v: EventTypeVector) -> Self {
        v.0
    }
}

/// One news item inside a cluster, with its parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterItem {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

/// Entity mention: a nominal head word with contextual features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub head: String,
    pub item: usize,
    pub sentence: usize,
    /// Index into the sentence's token list.
    pub token: usize,
    pub features: Vec<f64>,
    /// Fraction of the cluster's items mentioning `head`.
    pub redundancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsCluster {
    pub date: NaiveDate,
    pub items: Vec<ClusterItem>,
    pub entities: Vec<Entity>,
}

const CONTEXT_WINDOW: usize = 2;

pub(crate) fn is_nominal(upos: &str) -> bool {
    upos == "NOUN" || upos == "PROPN"
}

impl NewsCluster {
    /// Builds entities from annotated items. Every NOUN/PROPN token is an
    /// entity; its features are the head embedding followed by the mean
    /// embedding of the ±2 surrounding tokens.
    pub fn from_annotated(date: NaiveDate, items: Vec<ClusterItem>, emb: &EmbeddingTable) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidInput(format!("cluster {date} has no items")));
        }
        if let Some(item) = items.iter().find(|i| i.sentences.iter().all(|s| s.tokens.is_empty())) {
            return Err(Error::MissingAnnotations(format!(
                "item `{}` on {date} has no token annotations; run the preproc annotator to produce CoNLL-U",
                item.id
            )));
        }
        let mentions: Vec<HashSet<String>> = items
            .iter()
            .map(|it| it.sentences.iter().flat_map(|s| s.tokens.iter().map(Token::key)).collect())
            .collect();
        let d = emb.dim();
        let mut entities = Vec::new();
        for (ii, item) in items.iter().enumerate() {
            for (si, sent) in item.sentences.iter().enumerate() {
                for (ti, tok) in sent.tokens.iter().enumerate() {
                    if !is_nominal(&tok.upos) {
                        continue;
                    }
                    let head = tok.key();
                    let mut features = Vec::with_capacity(2 * d);
                    features.extend_from_slice(&emb.get(&head));
                    let lo = ti.saturating_sub(CONTEXT_WINDOW);
                    let hi = (ti + CONTEXT_WINDOW + 1).min(sent.tokens.len());
                    let mut ctx = vec![0.0; d];
                    let mut n = 0.0;
                    for (cj, c) in sent.tokens[lo..hi].iter().enumerate() {
                        if lo + cj == ti {
                            continue;
                        }
                        for (a, v) in ctx.iter_mut().zip(emb.get(&c.key()).iter()) {
                            *a += v;
                        }
                        n += 1.0;
                    }
                    if n > 0.0 {
                        ctx.iter_mut().for_each(|a| *a /= n);
                    }
                    features.extend(ctx);
                    let redundancy =
                        mentions.iter().filter(|m| m.contains(&head)).count() as f64 / items.len() as f64;
                    entities.push(Entity {
                        head,
                        item: ii,
                        sentence: si,
                        token: ti,
                        features,
                        redundancy,
                    });
                }
            }
        }
        Ok(NewsCluster { date, items, entities })
    }

    /// Groups annotated documents by date and builds one cluster per date,
    /// ordered by date.
    pub fn from_docs(docs: Vec<AnnotatedDoc>, emb: &EmbeddingTable) -> Result<Vec<NewsCluster>> {
        let mut by_date: std::collections::BTreeMap<NaiveDate, Vec<ClusterItem>> = Default::default();
        for doc in docs {
            by_date.entry(doc.date).or_default().push(ClusterItem {
                id: doc.item_id,
                sentences: doc.sentences,
            });
        }
        by_date
            .into_iter()
            .map(|(d, items)| NewsCluster::from_annotated(d, items, emb))
            .collect()
    }

    pub fn token(&self, e: &Entity) -> &Token {
        &self.items[e.item].sentences[e.sentence].tokens[e.token]
    }
}

/// Extraction output for one cluster, with fixed downstream dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub date: NaiveDate,
    pub type_vec: EventTypeVector,
    /// Exactly [`MAX_EVENTS`] entries; missing ones are padding.
    pub events: Vec<Event>,
    /// Mean argument embedding mapped to [`ARG_DIM`].
    pub arg_embedding: Vec<f64>,
}

impl EventRecord {
    /// Record for a day without news.
    pub fn padded(date: NaiveDate) -> Self {
        EventRecord {
            date,
            type_vec: EventTypeVector::zeros(),
            events: vec![Event::padding(); MAX_EVENTS],
            arg_embedding: vec![0.0; ARG_DIM],
        }
    }

    pub fn real_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| !e.is_padding())
    }
}
