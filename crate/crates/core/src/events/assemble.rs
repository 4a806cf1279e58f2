//! Dependency-based event assembly.
//!
//! A trigger is a VERB token, a token attached by a clausal relation
//! (`advcl`, `ccomp`, `xcomp`, `rcmod`, `acl:relcl`), or a noun whose
//! supersense is act/phenomenon/event/attribute. Its arguments are nominal
//! dependents expanded to their compound/modifier phrase. Clausally linked
//! triggers share arguments. Events are ranked by the summed slot posterior
//! of their argument heads.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::conllu::Sentence;
use super::odee::SlotAssignment;
use super::{
    is_nominal, EmbeddingTable, EventRecord, EventTypeVector, NewsCluster, ARG_DIM, MAX_EVENTS, MAX_EVENT_TOKENS,
    PAD_TOKEN,
};
use crate::error::{Error, Result};

const CLAUSAL: &[&str] = &["advcl", "ccomp", "xcomp", "rcmod", "acl:relcl"];
const EVENT_SENSES: &[&str] = &["noun.act", "noun.phenomenon", "noun.event", "noun.attribute"];
const ARG_RELS: &[&str] = &["nsubj", "obj", "iobj", "obl", "nmod", "appos", "dobj", "pobj"];
const PHRASE_RELS: &[&str] = &["compound", "amod", "flat", "nummod", "nn"];

const SUPERSENSE_TABLE: &str = include_str!("../../assets/noun_supersenses.tsv");

fn table() -> &'static HashMap<String, String> {
    static T: OnceLock<HashMap<String, String>> = OnceLock::new();
    T.get_or_init(|| {
        SUPERSENSE_TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| l.split_once('\t'))
            .map(|(w, s)| (w.to_string(), s.trim().to_string()))
            .collect()
    })
}

/// Most-frequent noun supersense of a lemma from the bundled table.
pub fn supersense(lemma: &str) -> Option<&'static str> {
    table().get(&lemma.to_lowercase()).map(String::as_str)
}

fn base_rel(deprel: &str) -> &str {
    deprel.split(':').next().unwrap_or(deprel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    /// Phrase as it appears, e.g. "American tank".
    pub text: String,
    pub head: String,
    pub role: String,
    pub slot: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub trigger: String,
    pub arguments: Vec<Argument>,
    /// Trigger then argument tokens, at most [`MAX_EVENT_TOKENS`].
    pub tokens: Vec<String>,
    pub score: f64,
}

impl Event {
    pub fn padding() -> Self {
        Event {
            trigger: PAD_TOKEN.to_string(),
            arguments: Vec::new(),
            tokens: vec![PAD_TOKEN.to_string()],
            score: 0.0,
        }
    }

    pub fn is_padding(&self) -> bool {
        self.trigger == PAD_TOKEN
    }
}

fn is_trigger(sent: &Sentence, i: usize) -> bool {
    let t = &sent.tokens[i];
    if t.upos == "VERB" || CLAUSAL.contains(&t.deprel.as_str()) {
        return t.upos != "PUNCT";
    }
    if t.upos == "NOUN" {
        let sense = t.misc_value("SST").or_else(|| supersense(&t.key()));
        return sense.is_some_and(|s| EVENT_SENSES.contains(&s));
    }
    false
}

fn phrase(sent: &Sentence, head: usize) -> Vec<usize> {
    let mut idx = vec![head];
    let mut frontier = vec![head];
    while let Some(h) = frontier.pop() {
        for (j, d) in sent.dependents(h) {
            if PHRASE_RELS.contains(&base_rel(&d.deprel)) {
                idx.push(j);
                frontier.push(j);
            }
        }
    }
    idx.sort_unstable();
    idx
}

struct Candidate {
    order: (usize, usize, usize),
    trigger: String,
    args: Vec<(usize, Vec<usize>)>,
    link: Option<usize>,
}

/// Assembles up to [`MAX_EVENTS`] events for a cluster, padded to exactly
/// that many, and the argument embedding.
pub fn assemble_events(
    cluster: &NewsCluster,
    slots: &SlotAssignment,
    type_vec: EventTypeVector,
    emb: &EmbeddingTable,
) -> Result<EventRecord> {
    if cluster.items.iter().all(|it| it.sentences.iter().all(|s| s.tokens.is_empty())) {
        return Err(Error::MissingAnnotations(format!(
            "cluster {} carries no parses; run the preproc annotator to produce CoNLL-U",
            cluster.date
        )));
    }
    if slots.slots.len() != cluster.entities.len() {
        return Err(Error::DimensionMismatch {
            what: "slot assignment",
            expected: cluster.entities.len(),
            got: slots.slots.len(),
        });
    }
    let entity_at: HashMap<(usize, usize, usize), usize> = cluster
        .entities
        .iter()
        .enumerate()
        .map(|(i, e)| ((e.item, e.sentence, e.token), i))
        .collect();

    let mut events = Vec::new();
    for (ii, item) in cluster.items.iter().enumerate() {
        for (si, sent) in item.sentences.iter().enumerate() {
            let mut cands: Vec<Candidate> = Vec::new();
            let mut cand_of_token = HashMap::new();
            for ti in 0..sent.tokens.len() {
                if !is_trigger(sent, ti) {
                    continue;
                }
                let args = sent
                    .dependents(ti)
                    .filter(|(_, d)| {
                        (is_nominal(&d.upos) || d.upos == "PRON") && ARG_RELS.contains(&base_rel(&d.deprel))
                    })
                    .map(|(j, _)| (j, phrase(sent, j)))
                    .collect();
                cand_of_token.insert(ti, cands.len());
                cands.push(Candidate {
                    order: (ii, si, ti),
                    trigger: sent.tokens[ti].form.clone(),
                    args,
                    link: None,
                });
            }
            for c in &mut cands {
                let ti = c.order.2;
                if CLAUSAL.contains(&sent.tokens[ti].deprel.as_str()) {
                    c.link = sent.head_index(ti).and_then(|h| cand_of_token.get(&h).copied());
                }
            }
            let own: Vec<Vec<(usize, Vec<usize>)>> = cands.iter().map(|c| c.args.clone()).collect();
            for ci in 0..cands.len() {
                if let Some(li) = cands[ci].link {
                    let mut merged = own[ci].clone();
                    merged.extend(own[li].iter().cloned());
                    cands[ci].args = merged;
                    let mut back = cands[li].args.clone();
                    back.extend(own[ci].iter().cloned());
                    cands[li].args = back;
                }
            }
            for c in cands {
                let mut seen = HashSet::new();
                let mut arguments = Vec::new();
                let mut tokens = vec![c.trigger.clone()];
                let mut score = 0.0;
                for (head, span) in c.args {
                    if !seen.insert(head) {
                        continue;
                    }
                    let ent = entity_at.get(&(ii, si, head)).copied();
                    if let Some(e) = ent {
                        score += slots.probs[e];
                    }
                    let words: Vec<&str> = span.iter().map(|&j| sent.tokens[j].form.as_str()).collect();
                    tokens.extend(words.iter().map(|w| w.to_string()));
                    arguments.push(Argument {
                        text: words.join(" "),
                        head: sent.tokens[head].key(),
                        role: sent.tokens[head].deprel.clone(),
                        slot: ent.map(|e| slots.slots[e]),
                    });
                }
                tokens.truncate(MAX_EVENT_TOKENS);
                events.push((
                    c.order,
                    Event {
                        trigger: c.trigger,
                        arguments,
                        tokens,
                        score,
                    },
                ));
            }
        }
    }
    events.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
    let mut kept: Vec<Event> = events.into_iter().take(MAX_EVENTS).map(|(_, e)| e).collect();

    let arg_embedding = argument_embedding(&kept, emb);
    kept.resize(MAX_EVENTS, Event::padding());
    Ok(EventRecord {
        date: cluster.date,
        type_vec,
        events: kept,
        arg_embedding,
    })
}

/// Mean embedding of every argument token of the kept events, mapped to
/// [`ARG_DIM`]: zero-padded when the table is narrower, a fixed seeded
/// Gaussian projection when it is wider.
fn argument_embedding(events: &[Event], emb: &EmbeddingTable) -> Vec<f64> {
    let d = emb.dim();
    let mut mean = vec![0.0; d];
    let mut n = 0.0;
    for e in events {
        for a in &e.arguments {
            for w in a.text.split_whitespace() {
                for (m, v) in mean.iter_mut().zip(emb.get(w).iter()) {
                    *m += v;
                }
                n += 1.0;
            }
        }
    }
    if n > 0.0 {
        mean.iter_mut().for_each(|m| *m /= n);
    }
    to_arg_dim(&mean)
}

pub(crate) fn to_arg_dim(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    if d <= ARG_DIM {
        let mut out = v.to_vec();
        out.resize(ARG_DIM, 0.0);
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5_61D0 + d as u64);
    let scale = 1.0 / (ARG_DIM as f64).sqrt();
    (0..ARG_DIM)
        .map(|_| {
            v.iter()
                .map(|x| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    g * scale * x
                })
                .sum()
        })
        .collect()
}
