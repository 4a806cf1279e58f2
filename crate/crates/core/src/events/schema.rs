//! Schema-matching evaluation of extracted events against gold annotations.
//!
//! Gold file: JSON lines `{"date": "YYYY-MM-DD", "trigger": "...", "arguments": ["...", ...]}`.
//! A predicted event matches a gold event when the triggers agree
//! (case-insensitive) and, if the gold event has arguments, at least one
//! argument agrees. Pairs are matched greedily, one-to-one, by overlap.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::assemble::Event;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldEvent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    pub trigger: String,
    #[serde(default)]
    pub arguments: Vec<String>,
}

impl From<&Event> for GoldEvent {
    fn from(e: &Event) -> Self {
        GoldEvent {
            date: None,
            trigger: e.trigger.clone(),
            arguments: e.arguments.iter().map(|a| a.text.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemaScores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl SchemaScores {
    /// Precision/recall/F1 from counts; an empty denominator gives 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        SchemaScores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

fn arg_match(a: &str, b: &str) -> bool {
    let a = a.to_lowercase();
    let b = b.to_lowercase();
    a == b || a.split_whitespace().last() == b.split_whitespace().last()
}

fn overlap(p: &GoldEvent, g: &GoldEvent) -> Option<usize> {
    if !p.trigger.eq_ignore_ascii_case(&g.trigger) {
        return None;
    }
    let shared = g
        .arguments
        .iter()
        .filter(|ga| p.arguments.iter().any(|pa| arg_match(pa, ga)))
        .count();
    if g.arguments.is_empty() || shared > 0 {
        Some(shared)
    } else {
        None
    }
}

pub fn schema_match_eval(predicted: &[GoldEvent], gold: &[GoldEvent]) -> SchemaScores {
    let mut pairs = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, g) in gold.iter().enumerate() {
            if p.date.is_some() && g.date.is_some() && p.date != g.date {
                continue;
            }
            if let Some(o) = overlap(p, g) {
                pairs.push((o, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_g = vec![false; gold.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            tp += 1;
        }
    }
    SchemaScores::from_counts(tp, predicted.len() - tp, gold.len() - tp)
}

pub fn load_gold(path: impl AsRef<Path>) -> Result<Vec<GoldEvent>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, i + 1, e.to_string())))
        .collect()
}
