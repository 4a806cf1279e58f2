//! Rule-based four-score sentiment (VADER rule set) and per-day aggregation.
//!
//! Scores are returned unrounded. Emoji-to-description substitution is not
//! performed; every other rule of the reference scorer is reproduced,
//! including its quirks (the `but` reweighting locates each score by its first
//! equal value, exactly as the reference does).

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const B_INCR: f64 = 0.293;
const B_DECR: f64 = -0.293;
const C_INCR: f64 = 0.733;
const N_SCALAR: f64 = -0.74;

const DEFAULT_LEXICON: &str = include_str!("../assets/vader_lexicon.txt");

const NEGATE: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't", "can't",
    "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt",
    "neither", "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't", "neednt", "needn't",
    "never", "none", "nope", "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "uhuh",
    "wasnt", "werent", "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont",
    "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite",
];

const BOOST_UP: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably", "decidedly", "deeply",
    "effing", "enormous", "enormously", "entirely", "especially", "exceptional", "exceptionally", "extreme",
    "extremely", "fabulously", "flipping", "flippin", "frackin", "fracking", "fricking", "frickin", "frigging",
    "friggin", "fully", "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely",
    "incredible", "incredibly", "intensely", "major", "majorly", "more", "most", "particularly", "purely",
    "quite", "really", "remarkably", "so", "substantially", "thoroughly", "total", "totally", "tremendous",
    "tremendously", "uber", "unbelievably", "unusually", "utter", "utterly", "very",
];

const BOOST_DOWN: &[&str] = &[
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of", "less", "little",
    "marginal", "marginally", "occasional", "occasionally", "partly", "scarce", "scarcely", "slight",
    "slightly", "somewhat", "sort of", "sorta", "sortof", "sort-of",
];

const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];

/// Token valences plus the modifier word lists used by the rules.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    valences: HashMap<String, f64>,
    /// Signed increments; magnitudes lie in (0, 1].
    boosters: HashMap<String, f64>,
    negations: HashSet<String>,
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        Self::from_tsv(DEFAULT_LEXICON, Path::new("<bundled lexicon>"))
            .expect("bundled lexicon parses")
    }
}

impl SentimentLexicon {
    /// Reads a lexicon in the `token<TAB>mean<TAB>std<TAB>ratings` format.
    /// Only the first two columns are used.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_tsv(&std::fs::read_to_string(path)?, path)
    }

    pub fn from_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut valences = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default();
            let value = cols
                .next()
                .ok_or_else(|| Error::parse(origin, i + 1, "expected token and valence"))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, i + 1, format!("bad valence {value:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(origin, i + 1, "valence is not finite"));
            }
            valences.insert(token.to_string(), v);
        }
        Ok(Self::with_valences(valences))
    }

    /// Builds a lexicon from explicit valences with the standard modifier lists.
    pub fn with_valences(valences: HashMap<String, f64>) -> Self {
        let boosters = BOOST_UP
            .iter()
            .map(|w| (w.to_string(), B_INCR))
            .chain(BOOST_DOWN.iter().map(|w| (w.to_string(), B_DECR)))
            .collect();
        let negations = NEGATE.iter().map(|w| w.to_string()).collect();
        SentimentLexicon {
            valences,
            boosters,
            negations,
        }
    }

    pub fn valence(&self, token: &str) -> Option<f64> {
        self.valences.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }

    fn contains(&self, token: &str) -> bool {
        self.valences.contains_key(token)
    }

    fn booster(&self, token: &str) -> Option<f64> {
        self.boosters.get(token).copied()
    }

    fn is_negation(&self, word: &str) -> bool {
        self.negations.contains(word) || word.contains("n't")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentVector {
    pub neg: f64,
    pub neu: f64,
    pub pos: f64,
    pub compound: f64,
}

impl SentimentVector {
    pub const ZERO: SentimentVector = SentimentVector {
        neg: 0.0,
        neu: 0.0,
        pos: 0.0,
        compound: 0.0,
    };

    /// The no-news vector.
    pub const NEUTRAL: SentimentVector = SentimentVector {
        neg: 0.0,
        neu: 1.0,
        pos: 0.0,
        compound: 0.0,
    };

    pub fn to_array(self) -> [f64; 4] {
        [self.neg, self.neu, self.pos, self.compound]
    }
}

// Python's `str.isupper`: at least one cased character and no lowercase ones.
fn is_upper(word: &str) -> bool {
    let mut cased = false;
    for c in word.chars() {
        if c.is_lowercase() {
            return false;
        }
        if c.is_uppercase() {
            cased = true;
        }
    }
    cased
}

fn strip_punct_if_word(token: &str) -> &str {
    let stripped = token.trim_matches(|c: char| c.is_ascii_punctuation());
    if stripped.chars().count() <= 2 {
        token
    } else {
        stripped
    }
}

struct Tokens<'a> {
    words: Vec<&'a str>,
    lower: Vec<String>,
    cap_diff: bool,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let words: Vec<&str> = text.split_whitespace().map(strip_punct_if_word).collect();
        let lower = words.iter().map(|w| w.to_lowercase()).collect();
        let caps = words.iter().filter(|w| is_upper(w)).count();
        let diff = words.len() - caps;
        Tokens {
            cap_diff: diff > 0 && diff < words.len(),
            words,
            lower,
        }
    }
}

fn special_case(seq: &str) -> Option<f64> {
    SPECIAL_CASES.iter().find(|(k, _)| *k == seq).map(|(_, v)| *v)
}

fn scalar_inc_dec(lex: &SentimentLexicon, word: &str, lower: &str, valence: f64, cap_diff: bool) -> f64 {
    let Some(mut scalar) = lex.booster(lower) else {
        return 0.0;
    };
    if valence < 0.0 {
        scalar = -scalar;
    }
    if is_upper(word) && cap_diff {
        if valence > 0.0 {
            scalar += C_INCR;
        } else {
            scalar -= C_INCR;
        }
    }
    scalar
}

fn negation_check(lex: &SentimentLexicon, mut valence: f64, lw: &[String], start_i: usize, i: usize) -> f64 {
    match start_i {
        0 => {
            if lex.is_negation(&lw[i - 1]) {
                valence *= N_SCALAR;
            }
        }
        1 => {
            if lw[i - 2] == "never" && (lw[i - 1] == "so" || lw[i - 1] == "this") {
                valence *= 1.25;
            } else if lw[i - 2] == "without" && lw[i - 1] == "doubt" {
            } else if lex.is_negation(&lw[i - 2]) {
                valence *= N_SCALAR;
            }
        }
        _ => {
            // The reference groups this condition as `(never ∧ so/this) ∨ so/this`.
            if (lw[i - 3] == "never" && (lw[i - 2] == "so" || lw[i - 2] == "this"))
                || (lw[i - 1] == "so" || lw[i - 1] == "this")
            {
                valence *= 1.25;
            } else if lw[i - 3] == "without" && (lw[i - 2] == "doubt" || lw[i - 1] == "doubt") {
            } else if lex.is_negation(&lw[i - 3]) {
                valence *= N_SCALAR;
            }
        }
    }
    valence
}

fn special_idioms_check(lex: &SentimentLexicon, mut valence: f64, lw: &[String], i: usize) -> f64 {
    let onezero = format!("{} {}", lw[i - 1], lw[i]);
    let twoonezero = format!("{} {} {}", lw[i - 2], lw[i - 1], lw[i]);
    let twoone = format!("{} {}", lw[i - 2], lw[i - 1]);
    let threetwoone = format!("{} {} {}", lw[i - 3], lw[i - 2], lw[i - 1]);
    let threetwo = format!("{} {}", lw[i - 3], lw[i - 2]);
    for seq in [&onezero, &twoonezero, &twoone, &threetwoone, &threetwo] {
        if let Some(v) = special_case(seq) {
            valence = v;
            break;
        }
    }
    if lw.len() - 1 > i {
        if let Some(v) = special_case(&format!("{} {}", lw[i], lw[i + 1])) {
            valence = v;
        }
    }
    if lw.len() - 1 > i + 1 {
        if let Some(v) = special_case(&format!("{} {} {}", lw[i], lw[i + 1], lw[i + 2])) {
            valence = v;
        }
    }
    for gram in [&threetwoone, &threetwo, &twoone] {
        if let Some(b) = lex.booster(gram) {
            valence += b;
        }
    }
    valence
}

fn least_check(lex: &SentimentLexicon, valence: f64, lw: &[String], i: usize) -> f64 {
    if i > 1 && !lex.contains(&lw[i - 1]) && lw[i - 1] == "least" {
        if lw[i - 2] != "at" && lw[i - 2] != "very" {
            return valence * N_SCALAR;
        }
    } else if i > 0 && !lex.contains(&lw[i - 1]) && lw[i - 1] == "least" {
        return valence * N_SCALAR;
    }
    valence
}

fn token_valence(lex: &SentimentLexicon, tok: &Tokens<'_>, i: usize) -> f64 {
    let lw = &tok.lower;
    let item = &lw[i];
    let Some(base) = lex.valence(item) else {
        return 0.0;
    };
    let mut valence = base;
    if item == "no" && i != lw.len() - 1 && lex.contains(&lw[i + 1]) {
        valence = 0.0;
    }
    if (i > 0 && lw[i - 1] == "no")
        || (i > 1 && lw[i - 2] == "no")
        || (i > 2 && lw[i - 3] == "no" && (lw[i - 1] == "or" || lw[i - 1] == "nor"))
    {
        valence = base * N_SCALAR;
    }
    if is_upper(tok.words[i]) && tok.cap_diff {
        if valence > 0.0 {
            valence += C_INCR;
        } else {
            valence -= C_INCR;
        }
    }
    for start_i in 0..3 {
        if i > start_i && !lex.contains(&lw[i - start_i - 1]) {
            let mut s = scalar_inc_dec(lex, tok.words[i - start_i - 1], &lw[i - start_i - 1], valence, tok.cap_diff);
            if start_i == 1 && s != 0.0 {
                s *= 0.95;
            }
            if start_i == 2 && s != 0.0 {
                s *= 0.9;
            }
            valence += s;
            valence = negation_check(lex, valence, lw, start_i, i);
            if start_i == 2 {
                valence = special_idioms_check(lex, valence, lw, i);
            }
        }
    }
    least_check(lex, valence, lw, i)
}

fn but_check(lower: &[String], sentiments: &mut [f64]) {
    let Some(bi) = lower.iter().position(|w| w == "but") else {
        return;
    };
    for k in 0..sentiments.len() {
        let s = sentiments[k];
        let si = sentiments.iter().position(|v| *v == s).unwrap_or(k);
        if si < bi {
            sentiments[si] = s * 0.5;
        } else if si > bi {
            sentiments[si] = s * 1.5;
        }
    }
}

fn punctuation_emphasis(text: &str) -> f64 {
    let ep = text.matches('!').count().min(4) as f64 * 0.292;
    let qm_count = text.matches('?').count();
    let qm = match qm_count {
        0 | 1 => 0.0,
        2 | 3 => qm_count as f64 * 0.18,
        _ => 0.96,
    };
    ep + qm
}

/// Maps a raw valence sum into (−1, 1).
pub fn normalize(score: f64) -> f64 {
    (score / (score * score + 15.0).sqrt()).clamp(-1.0, 1.0)
}

/// Scores one text. Empty (or whitespace-only) text yields the zero vector.
pub fn score_text(text: &str, lex: &SentimentLexicon) -> SentimentVector {
    let text = text.trim();
    let tok = Tokens::new(text);
    let n = tok.words.len();
    let mut sentiments = Vec::with_capacity(n);
    for i in 0..n {
        let lw = &tok.lower[i];
        if lex.booster(lw).is_some() || (i + 1 < n && lw == "kind" && tok.lower[i + 1] == "of") {
            sentiments.push(0.0);
            continue;
        }
        sentiments.push(token_valence(lex, &tok, i));
    }
    but_check(&tok.lower, &mut sentiments);
    if sentiments.is_empty() {
        return SentimentVector::ZERO;
    }

    let amp = punctuation_emphasis(text);
    let mut sum: f64 = sentiments.iter().sum();
    if sum > 0.0 {
        sum += amp;
    } else if sum < 0.0 {
        sum -= amp;
    }
    let compound = normalize(sum);

    let mut pos_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut neu_count = 0.0;
    for &s in &sentiments {
        if s > 0.0 {
            pos_sum += s + 1.0;
        } else if s < 0.0 {
            neg_sum += s - 1.0;
        } else {
            neu_count += 1.0;
        }
    }
    if pos_sum > neg_sum.abs() {
        pos_sum += amp;
    } else if pos_sum < neg_sum.abs() {
        neg_sum -= amp;
    }
    let total = pos_sum + neg_sum.abs() + neu_count;
    SentimentVector {
        neg: (neg_sum / total).abs(),
        neu: (neu_count / total).abs(),
        pos: (pos_sum / total).abs(),
        compound,
    }
}

/// Elementwise mean; a day without news is neutral.
pub fn aggregate_daily(scores: &[SentimentVector]) -> SentimentVector {
    if scores.is_empty() {
        return SentimentVector::NEUTRAL;
    }
    let n = scores.len() as f64;
    let mut acc = [0.0; 4];
    for s in scores {
        for (a, v) in acc.iter_mut().zip(s.to_array()) {
            *a += v;
        }
    }
    SentimentVector {
        neg: acc[0] / n,
        neu: acc[1] / n,
        pos: acc[2] / n,
        compound: acc[3] / n,
    }
}

/// Writes `date,neg,neu,pos,compound` rows.
pub fn write_daily_csv(path: impl AsRef<Path>, rows: &[(NaiveDate, SentimentVector)]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "date,neg,neu,pos,compound")?;
    for (d, s) in rows {
        writeln!(out, "{d},{},{},{},{}", s.neg, s.neu, s.pos, s.compound)?;
    }
    out.flush()?;
    Ok(())
}
