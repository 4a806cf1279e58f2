//! CoNLL-U reader and the per-date cluster manifest.
//!
//! Documents are delimited by `# item_id = …` (or `# newdoc id = …`) comments;
//! `# date = YYYY-MM-DD` applies to all following sentences until changed.
//! Multiword-token and empty-node lines are skipped.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// 1-based head index, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub misc: String,
}

impl Token {
    /// Lower-cased lemma, or form when the lemma is absent.
    pub fn key(&self) -> String {
        if self.lemma.is_empty() || self.lemma == "_" {
            self.form.to_lowercase()
        } else {
            self.lemma.to_lowercase()
        }
    }

    /// Value of `key=value` in the MISC column.
    pub fn misc_value(&self, key: &str) -> Option<&str> {
        self.misc
            .split('|')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: Option<String>,
    pub text: Option<String>,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Tokens whose head is token `idx` (0-based), with their indices.
    pub fn dependents(&self, idx: usize) -> impl Iterator<Item = (usize, &Token)> {
        let id = self.tokens[idx].id;
        self.tokens.iter().enumerate().filter(move |(_, t)| t.head == id)
    }

    /// 0-based index of a token's head, `None` for the root.
    pub fn head_index(&self, idx: usize) -> Option<usize> {
        let h = self.tokens[idx].head;
        if h == 0 {
            None
        } else {
            self.tokens.iter().position(|t| t.id == h)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedDoc {
    pub item_id: String,
    pub date: NaiveDate,
    pub sentences: Vec<Sentence>,
}

struct Builder {
    docs: Vec<AnnotatedDoc>,
    date: Option<NaiveDate>,
    item: Option<String>,
    sent: Sentence,
    sent_line: usize,
}

impl Builder {
    fn flush(&mut self, origin: &Path) -> Result<()> {
        if self.sent.tokens.is_empty() {
            self.sent = Sentence::default();
            return Ok(());
        }
        let date = self
            .date
            .ok_or_else(|| Error::parse(origin, self.sent_line, "sentence without `# date` metadata"))?;
        let item = self
            .item
            .clone()
            .ok_or_else(|| Error::parse(origin, self.sent_line, "sentence without `# item_id` metadata"))?;
        let sent = std::mem::take(&mut self.sent);
        match self.docs.last_mut() {
            Some(d) if d.item_id == item && d.date == date => d.sentences.push(sent),
            _ => self.docs.push(AnnotatedDoc {
                item_id: item,
                date,
                sentences: vec![sent],
            }),
        }
        Ok(())
    }
}

/// Parses CoNLL-U text. `default_date` is used when no `# date` comment
/// precedes a sentence.
pub fn parse_conllu(text: &str, origin: &Path, default_date: Option<NaiveDate>) -> Result<Vec<AnnotatedDoc>> {
    let mut b = Builder {
        docs: Vec::new(),
        date: default_date,
        item: None,
        sent: Sentence::default(),
        sent_line: 0,
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            b.flush(origin)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((k, v)) = comment.split_once('=') else {
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "date" => {
                    b.flush(origin)?;
                    b.date = Some(
                        NaiveDate::parse_from_str(v, "%Y-%m-%d")
                            .map_err(|_| Error::parse(origin, line_no, format!("bad date {v:?}")))?,
                    );
                }
                "item_id" | "newdoc id" => {
                    b.flush(origin)?;
                    b.item = Some(v.to_string());
                }
                "sent_id" => b.sent.sent_id = Some(v.to_string()),
                "text" => b.sent.text = Some(v.to_string()),
                _ => {}
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::parse(
                origin,
                line_no,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad token id {:?}", cols[0])))?;
        let head = match cols[6] {
            "_" => 0,
            h => h
                .parse()
                .map_err(|_| Error::parse(origin, line_no, format!("bad head {h:?}")))?,
        };
        if b.sent.tokens.is_empty() {
            b.sent_line = line_no;
        }
        b.sent.tokens.push(Token {
            id,
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
            feats: cols[5].to_string(),
            head,
            deprel: cols[7].to_string(),
            misc: cols[9].to_string(),
        });
    }
    b.flush(origin)?;
    Ok(b.docs)
}

/// Serialises documents back to CoNLL-U with `date` and `item_id` comments.
pub fn write_conllu(docs: &[AnnotatedDoc]) -> String {
    let mut out = String::new();
    let mut date = None;
    for d in docs {
        if date != Some(d.date) {
            out.push_str(&format!("# date = {}\n", d.date));
            date = Some(d.date);
        }
        out.push_str(&format!("# item_id = {}\n", d.item_id));
        for s in &d.sentences {
            if let Some(id) = &s.sent_id {
                out.push_str(&format!("# sent_id = {id}\n"));
            }
            if let Some(t) = &s.text {
                out.push_str(&format!("# text = {t}\n"));
            }
            for t in &s.tokens {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t{}\n",
                    t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel, t.misc
                ));
            }
            out.push('\n');
        }
    }
    out
}

/// One line of the cluster manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub date: NaiveDate,
    /// CoNLL-U file, relative to the manifest's directory.
    pub conllu: String,
    pub item_ids: Vec<String>,
    /// Source news JSONL the items came from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// 1-based line of each item in `source`, parallel to `item_ids`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_lines: Vec<usize>,
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push(entry);
    }
    Ok(out)
}

/// Reads every CoNLL-U file named in a manifest and checks that each file's
/// documents match the manifest's date and item ids.
pub fn read_annotated_corpus(manifest: impl AsRef<Path>) -> Result<Vec<AnnotatedDoc>> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut docs = Vec::new();
    for entry in load_manifest(manifest)? {
        let file = base.join(&entry.conllu);
        let text = std::fs::read_to_string(&file)?;
        let parsed = parse_conllu(&text, &file, Some(entry.date))?;
        for d in &parsed {
            if d.date != entry.date {
                return Err(Error::InvalidInput(format!(
                    "{}: item `{}` dated {} but manifest says {}",
                    file.display(),
                    d.item_id,
                    d.date,
                    entry.date
                )));
            }
            if !entry.item_ids.contains(&d.item_id) {
                return Err(Error::InvalidInput(format!(
                    "{}: item `{}` is not listed in the manifest",
                    file.display(),
                    d.item_id
                )));
            }
        }
        docs.extend(parsed);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# date = 2020-03-09\n# item_id = a1\n# text = Oil fell.\n\
1\tOil\toil\tNOUN\tNN\t_\t2\tnsubj\t_\t_\n\
2\tfell\tfall\tVERB\tVBD\t_\t0\troot\t_\t_\n\
3\t.\t.\tPUNCT\t.\t_\t2\tpunct\t_\t_\n\n\
# item_id = a2\n\
1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tdo\tdo\tAUX\tVBP\t_\t0\troot\t_\t_\n\
2\tn't\tnot\tPART\tRB\t_\t1\tadvmod\t_\tSST=none\n\n";

    #[test]
    fn parses_documents_and_metadata() {
        let docs = parse_conllu(SAMPLE, Path::new("x.conllu"), None).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].item_id, "a1");
        assert_eq!(docs[0].sentences[0].tokens.len(), 3);
        assert_eq!(docs[0].sentences[0].text.as_deref(), Some("Oil fell."));
        assert_eq!(docs[1].sentences[0].tokens.len(), 2);
        assert_eq!(docs[1].sentences[0].tokens[1].misc_value("SST"), Some("none"));
        let s = &docs[0].sentences[0];
        assert_eq!(s.dependents(1).count(), 2);
        assert_eq!(s.head_index(0), Some(1));
    }

    #[test]
    fn column_errors_carry_line_numbers() {
        let bad = "# date = 2020-03-09\n# item_id = a\n1\tOil\toil\tNOUN\n";
        let err = parse_conllu(bad, Path::new("b.conllu"), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn write_round_trip() {
        let docs = parse_conllu(SAMPLE, Path::new("x.conllu"), None).unwrap();
        let again = parse_conllu(&write_conllu(&docs), Path::new("y.conllu"), None).unwrap();
        assert_eq!(docs, again);
    }

    #[test]
    fn missing_date_is_an_error() {
        let text = "# item_id = a\n1\tOil\toil\tNOUN\tNN\t_\t0\troot\t_\t_\n";
        assert!(parse_conllu(text, Path::new("c.conllu"), None).is_err());
    }
}
