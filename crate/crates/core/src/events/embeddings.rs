//! Word embeddings in the plain text format: one `token v1 … vD` per line.
//! Lines starting with `#` and blank lines are ignored, as is a leading
//! word2vec `count dim` header.

use std::borrow::Cow;
use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, token: impl Into<String>, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "embedding",
                expected: self.dim,
                got: v.len(),
            });
        }
        self.vectors.insert(token.into(), v);
        Ok(())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    /// Exact lookup, then lower-case; unknown tokens map to the zero vector.
    pub fn get(&self, token: &str) -> Cow<'_, [f64]> {
        if let Some(v) = self.vectors.get(token) {
            return Cow::Borrowed(v);
        }
        match self.vectors.get(&token.to_lowercase()) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(vec![0.0; self.dim]),
        }
    }

    /// Entries sorted by token.
    pub fn sorted(&self) -> Vec<(&str, &[f64])> {
        let mut v: Vec<_> = self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice())).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        let mut first = true;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if std::mem::take(&mut first) && is_count_header(line) {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts.next().unwrap_or_default();
            let values: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(origin, i + 1, format!("bad number: {e}")))?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::parse(origin, i + 1, "non-finite component"));
            }
            let t = table.get_or_insert_with(|| EmbeddingTable::new(values.len()));
            if values.len() != t.dim || values.is_empty() {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("expected {} components, found {}", t.dim, values.len()),
                ));
            }
            t.vectors.insert(token.to_string(), values);
        }
        table.ok_or_else(|| Error::parse(origin, 0, "no embedding vectors"))
    }
}

fn is_count_header(line: &str) -> bool {
    let parts: Vec<&str> = line.split_whitespace().collect();
    parts.len() == 2 && parts.iter().all(|p| p.parse::<usize>().is_ok())
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    EmbeddingTable::parse(&std::fs::read_to_string(path)?, path)
}

pub fn write_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# {} tokens, {} dimensions", table.len(), table.dim)?;
    for (tok, v) in table.sorted() {
        write!(out, "{tok}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_lines_three_dims() {
        let t = EmbeddingTable::parse("oil 1 2 3\nprice 0.5 -1 0\n", Path::new("e.txt")).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 3);
        assert_eq!(&*t.get("Oil"), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn unknown_token_is_zero() {
        let t = EmbeddingTable::parse("# header\noil 1 2 3\n", Path::new("e.txt")).unwrap();
        assert_eq!(&*t.get("gas"), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn word2vec_header_is_skipped() {
        let t = EmbeddingTable::parse("2 3\noil 1 2 3\n7 0 0 1\n", Path::new("e.txt")).unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(&*t.get("7"), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn short_line_reports_its_number() {
        let err = EmbeddingTable::parse("oil 1 2 3\nprice 1 2\n", Path::new("e.txt")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
