//! File ingestion: daily price CSV, outlier cleaning and news JSONL.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sentiment::{score_text, SentimentLexicon};
use crate::timeseries::PriceSeries;

/// Half-width, in trading days, of the outlier replacement window.
pub const OUTLIER_WINDOW: usize = 5;
/// News items kept per day for the event and sentiment channels.
pub const ITEMS_PER_DAY: usize = 5;

/// Reads a `date,close` CSV. Rows may be in any order; exact duplicates are
/// collapsed, conflicting duplicates are an error.
pub fn parse_price_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let path = path.as_ref();
    parse_price_text(&std::fs::read_to_string(path)?, path)
}

pub fn parse_price_text(text: &str, origin: &Path) -> Result<PriceSeries> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((hi, header)) = lines.next() else {
        return Err(Error::parse(origin, 0, "empty price file"));
    };
    let cols: Vec<String> = header.split(',').map(|c| c.trim().to_lowercase()).collect();
    if cols != ["date", "close"] {
        return Err(Error::parse(origin, hi + 1, format!("expected header `date,close`, found `{header}`")));
    }
    let mut rows: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let Some((d, v)) = line.split_once(',') else {
            return Err(Error::parse(origin, line_no, "expected two comma-separated fields"));
        };
        let date = NaiveDate::parse_from_str(d.trim(), "%Y-%m-%d")
            .map_err(|_| Error::parse(origin, line_no, format!("bad date {:?}", d.trim())))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("bad price {:?}", v.trim())))?;
        if !value.is_finite() {
            return Err(Error::parse(origin, line_no, "non-finite price"));
        }
        if let Some(prev) = rows.insert(date, value) {
            if prev != value {
                return Err(Error::parse(
                    origin,
                    line_no,
                    format!("duplicate date {date} with conflicting prices {prev} and {value}"),
                ));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::parse(origin, 0, "no price rows"));
    }
    let (dates, values) = rows.into_iter().unzip();
    PriceSeries::new(dates, values)
}

pub fn write_price_csv(path: impl AsRef<Path>, series: &PriceSeries) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "date,close")?;
    for (d, v) in series.dates().iter().zip(series.values()) {
        writeln!(out, "{d},{v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Replaces every non-positive price with the smallest positive price within
/// [`OUTLIER_WINDOW`] trading days on either side.
pub fn clean_outliers(series: &PriceSeries) -> Result<PriceSeries> {
    let orig = series.values();
    let mut out = series.clone();
    let vals = out.values_mut();
    for i in 0..orig.len() {
        if orig[i] > 0.0 {
            continue;
        }
        let lo = i.saturating_sub(OUTLIER_WINDOW);
        let hi = (i + OUTLIER_WINDOW + 1).min(orig.len());
        let repl = orig[lo..hi].iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
        if !repl.is_finite() {
            return Err(Error::Degenerate(format!(
                "no positive price within {OUTLIER_WINDOW} trading days of {}",
                series.dates()[i]
            )));
        }
        log::info!("replaced price {} on {} with {}", orig[i], series.dates()[i], repl);
        vals[i] = repl;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNewsItem {
    pub date: NaiveDate,
    pub headline: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl RawNewsItem {
    pub fn text(&self) -> String {
        if self.body.is_empty() {
            self.headline.clone()
        } else {
            format!("{} {}", self.headline, self.body)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsDay {
    pub date: NaiveDate,
    pub items: Vec<RawNewsItem>,
}

/// Reads news JSONL, keeps items whose headline or body contains any of the
/// filter terms (case-insensitive; an empty list keeps everything) and groups
/// them by date in input order.
pub fn parse_news_jsonl(path: impl AsRef<Path>, filter_terms: &[String]) -> Result<Vec<NewsDay>> {
    let path = path.as_ref();
    parse_news_text(&std::fs::read_to_string(path)?, path, filter_terms)
}

pub fn parse_news_text(text: &str, origin: &Path, filter_terms: &[String]) -> Result<Vec<NewsDay>> {
    let terms: Vec<String> = filter_terms.iter().map(|t| t.to_lowercase()).collect();
    let mut days: BTreeMap<NaiveDate, Vec<RawNewsItem>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: RawNewsItem = serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        if item.headline.trim().is_empty() {
            return Err(Error::parse(origin, i + 1, "empty headline"));
        }
        let hay = format!("{}\n{}", item.headline, item.body).to_lowercase();
        if terms.is_empty() || terms.iter().any(|t| hay.contains(t.as_str())) {
            days.entry(item.date).or_default().push(item);
        }
    }
    Ok(days.into_iter().map(|(date, items)| NewsDay { date, items }).collect())
}

/// Keeps the `k` items with the largest absolute compound sentiment, in their
/// original order.
pub fn top_items(items: &[RawNewsItem], k: usize, lex: &SentimentLexicon) -> Vec<RawNewsItem> {
    let mut scored: Vec<(usize, f64)> = items
        .iter()
        .enumerate()
        .map(|(i, it)| (i, score_text(&it.text(), lex).compound.abs()))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut keep: Vec<usize> = scored.into_iter().take(k).map(|(i, _)| i).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| items[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn series(v: &[f64]) -> PriceSeries {
        let dates = (0..v.len()).map(|i| d("2020-04-01") + chrono::Days::new(i as u64)).collect();
        PriceSeries::new(dates, v.to_vec()).unwrap()
    }

    #[test]
    fn csv_rows_sorted() {
        let text = "date,close\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n";
        let s = parse_price_text(text, Path::new("p.csv")).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.dates()[0], d("2020-01-01"));
    }

    #[test]
    fn duplicate_conflict_names_date() {
        let text = "date,close\n2020-01-01,1\n2020-01-01,2\n";
        let err = parse_price_text(text, Path::new("p.csv")).unwrap_err();
        assert!(err.to_string().contains("2020-01-01"), "{err}");
        let same = "date,close\n2020-01-01,1\n2020-01-01,1\n";
        assert_eq!(parse_price_text(same, Path::new("p.csv")).unwrap().len(), 1);
    }

    #[test]
    fn bad_date_line_number() {
        let err = parse_price_text("date,close\n2020-01-01,1\n01/02/2020,2\n", Path::new("p.csv")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(parse_price_text("", Path::new("p.csv")).is_err());
    }

    #[test]
    fn negative_price_replaced() {
        let s = clean_outliers(&series(&[10.0, -37.0, 12.0])).unwrap();
        assert_eq!(s.values(), &[10.0, 10.0, 12.0]);
        let pos = series(&[1.0, 2.0, 3.0]);
        assert_eq!(clean_outliers(&pos).unwrap(), pos);
        assert!(clean_outliers(&series(&[-1.0, -2.0, -3.0])).is_err());
    }

    #[test]
    fn window_is_five_days() {
        let mut v = vec![50.0; 13];
        v[0] = 1.0;
        v[6] = 0.0;
        v[12] = 2.0;
        // index 0 and 12 are six steps away from 6
        assert_eq!(clean_outliers(&series(&v)).unwrap().values()[6], 50.0);
    }

    #[test]
    fn news_filter_and_grouping() {
        let text = r#"{"date":"2020-01-01","headline":"Crude Oil rises","body":"","source":"a"}
{"date":"2020-01-01","headline":"Football","body":"nothing","source":"a"}
{"date":"2020-01-02","headline":"Markets","body":"crude oil slips","source":"b"}
{"date":"2020-01-03","headline":"Weather","body":"rain","source":"b"}
"#;
        let days = parse_news_text(text, Path::new("n.jsonl"), &["crude oil".into()]).unwrap();
        assert_eq!(days.iter().map(|d| d.items.len()).sum::<usize>(), 2);
        let all = parse_news_text(text, Path::new("n.jsonl"), &[]).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0].items.len(), 2);
    }

    #[test]
    fn malformed_news_line() {
        let err = parse_news_text("{\"date\":\"2020-01-01\",\"headline\":\"x\"}\n{oops\n", Path::new("n"), &[]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn top_items_by_abs_compound() {
        let lex = SentimentLexicon::default();
        let mk = |h: &str| RawNewsItem {
            date: d("2020-01-01"),
            headline: h.into(),
            body: String::new(),
            source: String::new(),
            id: None,
        };
        let items = vec![mk("oil"), mk("terrible crash"), mk("table"), mk("great gain")];
        let kept = top_items(&items, 2, &lex);
        assert_eq!(kept.iter().map(|i| i.headline.as_str()).collect::<Vec<_>>(), ["terrible crash", "great gain"]);
    }
}
