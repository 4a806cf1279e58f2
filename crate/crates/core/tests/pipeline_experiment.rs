use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, Weekday};
use oilcast::events::{EventRecord, EventTypeVector, OdeeConfig};
use oilcast::pipeline::*;
use oilcast::sentiment::SentimentVector;
use oilcast::synth::{generate, SyntheticSpec};

fn small_corpus(dir: &Path, days: usize, seed: u64) {
    let spec = SyntheticSpec {
        days,
        ..Default::default()
    };
    generate(&spec, seed).unwrap().write(dir).unwrap();
}

fn small_config(dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::synthetic();
    cfg.events = OdeeConfig {
        k: 4,
        epochs: 3,
        ..Default::default()
    };
    cfg.lstm.hidden_dim = 6;
    cfg.lstm.epochs = 3;
    cfg.fusion.epochs = 3;
    cfg.seeds = vec![3];
    cfg.output_dir = None;
    ExperimentConfig::from_toml(&cfg.to_toml().unwrap(), dir).unwrap()
}

#[test]
fn feature_rows_cover_forecastable_days() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 300, 5);
    let prep = prepare(&small_config(dir.path())).unwrap();
    let n = prep.prices.len();
    assert_eq!(prep.rows.len(), n - PRICE_LAGS);
    assert_eq!(prep.rows[0].date, prep.prices.dates()[PRICE_LAGS]);
    for (k, row) in prep.rows.iter().enumerate() {
        assert_eq!(row.concat().len(), 320);
        assert!(row.garch_var >= 0.0);
        let t = k + PRICE_LAGS;
        assert_eq!(row.last_price(), prep.prices.values()[t - 1]);
        assert_eq!(row.price_lags[PRICE_LAGS - 1], prep.prices.values()[t - PRICE_LAGS]);
        assert_eq!(prep.targets[k], prep.prices.values()[t]);
    }
}

#[test]
fn days_without_news_are_neutral_and_padded() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        days: 300,
        news_prob: 0.6,
        ..Default::default()
    };
    let corpus = generate(&spec, 8).unwrap();
    corpus.write(dir.path()).unwrap();
    let prep = prepare(&small_config(dir.path())).unwrap();
    let mut quiet = 0;
    for row in &prep.rows {
        let t = prep.prices.index_of(row.date).unwrap();
        if corpus.truth[t - 1].event_type.is_none() {
            quiet += 1;
            assert_eq!(row.sentiment, SentimentVector::NEUTRAL);
            assert_eq!(row.type_vec, EventTypeVector::zeros());
            assert!(row.arg_embedding.iter().all(|v| *v == 0.0));
        } else {
            assert_ne!(row.type_vec, EventTypeVector::zeros());
        }
    }
    assert!(quiet > 50);
}

#[test]
fn non_trading_day_keys_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 200, 2);
    let prep = prepare(&small_config(dir.path())).unwrap();
    let sat = prep
        .prices
        .dates()
        .iter()
        .map(|d| *d + chrono::Days::new(1))
        .find(|d| d.weekday() == Weekday::Sat)
        .unwrap();
    let sentiments = BTreeMap::from([(sat, SentimentVector::NEUTRAL)]);
    let err = build_features(&prep.prices, &sentiments, &BTreeMap::new(), &prep.arima, &prep.garch).unwrap_err();
    assert!(err.to_string().contains(&sat.to_string()), "{err}");
    let events = BTreeMap::from([(sat, EventRecord::padded(sat))]);
    let err = build_features(&prep.prices, &BTreeMap::new(), &events, &prep.arima, &prep.garch).unwrap_err();
    assert!(err.to_string().contains(&sat.to_string()), "{err}");
}

#[test]
fn identical_config_gives_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 300, 6);
    let cfg = small_config(dir.path());
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.split, b.split);
    assert_eq!(a, b);
    assert_eq!(a.summaries.len(), ModelKind::ALL.len());
    for s in &a.summaries {
        for r in &s.runs {
            let e = r.report.unwrap_or_else(|| panic!("{} failed: {:?}", s.model, r.error));
            assert!(e.rmse >= 0.0 && (0.0..=1.0).contains(&e.ds) && e.mape >= 0.0);
            assert_eq!(e.n, a.split.test_len());
        }
    }
    let dm = &a.dm[0];
    for i in 0..dm.models.len() {
        assert_eq!(dm.statistic[i][i], Some(0.0));
        assert_eq!(dm.p_value[i][i], Some(1.0));
    }
    let out = tempfile::tempdir().unwrap();
    write_report(&a, out.path()).unwrap();
    for f in ["metrics.csv", "summary.csv", "predictions.csv", "report.json"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let preds = std::fs::read_to_string(out.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), a.split.test_len() + 1);
    assert!(preds.starts_with("date,actual,ARIMA,LSTM,"));
}

#[test]
fn a_failing_model_is_recorded_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 200, 4);
    let mut cfg = small_config(dir.path());
    cfg.models = vec![ModelKind::Arima, ModelKind::Lstm];
    cfg.lstm.lr = f64::NAN;
    let rep = run_experiment(&cfg).unwrap();
    let lstm = rep.summary(ModelKind::Lstm).unwrap();
    assert!(lstm.runs[0].error.is_some());
    assert!(lstm.median_rmse.is_none());
    assert!(rep.summary(ModelKind::Arima).unwrap().runs[0].report.is_some());
}

#[test]
fn news_after_the_last_price_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    small_corpus(dir.path(), 120, 1);
    let cfg = small_config(dir.path());
    let late = r#"{"date":"2099-01-01","headline":"oil late","body":"","source":"x"}"#;
    let news = dir.path().join("news.jsonl");
    let mut text = std::fs::read_to_string(&news).unwrap();
    text.push_str(late);
    text.push('\n');
    std::fs::write(&news, text).unwrap();
    let err = prepare(&cfg).unwrap_err();
    assert!(err.to_string().contains("2099-01-01"), "{err}");
}
