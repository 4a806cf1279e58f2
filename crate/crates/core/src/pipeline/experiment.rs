//! Experiment configuration, the shared data stages and the benchmark run.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::{align_to_trading_day, build_features, Channels, FeatureRow, SplitPlan, Standardizer};
use super::fusion::{agesl_predictions, fuse_and_train, init_agesl, AgeslModel, FusionConfig, FusionData, FusionInput};
use super::metrics::{dm_test, point_metrics, squared_errors, DsConvention, EvalReport};
use super::train::{lstm_predictions, train_lstm, LstmTrainConfig, SequenceData};
use crate::arima::{self, ArimaModel, ArimaSpec};
use crate::error::{Error, Result};
use crate::events::{
    assemble_events, load_embeddings, read_annotated_corpus, EventRecord, NewsCluster, OdeeConfig, OdeeParams,
    TrainReport,
};
use crate::garch::{self, GarchModel};
use crate::ingest::{clean_outliers, parse_news_jsonl, parse_price_csv, top_items, RawNewsItem, ITEMS_PER_DAY};
use crate::neural::LstmRegressor;
use crate::sentiment::{aggregate_daily, score_text, SentimentLexicon, SentimentVector};
use crate::timeseries::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "ARIMA")]
    Arima,
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "LSTM-Sent")]
    LstmSent,
    #[serde(rename = "LSTM-Event")]
    LstmEvent,
    #[serde(rename = "ARIMA-GARCH-Sent")]
    ArimaGarchSent,
    #[serde(rename = "AGESL")]
    Agesl,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Arima,
        ModelKind::Lstm,
        ModelKind::LstmSent,
        ModelKind::LstmEvent,
        ModelKind::ArimaGarchSent,
        ModelKind::Agesl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Arima => "ARIMA",
            ModelKind::Lstm => "LSTM",
            ModelKind::LstmSent => "LSTM-Sent",
            ModelKind::LstmEvent => "LSTM-Event",
            ModelKind::ArimaGarchSent => "ARIMA-GARCH-Sent",
            ModelKind::Agesl => "AGESL",
        }
    }

    fn channels(self) -> Option<Channels> {
        match self {
            ModelKind::Lstm => Some(Channels::LAGS),
            ModelKind::LstmSent => Some(Channels {
                events: false,
                sentiment: true,
            }),
            ModelKind::LstmEvent | ModelKind::Agesl => Some(Channels {
                events: true,
                sentiment: false,
            }),
            _ => None,
        }
    }

    fn salt(self) -> u64 {
        self as u64 * 0x9E37_79B9
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub prices: PathBuf,
    pub news: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Tab-separated `token\tvalence` lexicon; the bundled one when absent.
    pub lexicon: Option<PathBuf>,
    pub filter_terms: Vec<String>,
    /// Gold events for schema matching, JSON lines.
    pub gold_events: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_ratio: f64,
    pub val_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_ratio: 0.8,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArimaConfig {
    /// `[p, d, q]`; chosen by ADF and BIC when absent.
    pub order: Option<[usize; 3]>,
    pub max_p: usize,
    pub max_q: usize,
}

impl Default for ArimaConfig {
    fn default() -> Self {
        ArimaConfig {
            order: None,
            max_p: 3,
            max_q: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GarchConfig {
    pub p: usize,
    pub q: usize,
}

impl Default for GarchConfig {
    fn default() -> Self {
        GarchConfig { p: 1, q: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub ds_convention: DsConvention,
    pub dm_horizon: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ds_convention: DsConvention::AsWritten,
            dm_horizon: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub split: SplitConfig,
    pub arima: ArimaConfig,
    pub garch: GarchConfig,
    pub events: OdeeConfig,
    pub lstm: LstmTrainConfig,
    pub fusion: FusionConfig,
    pub eval: EvalConfig,
    pub seeds: Vec<u64>,
    pub models: Vec<ModelKind>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataConfig::default(),
            split: SplitConfig::default(),
            arima: ArimaConfig::default(),
            garch: GarchConfig::default(),
            events: OdeeConfig::default(),
            lstm: LstmTrainConfig::default(),
            fusion: FusionConfig::default(),
            eval: EvalConfig::default(),
            seeds: (0..10).collect(),
            models: ModelKind::ALL.to_vec(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Settings used for the generated synthetic market, with data paths
    /// relative to its directory.
    pub fn synthetic() -> Self {
        ExperimentConfig {
            data: DataConfig {
                prices: "prices.csv".into(),
                news: Some("news.jsonl".into()),
                manifest: Some(PathBuf::from("annotated").join("manifest.jsonl")),
                embeddings: Some("embeddings.txt".into()),
                lexicon: None,
                filter_terms: vec![crate::synth::FILTER_TERM.to_string()],
                gold_events: None,
            },
            events: OdeeConfig {
                k: 5,
                epochs: 15,
                ..Default::default()
            },
            lstm: LstmTrainConfig {
                hidden_dim: 32,
                seq_len: 10,
                epochs: 25,
                ..Default::default()
            },
            seeds: (0..5).collect(),
            output_dir: Some("results".into()),
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        cfg.resolve(base);
        Ok(cfg)
    }

    /// Reads a TOML config; relative paths are taken from its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.prices);
        for p in [
            &mut self.data.news,
            &mut self.data.manifest,
            &mut self.data.embeddings,
            &mut self.data.lexicon,
            &mut self.data.gold_events,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.prices.as_os_str().is_empty() {
            return Err(Error::Config("data.prices is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.lstm.hidden_dim == 0 || self.lstm.seq_len == 0 || self.fusion.hidden_dim == 0 {
            return Err(Error::Config("hidden sizes and seq_len must be positive".into()));
        }
        if self.data.manifest.is_some() != self.data.embeddings.is_some() {
            return Err(Error::Config("data.manifest and data.embeddings go together".into()));
        }
        if self.eval.dm_horizon == 0 {
            return Err(Error::Config("eval.dm_horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lexicon(&self) -> Result<SentimentLexicon> {
        match &self.data.lexicon {
            Some(p) => SentimentLexicon::load(p),
            None => Ok(SentimentLexicon::default()),
        }
    }
}

pub fn load_prices(cfg: &ExperimentConfig) -> Result<PriceSeries> {
    clean_outliers(&parse_price_csv(&cfg.data.prices)?)
}

/// News items re-dated to the first trading day on or after their date,
/// filtered and trimmed to [`ITEMS_PER_DAY`] per day.
pub fn load_news(cfg: &ExperimentConfig, prices: &PriceSeries, lex: &SentimentLexicon) -> Result<BTreeMap<NaiveDate, Vec<RawNewsItem>>> {
    let Some(path) = &cfg.data.news else {
        return Ok(BTreeMap::new());
    };
    let days = parse_news_jsonl(path, &cfg.data.filter_terms)?;
    let mut out: BTreeMap<NaiveDate, Vec<RawNewsItem>> = BTreeMap::new();
    let mut late = Vec::new();
    for day in days {
        match align_to_trading_day(prices.dates(), day.date) {
            Some(t) => out.entry(t).or_default().extend(day.items.into_iter().map(|mut it| {
                it.date = t;
                it
            })),
            None => late.push(day.date.to_string()),
        }
    }
    if !late.is_empty() {
        return Err(Error::InvalidInput(format!(
            "news dated after the last price: {}",
            late.join(", ")
        )));
    }
    for items in out.values_mut() {
        *items = top_items(items, ITEMS_PER_DAY, lex);
    }
    Ok(out)
}

pub fn daily_sentiment(news: &BTreeMap<NaiveDate, Vec<RawNewsItem>>, lex: &SentimentLexicon) -> BTreeMap<NaiveDate, SentimentVector> {
    news.iter()
        .map(|(d, items)| {
            let scores: Vec<_> = items.iter().map(|it| score_text(&it.text(), lex)).collect();
            (*d, aggregate_daily(&scores))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EventStage {
    pub params: OdeeParams,
    pub report: TrainReport,
    pub records: BTreeMap<NaiveDate, EventRecord>,
}

/// Reads annotated clusters, trains the event model on clusters dated before
/// `train_until` and extracts an event record for every cluster. When news
/// items carry ids only the kept items' documents are used.
pub fn extract_event_records(
    cfg: &ExperimentConfig,
    prices: &PriceSeries,
    news: &BTreeMap<NaiveDate, Vec<RawNewsItem>>,
    train_until: NaiveDate,
) -> Result<Option<EventStage>> {
    let (Some(manifest), Some(emb_path)) = (&cfg.data.manifest, &cfg.data.embeddings) else {
        return Ok(None);
    };
    let emb = load_embeddings(emb_path)?;
    let kept: HashSet<&str> = news.values().flatten().filter_map(|it| it.id.as_deref()).collect();
    let mut docs = read_annotated_corpus(manifest)?;
    if !kept.is_empty() {
        docs.retain(|d| kept.contains(d.item_id.as_str()));
    }
    let mut late = Vec::new();
    for d in &mut docs {
        match align_to_trading_day(prices.dates(), d.date) {
            Some(t) => d.date = t,
            None => late.push(format!("{} ({})", d.date, d.item_id)),
        }
    }
    if !late.is_empty() {
        return Err(Error::InvalidInput(format!(
            "annotated items dated after the last price: {}",
            late.join(", ")
        )));
    }
    let clusters = NewsCluster::from_docs(docs, &emb)?;
    let train: Vec<NewsCluster> = clusters.iter().filter(|c| c.date < train_until).cloned().collect();
    let (params, report) = OdeeParams::train(&train, &cfg.events)?;
    let mut records = BTreeMap::new();
    for c in &clusters {
        let t = params.infer_type(c)?;
        let slots = params.assign_slots(c, &t)?;
        records.insert(c.date, assemble_events(c, &slots, t, &emb)?);
    }
    Ok(Some(EventStage {
        params,
        report,
        records,
    }))
}

/// Everything shared by the benchmark models.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub prices: PriceSeries,
    pub split: SplitPlan,
    pub arima: ArimaModel,
    pub garch: GarchModel,
    pub rows: Vec<FeatureRow>,
    pub targets: Vec<f64>,
    pub events: Option<EventStage>,
}

impl Prepared {
    pub fn row_ranges(&self) -> [std::ops::Range<usize>; 3] {
        self.split.row_ranges()
    }

    /// Standard deviation of one-day changes over the training rows.
    pub fn change_scale(&self) -> f64 {
        let [train, _, _] = self.row_ranges();
        let d: Vec<f64> = train.map(|i| self.targets[i] - self.rows[i].last_price()).collect();
        let m = d.iter().sum::<f64>() / d.len().max(1) as f64;
        let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / d.len().max(1) as f64;
        if v > 0.0 {
            v.sqrt()
        } else {
            1.0
        }
    }

    pub fn sequences(&self, channels: Channels, seq_len: usize) -> Result<(SequenceData, Standardizer)> {
        let [train, _, _] = self.row_ranges();
        let raw: Vec<Vec<f64>> = self.rows.iter().map(|r| channels.raw(r)).collect();
        let scaler = Standardizer::fit(&raw[train])?;
        let inputs = raw.iter().map(|r| scaler.apply(r)).collect();
        let last = self.rows.iter().map(FeatureRow::last_price).collect();
        let data = SequenceData::new(inputs, self.targets.clone(), last, self.change_scale(), seq_len)?;
        Ok((data, scaler))
    }

    pub fn fusion_inputs(&self) -> Vec<FusionInput> {
        self.rows.iter().map(|r| FusionInput::from_row(r, None)).collect()
    }
}

pub fn fit_arima(cfg: &ExperimentConfig, train: &[f64]) -> Result<ArimaModel> {
    let spec = match cfg.arima.order {
        Some([p, d, q]) => ArimaSpec::new(p, d, q),
        None => arima::select_order(train, cfg.arima.max_p, cfg.arima.max_q),
    };
    arima::fit(train, spec)
}

/// Loads data, fits ARIMA and GARCH on the training split and builds the
/// feature rows.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let prices = load_prices(cfg)?;
    let split = SplitPlan::new(prices.len(), cfg.split.train_ratio, cfg.split.val_fraction)?;
    let lex = cfg.lexicon()?;
    let news = load_news(cfg, &prices, &lex)?;
    let sentiment = daily_sentiment(&news, &lex);
    let train_until = prices.dates()[split.train_end_index];
    let events = extract_event_records(cfg, &prices, &news, train_until)?;
    let y = prices.values();
    let arima = fit_arima(cfg, &y[..split.train_end_index])?;
    log::info!("mean model {}", arima.spec);
    let garch = garch::fit(&arima.residuals, cfg.garch.p, cfg.garch.q)?;
    let empty = BTreeMap::new();
    let records = events.as_ref().map_or(&empty, |e| &e.records);
    let rows = build_features(&prices, &sentiment, records, &arima, &garch)?;
    let targets = y[super::features::PRICE_LAGS..].to_vec();
    if split.train_end_index <= super::features::PRICE_LAGS + 1 {
        return Err(Error::InsufficientData {
            what: "training observations beyond the lag window",
            needed: super::features::PRICE_LAGS + 2,
            got: split.train_end_index,
        });
    }
    Ok(Prepared {
        prices,
        split,
        arima,
        garch,
        rows,
        targets,
        events,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    pub runs: Vec<SeedResult>,
    pub mean: Option<EvalReport>,
    pub median_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmMatrix {
    pub seed: u64,
    pub models: Vec<ModelKind>,
    /// `statistic[i][j]` compares model `i` against model `j`; positive means
    /// `i` has the larger squared-error loss.
    pub statistic: Vec<Vec<Option<f64>>>,
    pub p_value: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSeries {
    pub seed: u64,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub models: BTreeMap<ModelKind, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub split: SplitPlan,
    pub arima_order: ArimaSpec,
    pub summaries: Vec<ModelSummary>,
    pub dm: Vec<DmMatrix>,
    /// Test-period predictions for the first seed.
    pub predictions: PredictionSeries,
}

impl ExperimentReport {
    pub fn summary(&self, model: ModelKind) -> Option<&ModelSummary> {
        self.summaries.iter().find(|s| s.model == model)
    }
}

/// Trained benchmark models for one seed; `None` entries failed.
pub struct SeedModels {
    pub lstm: BTreeMap<ModelKind, (LstmRegressor, Standardizer)>,
    pub agesl: BTreeMap<ModelKind, AgeslModel>,
    pub test_predictions: BTreeMap<ModelKind, Result<Vec<f64>>>,
}

/// Trains and predicts every requested model for one seed.
pub fn run_seed(cfg: &ExperimentConfig, prep: &Prepared, seed: u64) -> SeedModels {
    let [train, val, test] = prep.row_ranges();
    let mut out = SeedModels {
        lstm: BTreeMap::new(),
        agesl: BTreeMap::new(),
        test_predictions: BTreeMap::new(),
    };
    let wanted = |k: ModelKind| cfg.models.contains(&k);
    if wanted(ModelKind::Arima) {
        out.test_predictions
            .insert(ModelKind::Arima, Ok(test.clone().map(|i| prep.rows[i].arima_mean).collect()));
    }
    let mut sequences = BTreeMap::new();
    for kind in [ModelKind::Lstm, ModelKind::LstmSent, ModelKind::LstmEvent] {
        let needed = wanted(kind) || (kind == ModelKind::LstmEvent && wanted(ModelKind::Agesl));
        if !needed {
            continue;
        }
        let channels = kind.channels().expect("LSTM variant");
        let result = prep.sequences(channels, cfg.lstm.seq_len).and_then(|(data, scaler)| {
            let fit = train_lstm(&data, train.clone(), val.clone(), &cfg.lstm, seed ^ kind.salt())?;
            log::info!(
                "{kind} seed {seed}: best val rmse {:.4} at epoch {} of {}",
                fit.best_val_rmse,
                fit.best_epoch,
                fit.epochs_run
            );
            let pred = lstm_predictions(&fit.model, &data, test.clone())?;
            Ok((fit.model, scaler, data, pred))
        });
        match result {
            Ok((model, scaler, data, pred)) => {
                if wanted(kind) {
                    out.test_predictions.insert(kind, Ok(pred));
                }
                out.lstm.insert(kind, (model, scaler));
                sequences.insert(kind, data);
            }
            Err(e) => {
                log::warn!("{kind} seed {seed} failed: {e}");
                if wanted(kind) {
                    out.test_predictions.insert(kind, Err(e));
                }
            }
        }
    }
    let inputs = prep.fusion_inputs();
    let scale = prep.change_scale();
    for kind in [ModelKind::ArimaGarchSent, ModelKind::Agesl] {
        if !wanted(kind) {
            continue;
        }
        let result = (|| -> Result<(AgeslModel, Vec<f64>)> {
            let (lstm, seq) = if kind == ModelKind::Agesl {
                let (m, scaler) = out
                    .lstm
                    .get(&ModelKind::LstmEvent)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("event LSTM is unavailable".into()))?;
                let channels = ModelKind::LstmEvent.channels().expect("LSTM variant");
                (Some((m, channels, scaler)), sequences.get(&ModelKind::LstmEvent))
            } else {
                (None, None)
            };
            let model = init_agesl(lstm, scale, &inputs[train.clone()], &cfg.fusion, seed ^ kind.salt())?;
            let data = FusionData {
                inputs: &inputs,
                targets: &prep.targets,
                sequences: seq,
            };
            let fit = fuse_and_train(model, &data, train.clone(), val.clone(), &cfg.fusion, seed ^ kind.salt())?;
            log::info!(
                "{kind} seed {seed}: best val rmse {:.4} at epoch {} of {}",
                fit.best_val_rmse,
                fit.best_epoch,
                fit.epochs_run
            );
            let pred = agesl_predictions(&fit.model, &data, test.clone())?;
            Ok((fit.model, pred))
        })();
        match result {
            Ok((model, pred)) => {
                out.test_predictions.insert(kind, Ok(pred));
                out.agesl.insert(kind, model);
            }
            Err(e) => {
                log::warn!("{kind} seed {seed} failed: {e}");
                out.test_predictions.insert(kind, Err(e));
            }
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn dm_matrix(seed: u64, preds: &BTreeMap<ModelKind, Vec<f64>>, actual: &[f64], horizon: usize) -> DmMatrix {
    let models: Vec<ModelKind> = preds.keys().copied().collect();
    let losses: Vec<Vec<f64>> = models.iter().map(|m| squared_errors(actual, &preds[m])).collect();
    let k = models.len();
    let mut statistic = vec![vec![None; k]; k];
    let mut p_value = vec![vec![None; k]; k];
    for i in 0..k {
        for j in 0..k {
            match dm_test(&losses[i], &losses[j], horizon) {
                Ok(r) => {
                    statistic[i][j] = Some(r.statistic);
                    p_value[i][j] = Some(r.p_value);
                }
                Err(e) => log::warn!("DM {} vs {}: {e}", models[i], models[j]),
            }
        }
    }
    DmMatrix {
        seed,
        models,
        statistic,
        p_value,
    }
}

/// Trains and evaluates every configured model for every seed on shared
/// splits. A failing model is recorded and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let prep = prepare(cfg)?;
    run_prepared(cfg, &prep)
}

pub fn run_prepared(cfg: &ExperimentConfig, prep: &Prepared) -> Result<ExperimentReport> {
    let [_, _, test] = prep.row_ranges();
    let actual: Vec<f64> = prep.targets[test.clone()].to_vec();
    let dates: Vec<NaiveDate> = prep.rows[test].iter().map(|r| r.date).collect();
    let mut runs: BTreeMap<ModelKind, Vec<SeedResult>> = BTreeMap::new();
    let mut dm = Vec::new();
    let mut first_preds = None;
    for &seed in &cfg.seeds {
        let models = run_seed(cfg, prep, seed);
        let mut ok = BTreeMap::new();
        for (kind, res) in models.test_predictions {
            let entry = runs.entry(kind).or_default();
            match res.and_then(|p| point_metrics(&actual, &p, cfg.eval.ds_convention).map(|r| (r, p))) {
                Ok((report, p)) => {
                    entry.push(SeedResult {
                        seed,
                        report: Some(report),
                        error: None,
                    });
                    ok.insert(kind, p);
                }
                Err(e) => entry.push(SeedResult {
                    seed,
                    report: None,
                    error: Some(e.to_string()),
                }),
            }
        }
        dm.push(dm_matrix(seed, &ok, &actual, cfg.eval.dm_horizon));
        if first_preds.is_none() {
            first_preds = Some(PredictionSeries {
                seed,
                dates: dates.clone(),
                actual: actual.clone(),
                models: ok,
            });
        }
    }
    let summaries = runs
        .into_iter()
        .map(|(model, runs)| {
            let reports: Vec<EvalReport> = runs.iter().filter_map(|r| r.report).collect();
            let mean = (!reports.is_empty()).then(|| {
                let n = reports.len() as f64;
                EvalReport {
                    rmse: reports.iter().map(|r| r.rmse).sum::<f64>() / n,
                    mape: reports.iter().map(|r| r.mape).sum::<f64>() / n,
                    ds: reports.iter().map(|r| r.ds).sum::<f64>() / n,
                    n: reports[0].n,
                }
            });
            ModelSummary {
                model,
                median_rmse: median(reports.iter().map(|r| r.rmse).collect()),
                mean,
                runs,
            }
        })
        .collect();
    Ok(ExperimentReport {
        split: prep.split,
        arima_order: prep.arima.spec,
        summaries,
        dm,
        predictions: first_preds.expect("at least one seed"),
    })
}

/// Writes `metrics.csv`, `summary.csv`, `predictions.csv` and `report.json`.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut m = std::io::BufWriter::new(std::fs::File::create(dir.join("metrics.csv"))?);
    writeln!(m, "model,seed,rmse,mape,ds,n,error")?;
    for s in &report.summaries {
        for r in &s.runs {
            match (&r.report, &r.error) {
                (Some(e), _) => writeln!(m, "{},{},{},{},{},{},", s.model, r.seed, e.rmse, e.mape, e.ds, e.n)?,
                (None, err) => writeln!(
                    m,
                    "{},{},,,,,\"{}\"",
                    s.model,
                    r.seed,
                    err.as_deref().unwrap_or("").replace('"', "'")
                )?,
            }
        }
    }
    m.flush()?;

    let mut s = std::io::BufWriter::new(std::fs::File::create(dir.join("summary.csv"))?);
    writeln!(s, "model,mean_rmse,median_rmse,mean_mape,mean_ds,ok_runs")?;
    for sum in &report.summaries {
        let ok = sum.runs.iter().filter(|r| r.report.is_some()).count();
        match sum.mean {
            Some(e) => writeln!(
                s,
                "{},{},{},{},{},{}",
                sum.model,
                e.rmse,
                sum.median_rmse.unwrap_or(f64::NAN),
                e.mape,
                e.ds,
                ok
            )?,
            None => writeln!(s, "{},,,,,0", sum.model)?,
        }
    }
    s.flush()?;

    let p = &report.predictions;
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("predictions.csv"))?);
    write!(w, "date,actual")?;
    for k in p.models.keys() {
        write!(w, ",{k}")?;
    }
    writeln!(w)?;
    for (i, d) in p.dates.iter().enumerate() {
        write!(w, "{d},{}", p.actual[i])?;
        for v in p.models.values() {
            write!(w, ",{}", v[i])?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_paths() {
        let cfg = ExperimentConfig::synthetic();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text, Path::new("/data")).unwrap();
        assert_eq!(back.data.prices, PathBuf::from("/data/prices.csv"));
        assert_eq!(back.seeds, cfg.seeds);
        assert_eq!(back.models, ModelKind::ALL.to_vec());
    }

    #[test]
    fn config_rejects_missing_prices() {
        assert!(matches!(ExperimentConfig::from_toml("seeds = [1]", Path::new(".")), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml("[data]\nprices = \"p.csv\"\nbogus = 1\n", Path::new(".")).is_ok());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(vec![]), None);
    }
}
