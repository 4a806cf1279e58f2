use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use oilcast::document;
use oilcast::garch;
use oilcast::pipeline::{
    self, daily_sentiment, dm_test, extract_event_records, fit_arima, load_news, load_prices, point_metrics,
    run_experiment, run_seed, schema_match_eval, squared_errors, write_report, DsConvention, ExperimentConfig,
    GoldEvent, SplitPlan,
};
use oilcast::sentiment::{score_text, write_daily_csv};
use oilcast::synth::{generate, SyntheticSpec};
use oilcast::{Error, Result};

/// News-aware crude-oil price forecasting.
#[derive(Parser)]
#[command(name = "oilcast", version)]
struct Cli {
    /// Experiment config (TOML). Relative paths inside resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed list (or the event-model seed) with a single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output_dir`, then `.`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Ds {
    AsWritten,
    Conventional,
}

#[derive(Subcommand)]
enum Command {
    /// Clean prices, filter and align news, write the cleaned inputs.
    Ingest,
    /// Fit the mean model on the training split.
    FitArima,
    /// Fit the variance model on the mean model's residuals.
    FitGarch,
    /// Score one text, or write daily sentiment for the configured news.
    ScoreSentiment {
        #[arg(long)]
        text: Option<String>,
    },
    /// Train the event model and write one event record per news day.
    ExtractEvents,
    /// Train every configured model for one seed and save the fused models.
    Train,
    /// Run all models over all seeds and write metrics, DM tests and predictions.
    Backtest,
    /// Point metrics for every model column of a predictions CSV.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum)]
        ds: Option<Ds>,
    },
    /// Diebold-Mariano test between two model columns of a predictions CSV.
    DmTest {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
    },
    /// Write the synthetic market, news and annotations plus a config.
    GenerateSynthetic {
        #[arg(long)]
        days: Option<usize>,
    },
}

struct Ctx {
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn config(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs --config".into()))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
            cfg.events.seed = s;
        }
        Ok(cfg)
    }

    fn out_dir(&self, cfg: Option<&ExperimentConfig>) -> Result<PathBuf> {
        let dir = self
            .out
            .clone()
            .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }
}

fn split_of(cfg: &ExperimentConfig, n: usize) -> Result<SplitPlan> {
    SplitPlan::new(n, cfg.split.train_ratio, cfg.split.val_fraction)
}

fn ingest(ctx: &Ctx) -> Result<Value> {
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let raw = oilcast::ingest::parse_price_csv(&cfg.data.prices)?;
    let prices = oilcast::ingest::clean_outliers(&raw)?;
    let replaced = raw.values().iter().zip(prices.values()).filter(|(a, b)| a != b).count();
    oilcast::ingest::write_price_csv(out.join("prices_clean.csv"), &prices)?;
    let lex = cfg.lexicon()?;
    let news = load_news(&cfg, &prices, &lex)?;
    let mut lines = String::new();
    for item in news.values().flatten() {
        lines.push_str(&serde_json::to_string(item)?);
        lines.push('\n');
    }
    std::fs::write(out.join("news_kept.jsonl"), lines)?;
    Ok(json!({
        "prices": prices.len(),
        "replaced_outliers": replaced,
        "news_days": news.len(),
        "news_items": news.values().map(Vec::len).sum::<usize>(),
        "out": out,
    }))
}

fn fit_arima_cmd(ctx: &Ctx) -> Result<Value> {
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let prices = load_prices(&cfg)?;
    let split = split_of(&cfg, prices.len())?;
    let m = fit_arima(&cfg, &prices.values()[..split.train_end_index])?;
    document::save(out.join("arima.json"), &m, None)?;
    Ok(json!({
        "order": [m.spec.p, m.spec.d, m.spec.q],
        "intercept": m.intercept,
        "ar": m.ar_coeffs,
        "ma": m.ma_coeffs,
        "std_errors": m.std_errors,
        "sigma2": m.sigma2,
        "aic": m.aic,
        "bic": m.bic,
        "train_len": split.train_end_index,
    }))
}

fn fit_garch_cmd(ctx: &Ctx) -> Result<Value> {
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let prices = load_prices(&cfg)?;
    let split = split_of(&cfg, prices.len())?;
    let m = fit_arima(&cfg, &prices.values()[..split.train_end_index])?;
    let arch = garch::lm_arch_test(&m.residuals, 12)?;
    let g = garch::fit(&m.residuals, cfg.garch.p, cfg.garch.q)?;
    document::save(out.join("garch.json"), &g, None)?;
    Ok(json!({
        "arch_lm": arch,
        "alpha0": g.alpha0,
        "alpha": g.alpha,
        "beta": g.beta,
        "persistence": g.persistence(),
        "loglik": g.loglik,
        "bic": g.bic,
    }))
}

fn score_sentiment(ctx: &Ctx, text: Option<String>) -> Result<Value> {
    if let Some(t) = text {
        let lex = match &ctx.config {
            Some(_) => ctx.config()?.lexicon()?,
            None => oilcast::sentiment::SentimentLexicon::default(),
        };
        return Ok(serde_json::to_value(score_text(&t, &lex))?);
    }
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let prices = load_prices(&cfg)?;
    let lex = cfg.lexicon()?;
    let news = load_news(&cfg, &prices, &lex)?;
    let daily = daily_sentiment(&news, &lex);
    let rows: Vec<_> = daily.into_iter().collect();
    let path = out.join("sentiment.csv");
    write_daily_csv(&path, &rows)?;
    Ok(json!({ "days": rows.len(), "path": path }))
}

fn extract_events(ctx: &Ctx) -> Result<Value> {
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let prices = load_prices(&cfg)?;
    let split = split_of(&cfg, prices.len())?;
    let lex = cfg.lexicon()?;
    let news = load_news(&cfg, &prices, &lex)?;
    let stage = extract_event_records(&cfg, &prices, &news, prices.dates()[split.train_end_index])?
        .ok_or_else(|| Error::Config("data.manifest and data.embeddings are required".into()))?;
    let mut lines = String::new();
    for rec in stage.records.values() {
        lines.push_str(&serde_json::to_string(rec)?);
        lines.push('\n');
    }
    std::fs::write(out.join("events.jsonl"), lines)?;
    document::save(out.join("event_model.json"), &stage.params, Some(cfg.events.seed))?;
    let mut report = json!({
        "clusters": stage.records.len(),
        "final_elbo": stage.report.elbo.last(),
    });
    if let Some(gold_path) = &cfg.data.gold_events {
        let gold = oilcast::events::schema::load_gold(gold_path)?;
        let predicted: Vec<GoldEvent> = stage
            .records
            .values()
            .flat_map(|r| {
                r.real_events().map(move |e| GoldEvent {
                    date: Some(r.date),
                    ..GoldEvent::from(e)
                })
            })
            .collect();
        report["schema_match"] = serde_json::to_value(schema_match_eval(&predicted, &gold))?;
    }
    Ok(report)
}

fn train(ctx: &Ctx) -> Result<Value> {
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let seed = cfg.seeds[0];
    let prep = pipeline::prepare(&cfg)?;
    let [_, _, test] = prep.row_ranges();
    let actual = &prep.targets[test];
    let models = run_seed(&cfg, &prep, seed);
    let mut report = serde_json::Map::new();
    for (kind, pred) in &models.test_predictions {
        let v = match pred {
            Ok(p) => serde_json::to_value(point_metrics(actual, p, cfg.eval.ds_convention)?)?,
            Err(e) => json!({ "error": e.to_string() }),
        };
        report.insert(kind.name().to_string(), v);
    }
    for (kind, model) in &models.agesl {
        let file = format!("{}-seed{seed}.json", kind.name().to_lowercase());
        document::save(out.join(file), model, Some(seed))?;
    }
    Ok(json!({ "seed": seed, "test": report }))
}

fn backtest(ctx: &Ctx) -> Result<Value> {
    let cfg = ctx.config()?;
    let out = ctx.out_dir(Some(&cfg))?;
    let report = run_experiment(&cfg)?;
    write_report(&report, &out)?;
    let summary: serde_json::Map<String, Value> = report
        .summaries
        .iter()
        .map(|s| {
            (
                s.model.name().to_string(),
                json!({ "median_rmse": s.median_rmse, "mean": s.mean }),
            )
        })
        .collect();
    Ok(json!({ "arima_order": report.arima_order.to_string(), "models": summary, "out": out }))
}

/// `date,actual,<model>...` as written by the backtest.
fn read_predictions(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?
        .split(',')
        .map(str::to_string)
        .collect();
    if header.len() < 3 || header[0] != "date" || header[1] != "actual" {
        return Err(Error::parse(path, 1, "expected header date,actual,<model>..."));
    }
    let mut cols = vec![Vec::new(); header.len() - 1];
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::parse(path, i + 2, format!("expected {} columns", header.len())));
        }
        for (c, cell) in cols.iter_mut().zip(&cells[1..]) {
            c.push(cell.trim().parse().map_err(|_| Error::parse(path, i + 2, format!("bad number {cell:?}")))?);
        }
    }
    Ok((header[1..].to_vec(), cols))
}

fn column<'a>(names: &[String], cols: &'a [Vec<f64>], want: &str) -> Result<&'a [f64]> {
    names
        .iter()
        .position(|n| n == want)
        .map(|i| cols[i].as_slice())
        .ok_or_else(|| Error::InvalidInput(format!("no column {want:?}; have {}", names.join(", "))))
}

fn evaluate(ctx: &Ctx, predictions: &Path, ds: Option<Ds>) -> Result<Value> {
    let conv = match ds {
        Some(Ds::AsWritten) => DsConvention::AsWritten,
        Some(Ds::Conventional) => DsConvention::Conventional,
        None if ctx.config.is_some() => ctx.config()?.eval.ds_convention,
        None => DsConvention::default(),
    };
    let (names, cols) = read_predictions(predictions)?;
    let mut out = serde_json::Map::new();
    for (name, col) in names.iter().zip(&cols).skip(1) {
        out.insert(name.clone(), serde_json::to_value(point_metrics(&cols[0], col, conv)?)?);
    }
    Ok(Value::Object(out))
}

fn dm_cmd(predictions: &Path, a: &str, b: &str, horizon: usize) -> Result<Value> {
    let (names, cols) = read_predictions(predictions)?;
    let actual = &cols[0];
    let la = squared_errors(actual, column(&names, &cols, a)?);
    let lb = squared_errors(actual, column(&names, &cols, b)?);
    let r = dm_test(&la, &lb, horizon)?;
    Ok(json!({ "a": a, "b": b, "horizon": horizon, "statistic": r.statistic, "p_value": r.p_value }))
}

fn generate_synthetic(ctx: &Ctx, days: Option<usize>) -> Result<Value> {
    let out = ctx.out_dir(None)?;
    let mut spec = SyntheticSpec::default();
    if let Some(d) = days {
        spec.days = d;
    }
    let seed = ctx.seed.unwrap_or(0);
    let corpus = generate(&spec, seed)?;
    let files = corpus.write(&out)?;
    let config = out.join("config.toml");
    std::fs::write(&config, ExperimentConfig::synthetic().to_toml()?)?;
    Ok(json!({ "seed": seed, "days": spec.days, "files": files, "config": config }))
}

fn run(cli: Cli) -> Result<Value> {
    let ctx = Ctx {
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Ingest => ingest(&ctx),
        Command::FitArima => fit_arima_cmd(&ctx),
        Command::FitGarch => fit_garch_cmd(&ctx),
        Command::ScoreSentiment { text } => score_sentiment(&ctx, text),
        Command::ExtractEvents => extract_events(&ctx),
        Command::Train => train(&ctx),
        Command::Backtest => backtest(&ctx),
        Command::Evaluate { predictions, ds } => evaluate(&ctx, &predictions, ds),
        Command::DmTest {
            predictions,
            a,
            b,
            horizon,
        } => dm_cmd(&predictions, &a, &b, horizon),
        Command::GenerateSynthetic { days } => generate_synthetic(&ctx, days),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(v) => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "kind": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
