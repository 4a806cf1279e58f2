//! Feature assembly, model training, evaluation and the benchmark runner.

mod experiment;
mod features;
mod fusion;
mod metrics;
mod train;

pub use experiment::{
    daily_sentiment, extract_event_records, fit_arima, load_news, load_prices, prepare, run_experiment,
    run_prepared, run_seed, write_report, ArimaConfig, DataConfig, DmMatrix, EvalConfig, EventStage,
    ExperimentConfig, ExperimentReport, GarchConfig, ModelKind, ModelSummary, PredictionSeries, Prepared,
    SeedModels, SeedResult, SplitConfig,
};
pub use crate::events::{schema_match_eval, GoldEvent, SchemaScores};
pub use features::{
    align_to_trading_day, build_features, Channels, FeatureRow, SplitPlan, Standardizer, FEATURE_DIM, PRICE_LAGS,
};
pub use fusion::{
    agesl_predictions, fuse_and_train, init_agesl, AgeslModel, FusionConfig, FusionData, FusionFit, FusionHead,
    FusionInput, FUSION_INPUTS,
};
pub use metrics::{
    directional_symmetry, dm_test, mape, point_metrics, rmse, squared_errors, DsConvention, EvalReport, DM_MIN_LEN,
};
pub use train::{lstm_outputs, lstm_predictions, train_lstm, LstmFit, LstmTrainConfig, SequenceData};
