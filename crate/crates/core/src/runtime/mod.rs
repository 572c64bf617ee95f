//! End-to-end orchestration: configuration, per-frame stage fan-out/join,
//! the JSON Lines event log and latency statistics.

mod config;
mod events;
mod latency;
mod pipeline;
mod worker;

pub use config::{
    load_config, parse_config, ConfigError, ObjectModelConfig, PipelineConfig, TtsConfig,
    TtsModeName,
};
pub use events::{read_events, EventSink, PipelineEvent, StageRecord, SKIPPED};
pub use latency::{format_latency_table, nearest_rank, report_latency, LatencyStats};
pub use pipeline::{build_stages, run_pipeline, RunSummary, RuntimeError};
