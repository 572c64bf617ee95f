use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::announce::{AnnouncePolicy, LanguageSet, DEFAULT_COOLDOWN_MS};
use crate::ingest::{FrameBus, Source};
use crate::vision::{
    StageKind, DEFAULT_CLASSES, DEFAULT_CONF_THRESHOLD, DEFAULT_IOU_THRESHOLD, DEFAULT_TEMPERATURE,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config field `{field}`: {reason}")]
    Validation { field: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TtsModeName {
    Offline,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TtsConfig {
    pub mode: TtsModeName,
    pub endpoint: Option<String>,
    pub lang: String,
    pub languages: LanguageSet,
    pub retries: u32,
}

impl Default for TtsConfig {
    fn default() -> Self {
        Self {
            mode: TtsModeName::Offline,
            endpoint: None,
            lang: "en".into(),
            languages: LanguageSet::default(),
            retries: 2,
        }
    }
}

/// Object-model adapter: a fixed tensor file or an external process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectModelConfig {
    TensorFile {
        path: PathBuf,
        stride: f64,
        anchors: Vec<(f64, f64)>,
    },
    Command {
        program: String,
        #[serde(default)]
        args: Vec<String>,
        stride: f64,
        anchors: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// `http(s)://...` MJPEG stream or `dir://<path>` replay.
    pub source: String,
    pub stages: Vec<StageKind>,
    #[serde(default = "default_bus_capacity")]
    pub bus_capacity: usize,
    #[serde(default = "default_timeout_ms")]
    pub stage_timeout_ms: u64,
    #[serde(default = "default_cooldown_ms")]
    pub cooldown_ms: u64,
    #[serde(default = "default_classes")]
    pub classes: Vec<String>,
    #[serde(default = "default_conf")]
    pub conf_threshold: f64,
    #[serde(default = "default_iou")]
    pub iou_threshold: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_fixtures")]
    pub currency_fixtures: PathBuf,
    #[serde(default)]
    pub object_model: Option<ObjectModelConfig>,
    #[serde(default)]
    pub object_labels: Option<Vec<String>>,
    #[serde(default)]
    pub priorities: AnnouncePolicy,
    #[serde(default)]
    pub tts: TtsConfig,
    #[serde(default = "default_events_path")]
    pub events_path: PathBuf,
    #[serde(default = "default_transcript_path")]
    pub transcript_path: PathBuf,
    #[serde(default = "default_audio_dir")]
    pub audio_dir: PathBuf,
    #[serde(default)]
    pub playback_log_path: Option<PathBuf>,
    #[serde(default)]
    pub max_frames: Option<u64>,
}

fn default_bus_capacity() -> usize {
    FrameBus::<u64>::DEFAULT_CAPACITY
}
fn default_timeout_ms() -> u64 {
    5000
}
fn default_cooldown_ms() -> u64 {
    DEFAULT_COOLDOWN_MS
}
fn default_classes() -> Vec<String> {
    DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect()
}
fn default_conf() -> f64 {
    DEFAULT_CONF_THRESHOLD
}
fn default_iou() -> f64 {
    DEFAULT_IOU_THRESHOLD
}
fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}
fn default_fixtures() -> PathBuf {
    PathBuf::from("fixtures/currency")
}
fn default_events_path() -> PathBuf {
    PathBuf::from("drishti-events.jsonl")
}
fn default_transcript_path() -> PathBuf {
    PathBuf::from("drishti-transcript.txt")
}
fn default_audio_dir() -> PathBuf {
    PathBuf::from("drishti-audio")
}

impl PipelineConfig {
    /// A config with every default applied.
    pub fn new(source: impl Into<String>, stages: Vec<StageKind>) -> Self {
        Self {
            source: source.into(),
            stages,
            bus_capacity: default_bus_capacity(),
            stage_timeout_ms: default_timeout_ms(),
            cooldown_ms: default_cooldown_ms(),
            classes: default_classes(),
            conf_threshold: default_conf(),
            iou_threshold: default_iou(),
            temperature: default_temperature(),
            currency_fixtures: default_fixtures(),
            object_model: None,
            object_labels: None,
            priorities: AnnouncePolicy::default(),
            tts: TtsConfig::default(),
            events_path: default_events_path(),
            transcript_path: default_transcript_path(),
            audio_dir: default_audio_dir(),
            playback_log_path: None,
            max_frames: None,
        }
    }

    pub fn parsed_source(&self) -> Result<Source, ConfigError> {
        self.source
            .parse()
            .map_err(|reason: String| ConfigError::invalid("source", reason))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.parsed_source()?;
        if self.stages.is_empty() {
            return Err(ConfigError::invalid(
                "stages",
                "at least one stage must be enabled",
            ));
        }
        let unique: BTreeSet<_> = self.stages.iter().collect();
        if unique.len() != self.stages.len() {
            return Err(ConfigError::invalid("stages", "stages must not repeat"));
        }
        if self.stage_timeout_ms == 0 {
            return Err(ConfigError::invalid("stage_timeout_ms", "must be > 0"));
        }
        if self.bus_capacity == 0 {
            return Err(ConfigError::invalid("bus_capacity", "must be > 0"));
        }
        if !(self.temperature > 0.0) {
            return Err(ConfigError::invalid("temperature", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.conf_threshold) {
            return Err(ConfigError::invalid(
                "conf_threshold",
                "must be within [0, 1]",
            ));
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(ConfigError::invalid(
                "iou_threshold",
                "must be within (0, 1]",
            ));
        }
        let classes: BTreeSet<_> = self.classes.iter().collect();
        if self.classes.is_empty() || classes.len() != self.classes.len() {
            return Err(ConfigError::invalid(
                "classes",
                "must be non-empty and unique",
            ));
        }
        if !self.tts.languages.contains(&self.tts.lang) {
            return Err(ConfigError::invalid(
                "tts.lang",
                format!("{:?} is not in tts.languages", self.tts.lang),
            ));
        }
        if self.tts.mode == TtsModeName::Http && self.tts.endpoint.is_none() {
            return Err(ConfigError::invalid(
                "tts.endpoint",
                "required when tts.mode is http",
            ));
        }
        if let Some(model) = &self.object_model {
            let (stride, anchors) = match model {
                ObjectModelConfig::TensorFile {
                    stride, anchors, ..
                }
                | ObjectModelConfig::Command {
                    stride, anchors, ..
                } => (*stride, anchors),
            };
            if !(stride > 0.0) || anchors.is_empty() {
                return Err(ConfigError::invalid(
                    "object_model",
                    "stride must be > 0 and at least one anchor given",
                ));
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON config document. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<PipelineConfig, ConfigError> {
    let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
