use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::Serialize;
use tokio::time::Instant;
use tokio_util::sync::CancellationToken;

use super::worker::StageWorker;
use super::{
    report_latency, EventSink, LatencyStats, ObjectModelConfig, PipelineConfig, PipelineEvent,
    StageRecord, TtsModeName, SKIPPED,
};
use crate::announce::{
    filter_cooldown, render_announcements, CooldownRegistry, PlaybackEntry, PlaybackQueue,
    SinkConfig, TtsClient, TtsError, TtsMode, TtsRequest,
};
use crate::camsim::load_source_set;
use crate::ingest::{
    replay_source_set, stream_session, Frame, FrameBus, SessionOptions, SessionReport, Source,
};
use crate::vision::{
    enroll_currency, BitmapFont, CommandModel, CurrencyStage, FeatureSpec, ObjectModel,
    ObjectStage, Stage, StageKind, StageResult, TensorFileModel, TextStage,
};
use crate::MonoClock;

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Config(#[from] super::ConfigError),
    #[error("source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no latency data")]
    NoData,
}

impl RuntimeError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            RuntimeError::Config(_) => 2,
            RuntimeError::SourceUnavailable(_) => 3,
            RuntimeError::Io { .. } | RuntimeError::NoData => 4,
        }
    }

    fn config(field: &str, reason: impl Into<String>) -> Self {
        RuntimeError::Config(super::ConfigError::Validation {
            field: field.into(),
            reason: reason.into(),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub frames_processed: u64,
    pub frames_dropped: u64,
    pub latency: Vec<LatencyStats>,
    pub announcements_made: u64,
    pub ingest: SessionReport,
    pub playback: Vec<PlaybackEntry>,
}

/// Builds the enabled stages described by `config`.
pub fn build_stages(config: &PipelineConfig) -> Result<Vec<Arc<dyn Stage>>, RuntimeError> {
    let mut stages: Vec<Arc<dyn Stage>> = Vec::new();
    for kind in &config.stages {
        match kind {
            StageKind::Currency => {
                let classifier = enroll_currency(
                    &config.currency_fixtures,
                    &config.classes,
                    config.temperature,
                    FeatureSpec::default(),
                )
                .map_err(|e| RuntimeError::config("currency_fixtures", e.to_string()))?;
                stages.push(Arc::new(CurrencyStage {
                    model: Arc::new(classifier),
                }));
            }
            StageKind::Objects => {
                let model: Option<Arc<dyn ObjectModel>> = match &config.object_model {
                    None => None,
                    Some(ObjectModelConfig::TensorFile {
                        path,
                        stride,
                        anchors,
                    }) => Some(Arc::new(TensorFileModel {
                        path: path.clone(),
                        stride: *stride,
                        anchors: anchors.clone(),
                    })),
                    Some(ObjectModelConfig::Command {
                        program,
                        args,
                        stride,
                        anchors,
                    }) => Some(Arc::new(CommandModel {
                        program: program.clone(),
                        args: args.clone(),
                        stride: *stride,
                        anchors: anchors.clone(),
                    })),
                };
                let mut stage = ObjectStage::new(model);
                stage.conf_threshold = config.conf_threshold;
                stage.iou_threshold = config.iou_threshold;
                if let Some(labels) = &config.object_labels {
                    stage.labels = labels.clone();
                }
                stages.push(Arc::new(stage));
            }
            StageKind::Text => stages.push(Arc::new(TextStage {
                font: BitmapFont::builtin(),
            })),
        }
    }
    Ok(stages)
}

fn sink_config(config: &PipelineConfig) -> SinkConfig {
    let mut sink = SinkConfig::offline(&config.transcript_path);
    sink.audio_dir = config.audio_dir.clone();
    sink.languages = config.tts.languages.clone();
    sink.retries = config.tts.retries;
    if config.tts.mode == TtsModeName::Http {
        sink.mode = TtsMode::Http {
            endpoint: config.tts.endpoint.clone().unwrap_or_default(),
        };
    }
    sink
}

fn record(
    kind: StageKind,
    result: Option<StageResult>,
    skip_reason: &str,
) -> (StageRecord, Option<StageResult>) {
    match result {
        None => (
            StageRecord {
                name: kind,
                latency_ms: None,
                outcome: SKIPPED.into(),
                error: Some(skip_reason.into()),
            },
            None,
        ),
        Some(r) => {
            let rec = StageRecord {
                name: kind,
                latency_ms: Some(r.latency_ms),
                outcome: match (&r.output, &r.error) {
                    (Some(out), _) => out.summary(),
                    _ => "error".into(),
                },
                error: r.error.as_ref().map(|e| e.to_string()),
            };
            (rec, Some(r))
        }
    }
}

/// Runs the pipeline until the source is exhausted (dir mode), `max_frames`
/// frames were processed, or `cancel` fires.
///
/// `stages` must hold exactly one stage per enabled kind.
pub async fn run_pipeline(
    config: &PipelineConfig,
    stages: Vec<Arc<dyn Stage>>,
    cancel: CancellationToken,
) -> Result<RunSummary, RuntimeError> {
    config.validate()?;
    for kind in &config.stages {
        let n = stages.iter().filter(|s| s.kind() == *kind).count();
        if n != 1 {
            return Err(RuntimeError::config(
                "stages",
                format!("expected one {kind} stage, got {n}"),
            ));
        }
    }
    let source = config.parsed_source()?;
    let replay = match &source {
        Source::Dir(dir) => Some(
            load_source_set(dir)
                .map_err(|e| RuntimeError::SourceUnavailable(format!("{}: {e}", dir.display())))?,
        ),
        Source::Stream(_) => None,
    };
    let dir_mode = replay.is_some();

    let mut sink = EventSink::create(&config.events_path).map_err(|source| RuntimeError::Io {
        path: config.events_path.clone(),
        source,
    })?;
    let workers = stages
        .into_iter()
        .filter(|s| config.stages.contains(&s.kind()))
        .map(StageWorker::spawn)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| RuntimeError::Io {
            path: PathBuf::from("<stage worker>"),
            source,
        })?;

    let clock = MonoClock::new();
    let bus = Arc::new(FrameBus::<Arc<Frame>>::new(config.bus_capacity));
    let ingest_cancel = cancel.child_token();
    let producer = {
        let bus = bus.clone();
        let token = ingest_cancel.clone();
        tokio::spawn(async move {
            match (source, replay) {
                (_, Some(set)) => replay_source_set(set, &bus, &clock, token).await,
                (Source::Stream(url), None) => {
                    let opts = SessionOptions::default();
                    let report = stream_session(&url, &bus, &clock, &opts, token).await;
                    bus.close();
                    report
                }
                (Source::Dir(_), None) => unreachable!("dir sources are loaded up front"),
            }
        })
    };

    let tts = TtsClient::new(sink_config(config));
    let mut cooldown = CooldownRegistry::new(config.cooldown_ms);
    let mut playback = PlaybackQueue::new();
    let timeout = Duration::from_millis(config.stage_timeout_ms);
    let mut events: Vec<PipelineEvent> = Vec::new();
    let mut announcements_made = 0u64;
    let mut last_dropped = 0u64;

    let result: Result<(), RuntimeError> = async {
        loop {
            if config.max_frames.is_some_and(|m| events.len() as u64 >= m) {
                break;
            }
            let frame = tokio::select! {
                biased;
                _ = cancel.cancelled() => break,
                f = bus.pop() => match f {
                    Some(f) => f,
                    None => break,
                },
            };
            let popped_ts_ms = clock.now_ms();
            let deadline = Instant::now() + timeout;

            let pending: Vec<_> = workers
                .iter()
                .map(|w| (w.kind(), w.dispatch(frame.clone())))
                .collect();
            let joins = pending.into_iter().map(|(kind, rx)| async move {
                match rx {
                    None => record(kind, None, "stage busy with an earlier frame"),
                    Some(rx) => match tokio::time::timeout_at(deadline, rx).await {
                        Ok(Ok(r)) => record(kind, Some(r), ""),
                        Ok(Err(_)) => record(kind, None, "stage worker stopped"),
                        Err(_) => record(kind, None, "timed out"),
                    },
                }
            });
            let joined = futures::future::join_all(joins).await;
            let (records, results): (Vec<StageRecord>, Vec<Option<StageResult>>) =
                joined.into_iter().unzip();
            let results: Vec<StageResult> = results.into_iter().flatten().collect();

            let now = clock.now_ms();
            let rendered = render_announcements(&results, now, &config.priorities);
            let admitted = filter_cooldown(rendered, &mut cooldown, now);
            let dropped = bus.stats().dropped;

            let event = PipelineEvent {
                frame_id: frame.id,
                capture_ts_ms: if dir_mode {
                    popped_ts_ms
                } else {
                    frame.capture_ts_ms
                },
                popped_ts_ms,
                emitted_ts_ms: clock.now_ms(),
                stages: records,
                announcements: admitted.iter().map(|a| a.text.clone()).collect(),
                dropped_frames_since_last: dropped - last_dropped,
            };
            last_dropped = dropped;
            sink.emit(&event).map_err(|source| RuntimeError::Io {
                path: sink.path().to_path_buf(),
                source,
            })?;
            events.push(event);

            for a in admitted {
                let req = TtsRequest {
                    text: a.text.clone(),
                    lang: config.tts.lang.clone(),
                };
                match tts.synthesize(&req, a.priority, a.created_at_ms).await {
                    Ok(artifact) => {
                        announcements_made += 1;
                        playback.submit(artifact, clock.now_ms());
                    }
                    Err(TtsError::Io { path, source }) => {
                        return Err(RuntimeError::Io { path, source })
                    }
                    Err(err) => tracing::warn!(%err, "announcement not synthesized"),
                }
            }
        }
        Ok(())
    }
    .await;

    ingest_cancel.cancel();
    let ingest = match tokio::time::timeout(timeout, producer).await {
        Ok(Ok(report)) => report,
        _ => SessionReport::default(),
    };
    result?;

    playback.drain();
    let playback = playback.into_log();
    if let Some(path) = &config.playback_log_path {
        write_playback_log(path, &playback)?;
    }

    Ok(RunSummary {
        frames_processed: events.len() as u64,
        frames_dropped: bus.stats().dropped,
        latency: report_latency(&events).unwrap_or_default(),
        announcements_made,
        ingest,
        playback,
    })
}

fn write_playback_log(path: &PathBuf, entries: &[PlaybackEntry]) -> Result<(), RuntimeError> {
    let io = |source| RuntimeError::Io {
        path: path.clone(),
        source,
    };
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).map_err(|e| io(e.into()))?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io)
}
