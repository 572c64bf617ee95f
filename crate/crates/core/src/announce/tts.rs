use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TtsRequest {
    pub text: String,
    pub lang: String,
}

/// Language codes the synthesizer accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LanguageSet(BTreeSet<String>);

impl LanguageSet {
    pub fn new<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(codes.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, lang: &str) -> bool {
        self.0.contains(lang)
    }

    pub fn insert(&mut self, lang: impl Into<String>) {
        self.0.insert(lang.into());
    }
}

impl Default for LanguageSet {
    fn default() -> Self {
        Self::new(["en", "hi", "ta", "fr", "de"])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TtsMode {
    Offline,
    Http { endpoint: String },
}

#[derive(Debug, Clone)]
pub struct SinkConfig {
    pub mode: TtsMode,
    pub transcript_path: PathBuf,
    pub audio_dir: PathBuf,
    pub languages: LanguageSet,
    /// Extra attempts after the first failed request.
    pub retries: u32,
    pub request_timeout: Duration,
    pub retry_delay: Duration,
}

impl SinkConfig {
    pub fn offline(transcript_path: impl Into<PathBuf>) -> Self {
        Self {
            mode: TtsMode::Offline,
            transcript_path: transcript_path.into(),
            audio_dir: PathBuf::from("audio"),
            languages: LanguageSet::default(),
            retries: 2,
            request_timeout: Duration::from_secs(5),
            retry_delay: Duration::from_millis(100),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TtsError {
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    #[error("synthesis unavailable: {0}")]
    SynthesisUnavailable(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArtifactPayload {
    Audio {
        bytes: Vec<u8>,
        content_type: String,
        path: PathBuf,
    },
    Transcript {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioArtifact {
    pub text: String,
    pub lang: String,
    pub priority: i32,
    pub created_at_ms: u64,
    pub payload: ArtifactPayload,
    pub duration_ms: u64,
    /// Set when HTTP synthesis failed and the transcript was used instead.
    pub degraded: bool,
}

/// `max(1, words / 2.5)` seconds.
pub fn duration_estimate_ms(text: &str) -> u64 {
    let words = text.split_whitespace().count() as f64;
    ((words / 2.5).max(1.0) * 1000.0).round() as u64
}

pub struct TtsClient {
    config: SinkConfig,
    http: reqwest::Client,
    seq: AtomicU64,
}

impl TtsClient {
    pub fn new(config: SinkConfig) -> Self {
        let http = reqwest::Client::builder()
            .timeout(config.request_timeout)
            .build()
            .unwrap_or_else(|_| reqwest::Client::new());
        Self {
            config,
            http,
            seq: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &SinkConfig {
        &self.config
    }

    /// Synthesizes one utterance. HTTP failures fall back to the transcript
    /// and mark the artifact degraded.
    pub async fn synthesize(
        &self,
        req: &TtsRequest,
        priority: i32,
        created_at_ms: u64,
    ) -> Result<AudioArtifact, TtsError> {
        if !self.config.languages.contains(&req.lang) {
            return Err(TtsError::UnsupportedLanguage(req.lang.clone()));
        }
        let (payload, degraded) = match &self.config.mode {
            TtsMode::Offline => (self.append_transcript(req)?, false),
            TtsMode::Http { endpoint } => match self.synthesize_http(endpoint, req).await {
                Ok((bytes, content_type)) => (self.persist_audio(bytes, content_type)?, false),
                Err(err) => {
                    tracing::warn!(%err, "falling back to transcript");
                    (self.append_transcript(req)?, true)
                }
            },
        };
        Ok(AudioArtifact {
            text: req.text.clone(),
            lang: req.lang.clone(),
            priority,
            created_at_ms,
            payload,
            duration_ms: duration_estimate_ms(&req.text),
            degraded,
        })
    }

    /// POSTs `{text, lang}`; retries on any non-200 or transport error.
    pub async fn synthesize_http(
        &self,
        endpoint: &str,
        req: &TtsRequest,
    ) -> Result<(Vec<u8>, String), TtsError> {
        let mut last_err = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                tokio::time::sleep(self.config.retry_delay).await;
            }
            match self.http.post(endpoint).json(req).send().await {
                Ok(resp) if resp.status() == reqwest::StatusCode::OK => {
                    let content_type = resp
                        .headers()
                        .get(reqwest::header::CONTENT_TYPE)
                        .and_then(|v| v.to_str().ok())
                        .unwrap_or("")
                        .to_string();
                    let mime = content_type
                        .split(';')
                        .next()
                        .unwrap_or("")
                        .trim()
                        .to_string();
                    if !matches!(
                        mime.as_str(),
                        "audio/mpeg" | "audio/wav" | "audio/x-wav" | "audio/wave"
                    ) {
                        last_err = format!("unexpected content type {content_type:?}");
                        continue;
                    }
                    match resp.bytes().await {
                        Ok(b) => return Ok((b.to_vec(), mime)),
                        Err(e) => last_err = e.to_string(),
                    }
                }
                Ok(resp) => last_err = format!("status {}", resp.status()),
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(TtsError::SynthesisUnavailable(last_err))
    }

    fn persist_audio(
        &self,
        bytes: Vec<u8>,
        content_type: String,
    ) -> Result<ArtifactPayload, TtsError> {
        let ext = if content_type == "audio/mpeg" {
            "mp3"
        } else {
            "wav"
        };
        let n = self.seq.fetch_add(1, Ordering::SeqCst);
        let dir = &self.config.audio_dir;
        let io = |source| TtsError::Io {
            path: dir.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let path = dir.join(format!("{n:06}.{ext}"));
        std::fs::write(&path, &bytes).map_err(|source| TtsError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(ArtifactPayload::Audio {
            bytes,
            content_type,
            path,
        })
    }

    fn append_transcript(&self, req: &TtsRequest) -> Result<ArtifactPayload, TtsError> {
        let path = &self.config.transcript_path;
        append_transcript_line(path, req).map_err(|source| TtsError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(ArtifactPayload::Transcript { path: path.clone() })
    }
}

/// `<iso8601> <lang> <text>`
fn append_transcript_line(path: &Path, req: &TtsRequest) -> std::io::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let ts = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    writeln!(f, "{ts} {} {}", req.lang, req.text.replace('\n', " "))?;
    f.flush()
}
