use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use bytes::Bytes;
use futures::StreamExt;
use tokio_util::sync::CancellationToken;

use super::{
    boundary_from_content_type, decode_frame, Frame, FrameBus, MultipartParser, DEFAULT_SCAN_BUDGET,
};
use crate::camsim::{load_source_set, wire::DEFAULT_BOUNDARY, CamError, SourceSet};
use crate::MonoClock;

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    /// MJPEG over HTTP.
    Stream(String),
    /// Directory replayed as if streamed (`dir://<path>`).
    Dir(PathBuf),
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix("dir://") {
            if path.is_empty() {
                return Err("dir:// source needs a path".into());
            }
            Ok(Source::Dir(PathBuf::from(path)))
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(Source::Stream(s.to_string()))
        } else {
            Err(format!(
                "unsupported source {s:?}; expected http(s)://... or dir://<path>"
            ))
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Stream(url) => f.write_str(url),
            Source::Dir(p) => write!(f, "dir://{}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionOptions {
    /// Used when the response Content-Type carries no boundary parameter.
    pub boundary: String,
    pub backoff_base: Duration,
    pub backoff_factor: u32,
    pub backoff_cap: Duration,
    pub scan_budget: usize,
    pub connect_timeout: Duration,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            boundary: DEFAULT_BOUNDARY.to_string(),
            backoff_base: Duration::from_millis(250),
            backoff_factor: 2,
            backoff_cap: Duration::from_secs(8),
            scan_budget: DEFAULT_SCAN_BUDGET,
            connect_timeout: Duration::from_secs(2),
        }
    }
}

/// Delay before retry number `attempt` (0-based).
pub fn backoff_delay(opts: &SessionOptions, attempt: u32) -> Duration {
    let factor = (opts.backoff_factor as u64).saturating_pow(attempt);
    let ms = (opts.backoff_base.as_millis() as u64).saturating_mul(factor);
    Duration::from_millis(ms).min(opts.backoff_cap)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize)]
pub struct SessionReport {
    pub frames_ingested: u64,
    pub parse_errors: u64,
    pub decode_errors: u64,
    pub connect_errors: u64,
    pub reconnects: u64,
}

/// Assigns session-unique, strictly increasing frame ids.
struct Stamper<'a> {
    next_id: u64,
    clock: &'a MonoClock,
}

impl Stamper<'_> {
    fn stamp(&mut self, payload: Bytes, report: &mut SessionReport) -> Option<Frame> {
        let id = self.next_id;
        self.next_id += 1;
        match decode_frame(payload, id, self.clock.now_ms()) {
            Ok(frame) => Some(frame),
            Err(err) => {
                tracing::warn!(frame = id, %err, "skipping undecodable frame");
                report.decode_errors += 1;
                None
            }
        }
    }
}

enum ConnectionEnd {
    Cancelled,
    /// Stream ended or failed; `delivered` tells whether any frame arrived.
    Lost {
        delivered: bool,
    },
}

/// Pulls an MJPEG stream into `bus` until `cancel` fires, reconnecting with
/// exponential backoff on every failure. Returning means the session was
/// cancelled.
pub async fn stream_session(
    url: &str,
    bus: &FrameBus<Arc<Frame>>,
    clock: &MonoClock,
    opts: &SessionOptions,
    cancel: CancellationToken,
) -> SessionReport {
    let mut report = SessionReport::default();
    let client = match reqwest::Client::builder()
        .connect_timeout(opts.connect_timeout)
        .build()
    {
        Ok(c) => c,
        Err(err) => {
            tracing::error!(%err, "cannot build HTTP client");
            cancel.cancelled().await;
            return report;
        }
    };
    let mut stamper = Stamper { next_id: 0, clock };
    let mut attempt = 0u32;
    let mut first = true;
    loop {
        if cancel.is_cancelled() {
            return report;
        }
        if !first {
            report.reconnects += 1;
        }
        first = false;
        match run_connection(&client, url, bus, opts, &mut stamper, &mut report, &cancel).await {
            ConnectionEnd::Cancelled => return report,
            ConnectionEnd::Lost { delivered } => {
                if delivered {
                    attempt = 0;
                }
            }
        }
        let delay = backoff_delay(opts, attempt);
        attempt = attempt.saturating_add(1);
        tracing::debug!(?delay, "reconnecting");
        tokio::select! {
            _ = cancel.cancelled() => return report,
            _ = tokio::time::sleep(delay) => {}
        }
    }
}

async fn run_connection(
    client: &reqwest::Client,
    url: &str,
    bus: &FrameBus<Arc<Frame>>,
    opts: &SessionOptions,
    stamper: &mut Stamper<'_>,
    report: &mut SessionReport,
    cancel: &CancellationToken,
) -> ConnectionEnd {
    let response = tokio::select! {
        _ = cancel.cancelled() => return ConnectionEnd::Cancelled,
        r = client.get(url).send() => r,
    };
    let response = match response.and_then(|r| r.error_for_status()) {
        Ok(r) => r,
        Err(err) => {
            tracing::debug!(%err, "stream connect failed");
            report.connect_errors += 1;
            return ConnectionEnd::Lost { delivered: false };
        }
    };
    let boundary = response
        .headers()
        .get(reqwest::header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .and_then(boundary_from_content_type)
        .unwrap_or_else(|| opts.boundary.clone());
    let mut parser = MultipartParser::with_scan_budget(&boundary, opts.scan_budget);
    let mut body = response.bytes_stream();
    let mut delivered = false;
    loop {
        let chunk = tokio::select! {
            _ = cancel.cancelled() => return ConnectionEnd::Cancelled,
            c = body.next() => c,
        };
        match chunk {
            Some(Ok(bytes)) => parser.push(&bytes),
            Some(Err(err)) => {
                tracing::debug!(%err, "stream read failed");
                report.connect_errors += 1;
                return ConnectionEnd::Lost { delivered };
            }
            None => {
                if parser.finish().is_err() {
                    report.parse_errors += 1;
                }
                return ConnectionEnd::Lost { delivered };
            }
        }
        loop {
            match parser.next_part() {
                Ok(Some(payload)) => {
                    if let Some(frame) = stamper.stamp(payload, report) {
                        report.frames_ingested += 1;
                        delivered = true;
                        bus.push(Arc::new(frame));
                    }
                    if cancel.is_cancelled() {
                        return ConnectionEnd::Cancelled;
                    }
                }
                Ok(None) => break,
                Err(err) => {
                    tracing::warn!(%err, "multipart parse error");
                    report.parse_errors += 1;
                    return ConnectionEnd::Lost { delivered };
                }
            }
        }
        if parser.is_done() {
            return ConnectionEnd::Lost { delivered };
        }
    }
}

/// Replays a loaded source set through the same stamping path as a live
/// stream. Waits for bus space instead of dropping, then closes the bus.
pub async fn replay_source_set(
    set: SourceSet,
    bus: &FrameBus<Arc<Frame>>,
    clock: &MonoClock,
    cancel: CancellationToken,
) -> SessionReport {
    let mut report = SessionReport::default();
    let mut stamper = Stamper { next_id: 0, clock };
    for payload in set.images {
        if cancel.is_cancelled() {
            break;
        }
        if let Some(frame) = stamper.stamp(payload, &mut report) {
            report.frames_ingested += 1;
            tokio::select! {
                _ = cancel.cancelled() => break,
                _ = bus.push_when_space(Arc::new(frame)) => {}
            }
        }
    }
    bus.close();
    report
}

/// [`replay_source_set`] over `load_source_set(dir)`.
pub async fn replay_dir(
    dir: &Path,
    bus: &FrameBus<Arc<Frame>>,
    clock: &MonoClock,
    cancel: CancellationToken,
) -> Result<SessionReport, CamError> {
    let set = load_source_set(dir)?;
    Ok(replay_source_set(set, bus, clock, cancel).await)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_schedule() {
        let o = SessionOptions::default();
        let ms: Vec<u128> = (0..8).map(|a| backoff_delay(&o, a).as_millis()).collect();
        assert_eq!(ms, vec![250, 500, 1000, 2000, 4000, 8000, 8000, 8000]);
        assert_eq!(backoff_delay(&o, 200), Duration::from_secs(8));
    }

    #[test]
    fn source_parsing() {
        assert_eq!(
            "dir://fixtures".parse::<Source>().unwrap(),
            Source::Dir(PathBuf::from("fixtures"))
        );
        assert_eq!(
            "http://127.0.0.1:81/stream".parse::<Source>().unwrap(),
            Source::Stream("http://127.0.0.1:81/stream".into())
        );
        assert!("ftp://x".parse::<Source>().is_err());
        assert!("dir://".parse::<Source>().is_err());
    }
}
