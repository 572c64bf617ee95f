use std::convert::Infallible;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::body::Body;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use bytes::Bytes;
use futures::stream::{self, StreamExt};
use tokio::net::TcpListener;
use tokio::time::MissedTickBehavior;

use super::wire::{encode_part, terminator, StreamConfig};
use super::{CamError, SourceSet};

/// Shared service state. The source set is read-only after startup; the
/// capture endpoint owns one global cursor while every stream connection
/// walks its own.
#[derive(Clone)]
pub struct CamState {
    inner: Arc<Inner>,
}

struct Inner {
    source: SourceSet,
    config: StreamConfig,
    capture_cursor: AtomicUsize,
    /// Set once a non-looping stream has delivered the full set.
    stream_exhausted: AtomicBool,
}

impl CamState {
    pub fn new(source: SourceSet, config: StreamConfig) -> Result<Self, CamError> {
        if source.is_empty() {
            return Err(CamError::EmptySource);
        }
        config.validate()?;
        Ok(Self {
            inner: Arc::new(Inner {
                source,
                config,
                capture_cursor: AtomicUsize::new(0),
                stream_exhausted: AtomicBool::new(false),
            }),
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.inner.config
    }

    fn next_capture(&self) -> Option<Bytes> {
        let src = &self.inner.source;
        let n = self.inner.capture_cursor.fetch_add(1, Ordering::SeqCst);
        if src.loop_frames {
            Some(src.images[n % src.len()].clone())
        } else {
            src.images.get(n).cloned()
        }
    }
}

pub fn router(state: CamState) -> Router {
    let cfg = state.config().clone();
    Router::new()
        .route(&cfg.capture_path, get(capture))
        .route(&cfg.stream_path, get(stream_frames))
        .with_state(state)
}

/// Runs the HTTP service on an already-bound listener until the task is dropped.
pub async fn serve(listener: TcpListener, state: CamState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn capture(State(state): State<CamState>) -> Response {
    match state.next_capture() {
        Some(body) => ([(header::CONTENT_TYPE, "image/jpeg")], body).into_response(),
        None => (StatusCode::GONE, "source exhausted").into_response(),
    }
}

enum Step {
    Part(usize),
    Terminate,
    Done,
}

async fn stream_frames(State(state): State<CamState>) -> Response {
    let src_loop = state.inner.source.loop_frames;
    if !src_loop && state.inner.stream_exhausted.load(Ordering::SeqCst) {
        return (StatusCode::GONE, "source exhausted").into_response();
    }
    let content_type = state.config().content_type();
    let mut ticker = tokio::time::interval(state.inner.source.frame_interval);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);

    let parts = stream::unfold(
        (state, ticker, Step::Part(0)),
        |(state, mut ticker, step)| async move {
            let src = &state.inner.source;
            let boundary = &state.inner.config.boundary;
            match step {
                Step::Part(i) => {
                    ticker.tick().await;
                    // one chunk per part so parts never interleave on the socket
                    let chunk = Bytes::from(encode_part(boundary, &src.images[i]));
                    let next = if i + 1 < src.len() {
                        Step::Part(i + 1)
                    } else if src.loop_frames {
                        Step::Part(0)
                    } else {
                        Step::Terminate
                    };
                    Some((Ok::<_, Infallible>(chunk), (state, ticker, next)))
                }
                Step::Terminate => {
                    state.inner.stream_exhausted.store(true, Ordering::SeqCst);
                    let chunk = Bytes::from(terminator(boundary));
                    Some((Ok(chunk), (state, ticker, Step::Done)))
                }
                Step::Done => None,
            }
        },
    )
    .boxed();

    Response::builder()
        .status(StatusCode::OK)
        .header(header::CONTENT_TYPE, content_type)
        .header(header::CACHE_CONTROL, "no-cache")
        .body(Body::from_stream(parts))
        .expect("static response parts are valid")
}
