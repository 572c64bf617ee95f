//! Protocol-level simulator of an ESP32-CAM style web server.
//!
//! Serves single captures on `GET /capture` and a continuous MJPEG stream on
//! `GET /stream` from a directory of JPEG files.

mod server;
mod source;
pub mod wire;

pub use server::{router, serve, CamState};
pub use source::{is_jpeg, load_source_set, SourceSet};
pub use wire::StreamConfig;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CamError {
    #[error("no JPEG files found in source directory")]
    EmptySource,
    #[error("{0} is not a JPEG (SOI/EOI marker check failed)")]
    InvalidJpeg(String),
    #[error("invalid boundary token {0:?}: {1}")]
    InvalidBoundary(String, &'static str),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
