#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;

use bytes::Bytes;
use drishti::camsim::{serve, CamState, SourceSet, StreamConfig};
use drishti::synth;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub async fn spawn_camsim(set: SourceSet, boundary: &str) -> (SocketAddr, JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = spawn_on(listener, set, boundary);
    (addr, handle)
}

pub fn spawn_on(listener: TcpListener, set: SourceSet, boundary: &str) -> JoinHandle<()> {
    let config = StreamConfig {
        boundary: boundary.into(),
        port: listener.local_addr().unwrap().port(),
        ..StreamConfig::default()
    };
    let state = CamState::new(set, config).unwrap();
    tokio::spawn(async move {
        let _ = serve(listener, state).await;
    })
}

/// Smallest byte string that passes the SOI/EOI check; camsim never decodes.
pub fn fake_jpeg(body: &[u8]) -> Bytes {
    let mut v = vec![0xFF, 0xD8];
    v.extend_from_slice(body);
    v.extend_from_slice(&[0xFF, 0xD9]);
    Bytes::from(v)
}

pub fn note_jpeg(class: &str, variant: u64) -> Bytes {
    let raster = synth::banknote(class, variant, synth::NOTE_WIDTH, synth::NOTE_HEIGHT);
    Bytes::from(synth::encode_jpeg(
        synth::NOTE_WIDTH,
        synth::NOTE_HEIGHT,
        &raster,
        92,
    ))
}

/// Writes three notes of distinct denominations as `a.jpg`, `b.jpg`, `c.jpg`.
pub fn write_replay_dir(dir: &Path, classes: [&str; 3]) {
    std::fs::create_dir_all(dir).unwrap();
    for (name, class) in ["a", "b", "c"].iter().zip(classes) {
        std::fs::write(dir.join(format!("{name}.jpg")), note_jpeg(class, 100)).unwrap();
    }
}

/// Nulls every wall-clock dependent field of an event line.
pub fn mask_timestamps(line: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(line).unwrap();
    for key in ["capture_ts_ms", "popped_ts_ms", "emitted_ts_ms"] {
        v[key] = serde_json::Value::Null;
    }
    if let Some(stages) = v["stages"].as_array_mut() {
        for s in stages {
            s["latency_ms"] = serde_json::Value::Null;
        }
    }
    v
}

pub fn mask_log(text: &str) -> Vec<serde_json::Value> {
    text.lines().map(mask_timestamps).collect()
}
