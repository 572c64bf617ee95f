use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::vision::StageKind;

pub const SKIPPED: &str = "skipped";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: StageKind,
    /// Absent for skipped stages.
    pub latency_ms: Option<f64>,
    pub outcome: String,
    pub error: Option<String>,
}

impl StageRecord {
    pub fn is_skipped(&self) -> bool {
        self.outcome == SKIPPED
    }
}

/// One record per processed frame. Field order is the on-disk key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineEvent {
    pub frame_id: u64,
    pub capture_ts_ms: u64,
    pub popped_ts_ms: u64,
    pub emitted_ts_ms: u64,
    pub stages: Vec<StageRecord>,
    pub announcements: Vec<String>,
    pub dropped_frames_since_last: u64,
}

/// Append-only JSON Lines writer, flushed after every record.
pub struct EventSink {
    path: PathBuf,
    file: File,
}

impl EventSink {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let file = File::create(path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes the event as a single `\n`-terminated line in one write.
    pub fn emit(&mut self, event: &PipelineEvent) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()
    }
}

pub fn read_events(path: &Path) -> std::io::Result<Vec<PipelineEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), n + 1),
            )
        })?;
        out.push(ev);
    }
    Ok(out)
}
