use std::path::Path;
use std::time::Duration;

use bytes::Bytes;

use super::CamError;

pub const DEFAULT_FRAME_INTERVAL: Duration = Duration::from_millis(500);

/// Immutable set of JPEG payloads served by the simulator.
#[derive(Debug, Clone)]
pub struct SourceSet {
    pub images: Vec<Bytes>,
    pub names: Vec<String>,
    pub loop_frames: bool,
    pub frame_interval: Duration,
}

impl SourceSet {
    /// Builds a set from in-memory payloads, validating every one.
    pub fn from_payloads(images: Vec<Bytes>) -> Result<Self, CamError> {
        if images.is_empty() {
            return Err(CamError::EmptySource);
        }
        let names: Vec<String> = (0..images.len()).map(|i| format!("frame{i}")).collect();
        for (name, img) in names.iter().zip(&images) {
            if !is_jpeg(img) {
                return Err(CamError::InvalidJpeg(name.clone()));
            }
        }
        Ok(Self {
            images,
            names,
            loop_frames: true,
            frame_interval: DEFAULT_FRAME_INTERVAL,
        })
    }

    pub fn with_loop(mut self, loop_frames: bool) -> Self {
        self.loop_frames = loop_frames;
        self
    }

    pub fn with_interval(mut self, interval: Duration) -> Self {
        self.frame_interval = interval;
        self
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

/// SOI at the start and EOI at the end.
pub fn is_jpeg(payload: &[u8]) -> bool {
    payload.len() >= 4 && payload.starts_with(&[0xFF, 0xD8]) && payload.ends_with(&[0xFF, 0xD9])
}

/// Loads every `.jpg`/`.jpeg` file in `dir`, in lexicographic filename order.
pub fn load_source_set(dir: impl AsRef<Path>) -> Result<SourceSet, CamError> {
    let dir = dir.as_ref();
    let io_err = |source| CamError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let entry = entry.map_err(io_err)?;
        let path = entry.path();
        let is_jpeg_ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.eq_ignore_ascii_case("jpg") || e.eq_ignore_ascii_case("jpeg"))
            .unwrap_or(false);
        if is_jpeg_ext && path.is_file() {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(CamError::EmptySource);
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut images = Vec::with_capacity(files.len());
    let mut names = Vec::with_capacity(files.len());
    for path in files {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let data = std::fs::read(&path).map_err(|source| CamError::Io {
            path: path.clone(),
            source,
        })?;
        if !is_jpeg(&data) {
            return Err(CamError::InvalidJpeg(name));
        }
        images.push(Bytes::from(data));
        names.push(name);
    }
    Ok(SourceSet {
        images,
        names,
        loop_frames: true,
        frame_interval: DEFAULT_FRAME_INTERVAL,
    })
}
