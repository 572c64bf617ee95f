//! YOLOv5/v7-family output decoding.
//!
//! Raw grid logits are laid out row-major as `[ny][nx][anchor][5 + C]`
//! with per-slot attributes `tx, ty, tw, th, to, tc_1..tc_C`.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};

use super::stage::{ObjectModel, StageError};
use super::{BBox, Detection};
use crate::ingest::Frame;

pub const DEFAULT_CONF_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub stride: f64,
    pub anchors: Vec<(f64, f64)>,
    pub nx: usize,
    pub ny: usize,
    pub num_classes: usize,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum YoloError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

impl GridSpec {
    pub fn attrs(&self) -> usize {
        5 + self.num_classes
    }

    /// Logits of one (cell, anchor) slot.
    pub fn slot(&self, cx: usize, cy: usize, anchor: usize) -> &[f64] {
        let a = self.attrs();
        let start = ((cy * self.nx + cx) * self.anchors.len() + anchor) * a;
        &self.logits[start..start + a]
    }

    /// Builds a grid from a `[ny, nx, anchors, 5 + C]` tensor.
    pub fn from_tensor(
        dims: &[u32],
        data: &[f32],
        stride: f64,
        anchors: Vec<(f64, f64)>,
    ) -> Result<Self, YoloError> {
        let [ny, nx, na, attrs] = match dims {
            &[a, b, c, d] => [a as usize, b as usize, c as usize, d as usize],
            _ => {
                return Err(YoloError::DimensionMismatch(format!(
                    "expected a rank-4 tensor, got dims {dims:?}"
                )))
            }
        };
        if na != anchors.len() {
            return Err(YoloError::DimensionMismatch(format!(
                "tensor has {na} anchors, config has {}",
                anchors.len()
            )));
        }
        if attrs < 6 {
            return Err(YoloError::DimensionMismatch(format!(
                "need at least 6 attributes per slot, got {attrs}"
            )));
        }
        if data.len() != ny * nx * na * attrs {
            return Err(YoloError::DimensionMismatch(format!(
                "tensor data has {} values, dims imply {}",
                data.len(),
                ny * nx * na * attrs
            )));
        }
        Ok(Self {
            stride,
            anchors,
            nx,
            ny,
            num_classes: attrs - 5,
            logits: data.iter().map(|&v| v as f64).collect(),
        })
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Decodes every slot and keeps those scoring at least `conf_threshold`.
pub fn decode_yolo(
    grid: &GridSpec,
    image_width: u32,
    image_height: u32,
    conf_threshold: f64,
    labels: &[String],
) -> Result<Vec<Detection>, YoloError> {
    let s = grid.stride;
    let want_x = (image_width as f64 / s).ceil() as usize;
    let want_y = (image_height as f64 / s).ceil() as usize;
    if grid.nx != want_x || grid.ny != want_y {
        return Err(YoloError::DimensionMismatch(format!(
            "grid {}x{} does not cover a {image_width}x{image_height} image at stride {s}",
            grid.nx, grid.ny
        )));
    }
    let expected = grid.nx * grid.ny * grid.anchors.len() * grid.attrs();
    if grid.logits.len() != expected {
        return Err(YoloError::DimensionMismatch(format!(
            "{} logits, expected {expected}",
            grid.logits.len()
        )));
    }

    let mut out = Vec::new();
    for cy in 0..grid.ny {
        for cx in 0..grid.nx {
            for (a, &(aw, ah)) in grid.anchors.iter().enumerate() {
                let t = grid.slot(cx, cy, a);
                let (mut best, mut best_logit) = (0usize, t[5]);
                for (j, &v) in t[5..].iter().enumerate().skip(1) {
                    if v > best_logit {
                        best = j;
                        best_logit = v;
                    }
                }
                let score = sigmoid(t[4]) * sigmoid(best_logit);
                if score < conf_threshold {
                    continue;
                }
                let center_x = (2.0 * sigmoid(t[0]) - 0.5 + cx as f64) * s;
                let center_y = (2.0 * sigmoid(t[1]) - 0.5 + cy as f64) * s;
                let w = (2.0 * sigmoid(t[2])).powi(2) * aw;
                let h = (2.0 * sigmoid(t[3])).powi(2) * ah;
                let label = labels
                    .get(best)
                    .cloned()
                    .unwrap_or_else(|| format!("class{best}"));
                out.push(Detection {
                    label,
                    score,
                    bbox: Some(BBox::new(center_x - w / 2.0, center_y - h / 2.0, w, h)),
                    stage: "objects".into(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("tensor truncated: {0}")]
    Truncated(&'static str),
    #[error("tensor has {0} trailing bytes")]
    Trailing(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Flat tensor: `u32 rank`, `rank × u32 dims`, then `f32` values row-major,
/// all little-endian.
pub fn write_tensor(dims: &[u32], data: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + dims.len() * 4 + data.len() * 4);
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_tensor(bytes: &[u8]) -> Result<(Vec<u32>, Vec<f32>), TensorError> {
    let word = |i: usize| -> Option<[u8; 4]> { bytes.get(i * 4..i * 4 + 4)?.try_into().ok() };
    let rank = u32::from_le_bytes(word(0).ok_or(TensorError::Truncated("rank"))?) as usize;
    let mut dims = Vec::with_capacity(rank);
    for i in 0..rank {
        dims.push(u32::from_le_bytes(
            word(1 + i).ok_or(TensorError::Truncated("dims"))?,
        ));
    }
    let count: usize = dims.iter().map(|&d| d as usize).product();
    let start = 1 + rank;
    let mut data = Vec::with_capacity(count);
    for i in 0..count {
        data.push(f32::from_le_bytes(
            word(start + i).ok_or(TensorError::Truncated("data"))?,
        ));
    }
    let used = (start + count) * 4;
    if bytes.len() != used {
        return Err(TensorError::Trailing(bytes.len() - used));
    }
    Ok((dims, data))
}

fn grid_from_bytes(
    bytes: &[u8],
    stride: f64,
    anchors: &[(f64, f64)],
) -> Result<GridSpec, StageError> {
    let (dims, data) =
        read_tensor(bytes).map_err(|e| StageError::Failed(format!("model output: {e}")))?;
    GridSpec::from_tensor(&dims, &data, stride, anchors.to_vec())
        .map_err(|e| StageError::Failed(e.to_string()))
}

/// Replays a fixed tensor file for every frame.
#[derive(Debug, Clone)]
pub struct TensorFileModel {
    pub path: PathBuf,
    pub stride: f64,
    pub anchors: Vec<(f64, f64)>,
}

impl ObjectModel for TensorFileModel {
    fn infer(&self, _frame: &Frame) -> Result<GridSpec, StageError> {
        let bytes = std::fs::read(&self.path)
            .map_err(|e| StageError::Failed(format!("{}: {e}", self.path.display())))?;
        grid_from_bytes(&bytes, self.stride, &self.anchors)
    }
}

/// Runs an external program per frame: JPEG payload on stdin, tensor on stdout.
#[derive(Debug, Clone)]
pub struct CommandModel {
    pub program: String,
    pub args: Vec<String>,
    pub stride: f64,
    pub anchors: Vec<(f64, f64)>,
}

impl ObjectModel for CommandModel {
    fn infer(&self, frame: &Frame) -> Result<GridSpec, StageError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| StageError::Failed(format!("spawn {}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let payload = frame.payload.clone();
        // feed stdin from a thread so a model that writes before reading cannot deadlock
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(&payload);
        });
        let mut out = Vec::new();
        child
            .stdout
            .take()
            .expect("stdout is piped")
            .read_to_end(&mut out)
            .map_err(|e| StageError::Failed(format!("read model output: {e}")))?;
        let status = child
            .wait()
            .map_err(|e| StageError::Failed(format!("wait {}: {e}", self.program)))?;
        let _ = writer.join();
        if !status.success() {
            return Err(StageError::Failed(format!(
                "{} exited with {status}",
                self.program
            )));
        }
        grid_from_bytes(&out, self.stride, &self.anchors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels() -> Vec<String> {
        vec!["person".into(), "dog".into()]
    }

    fn grid(
        nx: usize,
        ny: usize,
        anchors: Vec<(f64, f64)>,
        classes: usize,
        logits: Vec<f64>,
    ) -> GridSpec {
        GridSpec {
            stride: 8.0,
            anchors,
            nx,
            ny,
            num_classes: classes,
            logits,
        }
    }

    #[test]
    fn zero_logits_closed_form() {
        let g = grid(1, 1, vec![(10.0, 13.0)], 1, vec![0.0; 6]);
        let d = decode_yolo(&g, 8, 8, 0.0, &labels()).unwrap();
        assert_eq!(d.len(), 1);
        let b = d[0].bbox.unwrap();
        assert!((b.x + b.w / 2.0 - 4.0).abs() < 1e-9);
        assert!((b.y + b.h / 2.0 - 4.0).abs() < 1e-9);
        assert!((b.w - 10.0).abs() < 1e-9 && (b.h - 13.0).abs() < 1e-9);
        assert!((d[0].score - 0.25).abs() < 1e-9);
        assert_eq!(d[0].label, "person");
    }

    #[test]
    fn threshold_one_is_empty() {
        let g = grid(2, 2, vec![(10.0, 13.0)], 2, vec![8.0; 28]);
        assert!(decode_yolo(&g, 16, 16, 1.0, &labels()).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch() {
        let g = grid(2, 2, vec![(10.0, 13.0)], 1, vec![0.0; 24]);
        assert!(matches!(
            decode_yolo(&g, 64, 16, 0.25, &labels()),
            Err(YoloError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn label_is_argmax_and_unknown_classes_get_index_names() {
        let mut logits = vec![0.0; 8];
        logits[7] = 4.0;
        let g = grid(1, 1, vec![(4.0, 4.0)], 3, logits);
        let d = decode_yolo(&g, 8, 8, 0.0, &labels()).unwrap();
        assert_eq!(d[0].label, "class2");
    }

    #[test]
    fn tensor_format_round_trip_and_errors() {
        let dims = [1u32, 1, 1, 6];
        let data = [0.5f32, -1.0, 2.0, 0.0, 3.0, 1.0];
        let bytes = write_tensor(&dims, &data);
        assert_eq!(&bytes[..8], &[4, 0, 0, 0, 1, 0, 0, 0]);
        let (d2, v2) = read_tensor(&bytes).unwrap();
        assert_eq!(
            (d2.as_slice(), v2.as_slice()),
            (dims.as_slice(), data.as_slice())
        );
        assert!(read_tensor(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(read_tensor(&extra), Err(TensorError::Trailing(1))));
        let g = GridSpec::from_tensor(&d2, &v2, 8.0, vec![(10.0, 13.0)]).unwrap();
        assert_eq!(g.num_classes, 1);
        assert!(GridSpec::from_tensor(&d2, &v2, 8.0, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn scores_and_sizes_are_bounded(
            logits in prop::collection::vec(-10.0..10.0f64, 2 * 2 * 2 * 7),
            conf in 0.0..1.0f64,
        ) {
            let anchors = vec![(10.0, 13.0), (30.0, 20.0)];
            let g = grid(2, 2, anchors.clone(), 2, logits);
            for d in decode_yolo(&g, 16, 16, conf, &labels()).unwrap() {
                prop_assert!(d.score >= conf && d.score < 1.0);
                let b = d.bbox.unwrap();
                prop_assert!(anchors.iter().any(|&(aw, ah)| b.w <= 4.0 * aw && b.h <= 4.0 * ah));
                prop_assert!(b.w >= 0.0 && b.h >= 0.0);
            }
        }
    }
}
