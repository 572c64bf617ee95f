use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    decode_yolo, nms, recognize_text, BitmapFont, CurrencyModel, CurrencyPrediction, Detection,
    GridSpec, TextLine, DEFAULT_CONF_THRESHOLD, DEFAULT_IOU_THRESHOLD,
};
use crate::clock::MonoClock;
use crate::ingest::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Currency,
    Objects,
    Text,
}

impl StageKind {
    pub const ALL: [StageKind; 3] = [StageKind::Currency, StageKind::Objects, StageKind::Text];

    pub fn as_str(&self) -> &'static str {
        match self {
            StageKind::Currency => "currency",
            StageKind::Objects => "objects",
            StageKind::Text => "text",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "currency" => Ok(StageKind::Currency),
            "objects" => Ok(StageKind::Objects),
            "text" => Ok(StageKind::Text),
            other => Err(format!(
                "unknown stage {other:?} (expected currency, objects or text)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize, Deserialize)]
pub enum StageError {
    #[error("stage unavailable: {0}")]
    StageUnavailable(String),
    #[error("stage failed: {0}")]
    Failed(String),
    #[error("stage panicked: {0}")]
    Panicked(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StageOutput {
    Currency(CurrencyPrediction),
    Detections(Vec<Detection>),
    Texts(Vec<TextLine>),
}

impl StageOutput {
    /// One-line human summary used in the event log.
    pub fn summary(&self) -> String {
        match self {
            StageOutput::Currency(p) => format!("{} ({:.2})", p.label, p.likelihood),
            StageOutput::Detections(d) if d.is_empty() => "no detections".into(),
            StageOutput::Detections(d) => {
                let labels: Vec<&str> = d.iter().map(|d| d.label.as_str()).collect();
                format!("{} detections: {}", d.len(), labels.join(", "))
            }
            StageOutput::Texts(t) if t.is_empty() => "no text".into(),
            StageOutput::Texts(t) => {
                let lines: Vec<&str> = t.iter().map(|l| l.text.as_str()).collect();
                lines.join(" / ")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub stage: StageKind,
    pub output: Option<StageOutput>,
    pub error: Option<StageError>,
    pub latency_ms: f64,
}

/// A detection stage operating on a shared, read-only frame.
pub trait Stage: Send + Sync {
    fn kind(&self) -> StageKind;
    fn process(&self, frame: &Frame) -> Result<StageOutput, StageError>;
}

/// Runs one stage with wall-clock timing. Errors and panics are captured in
/// the result.
pub fn run_stage(stage: &dyn Stage, frame: &Frame) -> StageResult {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| stage.process(frame)));
    let latency_ms = MonoClock::elapsed_ms(start);
    let (output, error) = match outcome {
        Ok(Ok(out)) => (Some(out), None),
        Ok(Err(e)) => (None, Some(e)),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (None, Some(StageError::Panicked(msg)))
        }
    };
    StageResult {
        stage: stage.kind(),
        output,
        error,
        latency_ms,
    }
}

pub struct CurrencyStage {
    pub model: Arc<dyn CurrencyModel>,
}

impl Stage for CurrencyStage {
    fn kind(&self) -> StageKind {
        StageKind::Currency
    }

    fn process(&self, frame: &Frame) -> Result<StageOutput, StageError> {
        Ok(StageOutput::Currency(self.model.predict(frame)))
    }
}

/// Produces raw grid logits for a frame.
pub trait ObjectModel: Send + Sync {
    fn infer(&self, frame: &Frame) -> Result<GridSpec, StageError>;
}

pub struct ObjectStage {
    pub model: Option<Arc<dyn ObjectModel>>,
    pub labels: Vec<String>,
    pub conf_threshold: f64,
    pub iou_threshold: f64,
}

impl ObjectStage {
    pub fn new(model: Option<Arc<dyn ObjectModel>>) -> Self {
        Self {
            model,
            labels: COCO_LABELS.iter().map(|s| s.to_string()).collect(),
            conf_threshold: DEFAULT_CONF_THRESHOLD,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
        }
    }
}

impl Stage for ObjectStage {
    fn kind(&self) -> StageKind {
        StageKind::Objects
    }

    fn process(&self, frame: &Frame) -> Result<StageOutput, StageError> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| StageError::StageUnavailable("no object model adapter bound".into()))?;
        let grid = model.infer(frame)?;
        let raw = decode_yolo(
            &grid,
            frame.width,
            frame.height,
            self.conf_threshold,
            &self.labels,
        )
        .map_err(|e| StageError::Failed(e.to_string()))?;
        Ok(StageOutput::Detections(nms(&raw, self.iou_threshold)))
    }
}

#[derive(Default)]
pub struct TextStage {
    pub font: BitmapFont,
}

impl Stage for TextStage {
    fn kind(&self) -> StageKind {
        StageKind::Text
    }

    fn process(&self, frame: &Frame) -> Result<StageOutput, StageError> {
        Ok(StageOutput::Texts(recognize_text(frame, &self.font)))
    }
}

pub const COCO_LABELS: [&str; 80] = [
    "person",
    "bicycle",
    "car",
    "motorcycle",
    "airplane",
    "bus",
    "train",
    "truck",
    "boat",
    "traffic light",
    "fire hydrant",
    "stop sign",
    "parking meter",
    "bench",
    "bird",
    "cat",
    "dog",
    "horse",
    "sheep",
    "cow",
    "elephant",
    "bear",
    "zebra",
    "giraffe",
    "backpack",
    "umbrella",
    "handbag",
    "tie",
    "suitcase",
    "frisbee",
    "skis",
    "snowboard",
    "sports ball",
    "kite",
    "baseball bat",
    "baseball glove",
    "skateboard",
    "surfboard",
    "tennis racket",
    "bottle",
    "wine glass",
    "cup",
    "fork",
    "knife",
    "spoon",
    "bowl",
    "banana",
    "apple",
    "sandwich",
    "orange",
    "broccoli",
    "carrot",
    "hot dog",
    "pizza",
    "donut",
    "cake",
    "chair",
    "couch",
    "potted plant",
    "bed",
    "dining table",
    "toilet",
    "tv",
    "laptop",
    "mouse",
    "remote",
    "keyboard",
    "cell phone",
    "microwave",
    "oven",
    "toaster",
    "sink",
    "refrigerator",
    "book",
    "clock",
    "vase",
    "scissors",
    "teddy bear",
    "hair drier",
    "toothbrush",
];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::solid;
    use crate::vision::{write_tensor, ClassifierConfig, FeatureSpec, TensorFileModel};

    fn frame() -> Frame {
        Frame::from_rgb(1, 0, 16, 16, solid(16, 16, [200, 30, 30]))
    }

    #[test]
    fn objects_without_model_are_unavailable() {
        let r = run_stage(&ObjectStage::new(None), &frame());
        assert_eq!(r.stage, StageKind::Objects);
        assert!(matches!(r.error, Some(StageError::StageUnavailable(_))));
        assert!(r.output.is_none());
        assert!(r.latency_ms >= 0.0);
    }

    #[test]
    fn currency_dispatch() {
        let f = frame();
        let spec = FeatureSpec::default();
        let cfg = ClassifierConfig {
            classes: vec!["10".into(), "Background".into()],
            centroids: vec![
                crate::vision::currency::Centroid {
                    class: 0,
                    feature: crate::vision::feature(&f, &spec),
                },
                crate::vision::currency::Centroid {
                    class: 1,
                    feature: vec![1.0 / 24.0; 24],
                },
            ],
            temperature: 0.05,
            spec,
        };
        let r = run_stage(
            &CurrencyStage {
                model: Arc::new(cfg),
            },
            &f,
        );
        match r.output {
            Some(StageOutput::Currency(p)) => assert_eq!(p.label, "10"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn panics_are_captured() {
        struct Boom;
        impl Stage for Boom {
            fn kind(&self) -> StageKind {
                StageKind::Text
            }
            fn process(&self, _: &Frame) -> Result<StageOutput, StageError> {
                panic!("kaboom")
            }
        }
        let r = run_stage(&Boom, &frame());
        assert_eq!(r.error, Some(StageError::Panicked("kaboom".into())));
    }

    #[test]
    fn objects_from_tensor_fixture_with_nms() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.bin");
        // 2x2 grid, one anchor, 2 classes; two neighbouring cells fire on "dog"
        let mut data = vec![-10f32; 2 * 2 * 7];
        for cell in [0usize, 1] {
            let s = cell * 7;
            data[s..s + 4].copy_from_slice(&[0.0, 0.0, 1.0, 1.0]);
            data[s + 4] = 6.0;
            data[s + 6] = 6.0 - cell as f32;
        }
        std::fs::write(&path, write_tensor(&[2, 2, 1, 7], &data)).unwrap();
        let model = TensorFileModel {
            path,
            stride: 8.0,
            anchors: vec![(24.0, 24.0)],
        };
        let mut stage = ObjectStage::new(Some(Arc::new(model)));
        stage.labels = vec!["person".into(), "dog".into()];
        let r = run_stage(&stage, &frame());
        match r.output {
            Some(StageOutput::Detections(d)) => {
                assert_eq!(d.len(), 1, "{d:?}");
                assert_eq!(d[0].label, "dog");
            }
            other => panic!("{other:?} {:?}", r.error),
        }
    }

    #[test]
    fn stage_names_parse() {
        for k in StageKind::ALL {
            assert_eq!(k.as_str().parse::<StageKind>().unwrap(), k);
        }
        assert!("speed".parse::<StageKind>().is_err());
    }
}
