//! Detection stages: currency classification, YOLO-style decoding with NMS,
//! and bitmap-font text recognition, behind one [`Stage`] contract.

mod currency;
mod geometry;
mod ocr;
mod softmax;
mod stage;
mod yolo;

pub use currency::{
    classify_currency, enroll_currency, feature, format_likelihood, format_prediction,
    format_step_line, Centroid, ClassifierConfig, CurrencyModel, CurrencyPrediction, EnrollError,
    FeatureSpec, DEFAULT_CLASSES, DEFAULT_TEMPERATURE,
};
pub use geometry::{iou, nms, BBox, Detection, DEFAULT_IOU_THRESHOLD};
pub use ocr::{recognize_text, render_text, BitmapFont, TextLine, CELL_HEIGHT, CELL_WIDTH};
pub use softmax::softmax;
pub use stage::{
    run_stage, CurrencyStage, ObjectModel, ObjectStage, Stage, StageError, StageKind, StageOutput,
    StageResult, TextStage, COCO_LABELS,
};
pub use yolo::{
    decode_yolo, read_tensor, sigmoid, write_tensor, CommandModel, GridSpec, TensorError,
    TensorFileModel, YoloError, DEFAULT_CONF_THRESHOLD,
};
