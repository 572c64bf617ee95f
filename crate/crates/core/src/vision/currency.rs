//! Reference currency classifier: HSV colour histograms matched against
//! per-class centroids, with temperature-scaled softmax likelihoods.

use std::path::Path;

use bytes::Bytes;
use serde::{Deserialize, Serialize};

use super::softmax;
use crate::ingest::{decode_frame, Frame};

pub const DEFAULT_CLASSES: [&str; 8] =
    ["10", "20", "50", "100", "200", "500", "2000", "Background"];
pub const BACKGROUND: &str = "Background";
pub const DEFAULT_TEMPERATURE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrencyPrediction {
    pub label: String,
    pub likelihood: f64,
    /// Per-class probabilities in class-list order.
    pub scores: Vec<f64>,
}

impl CurrencyPrediction {
    pub fn is_background(&self) -> bool {
        self.label == BACKGROUND
    }

    /// Label and likelihood from raw class scores: softmax at
    /// `temperature`, argmax with ties going to the earlier class.
    pub fn from_scores(classes: &[String], raw: &[f64], temperature: f64) -> Self {
        assert_eq!(classes.len(), raw.len(), "one score per class");
        let probs = softmax(raw, temperature);
        let mut best = 0;
        for i in 1..raw.len() {
            if raw[i] > raw[best] {
                best = i;
            }
        }
        Self {
            label: classes[best].clone(),
            likelihood: probs[best],
            scores: probs,
        }
    }
}

/// Anything producing one raw score (logit) per class. A neural network can
/// stand in for the reference classifier through this trait.
pub trait CurrencyModel: Send + Sync {
    fn classes(&self) -> &[String];
    fn temperature(&self) -> f64;
    fn class_scores(&self, frame: &Frame) -> Vec<f64>;

    fn predict(&self, frame: &Frame) -> CurrencyPrediction {
        CurrencyPrediction::from_scores(
            self.classes(),
            &self.class_scores(frame),
            self.temperature(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// Side of the square the image is box-filtered down to.
    pub downsample: u32,
    /// Histogram bins per HSV channel.
    pub bins: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            downsample: 32,
            bins: 8,
        }
    }
}

impl FeatureSpec {
    pub fn dims(&self) -> usize {
        self.bins * 3
    }
}

fn downsample(frame: &Frame, side: u32) -> Vec<[f64; 3]> {
    let (w, h) = (frame.width as u64, frame.height as u64);
    let n = side as u64;
    let mut out = Vec::with_capacity((n * n) as usize);
    for ty in 0..n {
        let y0 = ty * h / n;
        let y1 = ((ty + 1) * h / n).max(y0 + 1).min(h.max(1));
        for tx in 0..n {
            let x0 = tx * w / n;
            let x1 = ((tx + 1) * w / n).max(x0 + 1).min(w.max(1));
            let mut acc = [0f64; 3];
            let mut count = 0f64;
            for y in y0.min(h - 1)..y1 {
                for x in x0.min(w - 1)..x1 {
                    let px = frame.rgb(x as u32, y as u32);
                    for c in 0..3 {
                        acc[c] += px[c] as f64;
                    }
                    count += 1.0;
                }
            }
            out.push(acc.map(|a| a / count));
        }
    }
    out
}

/// RGB in [0,255] to (hue degrees in [0,360), saturation, value) in [0,1].
fn rgb_to_hsv([r, g, b]: [f64; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max <= 0.0 { 0.0 } else { delta / max };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h.rem_euclid(360.0), s, v)
}

fn bin(x: f64, bins: usize) -> usize {
    ((x * bins as f64).floor() as usize).min(bins - 1)
}

/// Concatenated H, S and V histograms of the downsampled image, L1-normalized
/// over the whole vector.
pub fn feature(frame: &Frame, spec: &FeatureSpec) -> Vec<f64> {
    let cells = downsample(frame, spec.downsample);
    let mut hist = vec![0f64; spec.dims()];
    for px in &cells {
        let (h, s, v) = rgb_to_hsv(*px);
        hist[bin(h / 360.0, spec.bins)] += 1.0;
        hist[spec.bins + bin(s, spec.bins)] += 1.0;
        hist[2 * spec.bins + bin(v, spec.bins)] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    hist.iter_mut().for_each(|x| *x /= total);
    hist
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub class: usize,
    pub feature: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub classes: Vec<String>,
    /// One per class, except that every enrolled background is its own
    /// centroid; a class scores by its nearest centroid.
    pub centroids: Vec<Centroid>,
    pub temperature: f64,
    pub spec: FeatureSpec,
}

impl ClassifierConfig {
    pub fn centroid_of(&self, class: &str) -> Option<&[f64]> {
        let idx = self.classes.iter().position(|c| c == class)?;
        self.centroids
            .iter()
            .find(|c| c.class == idx)
            .map(|c| c.feature.as_slice())
    }
}

impl CurrencyModel for ClassifierConfig {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn class_scores(&self, frame: &Frame) -> Vec<f64> {
        let f = feature(frame, &self.spec);
        let mut scores = vec![f64::NEG_INFINITY; self.classes.len()];
        for c in &self.centroids {
            scores[c.class] = scores[c.class].max(-l2(&f, &c.feature));
        }
        scores
    }
}

pub fn classify_currency(frame: &Frame, config: &ClassifierConfig) -> CurrencyPrediction {
    config.predict(frame)
}

#[derive(Debug, thiserror::Error)]
pub enum EnrollError {
    #[error("class {0:?} has no fixture images")]
    MissingClass(String),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("cannot decode fixture {path}: {reason}")]
    BadImage { path: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn class_images(dir: &Path) -> Result<Vec<std::path::PathBuf>, EnrollError> {
    let rd = match std::fs::read_dir(dir) {
        Ok(rd) => rd,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(EnrollError::Io {
                path: dir.display().to_string(),
                source,
            })
        }
    };
    let mut files: Vec<_> = rd
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension().and_then(|e| e.to_str()).is_some_and(|e| {
                    e.eq_ignore_ascii_case("jpg") || e.eq_ignore_ascii_case("jpeg")
                })
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Enrolls every class from `fixture_dir/<class>/*.jpg`.
pub fn enroll_currency(
    fixture_dir: &Path,
    classes: &[String],
    temperature: f64,
    spec: FeatureSpec,
) -> Result<ClassifierConfig, EnrollError> {
    if !(temperature > 0.0) {
        return Err(EnrollError::BadTemperature(temperature));
    }
    let mut centroids = Vec::new();
    for (idx, class) in classes.iter().enumerate() {
        let files = class_images(&fixture_dir.join(class))?;
        if files.is_empty() {
            return Err(EnrollError::MissingClass(class.clone()));
        }
        let mut features = Vec::with_capacity(files.len());
        for path in &files {
            let data = std::fs::read(path).map_err(|source| EnrollError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let frame =
                decode_frame(Bytes::from(data), 0, 0).map_err(|e| EnrollError::BadImage {
                    path: path.display().to_string(),
                    reason: e.to_string(),
                })?;
            features.push(feature(&frame, &spec));
        }
        if class == BACKGROUND {
            centroids.extend(features.into_iter().map(|feature| Centroid {
                class: idx,
                feature,
            }));
        } else {
            let n = features.len() as f64;
            let mut mean = vec![0f64; spec.dims()];
            for f in &features {
                for (m, x) in mean.iter_mut().zip(f) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            centroids.push(Centroid {
                class: idx,
                feature: mean,
            });
        }
    }
    Ok(ClassifierConfig {
        classes: classes.to_vec(),
        centroids,
        temperature,
        spec,
    })
}

/// Two decimals, ties to even on the exact binary value.
pub fn format_likelihood(likelihood: f64) -> String {
    format!("{likelihood:.2}")
}

/// Two-line prediction report: the image path, then the verdict line.
pub fn format_prediction(p: &CurrencyPrediction, image_path: &str) -> String {
    format!(
        "{image_path}\nThis is image is a {} - Likelihood: {}",
        p.label,
        format_likelihood(p.likelihood)
    )
}

/// Keras-style progress line printed before a single-batch prediction,
/// e.g. `1/1 [=====] - 1s 593ms/step`.
pub fn format_step_line(elapsed_ms: f64, step_ms: f64) -> String {
    let per_step = if step_ms >= 1000.0 {
        format!("{:.0}s/step", step_ms / 1000.0)
    } else if step_ms >= 1.0 {
        format!("{step_ms:.0}ms/step")
    } else {
        format!("{:.0}us/step", step_ms * 1000.0)
    };
    format!("1/1 [=====] - {:.0}s {per_step}", elapsed_ms / 1000.0)
}
