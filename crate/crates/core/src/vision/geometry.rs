use serde::{Deserialize, Serialize};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.45;

/// Axis-aligned box in top-left form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            x,
            y,
            w: w.max(0.0),
            h: h.max(0.0),
        }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub score: f64,
    pub bbox: Option<BBox>,
    pub stage: String,
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let ih = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Class-aware greedy non-maximum suppression.
///
/// Candidates are visited by descending score (earlier input wins ties); one
/// is kept iff its IoU with every kept box of the same label is below
/// `iou_threshold`. Output is in visiting order.
pub fn nms(candidates: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| candidates[b].score.total_cmp(&candidates[a].score));
    let mut kept: Vec<&Detection> = Vec::new();
    for i in order {
        let cand = &candidates[i];
        let suppressed = kept.iter().any(|k| {
            k.label == cand.label
                && match (&k.bbox, &cand.bbox) {
                    (Some(a), Some(b)) => iou(a, b) >= iou_threshold,
                    _ => false,
                }
        });
        if !suppressed {
            kept.push(cand);
        }
    }
    kept.into_iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(label: &str, score: f64, b: BBox) -> Detection {
        Detection {
            label: label.into(),
            score,
            bbox: Some(b),
            stage: "objects".into(),
        }
    }

    #[test]
    fn iou_examples() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(
            iou(
                &BBox::new(0.0, 0.0, 1.0, 1.0),
                &BBox::new(5.0, 5.0, 1.0, 1.0)
            ),
            0.0
        );
        let third = iou(&a, &BBox::new(1.0, 0.0, 2.0, 2.0));
        assert!((third - 1.0 / 3.0).abs() < 1e-12);
        let zero = BBox::new(3.0, 3.0, 0.0, 0.0);
        assert_eq!(iou(&zero, &zero), 0.0);
    }

    #[test]
    fn nms_examples() {
        let b = BBox::new(1.0, 1.0, 4.0, 4.0);
        assert!(nms(&[], 0.45).is_empty());
        let one = vec![det("dog", 0.5, b)];
        assert_eq!(nms(&one, 0.45), one);
        let two = vec![det("dog", 0.8, b), det("dog", 0.9, b)];
        assert_eq!(nms(&two, 0.45), vec![det("dog", 0.9, b)]);
        // other label survives
        let mixed = vec![det("dog", 0.8, b), det("car", 0.9, b)];
        assert_eq!(nms(&mixed, 0.45).len(), 2);
    }

    #[test]
    fn nms_ties_keep_earlier_input() {
        let b = BBox::new(0.0, 0.0, 2.0, 2.0);
        let mut first = det("dog", 0.7, b);
        first.stage = "first".into();
        let out = nms(&[first.clone(), det("dog", 0.7, b)], 0.45);
        assert_eq!(out, vec![first]);
    }

    fn arb_det() -> impl Strategy<Value = Detection> {
        (
            0..3usize,
            0.0..1.0f64,
            0.0..20.0f64,
            0.0..20.0f64,
            0.0..10.0f64,
            0.0..10.0f64,
        )
            .prop_map(|(l, s, x, y, w, h)| det(["a", "b", "c"][l], s, BBox::new(x, y, w, h)))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric(a in arb_det(), b in arb_det()) {
            let (a, b) = (a.bbox.unwrap(), b.bbox.unwrap());
            prop_assert_eq!(iou(&a, &b), iou(&b, &a));
            if a.area() > 0.0 {
                prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn nms_properties(cands in prop::collection::vec(arb_det(), 0..12), thr in 0.05..0.95f64) {
            let kept = nms(&cands, thr);
            for k in &kept {
                prop_assert!(cands.contains(k));
            }
            for (i, a) in kept.iter().enumerate() {
                for b in &kept[i + 1..] {
                    if a.label == b.label {
                        prop_assert!(iou(a.bbox.as_ref().unwrap(), b.bbox.as_ref().unwrap()) < thr);
                    }
                }
            }
            for w in kept.windows(2) {
                prop_assert!(w[0].score >= w[1].score);
            }
            prop_assert_eq!(nms(&kept, thr), kept);
        }
    }
}
