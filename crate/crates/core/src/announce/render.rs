use serde::{Deserialize, Serialize};

use crate::vision::{StageKind, StageOutput, StageResult};

const BACKGROUND: &str = "Background";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub text: String,
    /// Lower is more urgent.
    pub priority: i32,
    pub source_stage: StageKind,
    pub dedupe_key: String,
    pub created_at_ms: u64,
}

impl Announcement {
    fn new(stage: StageKind, label: &str, text: String, priority: i32, created_at_ms: u64) -> Self {
        Self {
            text,
            priority,
            source_stage: stage,
            dedupe_key: format!("{stage}:{label}"),
            created_at_ms,
        }
    }
}

/// Priorities per source stage. Obstacles first, then currency, then text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnouncePolicy {
    pub objects: i32,
    pub currency: i32,
    pub text: i32,
}

impl Default for AnnouncePolicy {
    fn default() -> Self {
        Self {
            objects: 0,
            currency: 1,
            text: 2,
        }
    }
}

/// Renders stage outputs as utterances, sorted by (priority, created_at).
/// Background predictions stay silent.
pub fn render_announcements(
    results: &[StageResult],
    created_at_ms: u64,
    policy: &AnnouncePolicy,
) -> Vec<Announcement> {
    let mut out = Vec::new();
    for r in results {
        let Some(output) = &r.output else { continue };
        match output {
            StageOutput::Detections(dets) => {
                for d in dets
                    .iter()
                    .filter(|d| d.label != BACKGROUND && !d.label.is_empty())
                {
                    out.push(Announcement::new(
                        StageKind::Objects,
                        &d.label,
                        format!("A {} ahead", d.label),
                        policy.objects,
                        created_at_ms,
                    ));
                }
            }
            StageOutput::Currency(p) => {
                if !p.is_background() {
                    out.push(Announcement::new(
                        StageKind::Currency,
                        &p.label,
                        format!("This is a {} rupee note", p.label),
                        policy.currency,
                        created_at_ms,
                    ));
                }
            }
            StageOutput::Texts(lines) => {
                for line in lines.iter().filter(|l| !l.text.trim().is_empty()) {
                    out.push(Announcement::new(
                        StageKind::Text,
                        &line.text,
                        format!("Text says: {}", line.text),
                        policy.text,
                        created_at_ms,
                    ));
                }
            }
        }
    }
    out.sort_by_key(|a| (a.priority, a.created_at_ms));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::{BBox, CurrencyPrediction, Detection, TextLine};
    use proptest::prelude::*;

    fn result(stage: StageKind, output: StageOutput) -> StageResult {
        StageResult {
            stage,
            output: Some(output),
            error: None,
            latency_ms: 1.0,
        }
    }

    fn currency(label: &str) -> StageResult {
        result(
            StageKind::Currency,
            StageOutput::Currency(CurrencyPrediction {
                label: label.into(),
                likelihood: 1.0,
                scores: vec![1.0],
            }),
        )
    }

    fn object(label: &str) -> StageResult {
        result(
            StageKind::Objects,
            StageOutput::Detections(vec![Detection {
                label: label.into(),
                score: 0.9,
                bbox: Some(BBox::new(0.0, 0.0, 1.0, 1.0)),
                stage: "objects".into(),
            }]),
        )
    }

    fn text(s: &str) -> StageResult {
        result(
            StageKind::Text,
            StageOutput::Texts(vec![TextLine {
                text: s.into(),
                bbox: BBox::new(0.0, 0.0, 5.0, 7.0),
            }]),
        )
    }

    #[test]
    fn currency_phrase() {
        let a = render_announcements(&[currency("100")], 5, &AnnouncePolicy::default());
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].text, "This is a 100 rupee note");
        assert_eq!(a[0].priority, 1);
        assert_eq!(a[0].dedupe_key, "currency:100");
        assert_eq!(a[0].created_at_ms, 5);
    }

    #[test]
    fn background_is_silent() {
        assert!(
            render_announcements(&[currency("Background")], 0, &AnnouncePolicy::default())
                .is_empty()
        );
    }

    #[test]
    fn obstacles_come_first() {
        let a = render_announcements(
            &[text("EXIT"), object("dog")],
            0,
            &AnnouncePolicy::default(),
        );
        let texts: Vec<&str> = a.iter().map(|a| a.text.as_str()).collect();
        assert_eq!(texts, vec!["A dog ahead", "Text says: EXIT"]);
    }

    #[test]
    fn errored_results_produce_nothing() {
        let r = StageResult {
            stage: StageKind::Objects,
            output: None,
            error: Some(crate::vision::StageError::Failed("x".into())),
            latency_ms: 0.0,
        };
        assert!(render_announcements(&[r], 0, &AnnouncePolicy::default()).is_empty());
    }

    proptest! {
        #[test]
        fn background_never_spoken(
            picks in prop::collection::vec((0..3usize, prop::sample::select(vec![
                "Background", "10", "100", "2000", "dog", "car", "EXIT", "Background",
            ])), 0..12)
        ) {
            let results: Vec<StageResult> = picks.iter().map(|&(k, label)| match k {
                0 => currency(label),
                1 => object(label),
                _ => text(&label.to_uppercase()),
            }).collect();
            let anns = render_announcements(&results, 0, &AnnouncePolicy::default());
            for a in &anns {
                prop_assert!(!a.text.contains("Background"));
            }
            for w in anns.windows(2) {
                prop_assert!((w[0].priority, w[0].created_at_ms) <= (w[1].priority, w[1].created_at_ms));
            }
        }
    }
}
