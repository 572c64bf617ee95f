/// Temperature-scaled softmax, stabilized by subtracting the maximum.
pub fn softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    assert!(!scores.is_empty(), "softmax of an empty vector");
    assert!(temperature > 0.0, "temperature must be positive");
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores
        .iter()
        .map(|&s| ((s - max) / temperature).exp())
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
