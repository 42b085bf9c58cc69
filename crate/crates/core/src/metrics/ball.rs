/// Indices of `candidates` within `radius` of `center` under `metric`.
pub fn ball_members<H>(center: &H, candidates: &[H], radius: f64, mut metric: impl FnMut(&H, &H) -> f64) -> Vec<usize> {
    candidates.iter().enumerate().filter(|(_, c)| metric(center, c) <= radius).map(|(i, _)| i).collect()
}

/// ℓ∞ distance between weight vectors; infinite on length mismatch.
pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
