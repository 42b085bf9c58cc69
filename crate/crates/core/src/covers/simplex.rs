use std::collections::BTreeSet;

use crate::error::{invalid, Result};

/// Number of grid cells per axis for side `alpha`.
pub(crate) fn cells_per_axis(alpha: f64) -> usize {
    ((1.0 / alpha) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// One representative per side-`alpha` cube meeting the simplex, deduplicated.
pub(crate) fn simplex_points(k: usize, alpha: f64) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(invalid("simplex dimension must be at least 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("simplex cover needs 0 < alpha <= 1, got {alpha}")));
    }
    let n = cells_per_axis(alpha);
    let total = (n as f64).powi(k as i32);
    if total > 1e8 {
        return Err(crate::Error::InfeasibleBudget { what: "simplex cover", requested: total, cap: 100_000_000 });
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut j = vec![0usize; k];
    loop {
        let sum_a: f64 = j.iter().map(|&v| v as f64 * alpha).sum();
        let sum_b = sum_a + k as f64 * alpha;
        if sum_a <= 1.0 + 1e-12 && sum_b >= 1.0 - 1e-12 {
            let lambda = ((1.0 - sum_a) / (k as f64 * alpha)).clamp(0.0, 1.0);
            let mut w: Vec<f64> = j.iter().map(|&v| (v as f64 + lambda) * alpha).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            let key: Vec<i64> = w.iter().map(|x| (x * 1e12).round() as i64).collect();
            if seen.insert(key) {
                out.push(w);
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(out);
            }
            j[pos] += 1;
            if j[pos] < n {
                break;
            }
            j[pos] = 0;
            pos += 1;
        }
    }
}

/// Upper bound on the number of representatives within ℓ∞ distance `gamma` of any point.
pub(crate) fn simplex_ball_bound(k: usize, alpha: f64, gamma: f64) -> u64 {
    let per_axis = (2.0 * gamma / alpha - 1e-12).ceil().max(0.0) as u64 + 1;
    per_axis.saturating_pow(k as u32)
}
