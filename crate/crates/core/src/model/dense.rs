use super::Mixture;
use crate::error::{invalid, Result};

/// `m = gamma * residual + (1 - gamma) * dense_part`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseDecomposition {
    pub gamma: f64,
    pub dense_part: Mixture,
    /// Absent when no weight falls below the threshold.
    pub residual: Option<Mixture>,
    /// Original component indices kept in `dense_part`.
    pub dense_indices: Vec<usize>,
}

impl DenseDecomposition {
    /// Weights of `gamma * residual + (1 - gamma) * dense_part`, in the original component order.
    pub fn recombined_weights(&self, original_len: usize) -> Vec<f64> {
        let mut w = vec![0.0; original_len];
        for (&i, &v) in self.dense_indices.iter().zip(self.dense_part.weights()) {
            w[i] = (1.0 - self.gamma) * v;
        }
        if let Some(res) = &self.residual {
            let rest = (0..original_len).filter(|i| !self.dense_indices.contains(i));
            for (i, &v) in rest.zip(res.weights()) {
                w[i] = self.gamma * v;
            }
        }
        w
    }
}

/// Splits off components with weight below `alpha / k`.
pub fn dense_decompose(m: &Mixture, k: usize, alpha: f64) -> Result<DenseDecomposition> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(invalid(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    if k == 0 || m.len() > k {
        return Err(invalid(format!("mixture has {} components, k = {k}", m.len())));
    }
    let eta = alpha / k as f64;
    let (mut dense, mut small) = (Vec::new(), Vec::new());
    for (i, &w) in m.weights().iter().enumerate() {
        if w < eta {
            small.push(i);
        } else {
            dense.push(i);
        }
    }
    let gamma: f64 = small.iter().map(|&i| m.weights()[i]).sum();
    let part = |idx: &[usize], scale: f64| -> Result<Mixture> {
        let mut w: Vec<f64> = idx.iter().map(|&i| m.weights()[i] / scale).collect();
        // absorb the last few ulps so the sum check holds
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        Mixture::new(w, idx.iter().map(|&i| m.components()[i].clone()).collect())
    };
    let dense_part = if small.is_empty() { m.clone() } else { part(&dense, 1.0 - gamma)? };
    let residual = if small.is_empty() || gamma == 0.0 { None } else { Some(part(&small, gamma)?) };
    Ok(DenseDecomposition { gamma, dense_part, residual, dense_indices: dense })
}
