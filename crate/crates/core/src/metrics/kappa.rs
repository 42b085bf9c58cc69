use serde::{Deserialize, Serialize};

use crate::model::{Gaussian, Mixture};

/// κ_mix value and an optimal matching; `matching[i]` is the partner of component `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaMixResult {
    pub value: f64,
    pub matching: Option<Vec<usize>>,
}

impl KappaMixResult {
    pub fn infinite() -> Self {
        KappaMixResult { value: f64::INFINITY, matching: None }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Kuhn augmenting path from row `i` using only edges with cost <= `thr`.
fn augment(i: usize, cost: &[Vec<f64>], thr: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
    for j in 0..cost.len() {
        if cost[i][j] <= thr && !seen[j] {
            seen[j] = true;
            if owner[j].map_or(true, |o| augment(o, cost, thr, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
    }
    false
}

fn perfect_matching(cost: &[Vec<f64>], thr: f64) -> Option<Vec<usize>> {
    let s = cost.len();
    let mut owner = vec![None; s];
    for i in 0..s {
        let mut seen = vec![false; s];
        if !augment(i, cost, thr, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut perm = vec![0; s];
    for (j, o) in owner.iter().enumerate() {
        perm[o.expect("perfect matching")] = j;
    }
    Some(perm)
}

/// Minimizes the maximum matched cost over permutations of a square matrix.
///
/// Binary search over the sorted distinct entries; feasibility by augmenting paths.
pub fn bottleneck_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    if cost.is_empty() {
        return (0.0, Vec::new());
    }
    let mut values: Vec<f64> = cost.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let (mut lo, mut hi) = (0, values.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(cost, values[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let perm = perfect_matching(cost, values[lo]).expect("the largest cost always admits a matching");
    (values[lo], perm)
}

/// Pair cost max{s·|w_i − w'_j|, tv(f_i, f'_j)} for every pair.
pub fn kappa_costs(m1: &Mixture, m2: &Mixture, tv: &mut impl FnMut(&Gaussian, &Gaussian) -> f64) -> Vec<Vec<f64>> {
    let s = m1.len() as f64;
    m1.weights()
        .iter()
        .zip(m1.components())
        .map(|(w, f)| {
            m2.weights().iter().zip(m2.components()).map(|(w2, f2)| (s * (w - w2).abs()).max(tv(f, f2))).collect()
        })
        .collect()
}

/// Component-wise mixture distance; infinite when component counts differ.
pub fn kappa_mix(m1: &Mixture, m2: &Mixture, mut tv: impl FnMut(&Gaussian, &Gaussian) -> f64) -> KappaMixResult {
    if m1.len() != m2.len() {
        return KappaMixResult::infinite();
    }
    let (value, perm) = bottleneck_assignment(&kappa_costs(m1, m2, &mut tv));
    KappaMixResult { value, matching: Some(perm) }
}
