use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;

use super::{ln_choose, model_key, DecodeManifest, DecodeParams, HypothesisList, EXHAUSTIVE_LIMIT};
use crate::error::{Error, Result};
use crate::model::{Dataset, Gaussian, Mixture};

/// Dyadic offsets j·R/2^(b−1) for j in [−2^(b−1), 2^(b−1)]; just {0} when b = 0.
pub fn grid_offsets(bits: u32, radius: f64) -> Vec<f64> {
    if bits == 0 {
        return vec![0.0];
    }
    let half = 1i64 << (bits - 1);
    (-half..=half).map(|j| j as f64 * radius / half as f64).collect()
}

/// Empirical mean and covariance of the selected points, regularized by (trace/d)·1e-6·I.
pub fn fit_gaussian(data: &Dataset, idx: &[usize]) -> Option<Gaussian> {
    let d = data.dim();
    let n = idx.len() as f64;
    let mut mean = DVector::zeros(d);
    for &i in idx {
        mean += DVector::from_column_slice(data.point(i));
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for &i in idx {
        let x = DVector::from_column_slice(data.point(i)) - &mean;
        cov += &x * x.transpose();
    }
    cov /= n - 1.0;
    let ridge = cov.trace() / d as f64 * 1e-6;
    if !(ridge > 0.0) {
        return None;
    }
    for j in 0..d {
        cov[(j, j)] += ridge;
    }
    Gaussian::new(mean, cov).ok()
}

/// The local grid around `fit`: whitened mean offsets times log-Cholesky scale offsets.
pub(crate) fn local_grid(fit: &Gaussian, offsets: &[f64]) -> Vec<Gaussian> {
    if offsets.len() == 1 {
        return vec![fit.clone()];
    }
    let d = fit.dim();
    let big_d = d * (d + 1) / 2;
    let l = fit.chol();
    let mut out = Vec::with_capacity(offsets.len().pow((d + big_d) as u32));
    let mut scale_idx = vec![0usize; big_d];
    loop {
        let mut mm = DMatrix::zeros(d, d);
        let mut p = 0;
        for i in 0..d {
            for j in 0..=i {
                let e = offsets[scale_idx[p]];
                mm[(i, j)] = if i == j { e.exp() } else { e };
                p += 1;
            }
        }
        let l2 = l * &mm;
        let cov = &l2 * l2.transpose();
        let mut mean_idx = vec![0usize; d];
        loop {
            let delta = DVector::from_iterator(d, mean_idx.iter().map(|&k| offsets[k]));
            let mean = fit.mean() + l * delta;
            if let Ok(g) = Gaussian::new(mean, cov.clone()) {
                out.push(g);
            }
            if !advance(&mut mean_idx, offsets.len()) {
                break;
            }
        }
        if !advance(&mut scale_idx, offsets.len()) {
            return out;
        }
    }
}

/// Odometer step; false once every digit has wrapped.
pub(crate) fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Next k-combination of 0..n in lexicographic order.
pub(crate) fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Grid points per fit.
pub(crate) fn grid_size(d: usize, p: &DecodeParams) -> f64 {
    let per_axis = grid_offsets(p.grid_bits, p.grid_radius).len() as f64;
    per_axis.powi((d + d * (d + 1) / 2) as i32)
}

/// Subset-fit decoder on a size-m subsample of `data`.
pub fn gaussian_list_decode<R: Rng + ?Sized>(data: &Dataset, p: &DecodeParams, rng: &mut R) -> Result<HypothesisList> {
    if data.len() < p.m || data.len() < p.subset_size {
        return Err(Error::InsufficientData { required: p.m.max(p.subset_size) as u64, available: data.len() as u64 });
    }
    p.validate()?;
    let sample = if data.len() == p.m {
        data.clone()
    } else {
        let mut idx = index::sample(rng, data.len(), p.m).into_vec();
        idx.sort_unstable();
        data.select(&idx)
    };
    decode_sample(&sample, p, rng)
}

pub(crate) fn decode_sample<R: Rng + ?Sized>(
    sample: &Dataset,
    p: &DecodeParams,
    rng: &mut R,
) -> Result<HypothesisList> {
    let d = sample.dim();
    let m = sample.len();
    let s = p.subset_size;
    let grid = grid_size(d, p);
    if grid > p.l_budget as f64 {
        return Err(Error::InfeasibleBudget { what: "local grid", requested: grid, cap: p.l_budget as u64 });
    }
    let offsets = grid_offsets(p.grid_bits, p.grid_radius);
    let ln_subsets = ln_choose(m as u64, s as u64);
    let exhaustive = ln_subsets <= EXHAUSTIVE_LIMIT.ln() && ln_subsets.exp().round() * grid <= p.l_budget as f64;
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    if exhaustive {
        let mut c: Vec<usize> = (0..s).collect();
        loop {
            subsets.push(c.clone());
            if !next_combination(&mut c, m) {
                break;
            }
        }
    } else {
        let count = (p.l_budget as f64 / grid).floor().max(1.0) as usize;
        for _ in 0..count {
            let mut idx = index::sample(rng, m, s).into_vec();
            idx.sort_unstable();
            subsets.push(idx);
        }
    }
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    let mut raw = 0u64;
    for sub in &subsets {
        let Some(fit) = fit_gaussian(sample, sub) else { continue };
        for g in local_grid(&fit, &offsets) {
            raw += 1;
            let mixture = Mixture::single(g);
            if seen.insert(model_key(&mixture)) {
                items.push(mixture);
            }
        }
    }
    items.truncate(p.l_budget);
    Ok(HypothesisList {
        items,
        source_chunk: 0,
        budget: p.l_budget as u64,
        manifest: DecodeManifest {
            m,
            n: m,
            gamma: 0.0,
            formula_budget: p.l_budget as f64,
            mode: if exhaustive { "exhaustive" } else { "random" }.into(),
            trials: subsets.len() as u64,
            raw_size: raw,
        },
    })
}
