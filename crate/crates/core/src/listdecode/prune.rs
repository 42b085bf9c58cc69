use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::metrics::{std_normal_cdf, tv_bounds_gaussian, tv_normal_1d};
use crate::model::{Dataset, Gaussian, Mixture};

const BINS: usize = 8;

/// min over equiprobable bins of 8·P̂(bin), bins taken along each whitened axis and by radius.
///
/// A component of weight w in the sampling distribution scores about w; a candidate
/// that misses the data leaves some bin nearly empty.
pub fn bin_score(g: &Gaussian, data: &Dataset) -> f64 {
    let d = g.dim();
    let chi = ChiSquared::new(d as f64).expect("positive dof");
    let mut counts = vec![0u32; (d + 1) * BINS];
    let mut z = vec![0.0; d];
    for x in data.iter() {
        whiten(g, x, &mut z);
        for (j, zj) in z.iter().enumerate() {
            let b = ((std_normal_cdf(*zj) * BINS as f64) as usize).min(BINS - 1);
            counts[j * BINS + b] += 1;
        }
        let r2: f64 = z.iter().map(|v| v * v).sum();
        let b = ((chi.cdf(r2) * BINS as f64) as usize).min(BINS - 1);
        counts[d * BINS + b] += 1;
    }
    let n = data.len().max(1) as f64;
    counts.iter().map(|&c| BINS as f64 * c as f64 / n).fold(f64::INFINITY, f64::min)
}

fn whiten(g: &Gaussian, x: &[f64], out: &mut [f64]) {
    let l = g.chol();
    let d = g.dim();
    for i in 0..d {
        let mut s = x[i] - g.mean()[i];
        for k in 0..i {
            s -= l[(i, k)] * out[k];
        }
        out[i] = s / l[(i, i)];
    }
}

/// Mean log-likelihood.
pub fn loglik_score(g: &Gaussian, data: &Dataset) -> f64 {
    data.iter().map(|x| g.log_density(x)).sum::<f64>() / data.len().max(1) as f64
}

/// Symmetric TV proxy: exact in one dimension, the larger Δ/√2 bound otherwise.
pub(crate) fn separation(a: &Gaussian, b: &Gaussian) -> f64 {
    if a.dim() == 1 {
        tv_normal_1d(a.mean1(), a.sd1(), b.mean1(), b.sd1())
    } else {
        let u1 = tv_bounds_gaussian(a, b).map(|t| t.1).unwrap_or(1.0);
        let u2 = tv_bounds_gaussian(b, a).map(|t| t.1).unwrap_or(1.0);
        u1.max(u2)
    }
}

/// Greedy selection by descending score (ties by index), skipping candidates within
/// `rho` of an already kept one. Returns kept indices in selection order.
pub fn prune_by_score(cands: &[Gaussian], scores: &[f64], cap: usize, rho: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.len() == cap {
            break;
        }
        if kept.iter().all(|&j| separation(&cands[i], &cands[j]) > rho) {
            kept.push(i);
        }
    }
    kept
}

/// Log-density table: rows are components, columns are points.
pub(crate) fn log_table(comps: &[Gaussian], data: &Dataset) -> Vec<Vec<f64>> {
    comps.iter().map(|g| data.iter().map(|x| g.log_density(x)).collect()).collect()
}

/// EM over the weights only, components fixed. Returns (weights, mean log-likelihood).
pub fn em_weights(table: &[&[f64]], iters: usize) -> (Vec<f64>, f64) {
    let s = table.len();
    let n = table[0].len();
    let mut w = vec![1.0 / s as f64; s];
    let mut ll = f64::NEG_INFINITY;
    let mut resp = vec![0.0; s];
    for it in 0..=iters {
        let mut acc = vec![0.0; s];
        let mut total = 0.0;
        for x in 0..n {
            let mut max = f64::NEG_INFINITY;
            for j in 0..s {
                resp[j] = if w[j] > 0.0 { w[j].ln() + table[j][x] } else { f64::NEG_INFINITY };
                max = max.max(resp[j]);
            }
            let mut z = 0.0;
            for r in resp.iter_mut() {
                *r = (*r - max).exp();
                z += *r;
            }
            total += max + z.ln();
            for j in 0..s {
                acc[j] += resp[j] / z;
            }
        }
        ll = total / n as f64;
        if it == iters {
            break;
        }
        for j in 0..s {
            w[j] = acc[j] / n as f64;
        }
    }
    (w, ll)
}

/// Full EM started from `init`; covariances get the (trace/d)·1e-6 ridge.
pub fn em_refine(init: &Mixture, data: &Dataset, iters: usize) -> Mixture {
    let s = init.len();
    let d = data.dim();
    let n = data.len();
    let mut cur = init.clone();
    let mut resp = vec![vec![0.0; n]; s];
    for _ in 0..iters {
        for (x, p) in data.iter().enumerate() {
            let mut max = f64::NEG_INFINITY;
            for j in 0..s {
                let w = cur.weights()[j];
                resp[j][x] = if w > 0.0 { w.ln() + cur.components()[j].log_density(p) } else { f64::NEG_INFINITY };
                max = max.max(resp[j][x]);
            }
            let mut z = 0.0;
            for r in resp.iter_mut() {
                r[x] = (r[x] - max).exp();
                z += r[x];
            }
            for r in resp.iter_mut() {
                r[x] /= z;
            }
        }
        let mut weights = Vec::with_capacity(s);
        let mut comps = Vec::with_capacity(s);
        for j in 0..s {
            let nj: f64 = resp[j].iter().sum();
            if nj < (d + 1) as f64 {
                return cur;
            }
            let mut mean = DVector::zeros(d);
            for (x, p) in data.iter().enumerate() {
                mean += DVector::from_column_slice(p) * resp[j][x];
            }
            mean /= nj;
            let mut cov = DMatrix::zeros(d, d);
            for (x, p) in data.iter().enumerate() {
                let v = DVector::from_column_slice(p) - &mean;
                cov += &v * v.transpose() * resp[j][x];
            }
            cov /= nj;
            let ridge = cov.trace() / d as f64 * 1e-6;
            for i in 0..d {
                cov[(i, i)] += ridge;
            }
            match Gaussian::new(mean, cov) {
                Ok(g) => comps.push(g),
                Err(_) => return cur,
            }
            weights.push(nj / n as f64);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        match Mixture::new(weights, comps) {
            Ok(m) => cur = m,
            Err(_) => return cur,
        }
    }
    cur
}
