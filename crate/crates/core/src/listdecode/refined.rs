use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::next_combination;
use super::prune::{bin_score, em_refine, em_weights, log_table, prune_by_score, separation};
use super::{contamination_sample_size, lift_contamination, DecodeParams, HypothesisList};
use crate::error::{invalid, Result};
use crate::metrics::kappa_mix;
use crate::model::{Dataset, Gaussian, Mixture};

/// Settings of the refined decoder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Lifted fits kept as EM seeds, greedily by data score.
    pub seeds: usize,
    /// Minimum TV between kept seeds.
    pub seed_separation: f64,
    /// Prefix of the data used to rank tuples.
    pub score_points: usize,
    /// Tuples that get full EM.
    pub top: usize,
    pub weight_iters: usize,
    pub em_iters: usize,
    /// Each refined model is emitted with weight shifts of ±h, …, ±steps·h between
    /// every pair of components, h = alpha/s.
    pub weight_steps: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            seeds: 20,
            seed_separation: 0.5,
            score_points: 500,
            top: 3,
            weight_iters: 6,
            em_iters: 25,
            weight_steps: 3,
        }
    }
}

fn weight_neighbors(m: &Mixture, h: f64, steps: usize) -> Vec<Mixture> {
    let s = m.len();
    let mut out = vec![m.clone()];
    for i in 0..s {
        for j in i + 1..s {
            for step in 1..=steps {
                for sign in [1.0, -1.0] {
                    let mut w = m.weights().to_vec();
                    let shift = sign * step as f64 * h;
                    w[i] += shift;
                    w[j] -= shift;
                    if w[i] >= 0.0 && w[j] >= 0.0 {
                        if let Ok(n) = Mixture::new(w, m.components().to_vec()) {
                            out.push(n);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Lifted component fits pruned to well-separated seeds, every combination of at
/// most k distinct seeds ranked by likelihood under EM weights, full EM on the best `top`, near-duplicates
/// (κ_mix ≤ α/4) dropped, each survivor emitted with its weight-grid neighbors.
pub fn refined_dense_decode<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    p: &DecodeParams,
    rp: &RefineParams,
    rng: &mut R,
) -> Result<HypothesisList> {
    if k == 0 || rp.top == 0 {
        return Err(invalid("k and top must be at least 1"));
    }
    let mut all = p.clone();
    all.list_cap = None;
    let comps = lift_contamination(data, &all, rng)?;
    let fits: Vec<Gaussian> = comps.items.iter().map(|m| m.components()[0].clone()).collect();
    let pool = data.slice(0, contamination_sample_size(p.m, p.beta, p.gamma));
    let scores: Vec<f64> = fits.iter().map(|g| bin_score(g, &pool)).collect();
    let gs: Vec<Gaussian> =
        prune_by_score(&fits, &scores, rp.seeds, rp.seed_separation).into_iter().map(|i| fits[i].clone()).collect();
    let table = log_table(&gs, &data.slice(0, rp.score_points.min(data.len())));
    let mut scored: Vec<(f64, Mixture)> = Vec::new();
    for s in 1..=k.min(gs.len()) {
        let mut c: Vec<usize> = (0..s).collect();
        loop {
            let rows: Vec<&[f64]> = c.iter().map(|&i| table[i].as_slice()).collect();
            let (w, ll) = em_weights(&rows, rp.weight_iters);
            if let Ok(m) = Mixture::new(w, c.iter().map(|&i| gs[i].clone()).collect()) {
                scored.push((ll, m));
            }
            if !next_combination(&mut c, gs.len()) {
                break;
            }
        }
    }
    let raw = scored.len() as u64;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut kept: Vec<Mixture> = Vec::new();
    for (_, init) in scored.into_iter().take(rp.top) {
        let m = em_refine(&init, data, rp.em_iters);
        if kept.iter().all(|q| kappa_mix(q, &m, separation).value > p.alpha / 4.0) {
            kept.push(m);
        }
    }
    let items: Vec<Mixture> =
        kept.iter().flat_map(|m| weight_neighbors(m, p.alpha / m.len() as f64, rp.weight_steps)).collect();
    let mut manifest = comps.manifest.clone();
    manifest.mode = "refined".into();
    manifest.n = data.len();
    manifest.raw_size = raw;
    Ok(HypothesisList { budget: items.len() as u64, items, source_chunk: 0, manifest })
}
