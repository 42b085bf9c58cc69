use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use super::gaussian::{decode_sample, grid_size, next_combination};
use super::prune::{bin_score, loglik_score, prune_by_score};
use super::{ln_choose, model_key, DecodeManifest, DecodeParams, HypothesisList, EXHAUSTIVE_LIMIT};
use crate::error::{Error, Result};
use crate::model::{Dataset, Mixture};

/// Trial count beyond which lifting refuses to run unless capped explicitly.
pub const MAX_TRIALS: u64 = 1_000_000;

/// N = ⌈(2m + 8 ln(1/β)) / (1 − γ)⌉.
pub fn contamination_sample_size(m: usize, beta: f64, gamma: f64) -> usize {
    let v = (2.0 * m as f64 + 8.0 * (1.0 / beta).ln()) / (1.0 - gamma);
    (v - 1e-9).ceil() as usize
}

/// Lifting trials: `None` when every m-subset of the N points is enumerated, otherwise
/// the count after which an all-inlier subset has been drawn with probability ≥ 1 − β,
/// using the inlier lower bound X ≥ ⌊(1−γ)N/2⌋. Infinite when that bound is below m.
pub fn contamination_trials(n: usize, m: usize, gamma: f64, beta: f64) -> Option<f64> {
    let ln_all = ln_choose(n as u64, m as u64);
    if ln_all <= EXHAUSTIVE_LIMIT.ln() {
        return None;
    }
    let x_lo = ((1.0 - gamma) * n as f64 / 2.0).floor() as u64;
    if x_lo < m as u64 {
        return Some(f64::INFINITY);
    }
    let p_hit = (ln_choose(x_lo, m as u64) - ln_all).exp();
    Some((beta.ln() / (-p_hit).ln_1p()).ceil())
}

/// Runs the subset-fit decoder on m-subsets of the first N points and unions the lists.
pub fn lift_contamination<R: Rng + ?Sized>(data: &Dataset, p: &DecodeParams, rng: &mut R) -> Result<HypothesisList> {
    p.validate()?;
    let n = contamination_sample_size(p.m, p.beta, p.gamma);
    if data.len() < n {
        return Err(Error::InsufficientData { required: n as u64, available: data.len() as u64 });
    }
    let pool = data.slice(0, n);
    let d = data.dim();
    let inner_bound = (ln_choose(p.m as u64, p.subset_size as u64).exp() * grid_size(d, p)).min(p.l_budget as f64);
    let growth = 10.0 * std::f64::consts::E * (1.0 / p.beta).ln() / (1.0 - p.gamma);
    let formula_budget = inner_bound * growth.powi(p.m as i32);
    let mut inner = p.clone();
    inner.m = p.m;
    let mut seen = HashSet::new();
    let mut items: Vec<Mixture> = Vec::new();
    let mut raw = 0u64;
    let mut absorb = |list: HypothesisList, items: &mut Vec<Mixture>| {
        raw += list.manifest.raw_size;
        for it in list.items {
            if seen.insert(model_key(&it)) {
                items.push(it);
            }
        }
    };
    let plan = match (contamination_trials(n, p.m, p.gamma, p.beta), p.max_trials) {
        (None, Some(cap)) if ln_choose(n as u64, p.m as u64) > (cap as f64).ln() => Some(f64::INFINITY),
        (plan, _) => plan,
    };
    let (mode, trials) = match plan {
        None => {
            let mut c: Vec<usize> = (0..p.m).collect();
            let mut count = 0u64;
            loop {
                absorb(decode_sample(&pool.select(&c), &inner, rng)?, &mut items);
                count += 1;
                if !next_combination(&mut c, n) {
                    break;
                }
            }
            ("exhaustive", count)
        }
        Some(t) => {
            let (t, mode) = match p.max_trials {
                Some(cap) if t > cap as f64 => (cap as f64, "random-capped"),
                _ => (t, "random"),
            };
            if !t.is_finite() || t > MAX_TRIALS as f64 {
                return Err(Error::InfeasibleBudget {
                    what: "contamination lifting trials",
                    requested: t,
                    cap: MAX_TRIALS,
                });
            }
            for _ in 0..t as u64 {
                let mut idx = index::sample(rng, n, p.m).into_vec();
                idx.sort_unstable();
                absorb(decode_sample(&pool.select(&idx), &inner, rng)?, &mut items);
            }
            (mode, t as u64)
        }
    };
    let budget = formula_budget.min(u64::MAX as f64) as u64;
    let items = match p.list_cap {
        Some(cap) if items.len() > cap => {
            let comps: Vec<_> = items.iter().map(|m| m.components()[0].clone()).collect();
            let scores: Vec<f64> = if p.gamma > 0.0 {
                comps.iter().map(|g| bin_score(g, &pool)).collect()
            } else {
                comps.iter().map(|g| loglik_score(g, &pool)).collect()
            };
            prune_by_score(&comps, &scores, cap, p.alpha / 4.0).into_iter().map(|i| items[i].clone()).collect()
        }
        _ => items,
    };
    let budget = p.list_cap.map_or(budget, |c| budget.min(c as u64));
    Ok(HypothesisList {
        items,
        source_chunk: 0,
        budget,
        manifest: DecodeManifest {
            m: p.m,
            n,
            gamma: p.gamma,
            formula_budget,
            mode: mode.into(),
            trials,
            raw_size: raw,
        },
    })
}
