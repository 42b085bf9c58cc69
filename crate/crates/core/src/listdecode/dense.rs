use std::collections::HashSet;

use rand::Rng;

use super::{lift_contamination, model_key, DecodeParams, HypothesisList};
use crate::covers::{simplex_cover, DEFAULT_CAP};
use crate::error::{Error, Result};
use crate::model::{Dataset, Mixture};

/// Σ_s |L|^s · |Δ_s cover at α/s|.
pub fn dense_list_size(component_len: usize, k: usize, alpha: f64) -> Result<f64> {
    let mut total = 0.0;
    for s in 1..=k {
        total += (component_len as f64).powi(s as i32) * simplex_cover(s, alpha / s as f64)?.len() as f64;
    }
    Ok(total)
}

/// Component lists from contamination lifting at level `p.gamma`, crossed with simplex
/// covers: every s ≤ k, every ordered s-tuple of list items, every cover weight.
pub fn dense_mixture_list_decode<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    p: &DecodeParams,
    rng: &mut R,
) -> Result<HypothesisList> {
    if k == 0 {
        return Err(crate::error::invalid("k must be at least 1"));
    }
    let comps = lift_contamination(data, p, rng)?;
    let size = dense_list_size(comps.len(), k, p.alpha)?;
    if size > DEFAULT_CAP as f64 {
        return Err(Error::InfeasibleBudget { what: "dense mixture list", requested: size, cap: DEFAULT_CAP });
    }
    let gs: Vec<_> = comps.items.iter().map(|m| m.components()[0].clone()).collect();
    let mut items = Vec::with_capacity(size as usize);
    let mut seen = HashSet::new();
    let mut raw = 0u64;
    for s in 1..=k {
        let weights = simplex_cover(s, p.alpha / s as f64)?;
        let weights = weights.weight_points().expect("simplex cover holds weights");
        let mut t = vec![0usize; s];
        if gs.is_empty() {
            break;
        }
        loop {
            for w in weights {
                raw += 1;
                let m = Mixture::new(w.clone(), t.iter().map(|&i| gs[i].clone()).collect())?;
                if seen.insert(model_key(&m)) {
                    items.push(m);
                }
            }
            if !super::gaussian::advance(&mut t, gs.len()) {
                break;
            }
        }
    }
    let mut manifest = comps.manifest.clone();
    manifest.raw_size = raw;
    manifest.formula_budget = {
        // (kL/α)^(k+1) with L the component budget
        let l = comps.manifest.formula_budget;
        (k as f64 * l / p.alpha).powi(k as i32 + 1)
    };
    Ok(HypothesisList { items, source_chunk: 0, budget: size as u64, manifest })
}
