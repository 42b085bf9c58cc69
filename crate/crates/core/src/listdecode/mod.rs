//! List decoding: subset fits with local grids, contamination lifting, dense mixtures.

mod contamination;
mod dense;
mod gaussian;
mod prune;
mod refined;

use serde::{Deserialize, Serialize};

pub use contamination::{contamination_sample_size, contamination_trials, lift_contamination, MAX_TRIALS};
pub use dense::{dense_list_size, dense_mixture_list_decode};
pub use gaussian::{fit_gaussian, gaussian_list_decode, grid_offsets};
#[cfg(test)]
use prune::log_table;
pub use prune::{bin_score, em_refine, em_weights, loglik_score, prune_by_score};
pub use refined::{refined_dense_decode, RefineParams};

use crate::model::Mixture;

/// Subset-count threshold between exhaustive and random enumeration.
pub const EXHAUSTIVE_LIMIT: f64 = 1e5;

/// Settings for one decoding call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    /// Decode sample size.
    pub m: usize,
    /// Budget for the subset-fit stage (fits × grid points).
    pub l_budget: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Contamination level.
    pub gamma: f64,
    pub subset_size: usize,
    pub grid_bits: u32,
    /// Half-width of the local grid in whitened mean and log-Cholesky units.
    #[serde(default = "default_grid_radius")]
    pub grid_radius: f64,
    /// Practical cap on emitted lists; pruned by data score with a diversity rule.
    #[serde(default)]
    pub list_cap: Option<usize>,
    /// Practical cap on lifting trials.
    #[serde(default)]
    pub max_trials: Option<u64>,
}

fn default_grid_radius() -> f64 {
    1.0
}

impl DecodeParams {
    /// Defaults for dimension `d`: subsets of d+2 points, no grid refinement.
    pub fn new(d: usize, m: usize, alpha: f64, beta: f64) -> Self {
        DecodeParams {
            m,
            l_budget: 100_000,
            alpha,
            beta,
            gamma: 0.0,
            subset_size: d + 2,
            grid_bits: 0,
            grid_radius: default_grid_radius(),
            list_cap: None,
            max_trials: None,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.subset_size < 2 || self.m < self.subset_size {
            return Err(crate::error::invalid(format!(
                "need 2 <= subset_size <= m, got {} and {}",
                self.subset_size, self.m
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) || !(self.beta > 0.0 && self.beta < 1.0) || !(self.alpha > 0.0) {
            return Err(crate::error::invalid(format!(
                "need gamma in [0,1), beta in (0,1), alpha > 0; got {}, {}, {}",
                self.gamma, self.beta, self.alpha
            )));
        }
        Ok(())
    }
}

/// How a list was produced.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeManifest {
    pub m: usize,
    /// Points consumed.
    pub n: usize,
    pub gamma: f64,
    /// Budget from the formulas before any practical cap (may be astronomically large).
    pub formula_budget: f64,
    pub mode: String,
    /// Subsets (plain decoding) or lifting trials.
    pub trials: u64,
    pub raw_size: u64,
}

/// Candidate list from one chunk.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisList {
    pub items: Vec<Mixture>,
    pub source_chunk: usize,
    pub budget: u64,
    pub manifest: DecodeManifest,
}

impl HypothesisList {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "items": self.items.iter().map(|m| crate::model::ModelJson::from(m)).collect::<Vec<_>>(),
            "source_chunk": self.source_chunk,
            "budget": self.budget,
            "manifest": self.manifest,
        })
    }
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Dedupe key: exact bit patterns of all parameters.
pub(crate) fn model_key(m: &Mixture) -> Vec<u64> {
    let mut key: Vec<u64> = m.weights().iter().map(|w| w.to_bits()).collect();
    for g in m.components() {
        key.extend(g.mean().iter().map(|v| v.to_bits()));
        key.extend(g.cov().iter().map(|v| v.to_bits()));
    }
    key
}

#[cfg(test)]
mod tests;
