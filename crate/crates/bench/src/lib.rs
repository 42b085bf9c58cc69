//! Fixtures shared by the benchmarks.

use dpmix_core::covers::{simplex_cover, Cover, Hypothesis};
use dpmix_core::{rng, Gaussian, Mixture};

pub fn normal(mean: f64, var: f64) -> Gaussian {
    Gaussian::univariate(mean, var).expect("positive variance")
}

/// Two k-component 1-D mixtures whose components are close pairwise.
pub fn mixture_pair(k: usize) -> (Mixture, Mixture) {
    let w = vec![1.0 / k as f64; k];
    let a = (0..k).map(|i| normal(4.0 * i as f64, 1.0)).collect();
    let b = (0..k).rev().map(|i| normal(4.0 * i as f64 + 0.05, 1.1)).collect();
    (Mixture::new(w.clone(), a).expect("valid"), Mixture::new(w, b).expect("valid"))
}

/// Simplex cover and T lists of q random weight vectors on it.
pub fn score_fixture(k: usize, alpha: f64, t: usize, q: usize, seed: u64) -> (Cover, Vec<Vec<Hypothesis>>) {
    let cover = simplex_cover(k, alpha).expect("valid cover");
    let mut r = rng::root(seed);
    let lists = (0..t)
        .map(|_| (0..q).map(|_| Hypothesis::Weights(dpmix_core::covers::sample_simplex(k, &mut r))).collect())
        .collect();
    (cover, lists)
}
