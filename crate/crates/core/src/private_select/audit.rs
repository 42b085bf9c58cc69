use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{draw, gap_max_distribution, score_table, PrivacyParams, ScoreTable};
use crate::covers::{Cover, Hypothesis, MetricTag};
use crate::error::{invalid, Result};
use crate::metrics::TvOracle;
use crate::rng;

/// A list collection and a neighbor differing in one list.
pub type NeighborPair = (Vec<Vec<Hypothesis>>, Vec<Vec<Hypothesis>>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFrequency {
    pub id: u64,
    pub freq1: f64,
    pub freq2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpAuditReport {
    pub epsilon_hat: f64,
    /// Bootstrap quantile of ε̂ at `bootstrap_conf`.
    pub epsilon_hat_upper: f64,
    pub bootstrap_conf: f64,
    pub bootstrap_reps: usize,
    pub epsilon_config: f64,
    /// Worst log-ratio of the two exact output distributions.
    pub epsilon_exact: f64,
    pub delta: f64,
    pub slack: f64,
    pub runs: usize,
    pub passed: bool,
    pub outputs: Vec<OutputFrequency>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityAudit {
    pub pairs: usize,
    pub max_difference: u32,
    pub passed: bool,
}

/// Random T-list collections of `q` items each, paired with a copy whose list
/// at a random position is redrawn.
pub fn neighbor_pairs<R: Rng + ?Sized>(
    t: usize,
    q: usize,
    count: usize,
    mut sample: impl FnMut(&mut R) -> Hypothesis,
    rng: &mut R,
) -> Vec<NeighborPair> {
    (0..count)
        .map(|_| {
            let base: Vec<Vec<Hypothesis>> = (0..t).map(|_| (0..q).map(|_| sample(rng)).collect()).collect();
            let mut other = base.clone();
            let j = rng.gen_range(0..t);
            other[j] = (0..q).map(|_| sample(rng)).collect();
            (base, other)
        })
        .collect()
}

/// Largest per-element score change over all pairs, compared against 1.
pub fn sensitivity_audit(
    pairs: &[NeighborPair],
    cover: &Cover,
    metric: MetricTag,
    radius: f64,
    oracle: &TvOracle,
) -> Result<SensitivityAudit> {
    let mut worst = 0;
    for (a, b) in pairs {
        let ta = score_table(a, cover, radius, metric, oracle)?;
        let tb = score_table(b, cover, radius, metric, oracle)?;
        for idx in ta.entries.keys().chain(tb.entries.keys()) {
            worst = worst.max(ta.score(*idx).abs_diff(tb.score(*idx)));
        }
    }
    Ok(SensitivityAudit { pairs: pairs.len(), max_difference: worst, passed: worst <= 1 })
}

/// Per-element probability under a table's exact distribution.
fn element_prob(table: &ScoreTable, probs: &[f64], bottom: f64, idx: u64) -> f64 {
    match table.entries.keys().position(|&k| k == idx) {
        Some(i) => probs[i],
        None => bottom / table.bottom_weight as f64,
    }
}

/// max over cover elements of |ln p₁(h)/p₂(h)| for the exact GAP-MAX distributions.
pub fn exact_epsilon(t1: &ScoreTable, t2: &ScoreTable, epsilon: f64) -> Result<f64> {
    if t1.cover_len() != t2.cover_len() {
        return Err(invalid("tables come from covers of different size"));
    }
    let (p1, b1) = gap_max_distribution(t1, epsilon)?;
    let (p2, b2) = gap_max_distribution(t2, epsilon)?;
    let mut ids: Vec<u64> = t1.entries.keys().chain(t2.entries.keys()).copied().collect();
    ids.sort_unstable();
    ids.dedup();
    let mut worst: f64 = 0.0;
    let mut ratio = |a: f64, b: f64| worst = worst.max((a / b).ln().abs());
    for &id in &ids {
        ratio(element_prob(t1, &p1, b1, id), element_prob(t2, &p2, b2, id));
    }
    if (ids.len() as u64) < t1.cover_len() {
        ratio(b1 / t1.bottom_weight as f64, b2 / t2.bottom_weight as f64);
    }
    Ok(worst)
}

/// max over outputs and both directions of ln((f₁ − δ)/f₂), clipped at 0.
fn epsilon_hat(c1: &[u64], c2: &[u64], runs: usize, delta: f64) -> f64 {
    let n = runs as f64;
    let mut worst: f64 = 0.0;
    for (&a, &b) in c1.iter().zip(c2) {
        let (f1, f2) = (a as f64 / n, b as f64 / n);
        for (x, y) in [(f1, f2), (f2, f1)] {
            if x - delta > 0.0 {
                worst = worst.max(((x - delta) / y).ln());
            }
        }
    }
    worst
}

/// Multinomial resample of a count vector.
fn resample<R: Rng + ?Sized>(counts: &[u64], runs: usize, rng: &mut R) -> Vec<u64> {
    let mut left = runs as u64;
    let mut mass = 1.0;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / runs as f64;
            let x = if left == 0 || p <= 0.0 {
                0
            } else {
                Binomial::new(left, (p / mass).min(1.0)).expect("valid binomial").sample(rng)
            };
            left -= x;
            mass -= p;
            x
        })
        .collect()
}

/// Runs GAP-MAX `runs` times on each table and bounds ε̂ by bootstrap.
/// The scores are deterministic in the lists, so each side's table is built once.
pub fn dp_audit(
    t1: &ScoreTable,
    t2: &ScoreTable,
    priv_params: &PrivacyParams,
    runs: usize,
    bootstrap_reps: usize,
    slack: f64,
    seed: u64,
) -> Result<DpAuditReport> {
    priv_params.validate()?;
    if runs == 0 || bootstrap_reps == 0 {
        return Err(invalid("runs and bootstrap_reps must be positive"));
    }
    let mut counts: BTreeMap<u64, [u64; 2]> = BTreeMap::new();
    for (side, table) in [t1, t2].into_iter().enumerate() {
        let (probs, bottom) = gap_max_distribution(table, priv_params.epsilon)?;
        let mut r = rng::stream(seed, side as u64);
        for _ in 0..runs {
            counts.entry(draw(table, &probs, bottom, &mut r)).or_default()[side] += 1;
        }
    }
    let c1: Vec<u64> = counts.values().map(|c| c[0]).collect();
    let c2: Vec<u64> = counts.values().map(|c| c[1]).collect();
    let point = epsilon_hat(&c1, &c2, runs, priv_params.delta);
    let mut r = rng::stream(seed, 2);
    let mut boot: Vec<f64> = (0..bootstrap_reps)
        .map(|_| epsilon_hat(&resample(&c1, runs, &mut r), &resample(&c2, runs, &mut r), runs, priv_params.delta))
        .collect();
    boot.sort_by(f64::total_cmp);
    let conf = 0.99;
    let upper = boot[((conf * bootstrap_reps as f64).ceil() as usize).clamp(1, bootstrap_reps) - 1];
    Ok(DpAuditReport {
        epsilon_hat: point,
        epsilon_hat_upper: upper,
        bootstrap_conf: conf,
        bootstrap_reps,
        epsilon_config: priv_params.epsilon,
        epsilon_exact: exact_epsilon(t1, t2, priv_params.epsilon)?,
        delta: priv_params.delta,
        slack,
        runs,
        passed: upper <= priv_params.epsilon + slack,
        outputs: counts
            .iter()
            .map(|(&id, c)| OutputFrequency { id, freq1: c[0] as f64 / runs as f64, freq2: c[1] as f64 / runs as f64 })
            .collect(),
    })
}
