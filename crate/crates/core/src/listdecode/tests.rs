use super::*;
use crate::metrics::{kappa_mix, tv_gaussian_1d, tv_quadrature_1d, TvOracle};
use crate::model::{Dataset, Gaussian, Mixture};
use crate::rng;

fn n(mu: f64, var: f64) -> Gaussian {
    Gaussian::univariate(mu, var).unwrap()
}

/// Min TV to `truth` over single-Gaussian items: closed form shortlist, quadrature verdict.
fn min_tv_1d(list: &HypothesisList, truth: &Gaussian) -> f64 {
    let mut tvs: Vec<(f64, usize)> =
        list.items.iter().enumerate().map(|(i, m)| (tv_gaussian_1d(&m.components()[0], truth).unwrap(), i)).collect();
    tvs.sort_by(|a, b| a.0.total_cmp(&b.0));
    tvs.iter()
        .take(3)
        .map(|&(_, i)| tv_quadrature_1d(&list.items[i], &Mixture::single(truth.clone()), 1e-10).unwrap())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn sample_size_formula() {
    assert_eq!(contamination_sample_size(10, 0.05, 0.5), 88);
    let clean = contamination_sample_size(10, 0.05, 0.0);
    assert_eq!(clean, 20 + (8.0 * 20f64.ln()).ceil() as usize);
}

#[test]
fn subset_larger_than_data_is_insufficient() {
    let data = Mixture::single(n(0.0, 1.0)).sample_seeded(2, 1);
    let p = DecodeParams::new(1, 2, 0.1, 0.1);
    assert!(matches!(gaussian_list_decode(&data, &p, &mut rng::root(0)), Err(crate::Error::InsufficientData { .. })));
}

#[test]
fn grid_offsets_are_nested() {
    for b in 1..4u32 {
        let coarse = grid_offsets(b, 1.0);
        let fine = grid_offsets(2 * b, 1.0);
        assert!(coarse.iter().all(|c| fine.iter().any(|f| (f - c).abs() < 1e-15)));
    }
    assert_eq!(grid_offsets(0, 1.0), vec![0.0]);
    assert_eq!(grid_offsets(1, 1.0), vec![-1.0, 0.0, 1.0]);
}

#[test]
fn clean_decoding_guarantee() {
    let truth = n(0.0, 1.0);
    let p = DecodeParams::new(1, 50, 0.1, 0.1);
    let mut hits = 0;
    for trial in 0..100 {
        let data = Mixture::single(truth.clone()).sample_seeded(200, 1000 + trial);
        let list = gaussian_list_decode(&data, &p, &mut rng::stream(77, trial)).unwrap();
        assert!(list.len() as u64 <= list.budget);
        if min_tv_1d(&list, &truth) <= 0.1 {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn decoding_is_deterministic() {
    let data = Mixture::single(n(1.0, 2.0)).sample_seeded(300, 4);
    let mut p = DecodeParams::new(1, 100, 0.1, 0.1);
    p.l_budget = 500;
    let a = gaussian_list_decode(&data, &p, &mut rng::root(9)).unwrap();
    let b = gaussian_list_decode(&data, &p, &mut rng::root(9)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.manifest.mode, "random");
}

#[test]
fn finer_grids_never_hurt() {
    let truth = n(0.0, 1.0);
    let data = Mixture::single(truth.clone()).sample_seeded(12, 5);
    let mut prev = f64::INFINITY;
    for bits in [0u32, 1, 2, 4] {
        let mut p = DecodeParams::new(1, 12, 0.1, 0.1);
        p.grid_bits = bits;
        p.grid_radius = 0.5;
        p.l_budget = 1_000_000;
        let list = gaussian_list_decode(&data, &p, &mut rng::root(1)).unwrap();
        assert_eq!(list.manifest.mode, "exhaustive");
        let best = list
            .items
            .iter()
            .map(|m| tv_gaussian_1d(&m.components()[0], &truth).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= prev + 1e-15, "bits {bits}: {best} > {prev}");
        prev = best;
    }
}

#[test]
fn two_dimensional_decoding() {
    let truth = Gaussian::standard(2);
    let mut p = DecodeParams::new(2, 500, 0.15, 0.1);
    p.subset_size = 12;
    p.l_budget = 3000;
    let mut hits = 0;
    for trial in 0..100u64 {
        let data = Mixture::single(truth.clone()).sample_seeded(500, 2000 + trial);
        let list = gaussian_list_decode(&data, &p, &mut rng::stream(3, trial)).unwrap();
        // shortlist by the Δ upper bound, then an MC interval
        let mut by_delta: Vec<(f64, usize)> = list
            .items
            .iter()
            .enumerate()
            .map(|(i, m)| (crate::model::gaussian_delta(&truth, &m.components()[0]).unwrap(), i))
            .collect();
        by_delta.sort_by(|a, b| a.0.total_cmp(&b.0));
        let oracle = TvOracle::MonteCarlo { n: 20_000, seed: trial, conf: 0.99 };
        let best = by_delta
            .iter()
            .take(3)
            .map(|&(_, i)| oracle.mixtures(&Mixture::single(truth.clone()), &list.items[i]).unwrap().upper())
            .fold(f64::INFINITY, f64::min);
        if best <= 0.15 {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn contamination_guarantee() {
    let truth = n(0.0, 1.0);
    let world = Mixture::new(vec![0.6, 0.4], vec![truth.clone(), n(50.0, 1.0)]).unwrap();
    let mut p = DecodeParams::new(1, 5, 0.15, 0.1);
    p.gamma = 0.4;
    let mut hits = 0;
    for trial in 0..100u64 {
        let data = world.sample_seeded(contamination_sample_size(5, 0.1, 0.4), 3000 + trial);
        let list = lift_contamination(&data, &p, &mut rng::stream(5, trial)).unwrap();
        assert!(list.len() as u64 <= list.budget);
        if min_tv_1d(&list, &truth) <= 0.15 {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn clean_lifting_reduces_to_subsample_decoding() {
    let data = Mixture::single(n(0.0, 1.0)).sample_seeded(100, 8);
    let p = DecodeParams::new(1, 4, 0.1, 0.1);
    let list = lift_contamination(&data, &p, &mut rng::root(2)).unwrap();
    assert_eq!(list.manifest.n, 8 + (8.0 * 10f64.ln()).ceil() as usize);
    assert!(!list.is_empty());
}

fn dense_params() -> DecodeParams {
    let mut p = DecodeParams::new(1, 5, 0.2, 0.1);
    p.gamma = 0.5;
    p.list_cap = Some(100);
    p
}

#[test]
fn dense_k1_is_lifting_with_unit_weights() {
    let data = Mixture::single(n(3.0, 1.0)).sample_seeded(200, 10);
    let p = dense_params();
    let lifted = lift_contamination(&data, &p, &mut rng::root(4)).unwrap();
    let dense = dense_mixture_list_decode(&data, 1, &p, &mut rng::root(4)).unwrap();
    assert_eq!(dense.items, lifted.items);
}

#[test]
fn dense_list_size_before_dedupe() {
    let world = Mixture::new(vec![0.5, 0.5], vec![n(-10.0, 1.0), n(10.0, 1.0)]).unwrap();
    let data = world.sample_seeded(200, 11);
    let p = dense_params();
    let comps = lift_contamination(&data, &p, &mut rng::root(6)).unwrap();
    let dense = dense_mixture_list_decode(&data, 2, &p, &mut rng::root(6)).unwrap();
    let expected = dense_list_size(comps.len(), 2, 0.2).unwrap();
    assert_eq!(dense.manifest.raw_size as f64, expected);
    assert!(dense.len() as f64 <= expected);
}

#[test]
fn dense_guarantee() {
    let world = Mixture::new(vec![0.5, 0.5], vec![n(-10.0, 1.0), n(10.0, 1.0)]).unwrap();
    let p = dense_params();
    let mut hits = 0;
    for trial in 0..50u64 {
        let data = world.sample_seeded(200, 4000 + trial);
        let list = dense_mixture_list_decode(&data, 2, &p, &mut rng::stream(12, trial)).unwrap();
        let mut cache = std::collections::HashMap::new();
        let best = list
            .items
            .iter()
            .filter(|m| m.len() == 2 && m.weights().iter().all(|w| 2.0 * (w - 0.5).abs() <= 0.2))
            .map(|m| {
                kappa_mix(&world, m, |a, b| {
                    *cache
                        .entry((a.mean1().to_bits(), b.mean1().to_bits(), b.sd1().to_bits()))
                        .or_insert_with(|| tv_gaussian_1d(a, b).unwrap())
                })
                .value
            })
            .fold(f64::INFINITY, f64::min);
        if best <= 0.2 {
            hits += 1;
        }
    }
    assert!(hits >= 43, "{hits}/50");
}

#[test]
fn faithful_dense_contamination_level_is_infeasible() {
    let world = Mixture::new(vec![0.5, 0.5], vec![n(-10.0, 1.0), n(10.0, 1.0)]).unwrap();
    let data = world.sample_seeded(400, 12);
    let mut p = dense_params();
    p.gamma = 1.0 - 0.2 / 2.0;
    assert!(matches!(
        dense_mixture_list_decode(&data, 2, &p, &mut rng::root(1)),
        Err(crate::Error::InfeasibleBudget { .. })
    ));
}

#[test]
fn trial_count_formula() {
    assert_eq!(contamination_trials(20, 3, 0.0, 0.1), None);
    let t = contamination_trials(48, 5, 0.4, 0.1).unwrap();
    // p_hit = C(14,5)/C(48,5)
    let p_hit = 2002.0 / 1_712_304.0;
    assert_eq!(t, (0.1f64.ln() / (1.0f64 - p_hit).ln()).ceil());
}

#[test]
fn bin_score_separates_truth_from_decoy() {
    let world = Mixture::new(vec![0.6, 0.4], vec![n(0.0, 1.0), n(50.0, 1.0)]).unwrap();
    let data: Dataset = world.sample_seeded(4000, 13);
    let good = bin_score(&n(0.0, 1.0), &data);
    let bad = bin_score(&n(25.0, 400.0), &data);
    assert!((good - 0.6).abs() < 0.1, "{good}");
    assert!(bad < 0.2, "{bad}");
}

#[test]
fn em_recovers_weights() {
    let world = Mixture::new(vec![0.3, 0.7], vec![n(-5.0, 1.0), n(5.0, 1.0)]).unwrap();
    let data = world.sample_seeded(5000, 14);
    let table = log_table(world.components(), &data);
    let rows: Vec<&[f64]> = table.iter().map(|r| r.as_slice()).collect();
    let (w, _) = em_weights(&rows, 50);
    assert!((w[0] - 0.3).abs() < 0.03, "{w:?}");
    let start = Mixture::new(vec![0.5, 0.5], vec![n(-4.0, 2.0), n(4.0, 2.0)]).unwrap();
    let fit = em_refine(&start, &data, 30);
    assert!((fit.components()[0].mean1() + 5.0).abs() < 0.1);
}

fn refined_params() -> DecodeParams {
    let mut p = DecodeParams::new(1, 3, 0.02, 0.1);
    p.gamma = 0.5;
    p.max_trials = Some(400);
    p
}

#[test]
fn refined_decoder_lands_within_score_radius() {
    let world = Mixture::new(vec![0.5, 0.5], vec![n(-8.0, 1.0), n(8.0, 1.0)]).unwrap();
    let p = refined_params();
    let (mut hits, mut tight) = (0, 0);
    for trial in 0..100u64 {
        let data = world.sample_seeded(2000, 5000 + trial);
        let list = refined_dense_decode(&data, 2, &p, &RefineParams::default(), &mut rng::stream(13, trial)).unwrap();
        assert!(list.len() <= 3 * 7);
        let best = list
            .items
            .iter()
            .map(|m| kappa_mix(&world, m, |a, b| tv_gaussian_1d(a, b).unwrap()).value)
            .fold(f64::INFINITY, f64::min);
        hits += (best <= 0.04) as u32;
        tight += (best <= 0.02) as u32;
    }
    println!("κ ≤ 2α: {hits}/100, κ ≤ α: {tight}/100");
    assert!(hits >= 90, "{hits}/100");
}
