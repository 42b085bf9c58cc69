use super::*;
use crate::covers::{
    bounded_gaussian_cover, sample_box_gaussian, sample_simplex, simplex_cover, CoverRecipe, ParamBox, DEFAULT_CAP,
};
use crate::metrics::{tv_gaussian_1d, tv_quadrature_1d};
use crate::model::{ComponentJson, Gaussian, Mixture};
use crate::rng;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn w(x: &[f64]) -> Hypothesis {
    Hypothesis::Weights(x.to_vec())
}

fn g(mu: f64, sd: f64) -> Hypothesis {
    Gaussian::univariate(mu, sd * sd).unwrap().into()
}

fn table(entries: &[(u64, u32)], t: usize, bottom: u64) -> ScoreTable {
    ScoreTable { entries: entries.iter().copied().collect(), t, radius: 0.2, bottom_weight: bottom }
}

fn priv1() -> PrivacyParams {
    PrivacyParams::new(1.0, 1e-6).unwrap()
}

fn exact() -> TvOracle {
    TvOracle::exact()
}

/// Scores by exhaustive distance evaluation over every cover element.
fn brute_scores(lists: &[Vec<Hypothesis>], cover: &Cover, radius: f64) -> Vec<u32> {
    (0..cover.len())
        .map(|i| {
            let e = cover.element(i);
            lists.iter().filter(|l| l.iter().any(|y| cover.distance(y, &e, &exact()).unwrap() <= radius)).count() as u32
        })
        .collect()
}

#[test]
fn shared_element_scores_t() {
    let cover = simplex_cover(3, 0.1).unwrap();
    let h = cover.element(17);
    let mut r = rng::root(1);
    let lists: Vec<_> = (0..7).map(|_| vec![w(&sample_simplex(3, &mut r)), h.clone()]).collect();
    let t = score_table(&lists, &cover, 0.2, MetricTag::Linf, &exact()).unwrap();
    assert_eq!(t.score(17), 7);
    assert!(t.entries.values().all(|&s| (1..=7).contains(&s)));
    assert_eq!(t.cover_len(), cover.len());
}

#[test]
fn gaussian_scores_match_quadrature_counts() {
    let elems = [(0.0, 1.0), (0.5, 1.0), (3.0, 1.0), (0.0, 2.0)];
    let recipe = CoverRecipe::Explicit {
        elements: elems.iter().map(|&(m, v)| ComponentJson { mean: vec![m], cov: vec![vec![v]] }).collect(),
        alpha: 0.1,
    };
    let cover = Cover::from_recipe(&recipe, DEFAULT_CAP).unwrap();
    let lists = vec![vec![g(0.1, 1.0)], vec![g(-0.2, 1.0), g(5.0, 1.0)], vec![g(2.0, 1.0)]];
    let t = score_table(&lists, &cover, 0.2, MetricTag::Tv, &exact()).unwrap();
    for (i, &(m, v)) in elems.iter().enumerate() {
        let e = Mixture::single(Gaussian::univariate(m, v).unwrap());
        let count = lists
            .iter()
            .filter(|l| l.iter().any(|y| tv_quadrature_1d(y.model().unwrap(), &e, 1e-10).unwrap() <= 0.2))
            .count() as u32;
        assert_eq!(t.score(i as u64), count, "element {i}");
    }
    assert_eq!(t.score(0), 2);
}

#[test]
fn table_matches_brute_force() {
    let cover = simplex_cover(2, 0.05).unwrap();
    let mut r = rng::root(2);
    for _ in 0..10 {
        let lists: Vec<Vec<_>> = (0..5).map(|_| (0..3).map(|_| w(&sample_simplex(2, &mut r))).collect()).collect();
        let t = score_table(&lists, &cover, 0.1, MetricTag::Linf, &exact()).unwrap();
        let brute = brute_scores(&lists, &cover, 0.1);
        for (i, &s) in brute.iter().enumerate() {
            assert_eq!(t.score(i as u64), s);
        }
    }
}

#[test]
fn metric_mismatch_rejected() {
    let cover = simplex_cover(2, 0.1).unwrap();
    let e = score_table(&[vec![w(&[0.5, 0.5])]], &cover, 0.2, MetricTag::Tv, &exact());
    assert!(matches!(e, Err(Error::MetricMismatch { cover: "linf", supplied: "tv" })));
}

#[test]
fn neighbor_scores_move_by_at_most_one() {
    let cover = simplex_cover(2, 0.05).unwrap();
    let mut r = rng::root(3);
    let pairs = neighbor_pairs(6, 3, 50, |r| w(&sample_simplex(2, r)), &mut r);
    let audit = sensitivity_audit(&pairs, &cover, MetricTag::Linf, 0.1, &exact()).unwrap();
    assert_eq!(audit.max_difference, 1);
    assert!(audit.passed);
}

#[test]
fn gaussian_neighbor_scores_move_by_at_most_one() {
    let bx = ParamBox { dim: 1, mean_bound: 2.0, eig_min: 0.5, eig_max: 2.0 };
    let cover = bounded_gaussian_cover(&bx, 0.2, DEFAULT_CAP).unwrap();
    let mut r = rng::root(4);
    let pairs = neighbor_pairs(5, 2, 50, |r| sample_box_gaussian(&bx, r).into(), &mut r);
    let audit = sensitivity_audit(&pairs, &cover, MetricTag::Tv, 0.4, &exact()).unwrap();
    assert!(audit.max_difference <= 1);
}

#[test]
fn lone_entry_is_certain() {
    let t = table(&[(3, 5)], 5, 0);
    let (p, b) = gap_max_distribution(&t, 1.0).unwrap();
    assert_eq!((p, b), (vec![1.0], 0.0));
    let mut r = rng::root(5);
    for _ in 0..100 {
        assert_eq!(gap_max(&t, &priv1(), 0.1, 0.1, &mut r).unwrap(), 3);
    }
}

#[test]
fn planted_entry_dominates() {
    let mut e: Vec<(u64, u32)> = (0..1000).map(|i| (i, 1)).collect();
    e.push((1000, 60));
    let t = table(&e, 60, 0);
    let (p, _) = gap_max_distribution(&t, 1.0).unwrap();
    let top = 29.5f64.exp();
    assert!((p[1000] - top / (top + 1000.0)).abs() < 1e-12);
    let mut hits = 0;
    for trial in 0..100 {
        hits += (gap_max(&t, &priv1(), 0.1, 0.1, &mut rng::stream(6, trial)).unwrap() == 1000) as u32;
    }
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn zero_utilities_are_uniform_over_the_cover() {
    // entries {2, 5, 7} at score 1 and seven inactive elements: uniform on 0..10
    let t = table(&[(2, 1), (5, 1), (7, 1)], 3, 7);
    let mut counts = [0u64; 10];
    let mut r = rng::root(7);
    let n = 10_000;
    for _ in 0..n {
        counts[gap_max(&t, &priv1(), 0.1, 0.1, &mut r).unwrap() as usize] += 1;
    }
    let expect = n as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    let crit = ChiSquared::new(9.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < crit, "χ² = {chi2}, critical {crit}");
}

#[test]
fn empty_table_rejected() {
    let t = table(&[], 0, 0);
    assert!(matches!(gap_max(&t, &priv1(), 0.1, 0.1, &mut rng::root(0)), Err(Error::EmptyTable)));
}

#[test]
fn rounds_formula() {
    let e1 = (-1.0f64).exp();
    let p = PrivacyParams::new(1.0, e1).unwrap();
    assert_eq!(required_rounds(1, 1, e1, &p, 1.0).unwrap(), 2);
    let p = PrivacyParams::new(0.5, 1e-6).unwrap();
    // (ln 10⁶ + ln(10⁵/0.1))/0.5 = 55.26
    assert_eq!(required_rounds(1000, 100, 0.1, &p, 1.0).unwrap(), 56);
    for q in [1u64, 7, 100, 12345] {
        let a = required_rounds(50, q, 0.1, &p, 1.3).unwrap();
        let b = required_rounds(50, 2 * q, 0.1, &p, 1.3).unwrap();
        assert!(b >= a && b - a <= (1.3 * 2f64.ln() / 0.5).ceil() as u64);
    }
}

#[test]
fn all_lists_equal_returns_nearby_element() {
    let cover = simplex_cover(2, 0.1).unwrap();
    let h = cover.element(4);
    let rounds = required_rounds(cover.claimed_t.unwrap(), 1, 0.1, &priv1(), 1.0).unwrap() as usize;
    let lists = vec![vec![h.clone()]; rounds];
    for trial in 0..20 {
        let out = pcms(&lists, &cover, MetricTag::Linf, &priv1(), 0.1, &exact(), &mut rng::stream(8, trial)).unwrap();
        let got = out.hypothesis().unwrap();
        assert!(cover.distance(got, &h, &exact()).unwrap() <= 0.2 + 1e-12);
    }
}

#[test]
fn planted_common_member_is_found() {
    let bx = ParamBox { dim: 1, mean_bound: 4.0, eig_min: 0.25, eig_max: 4.0 };
    let alpha = 0.1;
    let cover = bounded_gaussian_cover(&bx, alpha, DEFAULT_CAP).unwrap();
    let f = Gaussian::univariate(0.3, 1.2).unwrap();
    let q = 4;
    let rounds = required_rounds(cover.claimed_t.unwrap(), q as u64, 0.1, &priv1(), DEFAULT_ROUNDS_C).unwrap() as usize;
    let mut hits = 0;
    for trial in 0..100 {
        let mut r = rng::stream(9, trial);
        let lists: Vec<Vec<Hypothesis>> = (0..rounds)
            .map(|_| {
                let mut l: Vec<Hypothesis> = (1..q).map(|_| sample_box_gaussian(&bx, &mut r).into()).collect();
                let near = loop {
                    let y = Gaussian::univariate(0.3 + r.gen_range(-0.3..0.3), 1.2 * r.gen_range(0.8..1.25)).unwrap();
                    if tv_gaussian_1d(&y, &f).unwrap() <= alpha {
                        break y;
                    }
                };
                l.insert(r.gen_range(0..q), near.into());
                l
            })
            .collect();
        let out = pcms(&lists, &cover, MetricTag::Tv, &priv1(), 0.1, &exact(), &mut r).unwrap();
        let h = out.hypothesis().unwrap().model().unwrap();
        let members = lists
            .iter()
            .filter(|l| l.iter().any(|y| tv_quadrature_1d(y.model().unwrap(), h, 1e-10).unwrap() <= 2.0 * alpha))
            .count();
        hits += (members as f64 >= 0.9 * rounds as f64) as u32;
    }
    assert!(hits >= 90, "{hits}/100");
}

#[test]
fn exact_privacy_loss_within_epsilon() {
    let cover = simplex_cover(2, 0.05).unwrap();
    let mut r = rng::root(10);
    for eps in [0.5, 1.0, 2.0] {
        for (a, b) in neighbor_pairs(4, 2, 50, |r| w(&sample_simplex(2, r)), &mut r) {
            let ta = score_table(&a, &cover, 0.1, MetricTag::Linf, &exact()).unwrap();
            let tb = score_table(&b, &cover, 0.1, MetricTag::Linf, &exact()).unwrap();
            assert!(exact_epsilon(&ta, &tb, eps).unwrap() <= eps + 1e-9);
        }
    }
}

#[test]
fn dp_audit_on_fixed_neighbors() {
    let cover = simplex_cover(2, 0.1).unwrap();
    let mut a = vec![vec![w(&[0.5, 0.5])]; 4];
    let t1 = score_table(&a, &cover, 0.2, MetricTag::Linf, &exact()).unwrap();
    a[3] = vec![w(&[0.0, 1.0])];
    let t2 = score_table(&a, &cover, 0.2, MetricTag::Linf, &exact()).unwrap();
    let report = dp_audit(&t1, &t2, &priv1(), 10_000, 200, 0.5, 11).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.epsilon_exact <= 1.0);
    assert!((report.outputs.iter().map(|o| o.freq1).sum::<f64>() - 1.0).abs() < 1e-9);
    let json = serde_json::to_value(&report).unwrap();
    for key in ["epsilon_hat", "epsilon_config", "delta", "runs", "outputs"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

proptest! {
    #[test]
    fn inactive_rank_skips_entries(
        keys in proptest::collection::btree_set(0u64..60, 0..30),
        rank in 0u64..30,
    ) {
        let cover_len = 60u64;
        let t = ScoreTable {
            entries: keys.iter().map(|&k| (k, 1)).collect(),
            t: 1,
            radius: 0.0,
            bottom_weight: cover_len - keys.len() as u64,
        };
        prop_assume!(rank < t.bottom_weight);
        let brute = (0..cover_len).filter(|i| !keys.contains(i)).nth(rank as usize).unwrap();
        prop_assert_eq!(inactive_index(&t, rank), brute);
    }

    #[test]
    fn distribution_sums_to_one(
        scores in proptest::collection::vec(1u32..80, 0..20),
        bottom in 0u64..1_000_000_000_000,
        eps in 0.05f64..4.0,
    ) {
        prop_assume!(!scores.is_empty() || bottom > 0);
        let t = ScoreTable {
            entries: scores.iter().enumerate().map(|(i, &s)| (i as u64, s)).collect(),
            t: 80,
            radius: 0.0,
            bottom_weight: bottom,
        };
        let (p, b) = gap_max_distribution(&t, eps).unwrap();
        prop_assert!((p.iter().sum::<f64>() + b - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
