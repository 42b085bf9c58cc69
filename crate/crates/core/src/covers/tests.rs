use rand::Rng;

use super::*;
use crate::metrics::{tv_bounds_gaussian, tv_quadrature_1d};
use crate::rng;

fn quad(a: &Gaussian, b: &Gaussian) -> f64 {
    tv_quadrature_1d(&Mixture::single(a.clone()), &Mixture::single(b.clone()), 1e-11).unwrap()
}

#[test]
fn simplex_k1_is_single_vertex() {
    let c = simplex_cover(1, 0.3).unwrap();
    assert_eq!(c.weight_points().unwrap(), &[vec![1.0]]);
}

#[test]
fn simplex_k2_grid_validity() {
    let c = simplex_cover(2, 0.5).unwrap();
    assert!(c.len() <= 4);
    for i in 0..=10_000 {
        let w = vec![i as f64 / 1e4, 1.0 - i as f64 / 1e4];
        let best = c.weight_points().unwrap().iter().map(|p| linf(p, &w)).fold(f64::INFINITY, f64::min);
        assert!(best <= 0.5 + 1e-12);
    }
}

#[test]
fn simplex_k3_random_validity() {
    let c = simplex_cover(3, 0.2).unwrap();
    assert!(c.len() <= 125);
    let mut r = rng::root(3);
    for _ in 0..100_000 {
        let w = sample_simplex(3, &mut r);
        let best = c.weight_points().unwrap().iter().map(|p| linf(p, &w)).fold(f64::INFINITY, f64::min);
        assert!(best <= 0.2 + 1e-12);
    }
}

#[test]
fn simplex_size_bound_many() {
    for k in 1..=4 {
        for alpha in [0.07, 0.1, 0.25, 0.33, 0.5, 1.0] {
            let c = simplex_cover(k, alpha).unwrap();
            assert!(c.len() <= (1.0 / alpha).ceil().powi(k as i32) as u64, "k={k} alpha={alpha}");
            for p in c.weight_points().unwrap() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && p.iter().all(|x| *x >= 0.0));
            }
        }
    }
}

#[test]
fn simplex_local_smallness() {
    let c = simplex_cover(2, 0.1).unwrap();
    let mut r = rng::root(8);
    let probes: Vec<Hypothesis> = (0..1000).map(|_| Hypothesis::Weights(sample_simplex(2, &mut r))).collect();
    let a = audit_local_smallness(&c, 0.2, &probes, &TvOracle::exact()).unwrap();
    assert!(a.max_ball_count <= 25);
    assert_eq!(c.claimed_t, Some(25));
    assert!(a.passed());
}

#[test]
fn audit_zero_radius_disjoint_probes() {
    let c = simplex_cover(2, 0.1).unwrap();
    let a =
        audit_local_smallness(&c, 0.0, &[Hypothesis::Weights(vec![0.123_456, 0.876_544])], &TvOracle::exact()).unwrap();
    assert_eq!(a.max_ball_count, 0);
}

#[test]
fn ball_cover_rejects_bad_radii() {
    let g = Gaussian::standard(1);
    for (a, gm) in [(0.001, 0.0005), (0.0, 0.001), (0.001, 0.01)] {
        assert!(matches!(gaussian_ball_cover(&g, a, gm), Err(Error::InvalidRadii { .. })));
    }
}

fn ball_coverage(center: Gaussian, seed: u64) {
    let (gamma, alpha) = (1.0 / 600.0, 1.0 / 1200.0);
    let cover = gaussian_ball_cover(&center, alpha, gamma).unwrap();
    let elems = cover.gaussians().unwrap();
    for e in elems {
        assert!(quad(&center, e) <= gamma + alpha + 1e-9);
    }
    let (mu, sd) = (center.mean1(), center.sd1());
    let mut r = rng::root(seed);
    let mut checked = 0;
    while checked < 200 {
        let m = mu + sd * r.gen_range(-0.006..0.006);
        let s = sd * r.gen_range(0.993..1.007);
        let f = Gaussian::univariate(m, s * s).unwrap();
        if quad(&center, &f) > gamma {
            continue;
        }
        checked += 1;
        let near = cover.ball(&f.clone().into(), alpha, &TvOracle::exact()).unwrap();
        let best = near.iter().map(|&i| quad(&f, &elems[i as usize])).fold(f64::INFINITY, f64::min);
        assert!(best <= alpha + 1e-9, "member {m} {s}: best {best}");
    }
}

#[test]
fn ball_cover_standard_center() {
    ball_coverage(Gaussian::standard(1), 21);
}

#[test]
fn ball_cover_shifted_scaled_center() {
    ball_coverage(Gaussian::univariate(5.0, 4.0).unwrap(), 22);
}

#[test]
fn ball_cover_upper_bound_example_is_not_attainable() {
    // Δ/√2 overstates a location TV by a factor of about 1.77, so elements at exact TV
    // near γ + α have upper bounds above γ + α.
    let (gamma, alpha) = (1.0 / 600.0, 1.0 / 1200.0);
    let center = Gaussian::standard(1);
    let cover = gaussian_ball_cover(&center, alpha, gamma).unwrap();
    let worst =
        cover.gaussians().unwrap().iter().map(|e| tv_bounds_gaussian(&center, e).unwrap().1).fold(0.0, f64::max);
    assert!(worst > gamma + alpha);
}

fn pipeline_box() -> ParamBox {
    ParamBox { dim: 1, mean_bound: 10.0, eig_min: 0.5, eig_max: 2.0 }
}

#[test]
fn bounded_cover_coverage_1d() {
    let bx = pipeline_box();
    let cover = bounded_gaussian_cover(&bx, 0.05, DEFAULT_CAP).unwrap();
    let elems = cover.gaussians().unwrap();
    let mut r = rng::root(5);
    for _ in 0..1000 {
        let f = sample_box_gaussian(&bx, &mut r);
        let near = cover.ball(&f.clone().into(), 0.05, &TvOracle::exact()).unwrap();
        let best = near.iter().map(|&i| quad(&f, &elems[i as usize])).fold(f64::INFINITY, f64::min);
        assert!(best <= 0.05 + 1e-9, "{f:?}: {best}");
    }
    let probes: Vec<Hypothesis> = (0..1000).map(|_| sample_box_gaussian(&bx, &mut r).into()).collect();
    let audit = audit_local_smallness(&cover, 0.1, &probes, &TvOracle::exact()).unwrap();
    assert!(audit.passed(), "{audit:?}");
    assert!(audit.max_ball_count > 0);
}

#[test]
fn collapsed_box_single_element() {
    let bx = ParamBox { dim: 1, mean_bound: 0.0, eig_min: 1.5, eig_max: 1.5 };
    let cover = bounded_gaussian_cover(&bx, 0.05, DEFAULT_CAP).unwrap();
    assert_eq!(cover.len(), 1);
    assert_eq!(cover.gaussians().unwrap()[0], Gaussian::univariate(0.0, 1.5).unwrap());
}

#[test]
fn bounded_cover_cap() {
    assert!(matches!(bounded_gaussian_cover(&pipeline_box(), 0.001, 1000), Err(Error::InfeasibleBudget { .. })));
}

#[test]
fn bounded_cover_2d_certificate() {
    let bx = ParamBox { dim: 2, mean_bound: 0.3, eig_min: 0.9, eig_max: 1.1 };
    let alpha = 0.2;
    let cover = bounded_gaussian_cover(&bx, alpha, DEFAULT_CAP).unwrap();
    let elems = cover.gaussians().unwrap();
    let mut r = rng::root(6);
    for _ in 0..50 {
        let f = sample_box_gaussian(&bx, &mut r);
        // two-step Δ bound: shift the mean at f's covariance, then change the covariance
        let best = elems
            .iter()
            .map(|e| {
                let shifted = Gaussian::new(e.mean().clone(), f.cov().clone()).unwrap();
                tv_bounds_gaussian(&f, &shifted).unwrap().1 + tv_bounds_gaussian(e, &shifted).unwrap().1
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= alpha, "{best}");
    }
    assert!(cover.claimed_t.unwrap() >= 1);
}

fn tiny_component() -> Cover {
    let elements = [-5.0, 0.0, 5.0].iter().map(|&m| ComponentJson { mean: vec![m], cov: vec![vec![1.0]] }).collect();
    Cover::from_recipe(&CoverRecipe::Explicit { elements, alpha: 0.1 }, DEFAULT_CAP).unwrap()
}

#[test]
fn dense_cover_k1_is_component_cover() {
    let comp = tiny_component();
    let c = dense_mixture_cover(&comp, 1, 0.25).unwrap();
    assert_eq!(c.len(), 3);
    for i in 0..3 {
        let m = c.element(i);
        let m = m.model().unwrap();
        assert_eq!(m.weights(), &[1.0]);
        assert_eq!(&m.components()[0], &comp.gaussians().unwrap()[i as usize]);
    }
}

#[test]
fn dense_cover_count_and_membership() {
    let comp = tiny_component();
    let c = dense_mixture_cover(&comp, 2, 0.25).unwrap();
    let s1 = simplex_cover(1, 0.25).unwrap();
    let s2 = simplex_cover(2, 0.125).unwrap();
    assert_eq!(c.len(), 3 * s1.len() + 9 * s2.len());
    let gs = comp.gaussians().unwrap();
    let mut seen = 0;
    for (w_idx, w) in s2.weight_points().unwrap().iter().enumerate() {
        for a in 0..3 {
            for b in 0..3 {
                let idx = 3 + w_idx as u64 * 9 + a + 3 * b;
                let m = c.element(idx);
                let m = m.model().unwrap();
                assert_eq!(m.weights(), &w[..]);
                assert_eq!(m.components(), &[gs[a as usize].clone(), gs[b as usize].clone()]);
                seen += 1;
            }
        }
    }
    assert_eq!(seen + 3, c.len());
}

#[test]
fn dense_ball_matches_brute_force() {
    let comp = tiny_component();
    let c = dense_mixture_cover(&comp, 2, 0.25).unwrap();
    let o = TvOracle::exact();
    let probes = [
        Mixture::new(
            vec![0.4, 0.6],
            vec![Gaussian::univariate(-5.1, 1.0).unwrap(), Gaussian::univariate(0.2, 1.1).unwrap()],
        )
        .unwrap(),
        Mixture::single(Gaussian::univariate(4.9, 1.0).unwrap()),
        Mixture::new(
            vec![0.5, 0.5],
            vec![Gaussian::univariate(5.0, 1.0).unwrap(), Gaussian::univariate(5.0, 1.0).unwrap()],
        )
        .unwrap(),
    ];
    for y in probes {
        let h = Hypothesis::Model(y);
        for radius in [0.05, 0.2, 0.5] {
            let fast = c.ball(&h, radius, &o).unwrap();
            let slow: Vec<u64> =
                (0..c.len()).filter(|&i| c.distance(&h, &c.element(i), &o).unwrap() <= radius).collect();
            assert_eq!(fast, slow, "radius {radius}");
        }
    }
}

#[test]
fn dense_cover_covers_random_dense_mixtures() {
    let bx = ParamBox { dim: 1, mean_bound: 2.0, eig_min: 0.8, eig_max: 1.25 };
    let alpha = 0.1;
    let comp = bounded_gaussian_cover(&bx, alpha, DEFAULT_CAP).unwrap();
    let c = dense_mixture_cover(&comp, 2, alpha).unwrap();
    let o = TvOracle::exact();
    let mut r = rng::root(12);
    for trial in 0..60 {
        let s = 1 + trial % 2;
        let f = sample_dense_mixture(&bx, s, alpha / 2.0, &mut r);
        let h = Hypothesis::Model(f);
        let near = c.ball(&h, alpha, &o).unwrap();
        assert!(!near.is_empty(), "trial {trial}");
        let best = near.iter().map(|&i| c.distance(&h, &c.element(i), &o).unwrap()).fold(f64::INFINITY, f64::min);
        assert!(best <= alpha);
    }
}

#[test]
fn recipe_replay_is_bit_exact() {
    let comp =
        bounded_gaussian_cover(&ParamBox { dim: 1, mean_bound: 1.0, eig_min: 0.8, eig_max: 1.25 }, 0.1, DEFAULT_CAP)
            .unwrap();
    let dense = dense_mixture_cover(&comp, 2, 0.1).unwrap();
    for cover in [simplex_cover(3, 0.2).unwrap(), comp, dense] {
        let text = serde_json::to_string(&cover.to_file()).unwrap();
        let file: CoverFile = serde_json::from_str(&text).unwrap();
        let again = Cover::from_file(&file, DEFAULT_CAP).unwrap();
        assert_eq!(serde_json::to_string(&again.to_file()).unwrap(), text);
        assert_eq!(again.recipe_hash(), cover.recipe_hash());
        assert!(again.built_at() > cover.built_at());
    }
}

#[test]
fn mixed_counts_are_never_neighbors() {
    let comp = tiny_component();
    let c = dense_mixture_cover(&comp, 2, 0.25).unwrap();
    let one = c.element(0);
    let two = c.element(3);
    assert!(c.distance(&one, &two, &TvOracle::exact()).unwrap().is_infinite());
}
