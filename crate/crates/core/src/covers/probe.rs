use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::ParamBox;
use crate::model::{Gaussian, Mixture};

/// Uniform point of the probability simplex.
pub fn sample_simplex<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Gaussian inside the box: uniform mean, uniform spectrum, random rotation.
pub fn sample_box_gaussian<R: Rng + ?Sized>(bx: &ParamBox, rng: &mut R) -> Gaussian {
    let d = bx.dim;
    let mean: Vec<f64> = (0..d).map(|_| rng.gen_range(-bx.mean_bound..=bx.mean_bound)).collect();
    let eig: Vec<f64> = (0..d).map(|_| rng.gen_range(bx.eig_min..=bx.eig_max)).collect();
    let cov = if d == 1 {
        DMatrix::from_element(1, 1, eig[0])
    } else {
        let z: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
        let q = z.qr().q();
        let c: DMatrix<f64> = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig)) * q.transpose();
        (&c + c.transpose()) * 0.5
    };
    Gaussian::new(nalgebra::DVector::from_vec(mean), cov).expect("box spectrum is positive")
}

/// Mixture of `s` in-box components whose weights are all at least `min_weight`.
pub fn sample_dense_mixture<R: Rng + ?Sized>(bx: &ParamBox, s: usize, min_weight: f64, rng: &mut R) -> Mixture {
    assert!(min_weight * s as f64 <= 1.0, "no dense weights exist");
    // uniform on the shrunken simplex
    let w: Vec<f64> =
        sample_simplex(s, rng).into_iter().map(|x| min_weight + (1.0 - min_weight * s as f64) * x).collect();
    let total: f64 = w.iter().sum();
    let w = w.into_iter().map(|x| x / total).collect();
    Mixture::new(w, (0..s).map(|_| sample_box_gaussian(bx, rng)).collect()).expect("valid mixture")
}
