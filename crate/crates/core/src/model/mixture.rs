use rand::Rng;

use super::{Dataset, Gaussian};
use crate::error::{Error, Result};

/// Tolerance on the weight sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A finite Gaussian mixture. Single Gaussians are one-component mixtures.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl Mixture {
    pub fn new(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::MalformedModel("mixture needs at least one component".into()));
        }
        if weights.len() != components.len() {
            return Err(Error::MalformedModel(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::MalformedModel(format!("invalid weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::MalformedModel(format!("weights sum to {sum}, not 1")));
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: c.dim() });
        }
        Ok(Mixture { weights, components })
    }

    pub fn single(g: Gaussian) -> Self {
        Mixture { weights: vec![1.0], components: vec![g] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    /// Number of components.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Max-shifted log-sum of `ln w_i + ln f_i(x)`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].log_density(x);
        }
        let mut terms = [0.0f64; 8];
        let mut heap;
        let terms: &mut [f64] = if self.len() <= 8 {
            &mut terms[..self.len()]
        } else {
            heap = vec![0.0; self.len()];
            &mut heap
        };
        let mut max = f64::NEG_INFINITY;
        for (t, (w, c)) in terms.iter_mut().zip(self.weights.iter().zip(&self.components)) {
            *t = if *w > 0.0 { w.ln() + c.log_density(x) } else { f64::NEG_INFINITY };
            max = max.max(*t);
        }
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    pub fn checked_log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.log_density(x))
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// Draws a component index from the weights.
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.len() == 1 {
            return 0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        // rounding left u above the final partial sum
        self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let i = self.sample_component(rng);
        self.components[i].sample_into(rng, out);
    }

    /// `n` i.i.d. draws; the dataset carries no seed tag.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let d = self.dim();
        let mut points = vec![0.0; n * d];
        for chunk in points.chunks_exact_mut(d) {
            self.sample_into(rng, chunk);
        }
        Dataset::from_flat(d, points, None).expect("dimension is consistent")
    }

    /// `n` i.i.d. draws from a fresh stream, recording `seed`.
    pub fn sample_seeded(&self, n: usize, seed: u64) -> Dataset {
        let mut rng = crate::rng::root(seed);
        let mut data = self.sample(n, &mut rng);
        data.seed = Some(seed);
        data
    }
}

impl From<Gaussian> for Mixture {
    fn from(g: Gaussian) -> Self {
        Mixture::single(g)
    }
}
