use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Entrywise symmetry tolerance for covariance input.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Cholesky pivots at or below this fraction of the trace are rejected.
pub const PIVOT_REL_TOL: f64 = 1e-12;

const STACK_DIM: usize = 16;

/// A multivariate normal distribution with its Cholesky factor cached.
#[derive(Clone, Debug)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    log_det: f64,
}

impl PartialEq for Gaussian {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

impl Gaussian {
    /// Validates `cov` and factorizes it.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidParameter("Gaussian dimension must be at least 1".into()));
        }
        if cov.nrows() != d {
            return Err(Error::DimensionMismatch { expected: d, found: cov.nrows() });
        }
        if cov.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: cov.ncols() });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::MalformedModel("non-finite Gaussian parameter".into()));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let gap = (cov[(i, j)] - cov[(j, i)]).abs();
                if gap > SYMMETRY_TOL {
                    return Err(Error::AsymmetricCovariance { row: i, col: j, gap });
                }
            }
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let chol = cholesky(&cov)?;
        let log_det = 2.0 * (0..d).map(|i| chol[(i, i)].ln()).sum::<f64>();
        Ok(Gaussian { mean, cov, chol, log_det })
    }

    /// Builds from plain slices; `cov` is given row by row.
    pub fn from_rows(mean: &[f64], cov: &[Vec<f64>]) -> Result<Self> {
        let d = mean.len();
        if cov.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: cov.len() });
        }
        for row in cov {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        Gaussian::new(DVector::from_column_slice(mean), m)
    }

    /// N(mean, var) on the real line.
    pub fn univariate(mean: f64, var: f64) -> Result<Self> {
        Gaussian::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    /// N(0, I_d).
    pub fn standard(d: usize) -> Self {
        Gaussian::new(DVector::zeros(d), DMatrix::identity(d, d)).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular `L` with `L Lᵀ = cov`.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Mean of a univariate Gaussian (first coordinate otherwise).
    pub fn mean1(&self) -> f64 {
        self.mean[0]
    }

    /// Standard deviation of the first coordinate.
    pub fn sd1(&self) -> f64 {
        self.cov[(0, 0)].sqrt()
    }

    /// Squared Mahalanobis norm of `x - mean`.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        debug_assert_eq!(x.len(), d);
        if d == 1 {
            let z = (x[0] - self.mean[0]) / self.chol[(0, 0)];
            return z * z;
        }
        if d <= STACK_DIM {
            let mut buf = [0.0; STACK_DIM];
            self.whiten_into(x, &mut buf[..d])
        } else {
            let mut buf = vec![0.0; d];
            self.whiten_into(x, &mut buf)
        }
    }

    fn whiten_into(&self, x: &[f64], z: &mut [f64]) -> f64 {
        let d = z.len();
        let mut norm = 0.0;
        for i in 0..d {
            let mut acc = x[i] - self.mean[i];
            for j in 0..i {
                acc -= self.chol[(i, j)] * z[j];
            }
            let zi = acc / self.chol[(i, i)];
            z[i] = zi;
            norm += zi * zi;
        }
        norm
    }

    /// Exact log density at `x` (no dimension check; see [`Gaussian::checked_log_density`]).
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let d = self.dim() as f64;
        -0.5 * (d * (2.0 * PI).ln() + self.log_det + self.mahalanobis_sq(x))
    }

    pub fn checked_log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.log_density(x))
    }

    /// Writes one draw into `out` (length `dim`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let d = self.dim();
        let mut z = [0.0; STACK_DIM];
        let mut heap;
        let z: &mut [f64] = if d <= STACK_DIM {
            &mut z[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut acc = self.mean[i];
            for j in 0..=i {
                acc += self.chol[(i, j)] * z[j];
            }
            out[i] = acc;
        }
    }

    /// Pushforward under `x -> A x + b`: `N(A mu + b, A Sigma A^T)`.
    pub fn affine_transform(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Gaussian> {
        let d = self.dim();
        if a.nrows() != d || a.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: a.nrows().max(a.ncols()) });
        }
        if b.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: b.len() });
        }
        let lu = a.clone().lu();
        let det = lu.determinant();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        if det == 0.0 || !det.is_finite() || det.abs() <= 1e-14 * scale.powi(d as i32) {
            return Err(Error::SingularTransform);
        }
        let mean = a * &self.mean + b;
        let cov = a * &self.cov * a.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        Gaussian::new(mean, cov)
    }

    /// Symmetric positive square root of the covariance.
    pub fn cov_sqrt(&self) -> DMatrix<f64> {
        sym_sqrt(&self.cov)
    }
}

/// Cholesky factorization with the relative pivot rule.
pub(crate) fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let trace: f64 = (0..d).map(|i| a[(i, i)]).sum();
    let tol = PIVOT_REL_TOL * trace.abs().max(f64::MIN_POSITIVE);
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// Symmetric square root via eigendecomposition (negative eigenvalues clamp to 0).
pub(crate) fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 1 {
        return DMatrix::from_element(1, 1, a[(0, 0)].max(0.0).sqrt());
    }
    let eig = a.clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Solves `L X = B` for lower-triangular `L`.
pub(crate) fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let d = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..d {
            let mut acc = x[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
    }
    x
}

/// The divergence statistic
/// `max{ ||S1^{-1/2} S2 S1^{-1/2} - I||_F , ||S1^{-1/2}(mu1 - mu2)||_2 }`.
///
/// Uses the cached factor of `g1`: `L1^{-1} S2 L1^{-T}` is orthogonally similar to the
/// symmetric-root form, so both norms agree. Not symmetric in its arguments.
pub fn gaussian_delta(g1: &Gaussian, g2: &Gaussian) -> Result<f64> {
    let d = g1.dim();
    if g2.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: g2.dim() });
    }
    if d == 1 {
        let v1 = g1.cov[(0, 0)];
        let cov_term = (g2.cov[(0, 0)] / v1 - 1.0).abs();
        let mean_term = (g1.mean[0] - g2.mean[0]).abs() / v1.sqrt();
        return Ok(cov_term.max(mean_term));
    }
    let left = solve_lower(&g1.chol, &g2.cov);
    let inner = solve_lower(&g1.chol, &left.transpose());
    let frob = (inner - DMatrix::<f64>::identity(d, d)).norm();
    let diff = DMatrix::from_column_slice(d, 1, (&g1.mean - &g2.mean).as_slice());
    let mean_term = solve_lower(&g1.chol, &diff).norm();
    Ok(frob.max(mean_term))
}
