use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::metrics::{tv_normal_1d, TvOracle};
use crate::model::{sym_sqrt, Gaussian};

/// Largest ball radius for which the Δ/200 lower bound holds.
pub const MAX_BALL_GAMMA: f64 = 1.0 / 600.0;

/// Data-independent parameter region: means in [−M, M]^d, covariance spectrum in [λmin, λmax].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub dim: usize,
    pub mean_bound: f64,
    pub eig_min: f64,
    pub eig_max: f64,
}

impl ParamBox {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !(self.mean_bound >= 0.0) || !(self.eig_min > 0.0) || !(self.eig_max >= self.eig_min) {
            return Err(invalid(format!("invalid parameter box {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, g: &Gaussian) -> bool {
        if g.dim() != self.dim || g.mean().iter().any(|m| m.abs() > self.mean_bound) {
            return false;
        }
        let eig = g.cov().clone().symmetric_eigenvalues();
        eig.iter().all(|&e| e >= self.eig_min * (1.0 - 1e-12) && e <= self.eig_max * (1.0 + 1e-12))
    }
}

/// Gaussians with an index sorted by the first mean coordinate.
#[derive(Clone, Debug)]
pub(crate) struct GaussianSet {
    pub items: Vec<Gaussian>,
    order: Vec<u32>,
    keys: Vec<f64>,
    max_sd0: f64,
}

fn inv_phi(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// 1-D marginal of `g` along unit vector `u`.
fn marginal(g: &Gaussian, u: &[f64]) -> (f64, f64) {
    let u = DVector::from_column_slice(u);
    let m = g.mean().dot(&u);
    let v = (g.cov() * &u).dot(&u);
    (m, v.sqrt())
}

/// Max TV over a few 1-D projections; never exceeds the true TV.
pub(crate) fn projection_lower_bound(a: &Gaussian, b: &Gaussian) -> f64 {
    let d = a.dim();
    if d == 1 {
        return tv_normal_1d(a.mean1(), a.sd1(), b.mean1(), b.sd1());
    }
    let mut best: f64 = 0.0;
    let mut u = vec![0.0; d];
    for i in 0..d {
        u.iter_mut().for_each(|x| *x = 0.0);
        u[i] = 1.0;
        let ((m1, s1), (m2, s2)) = (marginal(a, &u), marginal(b, &u));
        best = best.max(tv_normal_1d(m1, s1, m2, s2));
        for j in (i + 1)..d {
            for sign in [1.0, -1.0] {
                u.iter_mut().for_each(|x| *x = 0.0);
                u[i] = std::f64::consts::FRAC_1_SQRT_2;
                u[j] = sign * std::f64::consts::FRAC_1_SQRT_2;
                let ((m1, s1), (m2, s2)) = (marginal(a, &u), marginal(b, &u));
                best = best.max(tv_normal_1d(m1, s1, m2, s2));
            }
        }
    }
    best
}

impl GaussianSet {
    pub fn new(items: Vec<Gaussian>) -> Self {
        let mut order: Vec<u32> = (0..items.len() as u32).collect();
        order.sort_by(|&a, &b| items[a as usize].mean()[0].total_cmp(&items[b as usize].mean()[0]).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| items[i as usize].mean()[0]).collect();
        let max_sd0 = items.iter().map(|g| g.cov()[(0, 0)].sqrt()).fold(0.0, f64::max);
        GaussianSet { items, order, keys, max_sd0 }
    }

    /// Indices whose first-coordinate mean could lie within TV `radius` of `center`.
    ///
    /// The half-line split at the midpoint shows TV ≥ 2Φ(|Δμ|/(2s)) − 1 with s the larger sd.
    pub fn window(&self, center: &Gaussian, radius: f64) -> &[u32] {
        if radius >= 1.0 {
            return &self.order;
        }
        let s = self.max_sd0.max(center.cov()[(0, 0)].sqrt());
        let half = 2.0 * s * inv_phi((1.0 + radius) / 2.0) * (1.0 + 1e-9) + 1e-12;
        let c = center.mean()[0];
        let lo = self.keys.partition_point(|&k| k < c - half);
        let hi = self.keys.partition_point(|&k| k <= c + half);
        &self.order[lo..hi]
    }

    /// Indices within TV `radius` of `center`, ascending.
    pub fn ball(&self, center: &Gaussian, radius: f64, oracle: &TvOracle) -> Vec<u64> {
        let exact = center.dim() == 1;
        let mut out: Vec<u64> = self
            .window(center, radius)
            .iter()
            .filter(|&&i| {
                let e = &self.items[i as usize];
                let lb = projection_lower_bound(center, e);
                if exact {
                    lb <= radius
                } else {
                    lb <= radius && oracle.gaussians(center, e) <= radius
                }
            })
            .map(|&i| i as u64)
            .collect();
        out.sort_unstable();
        out
    }

    /// Like [`Self::densest_ball`] but counting by projection lower bounds only, which over-counts.
    pub fn densest_ball_superset(&self, radius: f64) -> u64 {
        self.items
            .iter()
            .map(|e| {
                self.window(e, radius)
                    .iter()
                    .filter(|&&i| projection_lower_bound(e, &self.items[i as usize]) <= radius)
                    .count() as u64
            })
            .max()
            .unwrap_or(0)
    }

    /// max over elements e of |B(e, radius)|: bounds every nonempty ball of half the radius.
    pub fn densest_ball(&self, radius: f64, oracle: &TvOracle) -> u64 {
        self.items.iter().map(|e| self.ball(e, radius, oracle).len() as u64).max().unwrap_or(0)
    }
}

/// Integer lattice points `h·z` with ‖h·z‖ ≤ radius in `dim` dimensions.
fn lattice_ball(dim: usize, h: f64, radius: f64) -> Vec<Vec<f64>> {
    let n = (radius / h).floor() as i64;
    let mut out = Vec::new();
    let mut z = vec![-n; dim];
    loop {
        let p: Vec<f64> = z.iter().map(|&v| v as f64 * h).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            out.push(p);
        }
        let mut pos = 0;
        loop {
            if pos == dim {
                return out;
            }
            z[pos] += 1;
            if z[pos] <= n {
                break;
            }
            z[pos] = -n;
            pos += 1;
        }
    }
}

fn lattice_ball_size(dim: usize, h: f64, radius: f64) -> f64 {
    (2.0 * (radius / h).floor() + 1.0).powi(dim as i32)
}

/// Symmetric matrix whose Frobenius norm equals the Euclidean norm of `p`.
fn sym_from_params(d: usize, p: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::identity(d, d);
    let mut idx = 0;
    for i in 0..d {
        m[(i, i)] += p[idx];
        idx += 1;
        for j in (i + 1)..d {
            let v = p[idx] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
            idx += 1;
        }
    }
    m
}

/// α-cover of the TV ball of radius `gamma` around `center`, plus `cap` on the raw grid size.
///
/// Grids live in whitened coordinates where the center is N(0, I) and members satisfy
/// Δ ≤ 200γ. Elements farther than γ + α from the center cannot cover any member and are
/// dropped.
pub(crate) fn ball_cover_elements(center: &Gaussian, alpha: f64, gamma: f64, cap: u64) -> Result<Vec<Gaussian>> {
    if !(alpha > 0.0 && alpha < gamma && gamma <= MAX_BALL_GAMMA) {
        return Err(Error::InvalidRadii { alpha, gamma, max_gamma: MAX_BALL_GAMMA });
    }
    let d = center.dim();
    let big_d = d * (d + 1) / 2;
    let r = 200.0 * gamma;
    let h_loc = std::f64::consts::SQRT_2 * alpha / (d as f64).sqrt();
    let h_scale = alpha / (std::f64::consts::SQRT_2 * (big_d as f64).sqrt());
    let r_loc = std::f64::consts::SQRT_2 * r + h_loc * (d as f64).sqrt() / 2.0;
    let r_scale = r + h_scale * (big_d as f64).sqrt() / 2.0;
    let projected = lattice_ball_size(d, h_loc, r_loc) * lattice_ball_size(big_d, h_scale, r_scale);
    if projected > cap as f64 {
        return Err(Error::InfeasibleBudget { what: "Gaussian ball cover", requested: projected, cap });
    }
    let a = sym_sqrt(center.cov());
    let locs = lattice_ball(d, h_loc, r_loc);
    let scales = lattice_ball(big_d, h_scale, r_scale);
    let standard = Gaussian::standard(d);
    let keep = gamma + alpha;
    let mut out = Vec::new();
    for p in &scales {
        let s_hat = sym_from_params(d, p);
        let root = sym_sqrt(&s_hat);
        for nu in &locs {
            let m_hat = &root * DVector::from_column_slice(nu);
            if d == 1 {
                if tv_normal_1d(0.0, 1.0, m_hat[0], s_hat[(0, 0)].sqrt()) > keep {
                    continue;
                }
            }
            let Ok(w) = Gaussian::new(m_hat, s_hat.clone()) else { continue };
            if d > 1 && projection_lower_bound(&standard, &w) > keep {
                continue;
            }
            out.push(w.affine_transform(&a, center.mean())?);
        }
    }
    Ok(out)
}

/// Exact univariate TV between N(0, 1) and N(0, u²).
fn scale_tv(u: f64) -> f64 {
    tv_normal_1d(0.0, 1.0, 0.0, u)
}

/// Solves `f(x) = target` for increasing `f` on [lo, hi] by bisection.
fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn centered_grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    if hi - lo <= 0.0 {
        return vec![0.5 * (lo + hi)];
    }
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + step * (i as f64 + 0.5)).collect()
}

/// Certified univariate grid: geometric sd levels, mean spacing proportional to sd.
///
/// A member in a cell is within α/2 of the cell center in scale (exact TV of the sd ratio)
/// and within α/2 in location (exact TV of a mean shift at the smallest sd in the cell).
fn bounded_elements_1d(bx: &ParamBox, alpha: f64, cap: u64) -> Result<Vec<Gaussian>> {
    let (sd_lo, sd_hi) = (bx.eig_min.sqrt(), bx.eig_max.sqrt());
    let half = alpha / 2.0;
    let u = bisect(scale_tv, half, 1.0, 100.0);
    let mut levels = Vec::new();
    if sd_hi <= sd_lo * (1.0 + 1e-12) {
        levels.push((bx.eig_min, sd_lo));
    } else {
        let mut s = sd_lo * u;
        loop {
            levels.push((s * s, (s / u).max(sd_lo)));
            if s * u >= sd_hi {
                break;
            }
            s *= u * u;
        }
    }
    let z = inv_phi((1.0 + half) / 2.0);
    let mut projected = 0.0;
    for &(_, lo) in &levels {
        projected += (2.0 * bx.mean_bound / (4.0 * lo * z)).ceil().max(1.0);
    }
    if projected > cap as f64 {
        return Err(Error::InfeasibleBudget { what: "bounded Gaussian cover", requested: projected, cap });
    }
    let mut out = Vec::with_capacity(projected as usize);
    for &(var, lo) in &levels {
        for m in centered_grid(-bx.mean_bound, bx.mean_bound, 4.0 * lo * z) {
            out.push(Gaussian::univariate(m, var)?);
        }
    }
    Ok(out)
}

/// Grid over means and Cholesky entries certified by the Δ/√2 upper bound.
fn bounded_elements_nd(bx: &ParamBox, alpha: f64, cap: u64) -> Result<Vec<Gaussian>> {
    let d = bx.dim;
    let big_d = d * (d + 1) / 2;
    let half = alpha / 2.0;
    let (sl, sh) = (bx.eig_min.sqrt(), bx.eig_max.sqrt());
    let h_mu = 2.0 * half * (2.0 * bx.eig_min).sqrt() / (d as f64).sqrt();
    // (2q + q²)/√2 ≤ α/2 with q = r/(√λmin − r), r the Frobenius half-diagonal of a cell
    let q = -1.0 + (1.0 + std::f64::consts::SQRT_2 * half).sqrt();
    let r = q * sl / (1.0 + q);
    let h_l = 2.0 * r / (big_d as f64).sqrt();
    let means = centered_grid(-bx.mean_bound, bx.mean_bound, h_mu);
    let diag = centered_grid(sl, sh, h_l);
    let first_col = ((bx.eig_max - bx.eig_min) / (2.0 * sl)).min((bx.eig_max - bx.eig_min).sqrt());
    let other = (bx.eig_max - bx.eig_min).sqrt();
    let mut axes: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for j in 0..=i {
            axes.push(if i == j {
                diag.clone()
            } else if j == 0 {
                centered_grid(-first_col, first_col, h_l)
            } else {
                centered_grid(-other, other, h_l)
            });
        }
    }
    let n_l: f64 = axes.iter().map(|a| a.len() as f64).product();
    let projected = (means.len() as f64).powi(d as i32) * n_l;
    if projected > cap as f64 {
        return Err(Error::InfeasibleBudget { what: "bounded Gaussian cover", requested: projected, cap });
    }
    let mut covs = Vec::new();
    for entries in product(&axes) {
        let mut l = DMatrix::zeros(d, d);
        let mut idx = 0;
        for i in 0..d {
            for j in 0..=i {
                l[(i, j)] = entries[idx];
                idx += 1;
            }
        }
        covs.push(&l * l.transpose());
    }
    let mean_axes = vec![means; d];
    let mut out = Vec::with_capacity(projected as usize);
    for mu in product(&mean_axes) {
        let mu = DVector::from_vec(mu);
        for c in &covs {
            out.push(Gaussian::new(mu.clone(), c.clone())?);
        }
    }
    Ok(out)
}

fn product(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

pub(crate) fn bounded_cover_elements(bx: &ParamBox, alpha: f64, cap: u64) -> Result<Vec<Gaussian>> {
    bx.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("cover radius must lie in (0, 1), got {alpha}")));
    }
    if bx.dim == 1 {
        bounded_elements_1d(bx, alpha, cap)
    } else {
        bounded_elements_nd(bx, alpha, cap)
    }
}
