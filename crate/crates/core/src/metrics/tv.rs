use std::cmp::Ordering;
use std::f64::consts::SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{gaussian_delta, Gaussian, Mixture};

/// Default confidence level for Monte-Carlo intervals.
pub const DEFAULT_CONF: f64 = 0.99;
/// Half-width of the quadrature window in standard deviations.
pub const QUAD_SIGMAS: f64 = 12.0;
/// Regime in which the Δ/200 lower bound applies.
pub const LOWER_BOUND_REGIME: f64 = 1.0 / 600.0;

/// A TV value with a confidence half-width (zero for exact evaluations).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub half_width: f64,
    pub conf: f64,
    pub n_samples: u64,
}

impl TvEstimate {
    pub fn exact(value: f64) -> Self {
        TvEstimate { value: value.clamp(0.0, 1.0), half_width: 0.0, conf: 1.0, n_samples: 0 }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.value + self.half_width
    }
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Mass of N(mu, sd^2) on (a, b], computed in the tail that keeps precision.
fn normal_mass(mu: f64, sd: f64, a: f64, b: f64) -> f64 {
    let (za, zb) = ((a - mu) / sd, (b - mu) / sd);
    if za > 0.0 {
        // both in the upper tail
        0.5 * (erfc(za / SQRT_2) - erfc(zb / SQRT_2))
    } else {
        0.5 * (erfc(-zb / SQRT_2) - erfc(-za / SQRT_2))
    }
}

/// Exact TV between two univariate Gaussians via the density crossing points.
pub fn tv_gaussian_1d(g1: &Gaussian, g2: &Gaussian) -> Result<f64> {
    for g in [g1, g2] {
        if g.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: g.dim() });
        }
    }
    Ok(tv_normal_1d(g1.mean1(), g1.sd1(), g2.mean1(), g2.sd1()))
}

pub(crate) fn tv_normal_1d(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    if m1 == m2 && s1 == s2 {
        return 0.0;
    }
    let (v1, v2) = (s1 * s1, s2 * s2);
    // ln p1 - ln p2 = a x^2 + b x + c
    let a = 0.5 / v2 - 0.5 / v1;
    let b = m1 / v1 - m2 / v2;
    let c = 0.5 * m2 * m2 / v2 - 0.5 * m1 * m1 / v1 + (s2 / s1).ln();
    let tv = if a.abs() <= 1e-14 * (0.5 / v1) {
        // equal scales: a single crossing at the midpoint
        let s = 0.5 * (s1 + s2);
        2.0 * std_normal_cdf((m1 - m2).abs() / (2.0 * s)) - 1.0
    } else {
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (mut r1, mut r2) = if q == 0.0 {
            let r = (-c / a).max(0.0).sqrt();
            (-r, r)
        } else {
            (q / a, c / q)
        };
        if r1 > r2 {
            std::mem::swap(&mut r1, &mut r2);
        }
        // between the roots the sign of ln p1 - ln p2 is the opposite of a
        (normal_mass(m1, s1, r1, r2) - normal_mass(m2, s2, r1, r2)).abs()
    };
    tv.clamp(0.0, 1.0)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Gauss-Kronrod 7/15 on [a, b]; returns (integral, error estimate).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive integral of `f` over the sorted breakpoints, to absolute error `tol`.
pub(crate) fn integrate(f: &impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let total_width = breaks.last().unwrap() - breaks[0];
    let mut sum = 0.0;
    let mut stack: Vec<(f64, f64, u32)> = breaks.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1], 0)).collect();
    stack.reverse();
    while let Some((a, b, depth)) = stack.pop() {
        let (val, err) = gk15(f, a, b);
        let budget = tol * (b - a) / total_width;
        if err <= budget.max(1e-300) || depth >= 40 {
            sum += val;
        } else {
            let m = 0.5 * (a + b);
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
        }
    }
    sum
}

fn quad_breakpoints(models: &[&Mixture]) -> Vec<f64> {
    const OFFSETS: [f64; 11] = [-12.0, -8.0, -5.0, -3.0, -1.5, 0.0, 1.5, 3.0, 5.0, 8.0, 12.0];
    let mut windows: Vec<(f64, f64)> = Vec::new();
    let mut points = Vec::new();
    for m in models {
        for g in m.components() {
            let (mu, sd) = (g.mean1(), g.sd1());
            windows.push((mu - QUAD_SIGMAS * sd, mu + QUAD_SIGMAS * sd));
            points.extend(OFFSETS.iter().map(|o| mu + o * sd));
        }
    }
    windows.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in windows {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    let inside = |x: f64| merged.iter().any(|(lo, hi)| x >= *lo && x <= *hi);
    points.retain(|&x| inside(x));
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// ½∫|p − q| over the merged ±12σ windows of all components, by adaptive quadrature.
///
/// Gaps between windows are skipped; both densities are below 1e-31 there.
pub fn tv_quadrature_1d(p: &Mixture, q: &Mixture, tol: f64) -> Result<f64> {
    for m in [p, q] {
        if m.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: m.dim() });
        }
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let breaks = quad_breakpoints(&[p, q]);
    let f = |x: f64| 0.5 * (p.log_density(&[x]).exp() - q.log_density(&[x]).exp()).abs();
    // integrate segment by segment so gaps contribute nothing
    let mut total = 0.0;
    let mut seg_start = 0;
    let windows: Vec<(f64, f64)> = p
        .components()
        .iter()
        .chain(q.components())
        .map(|g| (g.mean1() - QUAD_SIGMAS * g.sd1(), g.mean1() + QUAD_SIGMAS * g.sd1()))
        .collect();
    let covered = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        windows.iter().any(|(lo, hi)| m >= *lo && m <= *hi)
    };
    for i in 1..breaks.len() {
        if !covered(breaks[i - 1], breaks[i]) {
            if i - 1 > seg_start {
                total += integrate(&f, &breaks[seg_start..i], tol / 4.0);
            }
            seg_start = i;
        }
    }
    if breaks.len() - 1 > seg_start {
        total += integrate(&f, &breaks[seg_start..], tol / 4.0);
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Two-sided Hoeffding half-width for the mean of `n` draws in [0, 1].
pub fn hoeffding_half_width(n: u64, conf: f64) -> f64 {
    ((2.0 / (1.0 - conf)).ln() / (2.0 * n as f64)).sqrt()
}

/// Unbiased Monte-Carlo TV estimate from `n` draws of ½(p+q).
///
/// The integrand |p−q|/(p+q) lies in [0, 1]; the interval is clipped to [0, 1].
pub fn tv_mc_estimate<R: Rng + ?Sized>(p: &Mixture, q: &Mixture, n: u64, conf: f64, rng: &mut R) -> Result<TvEstimate> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
    }
    if n == 0 || !(conf > 0.0 && conf < 1.0) {
        return Err(Error::InvalidParameter(format!("need n >= 1 and conf in (0,1), got n={n}, conf={conf}")));
    }
    if p == q {
        return Ok(TvEstimate { value: 0.0, half_width: 0.0, conf, n_samples: n });
    }
    let mut x = vec![0.0; p.dim()];
    let mut sum = 0.0;
    for _ in 0..n {
        if rng.gen::<bool>() {
            p.sample_into(rng, &mut x);
        } else {
            q.sample_into(rng, &mut x);
        }
        let diff = p.log_density(&x) - q.log_density(&x);
        if diff.is_finite() {
            sum += (0.5 * diff).tanh().abs();
        } else if !diff.is_nan() {
            sum += 1.0;
        }
    }
    let value = sum / n as f64;
    let hw = hoeffding_half_width(n, conf).min(value).min(1.0 - value);
    Ok(TvEstimate { value, half_width: hw, conf, n_samples: n })
}

/// Δ-based sandwich `(lower, upper, lower_valid)`.
pub fn tv_bounds_gaussian(g1: &Gaussian, g2: &Gaussian) -> Result<(f64, f64, bool)> {
    let delta = gaussian_delta(g1, g2)?;
    let upper = (delta / SQRT_2).min(1.0);
    Ok((delta / 200.0, upper, upper <= LOWER_BOUND_REGIME))
}

/// How TV is evaluated wherever a pairwise distance is needed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TvOracle {
    /// Closed form for Gaussian pairs, adaptive quadrature for mixtures; d = 1 only.
    Exact1d { tol: f64 },
    /// Seeded Monte-Carlo point estimate; the pair is put in canonical order first.
    MonteCarlo { n: u64, seed: u64, conf: f64 },
}

impl TvOracle {
    pub fn exact() -> Self {
        TvOracle::Exact1d { tol: 1e-9 }
    }

    /// Exact in one dimension, Monte Carlo otherwise.
    pub fn auto(dim: usize, seed: u64) -> Self {
        if dim == 1 {
            TvOracle::exact()
        } else {
            TvOracle::MonteCarlo { n: 20_000, seed, conf: DEFAULT_CONF }
        }
    }

    pub fn gaussians(&self, a: &Gaussian, b: &Gaussian) -> f64 {
        match self {
            TvOracle::Exact1d { .. } => tv_normal_1d(a.mean1(), a.sd1(), b.mean1(), b.sd1()),
            _ => {
                self.mixtures(&Mixture::single(a.clone()), &Mixture::single(b.clone())).map(|e| e.value).unwrap_or(1.0)
            }
        }
    }

    pub fn mixtures(&self, a: &Mixture, b: &Mixture) -> Result<TvEstimate> {
        match *self {
            TvOracle::Exact1d { tol } => {
                if a.len() == 1 && b.len() == 1 {
                    Ok(TvEstimate::exact(tv_gaussian_1d(&a.components()[0], &b.components()[0])?))
                } else {
                    Ok(TvEstimate { half_width: tol, ..TvEstimate::exact(tv_quadrature_1d(a, b, tol)?) })
                }
            }
            TvOracle::MonteCarlo { n, seed, conf } => {
                let (a, b) = if canonical_cmp(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
                tv_mc_estimate(a, b, n, conf, &mut crate::rng::root(seed))
            }
        }
    }
}

fn canonical_cmp(a: &Mixture, b: &Mixture) -> Ordering {
    let flat = |m: &Mixture| -> Vec<f64> {
        let mut v = m.weights().to_vec();
        for g in m.components() {
            v.extend(g.mean().iter());
            v.extend(g.cov().iter());
        }
        v
    };
    let (x, y) = (flat(a), flat(b));
    x.iter().zip(&y).map(|(p, q)| p.total_cmp(q)).find(|o| *o != Ordering::Equal).unwrap_or(x.len().cmp(&y.len()))
}
