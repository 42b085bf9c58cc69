use super::simplex::simplex_points;
use super::{Cover, Hypothesis};
use crate::error::{Error, Result};
use crate::metrics::TvOracle;
use crate::model::{Gaussian, Mixture};

/// Hard limit on index-space size for implicit product covers.
pub const IMPLICIT_CAP: u64 = 1 << 62;
/// Limit on entries produced by a single neighbor query.
pub const QUERY_CAP: f64 = 5e7;

/// Implicit product cover: block s holds |C|^s · |Δ_s| elements indexed
/// `offset_s + ω·|C|^s + Σ_j t_j·|C|^j`.
#[derive(Clone, Debug)]
pub(crate) struct DenseProduct {
    pub component: Box<Cover>,
    pub k: usize,
    pub simplices: Vec<Vec<Vec<f64>>>,
    pub offsets: Vec<u64>,
    pub total: u64,
}

/// All permutations of 0..s in lexicographic order.
pub(crate) fn permutations(s: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; s], &mut out);
    out
}

impl DenseProduct {
    pub fn new(component: Cover, k: usize, alpha: f64) -> Result<Self> {
        let c = component.len();
        let mut simplices = Vec::with_capacity(k);
        let mut offsets = Vec::with_capacity(k);
        let mut total: f64 = 0.0;
        let mut exact: u128 = 0;
        for s in 1..=k {
            let pts = simplex_points(s, alpha / s as f64)?;
            offsets.push(exact.min(u64::MAX as u128) as u64);
            let block = (c as f64).powi(s as i32) * pts.len() as f64;
            total += block;
            exact = exact.saturating_add((c as u128).saturating_pow(s as u32).saturating_mul(pts.len() as u128));
            simplices.push(pts);
        }
        if total > IMPLICIT_CAP as f64 || exact > IMPLICIT_CAP as u128 {
            return Err(Error::InfeasibleBudget { what: "dense mixture cover", requested: total, cap: IMPLICIT_CAP });
        }
        Ok(DenseProduct { component: Box::new(component), k, simplices, offsets, total: exact as u64 })
    }

    fn comp_len(&self) -> u64 {
        self.component.len()
    }

    fn gaussian(&self, t: u64) -> Gaussian {
        match self.component.element(t) {
            Hypothesis::Model(m) => m.components()[0].clone(),
            Hypothesis::Weights(_) => unreachable!("component covers hold Gaussians"),
        }
    }

    /// Decodes an index into (s, ω index, component indices by slot).
    pub fn decode(&self, idx: u64) -> (usize, usize, Vec<u64>) {
        let s = self.offsets.iter().rposition(|&o| o <= idx).expect("offsets start at 0") + 1;
        let c = self.comp_len();
        let mut local = idx - self.offsets[s - 1];
        let block = c.pow(s as u32);
        let omega = (local / block) as usize;
        local %= block;
        let mut t = Vec::with_capacity(s);
        for _ in 0..s {
            t.push(local % c);
            local /= c;
        }
        (s, omega, t)
    }

    pub fn encode(&self, s: usize, omega: usize, t: &[u64]) -> u64 {
        let c = self.comp_len();
        let mut local = 0u64;
        for &tj in t.iter().rev() {
            local = local * c + tj;
        }
        self.offsets[s - 1] + omega as u64 * c.pow(s as u32) + local
    }

    pub fn element(&self, idx: u64) -> Mixture {
        let (s, omega, t) = self.decode(idx);
        let w = self.simplices[s - 1][omega].clone();
        let comps = t.iter().map(|&i| self.gaussian(i)).collect();
        Mixture::new(w, comps).expect("cover weights lie on the simplex")
    }

    /// Every index within κ_mix `radius` of `y`, ascending.
    pub fn ball(&self, y: &Mixture, radius: f64, oracle: &TvOracle) -> Result<Vec<u64>> {
        let s = y.len();
        if s == 0 || s > self.k {
            return Ok(Vec::new());
        }
        let mut comp_balls = Vec::with_capacity(s);
        for f in y.components() {
            let b = self.component.ball(&Hypothesis::Model(Mixture::single(f.clone())), radius, oracle)?;
            if b.is_empty() {
                return Ok(Vec::new());
            }
            comp_balls.push(b);
        }
        let tol = radius / s as f64 + 1e-12;
        let mut out = Vec::new();
        let mut t = vec![0u64; s];
        for perm in permutations(s) {
            let omegas: Vec<usize> = self.simplices[s - 1]
                .iter()
                .enumerate()
                .filter(|(_, w)| (0..s).all(|i| (y.weights()[i] - w[perm[i]]).abs() <= tol))
                .map(|(o, _)| o)
                .collect();
            if omegas.is_empty() {
                continue;
            }
            let combos: f64 = comp_balls.iter().map(|b| b.len() as f64).product();
            if (out.len() as f64) + combos * omegas.len() as f64 > QUERY_CAP {
                return Err(Error::InfeasibleBudget {
                    what: "dense cover ball query",
                    requested: combos,
                    cap: QUERY_CAP as u64,
                });
            }
            let mut pos = vec![0usize; s];
            loop {
                for i in 0..s {
                    t[perm[i]] = comp_balls[i][pos[i]];
                }
                for &o in &omegas {
                    out.push(self.encode(s, o, &t));
                }
                let mut i = 0;
                loop {
                    if i == s {
                        break;
                    }
                    pos[i] += 1;
                    if pos[i] < comp_balls[i].len() {
                        break;
                    }
                    pos[i] = 0;
                    i += 1;
                }
                if i == s {
                    break;
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}
