use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::listdecode::{DecodeParams, RefineParams};
use crate::mde::DEFAULT_MC_N;
use crate::private_select::{required_rounds_ln, PrivacyParams, DEFAULT_ROUNDS_C};

/// α′ = α / 15.
pub const ALPHA_PRIME_DIVISOR: f64 = 15.0;
/// Relative tolerance of the β′ fixed point.
pub const BETA_PRIME_RTOL: f64 = 1e-6;
const BETA_PRIME_MAX_ITERS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Theory,
    Practical,
}

/// Constants hidden in the O(·) of the round count and the MDE sample count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub rounds: f64,
    pub mde: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { rounds: DEFAULT_ROUNDS_C, mde: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decoder {
    /// Lifted fits crossed with simplex covers.
    Faithful,
    Refined(RefineParams),
}

/// User-chosen sizes for practical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub rounds: usize,
    pub m2: usize,
    pub m3: usize,
    /// Largest list handed to MDE.
    pub list_cap: usize,
    #[serde(default = "default_mc_n")]
    pub mde_mc_n: usize,
    pub decoder: Decoder,
}

fn default_mc_n() -> usize {
    DEFAULT_MC_N
}

/// Sizes a run actually uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub rounds: usize,
    pub m2: usize,
    pub m3: usize,
}

/// Derived parameters. Counts that can be astronomically large are kept as
/// natural logs (`ln_*`) or as reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub alpha: f64,
    pub beta: f64,
    pub privacy: PrivacyParams,
    pub k: usize,
    pub d: usize,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    pub ln_l1: f64,
    pub m1: f64,
    pub ln_l2: f64,
    pub m2: f64,
    pub ln_t1: f64,
    pub rounds: f64,
    pub m3: f64,
    pub cover_t: u64,
    pub constants: Constants,
    pub mode: Mode,
    pub decode: DecodeParams,
    #[serde(default)]
    pub overrides: Option<Overrides>,
}

/// The sizes that depend on β′.
struct Sizes {
    ln_l1: f64,
    m1: f64,
    ln_l2: f64,
    m2: f64,
}

fn sizes(bp: f64, alpha_p: f64, k: usize, decode: &DecodeParams) -> Sizes {
    let kf = k as f64;
    let m = decode.m as f64;
    let lb = (1.0 / bp).ln();
    let lb2 = (1.0 / (2.0 * kf * bp)).ln();
    let ln_l1 = (decode.l_budget as f64).ln() + m * (10.0 * E * kf * lb / alpha_p).ln();
    let m1 = (2.0 * m * kf + 8.0 * kf * lb) / alpha_p;
    let ln_l2 = (kf + 1.0) * (kf.ln() + ln_l1 - alpha_p.ln()) + m1 * (10.0 * E * lb2 / (1.0 - alpha_p)).ln();
    let m2 = (2.0 * m1 + 8.0 * lb2) / (1.0 - alpha_p);
    Sizes { ln_l1, m1, ln_l2, m2 }
}

/// ln k! + k·ln(t·k/α′).
fn ln_t1(k: usize, cover_t: u64, alpha_p: f64) -> f64 {
    let kf = k as f64;
    statrs::function::gamma::ln_gamma(kf + 1.0) + kf * ((cover_t as f64).ln() + kf.ln() - alpha_p.ln())
}

/// β′ = βε / (12ek·ln(6ek·t₁L₂/(εβδ))) with ln t₁ and ln L₂ given.
fn beta_prime_step(beta: f64, p: &PrivacyParams, k: usize, ln_t1: f64, ln_l2: f64) -> f64 {
    let kf = k as f64;
    let ln_arg = (6.0 * E * kf / (p.epsilon * beta * p.delta)).ln() + ln_t1 + ln_l2;
    beta * p.epsilon / (12.0 * E * kf * ln_arg)
}

/// Theory-mode parameters. β′ is found by fixed-point iteration from the value
/// with t₁L₂ = 1; the iterates decrease monotonically.
#[allow(clippy::too_many_arguments)]
pub fn derive_parameters(
    alpha: f64,
    beta: f64,
    privacy: PrivacyParams,
    k: usize,
    d: usize,
    cover_t: u64,
    decode: &DecodeParams,
    constants: Constants,
) -> Result<PipelineParams> {
    privacy.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) || k == 0 || d == 0 || cover_t == 0 {
        return Err(invalid(format!("need α, β in (0,1) and k, d, t ≥ 1; got {alpha}, {beta}, {k}, {d}, {cover_t}")));
    }
    if !(constants.rounds > 0.0 && constants.mde > 0.0) {
        return Err(invalid("constants must be positive"));
    }
    let alpha_prime = alpha / ALPHA_PRIME_DIVISOR;
    let mut decode = decode.clone();
    decode.alpha = alpha_prime;
    let ln_t1 = ln_t1(k, cover_t, alpha_prime);
    let mut bp = beta_prime_step(beta, &privacy, k, 0.0, 0.0);
    let mut converged = false;
    for _ in 0..BETA_PRIME_MAX_ITERS {
        let next = beta_prime_step(beta, &privacy, k, ln_t1, sizes(bp, alpha_prime, k, &decode).ln_l2);
        if !(next > 0.0 && next.is_finite()) {
            return Err(Error::Overflow("β′"));
        }
        let done = ((bp - next) / next).abs() <= BETA_PRIME_RTOL;
        bp = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(invalid("β′ fixed point did not converge"));
    }
    let s = sizes(bp, alpha_prime, k, &decode);
    let rounds = required_rounds_ln(ln_t1 + s.ln_l2, bp, &privacy, constants.rounds)?;
    let m3 = constants.mde * (s.ln_l2 + (1.0 / bp).ln()) / (alpha_prime * alpha_prime) + s.m2;
    let params = PipelineParams {
        alpha,
        beta,
        privacy,
        k,
        d,
        alpha_prime,
        beta_prime: bp,
        ln_l1: s.ln_l1,
        m1: s.m1,
        ln_l2: s.ln_l2,
        m2: s.m2,
        ln_t1,
        rounds,
        m3,
        cover_t,
        constants,
        mode: Mode::Theory,
        decode,
        overrides: None,
    };
    let logs = [params.ln_l1, params.m1, params.ln_l2, params.m2, params.rounds, params.m3];
    if logs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("theory-mode sizes"));
    }
    Ok(params)
}

impl PipelineParams {
    /// Same formulas, with T, m₂, m₃ and list budgets taken from `o`.
    pub fn practical(mut self, o: Overrides) -> Result<Self> {
        if o.rounds == 0 || o.m2 == 0 || o.m3 <= o.m2 || o.list_cap == 0 || o.mde_mc_n == 0 {
            return Err(invalid(format!("need rounds, list_cap, mc_n ≥ 1 and m3 > m2 ≥ 1; got {o:?}")));
        }
        self.mode = Mode::Practical;
        self.overrides = Some(o);
        Ok(self)
    }

    /// Sizes used by a run; theory-mode values must fit in memory-sized integers.
    pub fn counts(&self) -> Result<Counts> {
        match (&self.mode, &self.overrides) {
            (Mode::Practical, Some(o)) => Ok(Counts { rounds: o.rounds, m2: o.m2, m3: o.m3 }),
            (Mode::Practical, None) => Err(invalid("practical mode needs overrides")),
            (Mode::Theory, _) => {
                let limit = (1u64 << 53) as f64;
                let (t, m2, m3) = (self.rounds.ceil(), self.m2.ceil(), self.m3.ceil());
                if !(t * m3 <= limit) {
                    return Err(Error::Overflow("T·m₃"));
                }
                Ok(Counts { rounds: t as usize, m2: m2 as usize, m3: m3 as usize })
            }
        }
    }

    /// ln of the total sample count T·m₃ under the formulas.
    pub fn ln_total_samples(&self) -> f64 {
        self.rounds.ln() + self.m3.ln()
    }

    /// Whether a run with these parameters is plausible on one machine (T·m₃ ≤ 10⁹).
    pub fn executable(&self) -> bool {
        self.counts().is_ok_and(|c| (c.rounds as f64) * (c.m3 as f64) <= 1e9)
    }

    /// Faithful cross product in theory mode, the override's decoder otherwise.
    pub fn decoder(&self) -> Decoder {
        self.overrides.as_ref().map_or(Decoder::Faithful, |o| o.decoder.clone())
    }
}

/// β′ of the failure-probability claim: β / (2e·c₁·ln(e·c₁·c₂/β)).
pub fn claim_beta_prime(beta: f64, c1: f64, c2: f64) -> f64 {
    beta / (2.0 * E * c1 * (E * c1 * c2 / beta).ln())
}

/// c₁·β′·ln(c₂/β′); the claim asserts this is at most β.
pub fn claim_failure_bound(beta_prime: f64, c1: f64, c2: f64) -> f64 {
    c1 * beta_prime * (c2 / beta_prime).ln()
}

/// 1 + ln2/x + ln(x)/x, at most 1 + 2/e for x ≥ 1.
pub fn claim_inequality(x: f64) -> f64 {
    1.0 + LN_2 / x + x.ln() / x
}
