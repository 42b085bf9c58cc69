use dpmix_core::covers::{
    audit_local_smallness, sample_box_gaussian, sample_dense_mixture, sample_simplex, Cover, CoverRecipe, Hypothesis,
};
use dpmix_core::metrics::TvOracle;
use dpmix_core::model::ModelJson;
use dpmix_core::private_select::{dp_audit, neighbor_pairs, score_table, sensitivity_audit, PrivacyParams};
use dpmix_core::rng::{self, StreamRng};
use dpmix_core::Mixture;
use rand::Rng;
use serde::Deserialize;
use serde_json::Value;

use crate::context::{Context, CoverSource};
use crate::error::CliError;

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum AuditConfig {
    /// GAP-MAX on two fixed list collections differing in one list.
    Dp {
        cover: CoverSource,
        lists: Vec<Vec<Value>>,
        neighbor: Vec<Vec<Value>>,
        /// Defaults to twice the cover radius.
        #[serde(default)]
        radius: Option<f64>,
        epsilon: f64,
        delta: f64,
        #[serde(default = "default_runs")]
        runs: usize,
        #[serde(default = "default_reps")]
        bootstrap_reps: usize,
        #[serde(default = "default_slack")]
        slack: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Score differences over random neighboring collections of T lists of q items.
    Sensitivity {
        cover: CoverSource,
        t: usize,
        q: usize,
        #[serde(default = "default_pairs")]
        pairs: usize,
        #[serde(default)]
        radius: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Ball counts around random in-domain probes.
    Cover {
        cover: CoverSource,
        gamma: f64,
        #[serde(default = "default_probes")]
        probes: usize,
        /// Extra pass threshold on the largest ball.
        #[serde(default)]
        max_ball_count: Option<u64>,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_runs() -> usize {
    10_000
}

fn default_reps() -> usize {
    200
}

fn default_slack() -> f64 {
    0.5
}

fn default_pairs() -> usize {
    50
}

fn default_probes() -> usize {
    500
}

/// Arrays are weight vectors, objects are model JSON.
fn hypothesis(v: &Value) -> Result<Hypothesis, CliError> {
    match v {
        Value::Array(_) => serde_json::from_value::<Vec<f64>>(v.clone())
            .map(Hypothesis::Weights)
            .map_err(|e| CliError::Config(e.to_string())),
        _ => {
            let j: ModelJson = serde_json::from_value(v.clone()).map_err(|e| CliError::Config(e.to_string()))?;
            Mixture::try_from(&j).map(Hypothesis::Model).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn lists(raw: &[Vec<Value>]) -> Result<Vec<Vec<Hypothesis>>, CliError> {
    raw.iter().map(|l| l.iter().map(hypothesis).collect()).collect()
}

fn cover_dim(cover: &Cover) -> usize {
    let gs = cover.gaussians().or_else(|| cover.component_cover().and_then(Cover::gaussians));
    gs.and_then(|g| g.first()).map_or(1, |g| g.dim())
}

type Sampler = Box<dyn Fn(&mut StreamRng) -> Hypothesis>;

/// Random hypotheses from the domain the cover is built for.
fn sampler(recipe: &CoverRecipe) -> Result<Sampler, CliError> {
    match recipe {
        CoverRecipe::Simplex { k, .. } => {
            let k = *k;
            Ok(Box::new(move |r| Hypothesis::Weights(sample_simplex(k, r))))
        }
        CoverRecipe::BoundedGaussian { bounds, .. } => {
            let bx = bounds.clone();
            Ok(Box::new(move |r| Hypothesis::Model(Mixture::single(sample_box_gaussian(&bx, r)))))
        }
        CoverRecipe::DenseMixture { component, k, alpha } => match component.as_ref() {
            CoverRecipe::BoundedGaussian { bounds, .. } => {
                let (bx, k, alpha) = (bounds.clone(), *k, *alpha);
                Ok(Box::new(move |r| {
                    let s = r.gen_range(1..=k);
                    Hypothesis::Model(sample_dense_mixture(&bx, s, alpha / k as f64, r))
                }))
            }
            _ => Err(CliError::Config("probes need a dense cover over a bounded Gaussian cover".into())),
        },
        _ => Err(CliError::Config("no probe sampler for this cover kind".into())),
    }
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    match ctx.config::<AuditConfig>()? {
        AuditConfig::Dp { cover, lists: a, neighbor, radius, epsilon, delta, runs, bootstrap_reps, slack, seed } => {
            let cover = ctx.load_cover(&cover)?;
            let (a, b) = (lists(&a)?, lists(&neighbor)?);
            let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            if a.len() != b.len() || differing > 1 {
                return Err(CliError::Config(format!(
                    "collections must have equal length and differ in at most one list, got {differing}"
                )));
            }
            let seed = ctx.seed(seed);
            let oracle = TvOracle::auto(cover_dim(&cover), seed);
            let radius = radius.unwrap_or(2.0 * cover.alpha);
            let t1 = score_table(&a, &cover, radius, cover.metric, &oracle)?;
            let t2 = score_table(&b, &cover, radius, cover.metric, &oracle)?;
            let privacy = PrivacyParams::new(epsilon, delta)?;
            let report = dp_audit(&t1, &t2, &privacy, runs, bootstrap_reps, slack, seed)?;
            ctx.write_json("dp_audit.json", &report)?;
            println!(
                "ε̂ = {:.4}, upper {:.4} at {}; exact {:.4}; threshold {}",
                report.epsilon_hat,
                report.epsilon_hat_upper,
                report.bootstrap_conf,
                report.epsilon_exact,
                epsilon + slack
            );
            if !report.passed {
                return Err(CliError::AuditFailed(format!(
                    "ε̂ upper {} exceeds {}",
                    report.epsilon_hat_upper,
                    epsilon + slack
                )));
            }
        }
        AuditConfig::Sensitivity { cover, t, q, pairs, radius, seed } => {
            let cover = ctx.load_cover(&cover)?;
            if t == 0 || q == 0 {
                return Err(CliError::Config("t and q must be positive".into()));
            }
            let sample = sampler(&cover.recipe)?;
            let seed = ctx.seed(seed);
            let mut r = rng::root(seed);
            let pairs = neighbor_pairs(t, q, pairs, |r: &mut StreamRng| sample(r), &mut r);
            let oracle = TvOracle::auto(cover_dim(&cover), seed);
            let report = sensitivity_audit(&pairs, &cover, cover.metric, radius.unwrap_or(2.0 * cover.alpha), &oracle)?;
            ctx.write_json("sensitivity_audit.json", &report)?;
            println!("{} pairs, max score difference {}", report.pairs, report.max_difference);
            if !report.passed {
                return Err(CliError::AuditFailed(format!("score difference {} exceeds 1", report.max_difference)));
            }
        }
        AuditConfig::Cover { cover, gamma, probes, max_ball_count, seed } => {
            let cover = ctx.load_cover(&cover)?;
            let sample = sampler(&cover.recipe)?;
            let seed = ctx.seed(seed);
            let mut r = rng::root(seed);
            let probes: Vec<Hypothesis> = (0..probes).map(|_| sample(&mut r)).collect();
            let oracle = TvOracle::auto(cover_dim(&cover), seed);
            let report = audit_local_smallness(&cover, gamma, &probes, &oracle)?;
            ctx.write_json("cover_audit.json", &report)?;
            println!(
                "{} probes, max ball count {}, claimed t {:?}",
                report.probes, report.max_ball_count, report.claimed_t
            );
            if !report.passed() {
                return Err(CliError::AuditFailed(format!("{} probes exceed the claimed t", report.violations.len())));
            }
            if let Some(m) = max_ball_count.filter(|&m| report.max_ball_count > m) {
                return Err(CliError::AuditFailed(format!("max ball count {} exceeds {m}", report.max_ball_count)));
            }
        }
    }
    Ok(())
}
