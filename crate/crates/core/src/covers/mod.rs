//! Data-independent covers: simplex grids, Gaussian covers and implicit products for dense mixtures.

mod audit;
mod dense;
mod gaussian;
mod probe;
mod simplex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use audit::{audit_local_smallness, CoverAudit};
pub use dense::{IMPLICIT_CAP, QUERY_CAP};
pub use gaussian::{ParamBox, MAX_BALL_GAMMA};
pub use probe::{sample_box_gaussian, sample_dense_mixture, sample_simplex};

use crate::error::{Error, Result};
use crate::metrics::{kappa_mix, linf, TvOracle};
use crate::model::{ComponentJson, Gaussian, Mixture, ModelJson};
use dense::DenseProduct;
use gaussian::GaussianSet;

/// Bumped whenever a construction changes its output.
pub const RECIPE_VERSION: &str = "dpmix-cover-1";
/// Default cap on materialized elements.
pub const DEFAULT_CAP: u64 = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricTag {
    Tv,
    KappaMix,
    Linf,
}

impl MetricTag {
    pub fn name(self) -> &'static str {
        match self {
            MetricTag::Tv => "tv",
            MetricTag::KappaMix => "kappa_mix",
            MetricTag::Linf => "linf",
        }
    }
}

/// A cover element or a query point.
#[derive(Clone, Debug, PartialEq)]
pub enum Hypothesis {
    Weights(Vec<f64>),
    Model(Mixture),
}

impl Hypothesis {
    pub fn model(&self) -> Option<&Mixture> {
        match self {
            Hypothesis::Model(m) => Some(m),
            Hypothesis::Weights(_) => None,
        }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        match self {
            Hypothesis::Weights(w) => serde_json::json!(w),
            Hypothesis::Model(m) => serde_json::to_value(ModelJson::from(m)).expect("model serializes"),
        }
    }
}

impl From<Mixture> for Hypothesis {
    fn from(m: Mixture) -> Self {
        Hypothesis::Model(m)
    }
}

impl From<Gaussian> for Hypothesis {
    fn from(g: Gaussian) -> Self {
        Hypothesis::Model(Mixture::single(g))
    }
}

/// Deterministic construction descriptor; replaying it rebuilds the cover bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverRecipe {
    Simplex {
        k: usize,
        alpha: f64,
    },
    GaussianBall {
        center: ComponentJson,
        alpha: f64,
        gamma: f64,
    },
    BoundedGaussian {
        #[serde(rename = "box")]
        bounds: ParamBox,
        alpha: f64,
        /// Radius at which local smallness is certified; defaults to 2·alpha.
        #[serde(default)]
        claim_gamma: Option<f64>,
    },
    Explicit {
        elements: Vec<ComponentJson>,
        alpha: f64,
    },
    DenseMixture {
        component: Box<CoverRecipe>,
        k: usize,
        alpha: f64,
    },
}

#[derive(Clone, Debug)]
enum Elements {
    Weights(Vec<Vec<f64>>),
    Gaussians(GaussianSet),
    Dense(DenseProduct),
}

/// Finite hypothesis set with covering radius, metric and optional local-smallness claim.
#[derive(Clone, Debug)]
pub struct Cover {
    pub alpha: f64,
    pub metric: MetricTag,
    pub recipe: CoverRecipe,
    pub claimed_t: Option<u64>,
    pub claimed_gamma: Option<f64>,
    built_at: u64,
    elements: Elements,
}

/// On-disk form of a cover.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverFile {
    pub version: String,
    pub alpha: f64,
    pub metric: MetricTag,
    pub recipe: CoverRecipe,
    pub claimed_t: Option<u64>,
    pub claimed_gamma: Option<f64>,
    pub size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<serde_json::Value>>,
}

/// ℓ∞ α-cover of the k-simplex.
pub fn simplex_cover(k: usize, alpha: f64) -> Result<Cover> {
    Cover::from_recipe(&CoverRecipe::Simplex { k, alpha }, DEFAULT_CAP)
}

/// TV α-cover of the TV ball of radius `gamma` around `center`.
pub fn gaussian_ball_cover(center: &Gaussian, alpha: f64, gamma: f64) -> Result<Cover> {
    Cover::from_recipe(&CoverRecipe::GaussianBall { center: center.into(), alpha, gamma }, DEFAULT_CAP)
}

/// TV α-cover of every Gaussian in `bounds`, with local smallness certified at 2·alpha.
pub fn bounded_gaussian_cover(bounds: &ParamBox, alpha: f64, cap: u64) -> Result<Cover> {
    Cover::from_recipe(&CoverRecipe::BoundedGaussian { bounds: bounds.clone(), alpha, claim_gamma: None }, cap)
}

/// κ_mix α-cover of mixtures with at most k components drawn from `component`.
pub fn dense_mixture_cover(component: &Cover, k: usize, alpha: f64) -> Result<Cover> {
    let recipe = CoverRecipe::DenseMixture { component: Box::new(component.recipe.clone()), k, alpha };
    Cover::from_parts(recipe, Some(component.clone()))
}

impl Cover {
    /// Replays a recipe. `cap` limits materialized elements.
    pub fn from_recipe(recipe: &CoverRecipe, cap: u64) -> Result<Cover> {
        match recipe {
            CoverRecipe::DenseMixture { component, .. } => {
                let inner = Cover::from_recipe(component, cap)?;
                Cover::from_parts(recipe.clone(), Some(inner))
            }
            _ => Cover::from_parts_capped(recipe.clone(), cap),
        }
    }

    fn from_parts(recipe: CoverRecipe, component: Option<Cover>) -> Result<Cover> {
        match (&recipe, component) {
            (CoverRecipe::DenseMixture { k, alpha, .. }, Some(comp)) => {
                if comp.metric != MetricTag::Tv || !matches!(comp.elements, Elements::Gaussians(_)) {
                    return Err(Error::MetricMismatch { cover: comp.metric.name(), supplied: "tv" });
                }
                if *k == 0 || !(*alpha > 0.0 && *alpha <= 1.0) {
                    return Err(crate::error::invalid(format!(
                        "dense cover needs k >= 1 and alpha in (0,1], got {k}, {alpha}"
                    )));
                }
                let claimed_gamma = comp.claimed_gamma;
                let claimed_t = match (comp.claimed_t, claimed_gamma) {
                    (Some(t), Some(g)) => Some(dense_claim(t, *k, *alpha, g)),
                    _ => None,
                };
                let (k, alpha) = (*k, *alpha);
                let product = DenseProduct::new(comp, k, alpha)?;
                Ok(Cover {
                    alpha,
                    metric: MetricTag::KappaMix,
                    recipe,
                    claimed_t,
                    claimed_gamma,
                    built_at: crate::provenance::tick(),
                    elements: Elements::Dense(product),
                })
            }
            _ => Cover::from_parts_capped(recipe, DEFAULT_CAP),
        }
    }

    fn from_parts_capped(recipe: CoverRecipe, cap: u64) -> Result<Cover> {
        let oracle = TvOracle::exact();
        let (alpha, metric, elements, claimed_t, claimed_gamma) = match &recipe {
            CoverRecipe::Simplex { k, alpha } => {
                let pts = simplex::simplex_points(*k, *alpha)?;
                let g = 2.0 * alpha;
                (
                    *alpha,
                    MetricTag::Linf,
                    Elements::Weights(pts),
                    Some(simplex::simplex_ball_bound(*k, *alpha, g)),
                    Some(g),
                )
            }
            CoverRecipe::GaussianBall { center, alpha, gamma } => {
                let c = Gaussian::from_rows(&center.mean, &center.cov)?;
                let set = GaussianSet::new(gaussian::ball_cover_elements(&c, *alpha, *gamma, cap)?);
                (*alpha, MetricTag::Tv, Elements::Gaussians(set), None, None)
            }
            CoverRecipe::BoundedGaussian { bounds, alpha, claim_gamma } => {
                let set = GaussianSet::new(gaussian::bounded_cover_elements(bounds, *alpha, cap)?);
                let g = claim_gamma.unwrap_or(2.0 * alpha);
                let t = if bounds.dim == 1 {
                    set.densest_ball(2.0 * g, &oracle)
                } else {
                    set.densest_ball_superset(2.0 * g)
                };
                (*alpha, MetricTag::Tv, Elements::Gaussians(set), Some(t), Some(g))
            }
            CoverRecipe::Explicit { elements, alpha } => {
                if elements.len() as u64 > cap {
                    return Err(Error::InfeasibleBudget {
                        what: "explicit cover",
                        requested: elements.len() as f64,
                        cap,
                    });
                }
                let items =
                    elements.iter().map(|c| Gaussian::from_rows(&c.mean, &c.cov)).collect::<Result<Vec<_>>>()?;
                if let Some(g) = items.iter().find(|g| g.dim() != items[0].dim()) {
                    return Err(Error::DimensionMismatch { expected: items[0].dim(), found: g.dim() });
                }
                (*alpha, MetricTag::Tv, Elements::Gaussians(GaussianSet::new(items)), None, None)
            }
            CoverRecipe::DenseMixture { .. } => return Cover::from_recipe(&recipe, cap),
        };
        Ok(Cover { alpha, metric, recipe, claimed_t, claimed_gamma, built_at: crate::provenance::tick(), elements })
    }

    /// Logical time of construction; see [`crate::provenance`].
    pub fn built_at(&self) -> u64 {
        self.built_at
    }

    pub fn len(&self) -> u64 {
        match &self.elements {
            Elements::Weights(w) => w.len() as u64,
            Elements::Gaussians(g) => g.items.len() as u64,
            Elements::Dense(d) => d.total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether every element is held in memory.
    pub fn is_materialized(&self) -> bool {
        !matches!(self.elements, Elements::Dense(_))
    }

    pub fn element(&self, idx: u64) -> Hypothesis {
        match &self.elements {
            Elements::Weights(w) => Hypothesis::Weights(w[idx as usize].clone()),
            Elements::Gaussians(g) => Hypothesis::Model(Mixture::single(g.items[idx as usize].clone())),
            Elements::Dense(d) => Hypothesis::Model(d.element(idx)),
        }
    }

    /// Gaussian elements of a TV cover.
    pub fn gaussians(&self) -> Option<&[Gaussian]> {
        match &self.elements {
            Elements::Gaussians(g) => Some(&g.items),
            _ => None,
        }
    }

    pub fn weight_points(&self) -> Option<&[Vec<f64>]> {
        match &self.elements {
            Elements::Weights(w) => Some(w),
            _ => None,
        }
    }

    /// Component cover of a dense-mixture cover.
    pub fn component_cover(&self) -> Option<&Cover> {
        match &self.elements {
            Elements::Dense(d) => Some(&d.component),
            _ => None,
        }
    }

    /// Maximum number of components of any element.
    pub fn max_components(&self) -> usize {
        match &self.elements {
            Elements::Dense(d) => d.k,
            _ => 1,
        }
    }

    /// Distance under this cover's metric.
    pub fn distance(&self, a: &Hypothesis, b: &Hypothesis, oracle: &TvOracle) -> Result<f64> {
        match (self.metric, a, b) {
            (MetricTag::Linf, Hypothesis::Weights(x), Hypothesis::Weights(y)) => Ok(linf(x, y)),
            (MetricTag::Tv, Hypothesis::Model(x), Hypothesis::Model(y)) => Ok(oracle.mixtures(x, y)?.value),
            (MetricTag::KappaMix, Hypothesis::Model(x), Hypothesis::Model(y)) => {
                Ok(kappa_mix(x, y, |f, g| oracle.gaussians(f, g)).value)
            }
            (m, _, _) => Err(Error::MetricMismatch { cover: m.name(), supplied: "mismatched hypothesis kind" }),
        }
    }

    /// Indices of all elements within `radius` of `center`, ascending.
    pub fn ball(&self, center: &Hypothesis, radius: f64, oracle: &TvOracle) -> Result<Vec<u64>> {
        match (&self.elements, center) {
            (Elements::Weights(pts), Hypothesis::Weights(w)) => {
                Ok(pts.iter().enumerate().filter(|(_, p)| linf(p, w) <= radius).map(|(i, _)| i as u64).collect())
            }
            (Elements::Gaussians(set), Hypothesis::Model(m)) if m.len() == 1 => {
                let g = &m.components()[0];
                if set.items.first().is_some_and(|e| e.dim() != g.dim()) {
                    return Err(Error::DimensionMismatch { expected: set.items[0].dim(), found: g.dim() });
                }
                Ok(set.ball(g, radius, oracle))
            }
            (Elements::Gaussians(set), Hypothesis::Model(m)) => {
                let mut out = Vec::new();
                for (i, e) in set.items.iter().enumerate() {
                    if oracle.mixtures(m, &Mixture::single(e.clone()))?.value <= radius {
                        out.push(i as u64);
                    }
                }
                Ok(out)
            }
            (Elements::Dense(d), Hypothesis::Model(m)) => d.ball(m, radius, oracle),
            _ => Err(Error::MetricMismatch { cover: self.metric.name(), supplied: "mismatched hypothesis kind" }),
        }
    }

    /// Nearest element to `h`: searched in the α-ball, exhaustively when that is empty.
    pub fn nearest(&self, h: &Hypothesis, oracle: &TvOracle) -> Result<(u64, f64)> {
        let mut best = (0, f64::INFINITY);
        for i in self.ball(h, self.alpha, oracle)? {
            let d = self.distance(h, &self.element(i), oracle)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        if best.1.is_finite() {
            return Ok(best);
        }
        for i in 0..self.len() {
            let d = self.distance(h, &self.element(i), oracle)?;
            if d < best.1 {
                best = (i, d);
            }
        }
        Ok(best)
    }

    /// Serializable form; elements are listed only for materialized covers.
    pub fn to_file(&self) -> CoverFile {
        let elements =
            self.is_materialized().then(|| (0..self.len()).map(|i| self.element(i).to_json_value()).collect());
        CoverFile {
            version: RECIPE_VERSION.into(),
            alpha: self.alpha,
            metric: self.metric,
            recipe: self.recipe.clone(),
            claimed_t: self.claimed_t,
            claimed_gamma: self.claimed_gamma,
            size: self.len(),
            elements,
        }
    }

    /// Rebuilds from a file by replaying its recipe.
    pub fn from_file(file: &CoverFile, cap: u64) -> Result<Cover> {
        if file.version != RECIPE_VERSION {
            return Err(crate::error::invalid(format!("cover version {} is not {RECIPE_VERSION}", file.version)));
        }
        Cover::from_recipe(&file.recipe, cap)
    }

    /// SHA-256 of the version tag and canonical recipe JSON.
    pub fn recipe_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(RECIPE_VERSION.as_bytes());
        h.update(serde_json::to_vec(&self.recipe).expect("recipe serializes"));
        hex::encode(h.finalize())
    }
}

/// s!·t^s·(⌈2γ/α⌉+1)^s maximized over s ≤ k: permutations × component balls × weight neighbors.
fn dense_claim(t: u64, k: usize, alpha: f64, gamma: f64) -> u64 {
    let mut best: f64 = 0.0;
    for s in 1..=k {
        let fact: f64 = (1..=s).map(|i| i as f64).product();
        let w = simplex::simplex_ball_bound(s, alpha / s as f64, gamma / s as f64) as f64;
        best = best.max(fact * (t as f64).powi(s as i32) * w);
    }
    best.min(u64::MAX as f64) as u64
}

#[cfg(test)]
mod tests;
