use serde::{Deserialize, Serialize};

use super::{Gaussian, Mixture};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ComponentJson {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Wire form of a mixture; field names are part of the file format.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelJson {
    pub weights: Vec<f64>,
    pub components: Vec<ComponentJson>,
}

impl From<&Gaussian> for ComponentJson {
    fn from(g: &Gaussian) -> Self {
        let d = g.dim();
        ComponentJson {
            mean: g.mean().iter().copied().collect(),
            cov: (0..d).map(|i| (0..d).map(|j| g.cov()[(i, j)]).collect()).collect(),
        }
    }
}

impl From<&Mixture> for ModelJson {
    fn from(m: &Mixture) -> Self {
        ModelJson {
            weights: m.weights().to_vec(),
            components: m.components().iter().map(ComponentJson::from).collect(),
        }
    }
}

impl TryFrom<&ModelJson> for Mixture {
    type Error = Error;

    fn try_from(j: &ModelJson) -> Result<Mixture> {
        let comps = j.components.iter().map(|c| Gaussian::from_rows(&c.mean, &c.cov)).collect::<Result<Vec<_>>>()?;
        Mixture::new(j.weights.clone(), comps)
    }
}

impl Mixture {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelJson::from(self)).expect("model serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&ModelJson::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Mixture> {
        let j: ModelJson = serde_json::from_str(text)?;
        Mixture::try_from(&j)
    }
}
