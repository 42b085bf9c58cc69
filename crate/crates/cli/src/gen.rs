use std::path::PathBuf;

use dpmix_core::covers::{Cover, CoverRecipe, DEFAULT_CAP};
use dpmix_core::model::ModelJson;
use dpmix_core::Mixture;
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::CliError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenConfig {
    /// Inline model, or `model_path`.
    #[serde(default)]
    model: Option<ModelJson>,
    #[serde(default)]
    model_path: Option<PathBuf>,
    n: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_model_file")]
    model_file: String,
    #[serde(default = "default_data_file")]
    data_file: String,
    /// Optional cover recipe, written to `cover.json` before any data is sampled.
    #[serde(default)]
    cover: Option<CoverRecipe>,
}

fn default_model_file() -> String {
    "model.json".into()
}

fn default_data_file() -> String {
    "data.txt".into()
}

#[derive(Serialize)]
struct GenRecord {
    seed: u64,
    n: usize,
    dim: usize,
    model_file: String,
    data_file: String,
    created_unix: u64,
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let cfg: GenConfig = ctx.config()?;
    let model = match (&cfg.model, &cfg.model_path) {
        (Some(m), None) => Mixture::try_from(m).map_err(|e| CliError::Config(e.to_string()))?,
        (None, Some(p)) => ctx.load_model(p).map_err(|e| match e {
            CliError::Core(c) => CliError::Config(c.to_string()),
            other => other,
        })?,
        _ => return Err(CliError::Config("give exactly one of model and model_path".into())),
    };
    if let Some(recipe) = &cfg.cover {
        let cover = Cover::from_recipe(recipe, DEFAULT_CAP)?;
        ctx.write_json("cover.json", &cover.to_file())?;
    }
    let seed = ctx.seed(cfg.seed);
    let data = model.sample_seeded(cfg.n, seed);
    ctx.write(&cfg.model_file, &(model.to_json_pretty() + "\n"))?;
    ctx.write(&cfg.data_file, &data.to_text())?;
    let record = GenRecord {
        seed,
        n: cfg.n,
        dim: model.dim(),
        model_file: cfg.model_file,
        data_file: cfg.data_file,
        created_unix: ctx.now_unix(),
    };
    ctx.write_json("gen.json", &record)?;
    println!("wrote {} points of dimension {} (seed {seed})", record.n, record.dim);
    Ok(())
}
