use std::path::{Path, PathBuf};
use std::time::Instant;

use dpmix_core::covers::{Cover, CoverFile, CoverRecipe, DEFAULT_CAP};
use dpmix_core::{Dataset, Mixture};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Where a cover comes from: a cover file or an inline recipe.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverSource {
    Path(PathBuf),
    Recipe(CoverRecipe),
}

pub struct Context {
    config_path: PathBuf,
    base: PathBuf,
    pub seed_override: Option<u64>,
    pub out: PathBuf,
    pub frozen_clock: bool,
}

impl Context {
    pub fn new(
        config_path: PathBuf,
        seed_override: Option<u64>,
        out: PathBuf,
        frozen_clock: bool,
    ) -> Result<Self, CliError> {
        let base = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
        std::fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.clone(), source })?;
        Ok(Context { config_path, base, seed_override, out, frozen_clock })
    }

    pub fn config<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        let text = self.read(&self.config_path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", self.config_path.display())))
    }

    pub fn seed(&self, from_config: Option<u64>) -> u64 {
        self.seed_override.or(from_config).unwrap_or(0)
    }

    /// Paths in a config are relative to the config file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn read(&self, path: &Path) -> Result<String, CliError> {
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn load_model(&self, p: &Path) -> Result<Mixture, CliError> {
        let path = self.resolve(p);
        let text = self.read(&path)?;
        Ok(Mixture::from_json(&text)?)
    }

    pub fn load_data(&self, p: &Path) -> Result<Dataset, CliError> {
        let path = self.resolve(p);
        Ok(Dataset::from_text(&self.read(&path)?)?)
    }

    pub fn load_cover(&self, src: &CoverSource) -> Result<Cover, CliError> {
        match src {
            CoverSource::Recipe(r) => Ok(Cover::from_recipe(r, DEFAULT_CAP)?),
            CoverSource::Path(p) => {
                let path = self.resolve(p);
                let file: CoverFile = serde_json::from_str(&self.read(&path)?)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                Ok(Cover::from_file(&file, DEFAULT_CAP)?)
            }
        }
    }

    /// Elapsed milliseconds, or 0 under the frozen clock.
    pub fn elapsed_ms(&self, start: Instant) -> f64 {
        if self.frozen_clock {
            0.0
        } else {
            start.elapsed().as_secs_f64() * 1e3
        }
    }

    /// Seconds since the Unix epoch, or 0 under the frozen clock.
    pub fn now_unix(&self) -> u64 {
        if self.frozen_clock {
            return 0;
        }
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
    }
}
