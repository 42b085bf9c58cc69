use std::path::PathBuf;
use std::time::Instant;

use dpmix_core::metrics::{tv_gaussian_1d, tv_mc_estimate, tv_quadrature_1d, TvEstimate, DEFAULT_CONF};
use dpmix_core::{rng, Error};
use serde::Deserialize;

use crate::context::Context;
use crate::error::CliError;

pub const CSV_HEADER: &str = "model_a,model_b,method,tv,half_width,conf,n_samples,runtime_ms";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalConfig {
    model_a: PathBuf,
    model_b: PathBuf,
    #[serde(default = "default_mc_n")]
    mc_n: u64,
    #[serde(default = "default_conf")]
    conf: f64,
    #[serde(default = "default_quad_tol")]
    quad_tol: f64,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_out")]
    out_file: String,
}

fn default_mc_n() -> u64 {
    200_000
}

fn default_conf() -> f64 {
    DEFAULT_CONF
}

fn default_quad_tol() -> f64 {
    1e-10
}

fn default_out() -> String {
    "eval.csv".into()
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let cfg: EvalConfig = ctx.config()?;
    let a = ctx.load_model(&cfg.model_a)?;
    let b = ctx.load_model(&cfg.model_b)?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() }.into());
    }
    let start = Instant::now();
    let (method, est) = if a.dim() == 1 {
        if a.len() == 1 && b.len() == 1 {
            ("closed_form", TvEstimate::exact(tv_gaussian_1d(&a.components()[0], &b.components()[0])?))
        } else {
            let v = tv_quadrature_1d(&a, &b, cfg.quad_tol)?;
            ("quadrature", TvEstimate { half_width: cfg.quad_tol, ..TvEstimate::exact(v) })
        }
    } else {
        let seed = ctx.seed(cfg.seed);
        ("monte_carlo", tv_mc_estimate(&a, &b, cfg.mc_n, cfg.conf, &mut rng::root(seed))?)
    };
    let ms = ctx.elapsed_ms(start);
    let row = format!(
        "{},{},{method},{:.8},{:.8},{},{},{ms:.3}",
        csv_field(&cfg.model_a.display().to_string()),
        csv_field(&cfg.model_b.display().to_string()),
        est.value,
        est.half_width,
        est.conf,
        est.n_samples
    );
    ctx.write(&cfg.out_file, &format!("{CSV_HEADER}\n{row}\n"))?;
    println!("{row}");
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
