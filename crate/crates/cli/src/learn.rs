use std::path::PathBuf;
use std::time::Instant;

use dpmix_core::listdecode::DecodeParams;
use dpmix_core::metrics::TvOracle;
use dpmix_core::model::ModelJson;
use dpmix_core::pipeline::{derive_parameters, learn_gmm_dp, Constants, Mode, Overrides, PipelineParams, RunManifest};
use dpmix_core::private_select::PrivacyParams;
use dpmix_core::{rng, Mixture};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::{Context, CoverSource};
use crate::error::CliError;

pub const TRIALS_HEADER: &str =
    "trial,data_seed,run_seed,output,tv,tv_half_width,selected_score,max_score,chunks,mean_survivors,runtime_ms";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Simulate {
    truth: ModelJson,
    n: usize,
    trials: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LearnConfig {
    /// Dataset file, or `simulate` for seeded trials against a known truth.
    #[serde(default)]
    data: Option<PathBuf>,
    #[serde(default)]
    simulate: Option<Simulate>,
    cover: CoverSource,
    k: usize,
    alpha: f64,
    #[serde(default = "default_beta")]
    beta: f64,
    epsilon: f64,
    delta: f64,
    mode: Mode,
    #[serde(default)]
    overrides: Option<Overrides>,
    /// Defaults: subsets of d+2 points, contamination 0.5, at most 400 lifting trials.
    #[serde(default)]
    decode: Option<DecodeParams>,
    #[serde(default)]
    constants: Option<Constants>,
    #[serde(default)]
    seed: Option<u64>,
}

fn default_beta() -> f64 {
    0.1
}

#[derive(Serialize)]
struct TheoryReport {
    executable: bool,
    ln_rounds: f64,
    ln_m3: f64,
    ln_total_samples: f64,
    rounds: f64,
    m3: f64,
    params: PipelineParams,
}

#[derive(Serialize)]
struct TrialSummary {
    seed: u64,
    trials: usize,
    non_bottom: usize,
    tv_within_alpha: usize,
    alpha: f64,
    created_unix: u64,
}

fn default_decode(d: usize, alpha: f64, beta: f64) -> DecodeParams {
    let mut p = DecodeParams::new(d, d + 2, alpha, beta);
    p.gamma = 0.5;
    p.max_trials = Some(400);
    p
}

pub fn run(ctx: &Context) -> Result<(), CliError> {
    let cfg: LearnConfig = ctx.config()?;
    if cfg.data.is_some() == cfg.simulate.is_some() {
        return Err(CliError::Config("give exactly one of data and simulate".into()));
    }
    let cover = ctx.load_cover(&cfg.cover)?;
    let d = cover
        .component_cover()
        .and_then(|c| c.gaussians())
        .and_then(|g| g.first())
        .map(|g| g.dim())
        .ok_or_else(|| CliError::Config("learn needs a dense mixture cover over Gaussians".into()))?;
    let cover_t = cover.claimed_t.ok_or_else(|| CliError::Config("cover has no local-smallness claim".into()))?;
    let privacy = PrivacyParams::new(cfg.epsilon, cfg.delta)?;
    let decode = cfg.decode.clone().unwrap_or_else(|| default_decode(d, cfg.alpha, cfg.beta));
    let mut params = derive_parameters(
        cfg.alpha,
        cfg.beta,
        privacy,
        cfg.k,
        d,
        cover_t,
        &decode,
        cfg.constants.clone().unwrap_or_default(),
    )?;
    match (cfg.mode, cfg.overrides.clone()) {
        (Mode::Practical, Some(o)) => params = params.practical(o)?,
        (Mode::Practical, None) => return Err(CliError::Config("practical mode needs overrides".into())),
        (Mode::Theory, _) => {
            let report = TheoryReport {
                executable: params.executable(),
                ln_rounds: params.rounds.ln(),
                ln_m3: params.m3.ln(),
                ln_total_samples: params.ln_total_samples(),
                rounds: params.rounds,
                m3: params.m3,
                params: params.clone(),
            };
            ctx.write_json("theory_report.json", &report)?;
            println!(
                "theory mode: ln T = {:.3}, ln m3 = {:.3}, ln(T·m3) = {:.3}, executable = {}",
                report.ln_rounds, report.ln_m3, report.ln_total_samples, report.executable
            );
            if !report.executable {
                return Ok(());
            }
        }
    }
    let seed = ctx.seed(cfg.seed);
    match (&cfg.data, &cfg.simulate) {
        (Some(path), None) => {
            let data = ctx.load_data(path)?;
            let out = learn_gmm_dp(&data, &params, &cover, &mut rng::root(seed))?;
            ctx.write_json("learned.json", &out.manifest.output)?;
            ctx.write_json("manifest.json", &frozen(ctx, &out.manifest))?;
            match out.model() {
                Some(m) => println!("selected {}", m.to_json()),
                None => println!("BOTTOM"),
            }
            Ok(())
        }
        (None, Some(sim)) => simulate(ctx, sim, &params, &cover, seed),
        _ => unreachable!("checked above"),
    }
}

/// Logical provenance ticks depend on thread scheduling; the frozen clock zeroes them.
fn frozen(ctx: &Context, m: &RunManifest) -> RunManifest {
    let mut m = m.clone();
    if ctx.frozen_clock {
        m.cover_built_at = 0;
        m.data_accessed_at = 0;
    }
    m
}

struct TrialRow {
    line: String,
    non_bottom: bool,
    good: bool,
}

fn simulate(
    ctx: &Context,
    sim: &Simulate,
    params: &PipelineParams,
    cover: &dpmix_core::covers::Cover,
    seed: u64,
) -> Result<(), CliError> {
    let truth = Mixture::try_from(&sim.truth).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = ctx.out.join("manifests");
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let rows: Vec<TrialRow> = (0..sim.trials)
        .into_par_iter()
        .map(|i| -> Result<TrialRow, CliError> {
            let (data_seed, run_seed) = (rng::child_seed(seed, 2 * i as u64), rng::child_seed(seed, 2 * i as u64 + 1));
            let start = Instant::now();
            let data = truth.sample_seeded(sim.n, data_seed);
            let out = learn_gmm_dp(&data, params, cover, &mut rng::root(run_seed))?;
            let ms = ctx.elapsed_ms(start);
            let (kind, tv) = match out.model() {
                Some(m) => ("model", Some(TvOracle::auto(truth.dim(), data_seed).mixtures(m, &truth)?)),
                None => ("bottom", None),
            };
            ctx.write_json(&format!("manifests/trial_{i:04}.json"), &frozen(ctx, &out.manifest))?;
            let chunks = &out.manifest.chunks;
            let survivors = chunks.iter().map(|c| c.survivors as f64).sum::<f64>() / chunks.len().max(1) as f64;
            let opt = |x: Option<String>| x.unwrap_or_default();
            Ok(TrialRow {
                line: format!(
                    "{i},{data_seed},{run_seed},{kind},{},{},{},{},{},{survivors:.3},{ms:.3}",
                    opt(tv.map(|t| format!("{:.8}", t.value))),
                    opt(tv.map(|t| format!("{:.3e}", t.half_width))),
                    opt(out.manifest.selected_score.map(|s| s.to_string())),
                    out.manifest.table.max_score,
                    chunks.len()
                ),
                non_bottom: tv.is_some(),
                good: tv.is_some_and(|t| t.value <= params.alpha),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from(TRIALS_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.line);
        csv.push('\n');
    }
    ctx.write("trials.csv", &csv)?;
    let summary = TrialSummary {
        seed,
        trials: rows.len(),
        non_bottom: rows.iter().filter(|r| r.non_bottom).count(),
        tv_within_alpha: rows.iter().filter(|r| r.good).count(),
        alpha: params.alpha,
        created_unix: ctx.now_unix(),
    };
    ctx.write_json("summary.json", &summary)?;
    println!(
        "{} trials: {} non-bottom, {} with TV ≤ {}",
        summary.trials, summary.non_bottom, summary.tv_within_alpha, summary.alpha
    );
    Ok(())
}
