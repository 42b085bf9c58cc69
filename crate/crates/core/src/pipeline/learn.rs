use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{Decoder, PipelineParams};
use crate::covers::{Cover, Hypothesis, MetricTag};
use crate::error::{invalid, Error, Result};
use crate::listdecode::{dense_mixture_list_decode, refined_dense_decode};
use crate::mde::{mde_select, DEFAULT_MC_N};
use crate::metrics::TvOracle;
use crate::model::{Dataset, Mixture, ModelJson};
use crate::private_select::{score_table, select_from_table, PcmsOutput};
use crate::{provenance, rng};

/// Faithful lists beyond this size are not handed to MDE.
pub const FAITHFUL_LIST_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvRecord {
    pub value: f64,
    pub half_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkReport {
    pub index: usize,
    /// Half-open range of data rows.
    pub start: usize,
    pub end: usize,
    pub list_size: usize,
    pub raw_size: u64,
    pub mde_index: Option<usize>,
    /// TV estimate of every list item against the MDE pick, in list order.
    pub tv: Vec<TvRecord>,
    pub survivors: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub t: usize,
    pub radius: f64,
    pub entries: usize,
    pub max_score: u32,
    pub bottom_weight: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub params: PipelineParams,
    pub base_seed: u64,
    pub cover_recipe_hash: String,
    pub cover_len: u64,
    pub cover_built_at: u64,
    pub data_accessed_at: u64,
    pub threshold: f64,
    pub chunks: Vec<ChunkReport>,
    pub table: TableSummary,
    pub selected_index: Option<u64>,
    pub selected_score: Option<u32>,
    pub output: Option<ModelJson>,
}

#[derive(Clone, Debug)]
pub struct LearnOutput {
    pub output: PcmsOutput,
    pub manifest: RunManifest,
}

impl LearnOutput {
    pub fn model(&self) -> Option<&Mixture> {
        self.output.hypothesis().and_then(Hypothesis::model)
    }
}

/// Filtered lists of every chunk: decode on the first m₂ points, MDE on the rest,
/// keep items whose TV to the MDE pick has lower confidence edge below 11α′/2.
/// Chunk i uses stream i of `base_seed` only.
pub fn chunk_lists(
    data: &Dataset,
    params: &PipelineParams,
    base_seed: u64,
) -> Result<(Vec<Vec<Mixture>>, Vec<ChunkReport>)> {
    let c = params.counts()?;
    let need = c.rounds as u64 * c.m3 as u64;
    if (data.len() as u64) < need {
        return Err(Error::InsufficientData { required: need, available: data.len() as u64 });
    }
    let threshold = 5.5 * params.alpha_prime;
    let decoder = params.decoder();
    let (list_cap, mc_n) =
        params.overrides.as_ref().map_or((FAITHFUL_LIST_CAP, DEFAULT_MC_N), |o| (o.list_cap, o.mde_mc_n));
    let out: Vec<(Vec<Mixture>, ChunkReport)> = (0..c.rounds)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(base_seed, i as u64);
            let (start, end) = (i * c.m3, (i + 1) * c.m3);
            let chunk = data.slice(start, end);
            let decode = chunk.slice(0, c.m2);
            let rest = chunk.slice(c.m2, c.m3);
            let list = match &decoder {
                Decoder::Faithful => dense_mixture_list_decode(&decode, params.k, &params.decode, &mut r)?,
                Decoder::Refined(rp) => refined_dense_decode(&decode, params.k, &params.decode, rp, &mut r)?,
            };
            if list.len() > list_cap {
                return Err(Error::InfeasibleBudget {
                    what: "list handed to MDE",
                    requested: list.len() as f64,
                    cap: list_cap as u64,
                });
            }
            let mut report = ChunkReport {
                index: i,
                start,
                end,
                list_size: list.len(),
                raw_size: list.manifest.raw_size,
                mde_index: None,
                tv: Vec::new(),
                survivors: 0,
            };
            if list.is_empty() {
                return Ok((Vec::new(), report));
            }
            let j = mde_select(&list.items, &rest, mc_n, &mut r)?;
            let oracle = TvOracle::auto(params.d, rng::child_seed(base_seed, i as u64));
            let mut kept = Vec::new();
            for item in &list.items {
                let est = oracle.mixtures(item, &list.items[j])?;
                report.tv.push(TvRecord { value: est.value, half_width: est.half_width });
                if est.lower() < threshold {
                    kept.push(item.clone());
                }
            }
            report.mde_index = Some(j);
            report.survivors = kept.len();
            Ok((kept, report))
        })
        .collect::<Result<_>>()?;
    Ok(out.into_iter().unzip())
}

/// Chunked decode → MDE → filter → PCMS over the dense-mixture cover under κ_mix.
pub fn learn_gmm_dp<R: Rng + ?Sized>(
    data: &Dataset,
    params: &PipelineParams,
    cover: &Cover,
    rng: &mut R,
) -> Result<LearnOutput> {
    if cover.metric != MetricTag::KappaMix {
        return Err(Error::MetricMismatch { cover: cover.metric.name(), supplied: MetricTag::KappaMix.name() });
    }
    if cover.max_components() != params.k || (cover.alpha - params.alpha_prime).abs() > 1e-12 * params.alpha_prime {
        return Err(invalid(format!(
            "cover has k = {} and α = {}, run needs k = {} and α′ = {}",
            cover.max_components(),
            cover.alpha,
            params.k,
            params.alpha_prime
        )));
    }
    if data.dim() != params.d {
        return Err(Error::DimensionMismatch { expected: params.d, found: data.dim() });
    }
    let accessed = provenance::tick();
    if cover.built_at() >= accessed {
        return Err(invalid("cover was built after the data was read"));
    }
    let base_seed: u64 = rng.gen();
    let (lists, chunks) = chunk_lists(data, params, base_seed)?;
    let hyps: Vec<Vec<Hypothesis>> =
        lists.into_iter().map(|l| l.into_iter().map(Hypothesis::Model).collect()).collect();
    let oracle = TvOracle::auto(params.d, base_seed);
    let table = score_table(&hyps, cover, 2.0 * cover.alpha, MetricTag::KappaMix, &oracle)?;
    let output =
        select_from_table(&table, cover, &params.privacy, params.beta_prime, &mut rng::stream(base_seed, u64::MAX))?;
    let (selected_index, selected_score, model) = match &output {
        PcmsOutput::Selected { index, score, hypothesis } => {
            (Some(*index), Some(*score), hypothesis.model().map(ModelJson::from))
        }
        PcmsOutput::Bottom => (None, None, None),
    };
    let manifest = RunManifest {
        params: params.clone(),
        base_seed,
        cover_recipe_hash: cover.recipe_hash(),
        cover_len: cover.len(),
        cover_built_at: cover.built_at(),
        data_accessed_at: accessed,
        threshold: 5.5 * params.alpha_prime,
        chunks,
        table: TableSummary {
            t: table.t,
            radius: table.radius,
            entries: table.entries.len(),
            max_score: table.max_score(),
            bottom_weight: table.bottom_weight,
        },
        selected_index,
        selected_score,
        output: model,
    };
    Ok(LearnOutput { output, manifest })
}

/// Indices of chunks whose filtered lists differ between two datasets, each run
/// with the same base seed.
pub fn changed_chunks(a: &Dataset, b: &Dataset, params: &PipelineParams, base_seed: u64) -> Result<Vec<usize>> {
    let (la, _) = chunk_lists(a, params, base_seed)?;
    let (lb, _) = chunk_lists(b, params, base_seed)?;
    Ok(la.iter().zip(&lb).enumerate().filter(|(_, (x, y))| x != y).map(|(i, _)| i).collect())
}
