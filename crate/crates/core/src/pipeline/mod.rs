//! End-to-end private learner: parameter derivation and the chunked run.
//!
//! Data is cut into T disjoint chunks. Each chunk is list decoded, its list is
//! filtered around an MDE pick, and the private common-member selector chooses
//! one element of a dense-mixture cover built before any data is read.

mod learn;
mod params;

pub use learn::{
    changed_chunks, chunk_lists, learn_gmm_dp, ChunkReport, LearnOutput, RunManifest, TableSummary, TvRecord,
    FAITHFUL_LIST_CAP,
};
pub use params::{
    claim_beta_prime, claim_failure_bound, claim_inequality, derive_parameters, Constants, Counts, Decoder, Mode,
    Overrides, PipelineParams, ALPHA_PRIME_DIVISOR, BETA_PRIME_RTOL,
};
