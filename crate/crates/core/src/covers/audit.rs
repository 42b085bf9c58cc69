use serde::{Deserialize, Serialize};

use super::{Cover, Hypothesis};
use crate::error::Result;
use crate::metrics::TvOracle;

/// Ball counts of a cover around a set of probes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverAudit {
    pub gamma: f64,
    pub max_ball_count: u64,
    pub probes: u64,
    pub claimed_t: Option<u64>,
    /// (probe index, count) for every probe whose ball exceeds `claimed_t`.
    pub violations: Vec<(usize, u64)>,
}

impl CoverAudit {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Counts cover elements within `gamma` of each probe.
pub fn audit_local_smallness(
    cover: &Cover,
    gamma: f64,
    probes: &[Hypothesis],
    oracle: &TvOracle,
) -> Result<CoverAudit> {
    let mut max = 0;
    let mut violations = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let count = cover.ball(p, gamma, oracle)?.len() as u64;
        max = max.max(count);
        if cover.claimed_t.is_some_and(|t| count > t) {
            violations.push((i, count));
        }
    }
    Ok(CoverAudit { gamma, max_ball_count: max, probes: probes.len() as u64, claimed_t: cover.claimed_t, violations })
}
