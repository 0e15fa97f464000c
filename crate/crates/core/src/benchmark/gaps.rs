use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BenchmarkError, GroupResult};
use crate::subjects::SubjectGroup;

/// Plain means of the QueerBench score per group, pooled over every model
/// and top-k in the result set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub queer_mean: f64,
    pub non_queer_mean: f64,
    /// `queer_mean - non_queer_mean`.
    pub noun_gap: f64,
    pub binary_mean: f64,
    pub neutral_mean: f64,
    pub neo_mean: f64,
    /// Number of results pooled into each mean.
    pub counts: BTreeMap<SubjectGroup, usize>,
}

pub fn summarize_group_scores(
    scores: impl IntoIterator<Item = (SubjectGroup, f64)>,
) -> Result<GapSummary, BenchmarkError> {
    let mut sums: BTreeMap<SubjectGroup, (f64, usize)> = BTreeMap::new();
    for (g, qb) in scores {
        let e = sums.entry(g).or_default();
        e.0 += qb;
        e.1 += 1;
    }
    let mean = |g: SubjectGroup| {
        sums.get(&g)
            .map(|(s, n)| s / *n as f64)
            .ok_or(BenchmarkError::MissingGroup(g))
    };
    let queer_mean = mean(SubjectGroup::Queer)?;
    let non_queer_mean = mean(SubjectGroup::NonQueer)?;
    Ok(GapSummary {
        queer_mean,
        non_queer_mean,
        noun_gap: queer_mean - non_queer_mean,
        binary_mean: mean(SubjectGroup::Binary)?,
        neutral_mean: mean(SubjectGroup::Neutral)?,
        neo_mean: mean(SubjectGroup::Neo)?,
        counts: sums.iter().map(|(g, (_, n))| (*g, *n)).collect(),
    })
}

pub fn summarize_gaps(results: &[GroupResult]) -> Result<GapSummary, BenchmarkError> {
    summarize_group_scores(results.iter().map(|r| (r.scores.subject_group, r.qb)))
}
