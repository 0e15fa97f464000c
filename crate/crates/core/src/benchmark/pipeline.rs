use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{partial_queerbench_score, BenchmarkError, GroupResult, Tool, ToolScores, ToolSet};
use crate::lexical::{
    afinn_aggregate, hurtlex_aggregate, hurtlex_indicator_share, AfinnLexicon, HurtlexLexicon,
    SentenceWordScores,
};
use crate::perspective::{
    complete, perspective_aggregate, Beta, ClassifiedSentence, PerspectiveClient, PerspectiveError,
};
use crate::predictor::{PredictError, PredictionSet, Predictor, TopK};
use crate::subjects::SubjectGroup;
use crate::templates::{Dataset, MaskedSentence};

/// Parameters of one model × top-k scoring pass.
#[derive(Debug, Clone)]
pub struct ScoringRun {
    pub model_id: String,
    pub k: TopK,
    pub beta: Beta,
    pub tools: ToolSet,
    /// Abort on the first excluded sentence instead of recording it.
    pub strict: bool,
    /// Stamped into results when live analyzer responses were fetched.
    pub timestamp: Option<String>,
}

impl ScoringRun {
    pub fn new(model_id: &str, k: TopK) -> Self {
        Self {
            model_id: model_id.to_owned(),
            k,
            beta: Beta::DEFAULT,
            tools: ToolSet::all(),
            strict: false,
            timestamp: None,
        }
    }
}

pub struct Scorers<'a> {
    pub afinn: &'a AfinnLexicon,
    pub hurtlex: &'a HurtlexLexicon,
    pub perspective: Option<&'a PerspectiveClient>,
}

/// A sentence (or one completion of it) left out of the aggregates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub model_id: String,
    pub k: usize,
    pub sentence_id: usize,
    pub subject_group: SubjectGroup,
    /// `None` when the whole sentence was excluded (prediction failure).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction_rank: Option<usize>,
    pub reason: String,
    pub detail: String,
}

/// Scored/excluded tallies for one group and tool. Word tools count masked
/// sentences; the analyzer counts completed sentences (k per masked one).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub model_id: String,
    pub k: usize,
    pub subject_group: SubjectGroup,
    pub tool: Tool,
    pub total: usize,
    pub scored: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub results: Vec<GroupResult>,
    pub coverage: Vec<CoverageEntry>,
    pub summary: Vec<CoverageSummary>,
}

impl RunOutput {
    pub fn extend(&mut self, other: RunOutput) {
        self.results.extend(other.results);
        self.coverage.extend(other.coverage);
        self.summary.extend(other.summary);
    }

    /// Scored fraction over all groups and tools, 1.0 when nothing was due.
    pub fn coverage_ratio(&self) -> f64 {
        let total: usize = self.summary.iter().map(|s| s.total).sum();
        let scored: usize = self.summary.iter().map(|s| s.scored).sum();
        if total == 0 {
            1.0
        } else {
            scored as f64 / total as f64
        }
    }
}

/// Gathers predictions for every sentence and scores them per group.
pub fn run_pipeline(
    run: &ScoringRun,
    dataset: &Dataset,
    predictor: &Predictor,
    scorers: &Scorers<'_>,
) -> Result<RunOutput, BenchmarkError> {
    if dataset.is_empty() {
        return Err(BenchmarkError::EmptyDataset);
    }
    let predictions = predictor.predict_all(dataset, &run.model_id, run.k);
    let joined: Vec<(&MaskedSentence, Result<PredictionSet, PredictError>)> = dataset
        .sentences
        .iter()
        .zip(predictions)
        .map(|(s, (id, p))| {
            debug_assert_eq!(s.sentence_id, id);
            (s, p)
        })
        .collect();
    score_joined(run, joined, scorers)
}

struct Scored<'a> {
    sentence: &'a MaskedSentence,
    words: SentenceWordScores,
    classified: Vec<ClassifiedSentence>,
}

/// Scores already-gathered predictions. Input order is preserved in the
/// coverage report; aggregates do not depend on it.
pub fn score_joined<'a>(
    run: &ScoringRun,
    joined: impl IntoIterator<Item = (&'a MaskedSentence, Result<PredictionSet, PredictError>)>,
    scorers: &Scorers<'_>,
) -> Result<RunOutput, BenchmarkError> {
    let use_perspective = run.tools.contains(Tool::Perspective);
    let analyzer = match (use_perspective, scorers.perspective) {
        (true, None) => return Err(BenchmarkError::NoAnalyzer),
        (true, Some(c)) => Some(c),
        (false, _) => None,
    };
    let k = run.k.get();
    let mut coverage = Vec::new();
    let mut scored: Vec<Scored<'a>> = Vec::new();
    let mut group_sizes: BTreeMap<SubjectGroup, usize> = BTreeMap::new();

    for (sentence, prediction) in joined {
        *group_sizes.entry(sentence.subject_group).or_default() += 1;
        let set = match prediction {
            Ok(set) => set,
            Err(source) => {
                if run.strict {
                    return Err(BenchmarkError::Predict {
                        sentence_id: sentence.sentence_id,
                        source,
                    });
                }
                coverage.push(exclusion(run, sentence, None, source.reason_code(), source.to_string()));
                continue;
            }
        };
        let words = SentenceWordScores::score(scorers.afinn, scorers.hurtlex, &set);
        let mut classified = Vec::new();
        if let Some(client) = analyzer {
            for (i, p) in set.predictions.iter().enumerate() {
                let done = complete(sentence, p, i + 1);
                match client.analyze(&done) {
                    Ok(scores) => classified.push(ClassifiedSentence::new(done, scores, run.beta)),
                    Err(source) => {
                        if run.strict {
                            return Err(BenchmarkError::Perspective {
                                sentence_id: sentence.sentence_id,
                                rank: i + 1,
                                source,
                            });
                        }
                        coverage.push(perspective_exclusion(run, sentence, i + 1, &source));
                    }
                }
            }
        }
        scored.push(Scored {
            sentence,
            words,
            classified,
        });
    }

    let mut results = Vec::new();
    let mut summary = Vec::new();
    for group in SubjectGroup::ALL {
        let Some(&size) = group_sizes.get(&group) else {
            continue;
        };
        let members: Vec<&Scored<'_>> = scored
            .iter()
            .filter(|s| s.sentence.subject_group == group)
            .collect();
        let n = members.len();
        let completed: Vec<&ClassifiedSentence> =
            members.iter().flat_map(|s| s.classified.iter()).collect();
        for tool in run.tools.iter() {
            let (total, done) = match tool {
                Tool::Perspective => (size * k, completed.len()),
                _ => (size, n),
            };
            summary.push(CoverageSummary {
                model_id: run.model_id.clone(),
                k,
                subject_group: group,
                tool,
                total,
                scored: done,
                excluded: total - done,
            });
        }
        if n == 0 {
            tracing::warn!(group = %group, "every sentence of the group was excluded");
            continue;
        }

        let mut scores = ToolScores {
            subject_group: group,
            n,
            n_completed: completed.len(),
            afinn_signed_mean: None,
            a_s: None,
            h_s: None,
            hurtlex_indicator: None,
            p_s: None,
            hurtlex_histogram: BTreeMap::new(),
            perspective_histogram: BTreeMap::new(),
        };
        if run.tools.contains(Tool::Afinn) {
            let means: Vec<f64> = members.iter().map(|s| s.words.afinn_mean).collect();
            scores.afinn_signed_mean = Some(means.iter().sum::<f64>() / n as f64);
            scores.a_s = Some(afinn_aggregate(&means)?);
        }
        if run.tools.contains(Tool::Hurtlex) {
            let counts: Vec<usize> = members.iter().map(|s| s.words.hurtlex.count).collect();
            scores.h_s = Some(hurtlex_aggregate(&counts)?);
            scores.hurtlex_indicator = Some(hurtlex_indicator_share(&counts)?);
            for s in &members {
                for c in &s.words.hurtlex.categories {
                    *scores.hurtlex_histogram.entry(*c).or_default() += 1;
                }
            }
        }
        if use_perspective && !completed.is_empty() {
            let counts: Vec<usize> = completed.iter().map(|c| c.count).collect();
            scores.p_s = perspective_aggregate(&counts).ok();
            for c in &completed {
                for cat in &c.flagged {
                    *scores.perspective_histogram.entry(*cat).or_default() += 1;
                }
            }
        }
        let selected = scores.selected_scores();
        let qb = partial_queerbench_score(&selected).unwrap_or(0.0);
        let canonical = run.tools.is_canonical() && selected.len() == 3;
        results.push(GroupResult {
            model_id: run.model_id.clone(),
            k,
            scores,
            qb,
            canonical,
            perspective_retrieved: run.timestamp.clone().filter(|_| use_perspective),
        });
    }
    Ok(RunOutput {
        results,
        coverage,
        summary,
    })
}

fn exclusion(run: &ScoringRun, s: &MaskedSentence, rank: Option<usize>, reason: &str, detail: String) -> CoverageEntry {
    CoverageEntry {
        model_id: run.model_id.clone(),
        k: run.k.get(),
        sentence_id: s.sentence_id,
        subject_group: s.subject_group,
        prediction_rank: rank,
        reason: reason.to_owned(),
        detail,
    }
}

fn perspective_exclusion(run: &ScoringRun, s: &MaskedSentence, rank: usize, e: &PerspectiveError) -> CoverageEntry {
    exclusion(run, s, Some(rank), e.reason_code(), e.to_string())
}
