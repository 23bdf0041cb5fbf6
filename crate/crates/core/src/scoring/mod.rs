//! Per-rule recall/precision over target pieces, and the aggregate tables.
//!
//! recall    = |expected ∩ detected| / |expected|
//! precision = |expected ∩ detected| / |detected|
//!
//! An empty detection set scores precision 0 and carries
//! [`ScoreFlag::NoDetections`]. Standard deviation is the population form.

mod report;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scalar::Fraction;

pub use report::{emit_report, parse_report_json, scores_csv, table1_markdown, ReportFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreFlag {
    NoDetections,
    UsedModuleInfo,
    TruncatedPrompt,
    FallbackRanking,
}

impl ScoreFlag {
    pub fn name(self) -> &'static str {
        match self {
            ScoreFlag::NoDetections => "no-detections",
            ScoreFlag::UsedModuleInfo => "used-module-info",
            ScoreFlag::TruncatedPrompt => "truncated-prompt",
            ScoreFlag::FallbackRanking => "fallback-ranking",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleScoreOf<S> {
    pub rule_id: String,
    pub expected: BTreeSet<String>,
    pub detected: BTreeSet<String>,
    pub recall: S,
    pub precision: S,
    pub flags: BTreeSet<ScoreFlag>,
}

impl<S> RuleScoreOf<S> {
    pub fn correct_count(&self) -> usize {
        self.expected.intersection(&self.detected).count()
    }

    pub fn with_flag(mut self, flag: ScoreFlag) -> Self {
        self.flags.insert(flag);
        self
    }

    pub fn has_flag(&self, flag: ScoreFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoringError {
    #[error("rule {0} has no expected target pieces")]
    EmptyExpected(String),
    #[error("cannot aggregate an empty list of scores")]
    NoScores,
}

pub fn score_rule<S: Fraction>(
    rule_id: &str,
    expected: &BTreeSet<String>,
    detected: &BTreeSet<String>,
) -> Result<RuleScoreOf<S>, ScoringError> {
    if expected.is_empty() {
        return Err(ScoringError::EmptyExpected(rule_id.to_string()));
    }
    let correct = expected.intersection(detected).count();
    let recall = S::ratio(correct, expected.len());
    let mut flags = BTreeSet::new();
    let precision = if detected.is_empty() {
        flags.insert(ScoreFlag::NoDetections);
        S::zero()
    } else {
        S::ratio(correct, detected.len())
    };
    Ok(RuleScoreOf {
        rule_id: rule_id.to_string(),
        expected: expected.clone(),
        detected: detected.clone(),
        recall,
        precision,
        flags,
    })
}

/// Fractions of rules at or above the reporting cuts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds<S> {
    pub at_least_half: S,
    pub at_least_three_quarters: S,
    pub perfect: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary<S> {
    pub mean: S,
    pub median: S,
    pub std_dev: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReportOf<S> {
    pub count_with_module: usize,
    pub count_without_module: usize,
    pub total: usize,
    pub recall_thresholds: Thresholds<S>,
    pub precision_thresholds: Thresholds<S>,
    pub recall: Summary<S>,
    pub precision: Summary<S>,
}

pub fn aggregate<S: Fraction>(scores: &[RuleScoreOf<S>]) -> Result<AggregateReportOf<S>, ScoringError> {
    if scores.is_empty() {
        return Err(ScoringError::NoScores);
    }
    let with_module = scores.iter().filter(|s| s.has_flag(ScoreFlag::UsedModuleInfo)).count();
    let recalls: Vec<S> = scores.iter().map(|s| s.recall).collect();
    let precisions: Vec<S> = scores.iter().map(|s| s.precision).collect();
    Ok(AggregateReportOf {
        count_with_module: with_module,
        count_without_module: scores.len() - with_module,
        total: scores.len(),
        recall_thresholds: thresholds(&recalls),
        precision_thresholds: thresholds(&precisions),
        recall: summary(&recalls),
        precision: summary(&precisions),
    })
}

fn thresholds<S: Fraction>(values: &[S]) -> Thresholds<S> {
    let share = |cut: S, inclusive: bool| {
        let hits = values.iter().filter(|v| if inclusive { **v >= cut } else { **v == cut }).count();
        S::ratio(hits, values.len())
    };
    Thresholds {
        at_least_half: share(S::ratio(1, 2), true),
        at_least_three_quarters: share(S::ratio(3, 4), true),
        perfect: share(S::one(), false),
    }
}

fn summary<S: Fraction>(values: &[S]) -> Summary<S> {
    let n = S::from_usize(values.len()).expect("count fits the scalar type");
    let mean = values.iter().fold(S::zero(), |acc, v| acc + *v) / n;
    let variance = values.iter().fold(S::zero(), |acc, v| acc + (*v - mean) * (*v - mean)) / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are comparable"));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) * S::ratio(1, 2)
    };
    Summary { mean, median, std_dev: variance.sqrt() }
}
