//! Reading target-ontology entities out of free-text answers.
//!
//! The scan walks identifier-character words of the text. At each word it
//! looks for the longest run of words whose key is a registered surface form
//! (prefixed names case-sensitively, everything else case-folded), records
//! a detection and continues after the match. Only the first mention of an
//! entity is kept.

mod matcher;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::orchestrator::StageId;
use crate::rdf::{EntityInventory, Iri};

pub use matcher::{build_matcher, AliasConfig, Matcher, MatcherError, SurfaceForm, SurfaceKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub entity: Iri,
    /// Local name of the entity, the unit scores are computed over.
    pub piece: String,
    /// Byte offsets of the first mention in the response text.
    pub span: (usize, usize),
    /// Response text of the first mention.
    pub surface: String,
    pub kind: SurfaceKind,
    pub stage: StageId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub rule_id: String,
    pub stage: StageId,
    pub detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn empty(rule_id: impl Into<String>, stage: StageId) -> Self {
        DetectionSet { rule_id: rule_id.into(), stage, detections: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn entities(&self) -> BTreeSet<&Iri> {
        self.detections.iter().map(|d| &d.entity).collect()
    }

    pub fn pieces(&self) -> BTreeSet<String> {
        self.detections.iter().map(|d| d.piece.clone()).collect()
    }

    pub fn contains(&self, entity: &Iri) -> bool {
        self.detections.iter().any(|d| &d.entity == entity)
    }

    /// Adds the detections of `other` whose entities are new; the set takes
    /// the later stage.
    pub fn merge(&mut self, other: &DetectionSet) {
        for d in &other.detections {
            if !self.contains(&d.entity) {
                self.detections.push(d.clone());
            }
        }
        self.stage = self.stage.max(other.stage);
    }
}

pub fn extract(matcher: &Matcher, text: &str, rule_id: &str, stage: StageId) -> DetectionSet {
    let spans = matcher::words(text);
    let mut out = DetectionSet::empty(rule_id, stage);
    let mut seen = BTreeSet::new();
    let mut k = 0;
    while k < spans.len() {
        // The local part of `other:Name` or `other#Name` is not a mention of
        // a bare name.
        let qualified = k > 0 && matches!(&text[spans[k - 1].1..spans[k].0], "#" | ":");
        let found = if qualified { None } else { longest_at(matcher, text, &spans, k) };
        let Some((last, entry)) = found else {
            k += 1;
            continue;
        };
        let (start, end) = (spans[k].0, spans[last].1);
        if seen.insert(entry.entity) {
            let (iri, local) = &matcher.entities[entry.entity];
            out.detections.push(Detection {
                entity: iri.clone(),
                piece: local.clone(),
                span: (start, end),
                surface: text[start..end].to_string(),
                kind: entry.kind,
                stage,
            });
        }
        k = last + 1;
    }
    out
}

fn longest_at<'m>(
    matcher: &'m Matcher,
    text: &str,
    spans: &[(usize, usize)],
    k: usize,
) -> Option<(usize, &'m matcher::Entry)> {
    let mut exact = String::new();
    let mut folded = String::new();
    let mut best = None;
    for last in k..spans.len().min(k + matcher.max_words) {
        if last > k {
            let Some(sep) = matcher::separator(&text[spans[last - 1].1..spans[last].0]) else { break };
            exact.push_str(&sep);
            folded.push_str(&sep);
        }
        let word = &text[spans[last].0..spans[last].1];
        exact.push_str(word);
        folded.push_str(&word.to_lowercase());
        if let Some(e) = matcher.exact.get(&exact).or_else(|| matcher.folded.get(&folded)) {
            best = Some((last, e));
        }
    }
    best
}

/// Local names the target shares with the source, compared case-folded.
/// Mentions of these may refer to either ontology.
pub fn homonyms(target: &EntityInventory, source: &EntityInventory) -> Vec<String> {
    let source_names: BTreeSet<String> = source.entities().iter().map(|r| r.local_name().to_lowercase()).collect();
    let mut out: Vec<String> = target
        .entities()
        .iter()
        .filter(|r| source_names.contains(&r.local_name().to_lowercase()))
        .map(|r| r.local_name().to_string())
        .collect();
    out.sort();
    out.dedup();
    out
}
