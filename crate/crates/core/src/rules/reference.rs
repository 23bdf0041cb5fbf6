use std::collections::BTreeSet;
use std::path::Path;

use super::model::AlignmentRule;
use super::parse::{parse_rule, serialize_rule};
use super::RuleError;

/// The expert alignment a run is scored against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceAlignment {
    pub rules: Vec<AlignmentRule>,
    pub source_ontology: String,
    pub target_ontology: String,
    /// Load-time warnings, e.g. variable-disconnected rule sides.
    pub diagnostics: Vec<String>,
}

impl ReferenceAlignment {
    pub fn get(&self, id: &str) -> Option<&AlignmentRule> {
        self.rules.iter().find(|r| r.id() == id)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Rule file text that [`parse_reference`] reads back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = format!("# source: {}\n# target: {}\n", self.source_ontology, self.target_ontology);
        for rule in &self.rules {
            out.push_str(&format!("{}: {}\n", rule.id(), serialize_rule(rule)));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReferenceError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{name}:{line}: {source}")]
    Rule { name: String, line: usize, source: RuleError },
    #[error("{name}:{line}: duplicate rule id '{id}'")]
    DuplicateId { name: String, line: usize, id: String },
}

pub fn load_reference(path: impl AsRef<Path>) -> Result<ReferenceAlignment, ReferenceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ReferenceError::Io { path: path.display().to_string(), source })?;
    parse_reference(&text, &path.display().to_string())
}

/// Rule file: one rule per line, `#` comments, optional leading `id:`.
/// Lines `# source: X` and `# target: Y` name the two ontologies.
/// Rules without an explicit id get `r<n>` from their position.
pub fn parse_reference(text: &str, name: &str) -> Result<ReferenceAlignment, ReferenceError> {
    let mut rules = Vec::new();
    let mut ids = BTreeSet::new();
    let mut diagnostics = Vec::new();
    let mut source_ontology = String::from("source");
    let mut target_ontology = String::from("target");
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("source:") {
                source_ontology = v.trim().to_string();
            } else if let Some(v) = comment.strip_prefix("target:") {
                target_ontology = v.trim().to_string();
            }
            continue;
        }
        let line = match line.find(" #") {
            Some(i) => line[..i].trim_end(),
            None => line,
        };
        if line.is_empty() {
            continue;
        }
        let (explicit_id, body) = split_id(line);
        let rule = parse_rule(body).map_err(|source| ReferenceError::Rule {
            name: name.to_string(),
            line: line_no,
            source,
        })?;
        let id = explicit_id.map(str::to_string).unwrap_or_else(|| format!("r{}", rules.len() + 1));
        if !ids.insert(id.clone()) {
            return Err(ReferenceError::DuplicateId { name: name.to_string(), line: line_no, id });
        }
        let rule = rule.with_id(id);
        diagnostics.extend(rule.connectivity_diagnostics());
        rules.push(rule);
    }
    Ok(ReferenceAlignment { rules, source_ontology, target_ontology, diagnostics })
}

/// `id: body` when the first token ends in a colon followed by whitespace.
fn split_id(line: &str) -> (Option<&str>, &str) {
    let Some(colon) = line.find(':') else { return (None, line) };
    let candidate = &line[..colon];
    let valid = !candidate.is_empty()
        && candidate.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
    let followed_by_space = line[colon + 1..].starts_with(char::is_whitespace);
    if valid && followed_by_space {
        (Some(candidate), line[colon + 1..].trim_start())
    } else {
        (None, line)
    }
}
