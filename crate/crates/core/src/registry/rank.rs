use std::collections::BTreeSet;

use super::{ModuleDescriptor, ModuleRegistry, RegistryError};
use crate::rdf::EntityRecord;

const STOPWORDS: &[&str] = &[
    "a", "an", "the", "is", "has", "by", "of", "to", "in", "on", "and", "or", "for", "with", "at", "from", "that",
    "this", "which", "it", "its", "be", "are", "as", "we", "can", "all", "any", "each", "one", "if", "not", "here",
];

/// Lowercased word tokens; camelCase and PascalCase words are split, runs of
/// capitals stay together (`ISOCode` -> `iso`, `code`).
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower)
                || (prev.is_alphabetic() != cur.is_alphabetic());
            if boundary {
                out.push(chars[start..i].iter().collect::<String>());
                start = i;
            }
        }
        if start < chars.len() {
            out.push(chars[start..].iter().collect::<String>());
        }
    }
    out.into_iter()
        .map(|t| t.to_lowercase())
        .filter(|t| !t.is_empty() && !STOPWORDS.contains(&t.as_str()))
        .collect()
}

fn query_tokens(entities: &[EntityRecord]) -> BTreeSet<String> {
    let mut tokens = BTreeSet::new();
    for e in entities {
        tokens.extend(tokenize(e.local_name()));
        for text in e.label.iter().chain(&e.comment) {
            tokens.extend(tokenize(text));
        }
    }
    tokens
}

fn module_score(query: &BTreeSet<String>, module: &ModuleDescriptor) -> f64 {
    if query.is_empty() {
        return 0.0;
    }
    let listing: BTreeSet<String> = module.listed().flat_map(|n| tokenize(n)).collect();
    let mut prose: BTreeSet<String> = tokenize(&module.name).into_iter().collect();
    prose.extend(tokenize(&module.description));
    let weight: usize = query
        .iter()
        .map(|t| {
            if listing.contains(t) {
                2
            } else if prose.contains(t) {
                1
            } else {
                0
            }
        })
        .sum();
    weight as f64 / (2 * query.len()) as f64
}

/// Top-`k` modules by token overlap with the query entities, best first;
/// equal scores are ordered by module name.
pub fn rank_modules(
    query: &[EntityRecord],
    registry: &ModuleRegistry,
    k: usize,
) -> Result<Vec<(String, f64)>, RegistryError> {
    if registry.is_empty() {
        return Err(RegistryError::Empty);
    }
    if k == 0 {
        return Err(RegistryError::Format { line: 0, message: "k must be at least 1".into() });
    }
    let tokens = query_tokens(query);
    let mut ranked: Vec<(String, f64)> =
        registry.modules().iter().map(|m| (m.name.clone(), module_score(&tokens, m))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}
