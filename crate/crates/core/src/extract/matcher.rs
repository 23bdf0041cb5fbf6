use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rdf::{EntityInventory, Iri};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    LocalName,
    Label,
    Prefixed,
    Phrase,
    Plural,
    Alias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Tier {
    Exact,
    AliasFile,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceForm {
    pub text: String,
    pub entity: Iri,
    pub kind: SurfaceKind,
}

/// Alias rules on top of the forms read off the inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasConfig {
    /// Property names with and without a leading `is`/`has` name the same
    /// property.
    pub is_has_rule: bool,
    pub plurals: bool,
    pub phrases: bool,
    /// `(surface, entity local name)` pairs.
    pub aliases: Vec<(String, String)>,
}

impl Default for AliasConfig {
    fn default() -> Self {
        AliasConfig { is_has_rule: true, plurals: true, phrases: true, aliases: Vec::new() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MatcherError {
    #[error("surface form '{surface}' maps to both <{first}> and <{second}>")]
    Collision { surface: String, first: Iri, second: Iri },
    #[error("alias line {line}: {message}")]
    AliasSyntax { line: usize, message: String },
    #[error("alias '{surface}' targets '{target}', which is not in the inventory")]
    UnknownAliasTarget { surface: String, target: String },
    #[error("alias '{surface}' targets '{target}', which names several entities")]
    AmbiguousAliasTarget { surface: String, target: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl AliasConfig {
    /// Lines `surface => EntityLocalName`; `#` starts a comment; `set
    /// is-has|plurals|phrases = on|off` toggles the built-in rules.
    pub fn parse(text: &str) -> Result<Self, MatcherError> {
        let mut cfg = AliasConfig::default();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| MatcherError::AliasSyntax { line: index + 1, message: message.into() };
            if let Some(setting) = line.strip_prefix("set ") {
                let (key, value) = setting.split_once('=').ok_or_else(|| syntax("expected 'set NAME = on|off'"))?;
                let on = match value.trim() {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(syntax("value must be on or off")),
                };
                match key.trim() {
                    "is-has" => cfg.is_has_rule = on,
                    "plurals" => cfg.plurals = on,
                    "phrases" => cfg.phrases = on,
                    _ => return Err(syntax("unknown setting")),
                }
                continue;
            }
            let (surface, target) = line.split_once("=>").ok_or_else(|| syntax("expected 'surface => Entity'"))?;
            let (surface, target) = (surface.trim(), target.trim());
            if surface.is_empty() || target.is_empty() {
                return Err(syntax("empty side"));
            }
            cfg.aliases.push((surface.to_string(), target.to_string()));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MatcherError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| MatcherError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }
}

pub(super) fn is_ident(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte spans of identifier-character runs.
pub(super) fn words(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (is_ident(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

/// Separator between two words as it appears in a key: whitespace runs
/// collapse to one space, short punctuation is kept. `None` breaks a match;
/// a blank line always does.
pub(super) fn separator(gap: &str) -> Option<String> {
    if gap.is_empty() || gap.chars().count() > 3 || gap.matches('\n').count() > 1 {
        return None;
    }
    if gap.chars().all(char::is_whitespace) {
        return Some(" ".into());
    }
    let mut out = String::new();
    let mut in_space = false;
    for c in gap.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.push(c);
            in_space = false;
        }
    }
    Some(out)
}

/// Key of a surface form, or `None` if it holds no identifier characters.
fn key_of(form: &str, fold_case: bool) -> Option<(String, usize)> {
    let spans = words(form);
    if spans.is_empty() {
        return None;
    }
    let mut key = String::new();
    for (i, &(s, e)) in spans.iter().enumerate() {
        if i > 0 {
            key.push_str(&separator(&form[spans[i - 1].1..s])?);
        }
        let w = &form[s..e];
        key.push_str(&if fold_case { w.to_lowercase() } else { w.to_string() });
    }
    Some((key, spans.len()))
}

pub(super) fn camel_parts(name: &str) -> Vec<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 1..chars.len() {
        let (prev, cur) = (chars[i - 1], chars[i]);
        let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
        if (prev.is_lowercase() && cur.is_uppercase()) || (prev.is_uppercase() && cur.is_uppercase() && next_lower) {
            parts.push(chars[start..i].iter().collect());
            start = i;
        }
    }
    parts.push(chars[start..].iter().collect());
    parts
}

fn strip_is_has(name: &str) -> Option<String> {
    for p in ["is", "has"] {
        if let Some(rest) = name.strip_prefix(p) {
            if rest.starts_with(char::is_uppercase) {
                let mut chars = rest.chars();
                let first = chars.next()?.to_lowercase().collect::<String>();
                return Some(first + chars.as_str());
            }
        }
    }
    None
}

fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Short prefix a namespace is commonly written with: `http://gmo#` -> `gmo`.
fn namespace_nickname(namespace: &str) -> Option<String> {
    let trimmed = namespace.trim_end_matches(['#', '/']);
    let tail = trimmed.rsplit(['/', ':']).next()?;
    let tail = tail.split('.').next()?;
    (!tail.is_empty() && tail.chars().all(is_ident)).then(|| tail.to_string())
}

#[derive(Debug, Clone)]
pub(super) struct Entry {
    pub entity: usize,
    pub kind: SurfaceKind,
    tier: Tier,
    pub form: String,
}

/// Gazetteer over one inventory. Keys in `folded` are lowercased; keys in
/// `exact` (prefixed names) match with their case.
#[derive(Debug, Clone)]
pub struct Matcher {
    pub(super) entities: Vec<(Iri, String)>,
    pub(super) folded: HashMap<String, Entry>,
    pub(super) exact: HashMap<String, Entry>,
    pub(super) max_words: usize,
    ambiguous: BTreeSet<String>,
    diagnostics: Vec<String>,
}

impl Matcher {
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = &Iri> {
        self.entities.iter().map(|(iri, _)| iri)
    }

    /// Every registered surface form, sorted by text.
    pub fn surface_forms(&self) -> Vec<SurfaceForm> {
        let mut out: Vec<SurfaceForm> = self
            .folded
            .values()
            .chain(self.exact.values())
            .map(|e| SurfaceForm { text: e.form.clone(), entity: self.entities[e.entity].0.clone(), kind: e.kind })
            .collect();
        out.sort_by(|a, b| a.text.cmp(&b.text).then(a.entity.cmp(&b.entity)));
        out
    }

    fn insert(&mut self, form: &str, entity: usize, kind: SurfaceKind, tier: Tier) -> Result<(), MatcherError> {
        let fold = kind != SurfaceKind::Prefixed;
        let Some((key, n_words)) = key_of(form, fold) else { return Ok(()) };
        if fold && self.ambiguous.contains(&key) {
            return Ok(());
        }
        let map = if fold { &mut self.folded } else { &mut self.exact };
        let new = Entry { entity, kind, tier, form: form.to_string() };
        match map.get(&key) {
            None => {
                map.insert(key, new);
            }
            Some(old) if old.entity == entity => {
                if tier < old.tier {
                    map.insert(key, new);
                }
            }
            Some(old) if old.tier != tier => {
                let (win, lose) = if tier < old.tier { (&new, old) } else { (old, &new) };
                self.diagnostics.push(format!(
                    "surface form '{}' of <{}> is shadowed by <{}>",
                    form, self.entities[lose.entity].0, self.entities[win.entity].0
                ));
                if tier < old.tier {
                    map.insert(key, new);
                }
            }
            Some(old) if tier == Tier::Exact => {
                self.diagnostics.push(format!(
                    "surface form '{}' names both <{}> and <{}>; only their exact spellings match",
                    form, self.entities[old.entity].0, self.entities[entity].0
                ));
                map.remove(&key);
                self.ambiguous.insert(key);
            }
            Some(old) => {
                return Err(MatcherError::Collision {
                    surface: form.to_string(),
                    first: self.entities[old.entity].0.clone(),
                    second: self.entities[entity].0.clone(),
                });
            }
        }
        self.max_words = self.max_words.max(n_words);
        Ok(())
    }
}

pub fn build_matcher(inventory: &EntityInventory, aliases: &AliasConfig) -> Result<Matcher, MatcherError> {
    let records = inventory.entities();
    let mut m = Matcher {
        entities: records.iter().map(|r| (r.iri.clone(), r.local_name().to_string())).collect(),
        folded: HashMap::new(),
        exact: HashMap::new(),
        max_words: 0,
        ambiguous: BTreeSet::new(),
        diagnostics: Vec::new(),
    };
    let mut prefixes: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (p, ns) in inventory.prefixes() {
        if !p.is_empty() {
            prefixes.entry(ns.as_str()).or_default().insert(p.clone());
        }
    }
    for r in records {
        if let Some(nick) = namespace_nickname(r.iri.namespace()) {
            prefixes.entry(r.iri.namespace()).or_default().insert(nick);
        }
    }

    // Exact tier first so later tiers see what they would shadow.
    for (i, r) in records.iter().enumerate() {
        let local = r.local_name();
        m.insert(local, i, SurfaceKind::LocalName, Tier::Exact)?;
        if let Some(label) = &r.label {
            m.insert(label, i, SurfaceKind::Label, Tier::Exact)?;
        }
        for p in prefixes.get(r.iri.namespace()).into_iter().flatten() {
            m.insert(&format!("{p}#{local}"), i, SurfaceKind::Prefixed, Tier::Exact)?;
            m.insert(&format!("{p}:{local}"), i, SurfaceKind::Prefixed, Tier::Exact)?;
        }
    }
    for (surface, target) in &aliases.aliases {
        let hits: Vec<usize> = records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.local_name() == target)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => m.insert(surface, *i, SurfaceKind::Alias, Tier::AliasFile)?,
            [] => {
                return Err(MatcherError::UnknownAliasTarget { surface: surface.clone(), target: target.clone() })
            }
            _ => {
                return Err(MatcherError::AmbiguousAliasTarget { surface: surface.clone(), target: target.clone() })
            }
        }
    }
    for (i, r) in records.iter().enumerate() {
        let local = r.local_name();
        let parts = camel_parts(local);
        if aliases.phrases && parts.len() > 1 {
            let phrase = parts.join(" ");
            m.insert(&phrase, i, SurfaceKind::Phrase, Tier::Derived)?;
            if aliases.plurals {
                m.insert(&format!("{phrase}s"), i, SurfaceKind::Plural, Tier::Derived)?;
            }
        }
        if aliases.plurals && !local.ends_with('s') {
            m.insert(&format!("{local}s"), i, SurfaceKind::Plural, Tier::Derived)?;
        }
        if aliases.is_has_rule && r.is_property() {
            match strip_is_has(local) {
                Some(bare) => m.insert(&bare, i, SurfaceKind::Alias, Tier::Derived)?,
                None => {
                    let cap = capitalize(local);
                    m.insert(&format!("is{cap}"), i, SurfaceKind::Alias, Tier::Derived)?;
                    m.insert(&format!("has{cap}"), i, SurfaceKind::Alias, Tier::Derived)?;
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers() {
        assert_eq!(camel_parts("CoPrincipalInvestigatorRole"), ["Co", "Principal", "Investigator", "Role"]);
        assert_eq!(camel_parts("award"), ["award"]);
        assert_eq!(strip_is_has("isPerformedBy").as_deref(), Some("performedBy"));
        assert_eq!(strip_is_has("hashTag"), None);
        assert_eq!(namespace_nickname("http://gmo#").as_deref(), Some("gmo"));
        assert_eq!(namespace_nickname("http://schema.geolink.org/1.0/base/main#").as_deref(), Some("main"));
        assert_eq!(key_of("Funding  Award", true), Some(("funding award".to_string(), 2)));
        assert_eq!(key_of("gmo#Award", false), Some(("gmo#Award".to_string(), 2)));
        assert_eq!(key_of("--", true), None);
    }

    #[test]
    fn alias_file() {
        let cfg = AliasConfig::parse("# aliases\nCo-PI role => CoPrincipalInvestigatorRole\nset plurals = off\n").unwrap();
        assert!(!cfg.plurals && cfg.is_has_rule);
        assert_eq!(cfg.aliases, [("Co-PI role".to_string(), "CoPrincipalInvestigatorRole".to_string())]);
        assert!(matches!(AliasConfig::parse("nonsense"), Err(MatcherError::AliasSyntax { line: 1, .. })));
        assert!(AliasConfig::parse("set colour = on").is_err());
    }
}
