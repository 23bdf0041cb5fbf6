use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, BackendRequest, ChatBackend, Message, RequestContext};
use super::stage::StageId;
use super::templates::{TemplateError, TemplateName, Templates};
use super::transcript::{write_atomic, RetryNote, Role, Strategy, Transcript, TranscriptError, Turn};
use crate::extract::{extract, DetectionSet, Matcher};
use crate::rdf::{serialize_snippet, EntityInventory, EntityRecord, OntologyGraph};
use crate::registry::{description_block, rank_modules, ModuleRegistry};
use crate::rules::AlignmentRule;
use crate::scoring::ScoreFlag;

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub model: String,
    pub temperature: f64,
    /// Fraction of expected pieces the pre-module answers must cover for the
    /// module stages to be skipped. 0 never skips.
    pub satisfaction_threshold: f64,
    /// Character budget for the ontology text in prompts.
    pub char_budget: Option<usize>,
    pub retries: u32,
    pub retry_base_delay: Duration,
    /// Modules taken from the lexical ranking when the suggestion names none.
    pub top_k: usize,
    /// Case-insensitive phrases that mark an offer to examine the file.
    pub offer_patterns: Vec<String>,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            model: "gpt-4".into(),
            temperature: 0.0,
            satisfaction_threshold: 1.0,
            char_budget: None,
            retries: 3,
            retry_base_delay: Duration::from_millis(500),
            top_k: 1,
            offer_patterns: vec!["Would you like me to".into()],
        }
    }
}

/// Everything a run needs besides the rule, the backend and the policy.
#[derive(Clone, Copy)]
pub struct PipelineInputs<'a> {
    pub source: &'a OntologyGraph,
    pub source_inventory: &'a EntityInventory,
    pub source_name: &'a str,
    pub target_text: &'a str,
    pub target_name: &'a str,
    pub matcher: &'a Matcher,
    pub registry: Option<&'a ModuleRegistry>,
    pub templates: &'a Templates,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("rule {rule_id}: source predicate '{name}' is not in the source ontology")]
    UnresolvedSource { rule_id: String, name: String },
    #[error("rule {rule_id}: stage {stage}: {source}")]
    Backend { rule_id: String, stage: StageId, source: BackendError },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("the chain strategy needs a module registry")]
    NoRegistry,
    #[error("module ranking: {0}")]
    Ranking(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineResult {
    pub rule_id: String,
    pub strategy: Strategy,
    pub transcript: Transcript,
    pub responses: BTreeMap<StageId, String>,
    pub pre_module: DetectionSet,
    #[serde(rename = "final")]
    pub final_detections: DetectionSet,
    pub modules: Vec<String>,
    pub flags: BTreeSet<ScoreFlag>,
}

/// The per-rule detection file written by `align`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub rule_id: String,
    pub strategy: Strategy,
    #[serde(rename = "final")]
    pub final_detections: DetectionSet,
    pub pre_module: DetectionSet,
    pub modules: Vec<String>,
    pub flags: BTreeSet<ScoreFlag>,
}

impl DetectionRecord {
    pub fn file_name(rule_id: &str) -> String {
        format!("{rule_id}.detections.json")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("detections serialize");
        s.push('\n');
        s
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf, TranscriptError> {
        let path = dir.as_ref().join(Self::file_name(&self.rule_id));
        write_atomic(&path, &self.to_json())?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        let path = path.as_ref();
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| TranscriptError::Io { path: p.clone(), source })?;
        serde_json::from_str(&text).map_err(|source| TranscriptError::Json { path: p, source })
    }

    /// Every `*.detections.json` in `dir`, sorted by rule id.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>, TranscriptError> {
        let dir = dir.as_ref();
        let entries =
            std::fs::read_dir(dir).map_err(|source| TranscriptError::Io { path: dir.display().to_string(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".detections.json")))
            .collect();
        paths.sort();
        let mut out = paths.iter().map(Self::load).collect::<Result<Vec<_>, _>>()?;
        out.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));
        Ok(out)
    }
}

impl PipelineResult {
    pub fn detection_record(&self) -> DetectionRecord {
        DetectionRecord {
            rule_id: self.rule_id.clone(),
            strategy: self.strategy,
            final_detections: self.final_detections.clone(),
            pre_module: self.pre_module.clone(),
            modules: self.modules.clone(),
            flags: self.flags.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

struct Conversation<'a> {
    backend: &'a dyn ChatBackend,
    policy: &'a Policy,
    transcript: Transcript,
    messages: Vec<Message>,
    responses: BTreeMap<StageId, String>,
}

impl<'a> Conversation<'a> {
    fn new(rule_id: &str, strategy: Strategy, backend: &'a dyn ChatBackend, policy: &'a Policy) -> Self {
        Conversation {
            backend,
            policy,
            transcript: Transcript::new(rule_id, strategy, backend.descriptor()),
            messages: Vec::new(),
            responses: BTreeMap::new(),
        }
    }

    fn ask(&mut self, stage: StageId, prompt: String) -> Result<String, PipelineError> {
        self.messages.push(Message { role: Role::User, content: prompt.clone() });
        self.transcript.turns.push(Turn { stage, role: Role::User, content: prompt });
        let request = BackendRequest {
            model: self.policy.model.clone(),
            messages: self.messages.clone(),
            temperature: self.policy.temperature,
            context: RequestContext { rule_id: self.transcript.rule_id.clone(), stage },
        };
        let mut attempt = 0;
        let text = loop {
            match self.backend.complete(&request) {
                Ok(r) if !r.text.is_empty() => break r.text,
                Ok(_) => return Err(self.failure(stage, BackendError::Fatal("empty assistant text".into()))),
                Err(e) if e.is_transient() && attempt < self.policy.retries => {
                    attempt += 1;
                    self.transcript.metadata.retries.push(RetryNote { stage, attempt, error: e.to_string() });
                    std::thread::sleep(self.policy.retry_base_delay * 2u32.saturating_pow(attempt - 1));
                }
                Err(e) => return Err(self.failure(stage, e)),
            }
        };
        self.messages.push(Message { role: Role::Assistant, content: text.clone() });
        self.transcript.turns.push(Turn { stage, role: Role::Assistant, content: text.clone() });
        self.responses.insert(stage, text.clone());
        Ok(text)
    }

    fn failure(&self, stage: StageId, source: BackendError) -> PipelineError {
        PipelineError::Backend { rule_id: self.transcript.rule_id.clone(), stage, source }
    }
}

fn source_entities<'a>(rule: &AlignmentRule, inventory: &'a EntityInventory) -> Result<Vec<&'a EntityRecord>, PipelineError> {
    rule.source_pieces()
        .into_iter()
        .map(|name| {
            inventory
                .entities()
                .iter()
                .find(|r| r.local_name() == name)
                .ok_or_else(|| PipelineError::UnresolvedSource { rule_id: rule.id().to_string(), name: name.clone() })
        })
        .collect()
}

fn snippets(graph: &OntologyGraph, entities: &[&EntityRecord]) -> String {
    entities
        .iter()
        .filter_map(|e| serialize_snippet(graph, &e.iri).ok())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Ontology text cut to `budget` characters: the leading prefix block is
/// kept, then whole blank-line separated blocks in document order while
/// they fit. When the prefix block alone is too long it is cut hard.
pub fn truncate_ontology(text: &str, budget: usize) -> (String, bool) {
    if text.chars().count() <= budget {
        return (text.to_string(), false);
    }
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let is_directive = |l: &str| {
        let t = l.trim_start();
        let lower = t.to_ascii_lowercase();
        t.starts_with("@prefix") || t.starts_with("@base") || lower.starts_with("prefix ") || lower.starts_with("base ")
    };
    let mut head_end = 0;
    for (i, l) in lines.iter().enumerate() {
        let t = l.trim();
        if is_directive(l) {
            head_end = i + 1;
        } else if !(t.is_empty() || t.starts_with('#')) {
            break;
        }
    }
    let head: String = lines[..head_end].concat();
    if head.chars().count() > budget {
        return (head.chars().take(budget).collect(), true);
    }
    let mut out = head;
    let mut used = out.chars().count();
    let mut block = String::new();
    let flush = |block: &mut String, out: &mut String, used: &mut usize| -> bool {
        if block.trim().is_empty() {
            block.clear();
            return true;
        }
        let n = block.chars().count();
        if *used + n > budget {
            return false;
        }
        out.push_str(block);
        *used += n;
        block.clear();
        true
    };
    for l in &lines[head_end..] {
        block.push_str(l);
        if l.trim().is_empty() && !flush(&mut block, &mut out, &mut used) {
            return (out, true);
        }
    }
    flush(&mut block, &mut out, &mut used);
    (out, true)
}

fn prompt_ontology(text: &str, policy: &Policy) -> (String, bool) {
    match policy.char_budget {
        Some(b) => truncate_ontology(text, b),
        None => (text.to_string(), false),
    }
}

fn normalize_name(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace() && !matches!(c, '-' | '_')).flat_map(char::to_lowercase).collect()
}

/// Registry modules named in `text`, in order of first mention. Names are
/// compared lowercased with spaces, `-` and `_` removed, over whole words,
/// longest name first.
pub fn resolve_modules(text: &str, registry: &ModuleRegistry) -> Vec<String> {
    let by_key: BTreeMap<String, &str> = registry.names().into_iter().map(|n| (normalize_name(n), n)).collect();
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .map(normalize_name)
        .collect();
    let max_words = registry.names().iter().map(|n| n.split(|c: char| !c.is_alphanumeric()).count()).max().unwrap_or(1) + 4;
    let mut found: Vec<String> = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut key = String::new();
        let mut best = None;
        for (j, w) in words.iter().enumerate().skip(i).take(max_words) {
            key.push_str(w);
            if let Some(name) = by_key.get(&key) {
                best = Some((j, *name));
            }
        }
        match best {
            Some((j, name)) => {
                if !found.iter().any(|f| f == name) {
                    found.push(name.to_string());
                }
                i = j + 1;
            }
            None => i += 1,
        }
    }
    found
}

fn coverage(detected: &DetectionSet, expected: &BTreeSet<String>) -> f64 {
    if expected.is_empty() {
        return 0.0;
    }
    let pieces = detected.pieces();
    expected.intersection(&pieces).count() as f64 / expected.len() as f64
}

fn offers_examination(text: &str, patterns: &[String]) -> bool {
    let lower = text.to_lowercase();
    patterns.iter().any(|p| !p.is_empty() && lower.contains(&p.to_lowercase()))
}

/// The staged conversation: upload the target ontology, ask about the
/// source entities, accept an offer to look further, ask which modules are
/// related, then re-ask with those modules' descriptions.
pub fn run_chain(
    rule: &AlignmentRule,
    inputs: PipelineInputs<'_>,
    backend: &dyn ChatBackend,
    policy: &Policy,
) -> Result<PipelineResult, PipelineError> {
    let registry = inputs.registry.ok_or(PipelineError::NoRegistry)?;
    let entities = source_entities(rule, inputs.source_inventory)?;
    let names = [("source_name", inputs.source_name), ("target_name", inputs.target_name)];
    let with = |extra: &[(&'static str, &str)]| -> Vec<(&str, String)> {
        names.iter().chain(extra).map(|(k, v)| (*k, v.to_string())).collect()
    };
    let render = |name: TemplateName, vals: Vec<(&str, String)>| {
        let pairs: Vec<(&str, &str)> = vals.iter().map(|(k, v)| (*k, v.as_str())).collect();
        inputs.templates.render(name, &pairs)
    };
    let mut flags = BTreeSet::new();
    let mut conv = Conversation::new(rule.id(), Strategy::ChainOfThought, backend, policy);

    let (ontology_text, truncated) = prompt_ontology(inputs.target_text, policy);
    if truncated {
        flags.insert(ScoreFlag::TruncatedPrompt);
    }
    conv.ask(StageId::UploadOntology, render(TemplateName::UploadOntology, with(&[("ontology_text", &ontology_text)]))?)?;

    let snippet_text = snippets(inputs.source, &entities);
    let answer = conv.ask(StageId::QueryEntities, render(TemplateName::QueryEntities, with(&[("snippets", &snippet_text)]))?)?;
    let mut pre_module = extract(inputs.matcher, &answer, rule.id(), StageId::QueryEntities);

    if offers_examination(&answer, &policy.offer_patterns) {
        let answer = conv.ask(StageId::ConfirmManualExamination, render(TemplateName::Confirm, with(&[]))?)?;
        pre_module.merge(&extract(inputs.matcher, &answer, rule.id(), StageId::ConfirmManualExamination));
    }

    let expected = rule.target_pieces();
    let satisfied = policy.satisfaction_threshold > 0.0 && coverage(&pre_module, &expected) >= policy.satisfaction_threshold;
    let mut modules = Vec::new();
    let final_detections = if satisfied {
        pre_module.clone()
    } else {
        let list: Vec<String> = registry.names().iter().map(|n| format!("- {n}")).collect();
        let answer = conv.ask(StageId::SuggestModules, render(TemplateName::SuggestModules, with(&[("module_names", &list.join("\n"))]))?)?;
        modules = resolve_modules(&answer, registry);
        if modules.is_empty() {
            flags.insert(ScoreFlag::FallbackRanking);
            let owned: Vec<EntityRecord> = entities.iter().map(|e| (*e).clone()).collect();
            let ranked = rank_modules(&owned, registry, policy.top_k.max(1)).map_err(|e| PipelineError::Ranking(e.to_string()))?;
            modules = ranked.into_iter().map(|(n, _)| n).collect();
        }
        let blocks: Vec<String> = modules
            .iter()
            .filter_map(|n| registry.get(n))
            .map(|m| format!("Module: {}\n{}", m.name, description_block(m)))
            .collect();
        let answer = conv.ask(StageId::ModuleInfoRequery, render(TemplateName::ModuleInfo, with(&[("module_blocks", &blocks.join("\n"))]))?)?;
        flags.insert(ScoreFlag::UsedModuleInfo);
        extract(inputs.matcher, &answer, rule.id(), StageId::ModuleInfoRequery)
    };

    Ok(PipelineResult {
        rule_id: rule.id().to_string(),
        strategy: Strategy::ChainOfThought,
        transcript: conv.transcript,
        responses: conv.responses,
        pre_module,
        final_detections,
        modules,
        flags,
    })
}

/// One prompt carrying the ontology, the snippets and the question.
pub fn run_zero_shot(
    rule: &AlignmentRule,
    inputs: PipelineInputs<'_>,
    backend: &dyn ChatBackend,
    policy: &Policy,
) -> Result<PipelineResult, PipelineError> {
    let entities = source_entities(rule, inputs.source_inventory)?;
    let mut flags = BTreeSet::new();
    let (ontology_text, truncated) = prompt_ontology(inputs.target_text, policy);
    if truncated {
        flags.insert(ScoreFlag::TruncatedPrompt);
    }
    let snippet_text = snippets(inputs.source, &entities);
    let prompt = inputs.templates.render(
        TemplateName::ZeroShot,
        &[
            ("source_name", inputs.source_name),
            ("target_name", inputs.target_name),
            ("ontology_text", &ontology_text),
            ("snippets", &snippet_text),
        ],
    )?;
    let mut conv = Conversation::new(rule.id(), Strategy::ZeroShot, backend, policy);
    let answer = conv.ask(StageId::ZeroShot, prompt)?;
    let detections = extract(inputs.matcher, &answer, rule.id(), StageId::ZeroShot);
    Ok(PipelineResult {
        rule_id: rule.id().to_string(),
        strategy: Strategy::ZeroShot,
        transcript: conv.transcript,
        responses: conv.responses,
        pre_module: detections.clone(),
        final_detections: detections,
        modules: Vec::new(),
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::parse_registry;

    #[test]
    fn module_name_resolution() {
        let reg = parse_registry(
            "name: FundingAward\ndescription: a\n---\nname: Person\ndescription: b\n---\nname: PersonName\ndescription: c\n---\nname: Event\ndescription: d\n",
        )
        .unwrap();
        assert_eq!(resolve_modules("The Funding Award module is the best fit.", &reg), ["FundingAward"]);
        assert_eq!(resolve_modules("funding_award, then person-name", &reg), ["FundingAward", "PersonName"]);
        assert_eq!(resolve_modules("Person, and to prevent confusion, nothing else", &reg), ["Person"]);
        assert!(resolve_modules("none of them", &reg).is_empty());
    }

    #[test]
    fn truncation_keeps_prefixes_and_whole_blocks() {
        let text = "@prefix a: <http://a#> .\n@prefix b: <http://b#> .\n\n###  x\na:X a a:C .\n\n###  y\na:Y a a:C .\n";
        assert_eq!(truncate_ontology(text, 1000), (text.to_string(), false));
        let (cut, flag) = truncate_ontology(text, 70);
        assert!(flag);
        assert!(cut.starts_with("@prefix a: <http://a#> .\n@prefix b: <http://b#> .\n"));
        assert!(cut.contains("a:X a a:C ."));
        assert!(!cut.contains("a:Y"));
        assert!(cut.chars().count() <= 70);
        let (cut, flag) = truncate_ontology(text, 10);
        assert!(flag);
        assert_eq!(cut, "@prefix a:");
    }

    #[test]
    fn offer_detection_is_case_insensitive() {
        let p = Policy::default().offer_patterns;
        assert!(offers_examination("... WOULD YOU LIKE ME TO perform this?", &p));
        assert!(!offers_examination("Here are the results.", &p));
    }
}
