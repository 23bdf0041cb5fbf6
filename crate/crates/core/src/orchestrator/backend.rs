use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::stage::StageId;
use super::transcript::{Role, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

/// Which rule and stage a request belongs to. Not sent over the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestContext {
    pub rule_id: String,
    pub stage: StageId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub context: RequestContext,
}

impl BackendRequest {
    /// Hex SHA-256 over the stage and the user messages in order. Assistant
    /// text is left out so that editing a stored answer does not change the
    /// keys of later stages.
    pub fn digest(&self) -> String {
        request_digest(self.context.stage, self.messages.iter().filter(|m| m.role == Role::User).map(|m| m.content.as_str()))
    }
}

pub fn request_digest<'a>(stage: StageId, user_contents: impl Iterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    h.update(stage.name().as_bytes());
    for c in user_contents {
        h.update([0u8]);
        h.update((c.len() as u64).to_le_bytes());
        h.update(c.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    pub finish: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// Worth retrying: network trouble, rate limits, server errors.
    #[error("transient backend failure: {0}")]
    Transient(String),
    #[error("backend failure: {0}")]
    Fatal(String),
    #[error("no stored response for rule {rule_id} at stage {stage} (digest {digest})")]
    ReplayMiss { rule_id: String, stage: StageId, digest: String },
}

impl BackendError {
    pub fn is_transient(&self) -> bool {
        matches!(self, BackendError::Transient(_))
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError>;

    /// Short description stored in transcripts, e.g. `replay` or
    /// `http:gpt-4`. Never includes credentials.
    fn descriptor(&self) -> String;
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).complete(request)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        (**self).complete(request)
    }

    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
}

/// Counts calls to the wrapped backend.
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
}

impl<B: ChatBackend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        CountingBackend { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: ChatBackend> ChatBackend for CountingBackend<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ReplayKey {
    rule_id: String,
    stage: StageId,
    digest: String,
}

/// Stored answers keyed by rule, stage and request digest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplayStore {
    entries: BTreeMap<ReplayKey, String>,
}

impl ReplayStore {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, rule_id: &str, stage: StageId, digest: String, text: String) {
        self.entries.insert(ReplayKey { rule_id: rule_id.to_string(), stage, digest }, text);
    }

    pub fn add_transcript(&mut self, t: &Transcript) {
        let mut users: Vec<&str> = Vec::new();
        for turn in &t.turns {
            match turn.role {
                Role::User => users.push(&turn.content),
                Role::Assistant => {
                    let digest = request_digest(turn.stage, users.iter().copied());
                    self.insert(&t.rule_id, turn.stage, digest, turn.content.clone());
                }
            }
        }
    }

    pub fn from_transcripts<'a>(ts: impl IntoIterator<Item = &'a Transcript>) -> Self {
        let mut store = ReplayStore::default();
        for t in ts {
            store.add_transcript(t);
        }
        store
    }

    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, super::TranscriptError> {
        Ok(Self::from_transcripts(&super::load_transcripts(dir)?))
    }

    pub fn has_rule(&self, rule_id: &str) -> bool {
        self.entries.keys().any(|k| k.rule_id == rule_id)
    }
}

/// Serves stored responses; never touches the network.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    store: ReplayStore,
}

impl ReplayBackend {
    pub fn new(store: ReplayStore) -> Self {
        ReplayBackend { store }
    }

    pub fn store(&self) -> &ReplayStore {
        &self.store
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let key = ReplayKey {
            rule_id: request.context.rule_id.clone(),
            stage: request.context.stage,
            digest: request.digest(),
        };
        match self.store.entries.get(&key) {
            Some(text) => Ok(BackendResponse { text: text.clone(), finish: "stop".into() }),
            None => Err(BackendError::ReplayMiss { rule_id: key.rule_id, stage: key.stage, digest: key.digest }),
        }
    }

    fn descriptor(&self) -> String {
        "replay".into()
    }
}

/// One request/response pair seen by a [`RecordingBackend`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub rule_id: String,
    pub stage: StageId,
    pub digest: String,
    pub messages: Vec<Message>,
    pub response: String,
}

/// Wraps a backend and keeps every successful exchange.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<Vec<Exchange>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().expect("recording lock").clone()
    }

    pub fn to_store(&self) -> ReplayStore {
        let mut store = ReplayStore::default();
        for e in self.exchanges() {
            store.insert(&e.rule_id, e.stage, e.digest, e.response);
        }
        store
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let response = self.inner.complete(request)?;
        self.log.lock().expect("recording lock").push(Exchange {
            rule_id: request.context.rule_id.clone(),
            stage: request.context.stage,
            digest: request.digest(),
            messages: request.messages.clone(),
            response: response.text.clone(),
        });
        Ok(response)
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }
}

/// Canned answers per rule and stage, read from JSON:
///
/// ```json
/// {"default": "I have read the file.",
///  "rules": {"r1": {"query-entities": "...", "module-info-requery": "..."}}}
/// ```
///
/// A stage without an entry gets `default`. Used to produce replay stores
/// without a live model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedBackend {
    #[serde(default)]
    pub default: Option<String>,
    #[serde(default)]
    pub rules: BTreeMap<String, BTreeMap<StageId, String>>,
}

impl ScriptedBackend {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::Fatal(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| BackendError::Fatal(format!("{}: {e}", path.display())))
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let ctx = &request.context;
        let text = self
            .rules
            .get(&ctx.rule_id)
            .and_then(|stages| stages.get(&ctx.stage))
            .or(self.default.as_ref())
            .ok_or_else(|| BackendError::Fatal(format!("no scripted answer for rule {} at stage {}", ctx.rule_id, ctx.stage)))?;
        Ok(BackendResponse { text: text.clone(), finish: "stop".into() })
    }

    fn descriptor(&self) -> String {
        "scripted".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(rule: &str, stage: StageId, msgs: &[(Role, &str)]) -> BackendRequest {
        BackendRequest {
            model: "m".into(),
            messages: msgs.iter().map(|(r, c)| Message { role: *r, content: c.to_string() }).collect(),
            temperature: 0.0,
            context: RequestContext { rule_id: rule.into(), stage },
        }
    }

    #[test]
    fn digest_ignores_assistant_text() {
        let a = request("r", StageId::QueryEntities, &[(Role::User, "u1"), (Role::Assistant, "a"), (Role::User, "u2")]);
        let b = request("r", StageId::QueryEntities, &[(Role::User, "u1"), (Role::Assistant, "b"), (Role::User, "u2")]);
        assert_eq!(a.digest(), b.digest());
        let c = request("r", StageId::SuggestModules, &[(Role::User, "u1"), (Role::Assistant, "a"), (Role::User, "u2")]);
        assert_ne!(a.digest(), c.digest());
        // Length framing keeps ["ab"] and ["a", "b"] apart.
        assert_ne!(
            request_digest(StageId::ZeroShot, ["ab"].into_iter()),
            request_digest(StageId::ZeroShot, ["a", "b"].into_iter())
        );
    }

    #[test]
    fn record_then_replay() {
        let script = ScriptedBackend::from_json(r#"{"default": "ok", "rules": {"r": {"query-entities": "q"}}}"#).unwrap();
        let rec = RecordingBackend::new(script);
        let req = request("r", StageId::QueryEntities, &[(Role::User, "hello")]);
        assert_eq!(rec.complete(&req).unwrap().text, "q");
        let replay = CountingBackend::new(ReplayBackend::new(rec.to_store()));
        assert_eq!(replay.complete(&req).unwrap().text, "q");
        let miss = request("r", StageId::ModuleInfoRequery, &[(Role::User, "hello")]);
        let err = replay.complete(&miss).unwrap_err();
        assert!(matches!(err, BackendError::ReplayMiss { stage: StageId::ModuleInfoRequery, .. }));
        assert!(err.to_string().contains("module-info-requery"));
        assert_eq!(replay.calls(), 2);
    }

    #[test]
    fn scripted_without_default_fails() {
        let script = ScriptedBackend::from_json(r#"{"rules": {}}"#).unwrap();
        let err = script.complete(&request("r", StageId::UploadOntology, &[(Role::User, "x")])).unwrap_err();
        assert!(!err.is_transient());
    }
}
