use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stage::StageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ChainOfThought,
    ZeroShot,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chain" | "chain-of-thought" => Ok(Strategy::ChainOfThought),
            "zero-shot" => Ok(Strategy::ZeroShot),
            other => Err(format!("unknown strategy '{other}' (chain, zero-shot)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub stage: StageId,
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryNote {
    pub stage: StageId,
    pub attempt: u32,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptMetadata {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retries: Vec<RetryNote>,
}

impl TranscriptMetadata {
    fn is_empty(&self) -> bool {
        self.retries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub rule_id: String,
    pub strategy: Strategy,
    pub backend: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "TranscriptMetadata::is_empty")]
    pub metadata: TranscriptMetadata,
}

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

impl Transcript {
    pub fn new(rule_id: impl Into<String>, strategy: Strategy, backend: impl Into<String>) -> Self {
        Transcript {
            rule_id: rule_id.into(),
            strategy,
            backend: backend.into(),
            turns: Vec::new(),
            metadata: TranscriptMetadata::default(),
        }
    }

    pub fn user_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.role == Role::User).count()
    }

    pub fn stages(&self) -> Vec<StageId> {
        let mut out: Vec<StageId> = Vec::new();
        for t in &self.turns {
            if out.last() != Some(&t.stage) {
                out.push(t.stage);
            }
        }
        out
    }

    pub fn response(&self, stage: StageId) -> Option<&str> {
        self.turns
            .iter()
            .find(|t| t.stage == stage && t.role == Role::Assistant)
            .map(|t| t.content.as_str())
    }

    /// Checks the structural invariants: non-empty content, user/assistant
    /// alternation starting with the user, stages never going backwards.
    pub fn validate(&self) -> Result<(), String> {
        let mut last_stage = None;
        for (i, t) in self.turns.iter().enumerate() {
            if t.content.is_empty() {
                return Err(format!("turn {i} is empty"));
            }
            let want = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if t.role != want {
                return Err(format!("turn {i} should be {}", want.as_str()));
            }
            if i % 2 == 1 && Some(t.stage) != last_stage {
                return Err(format!("turn {i} answers a different stage"));
            }
            if last_stage.is_some_and(|s| t.stage < s) {
                return Err(format!("turn {i} goes back to stage {}", t.stage));
            }
            last_stage = Some(t.stage);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("transcript serializes");
        s.push('\n');
        s
    }

    pub fn file_name(rule_id: &str) -> String {
        format!("{rule_id}.json")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        let path = path.as_ref();
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| TranscriptError::Io { path: p.clone(), source })?;
        let t: Transcript =
            serde_json::from_str(&text).map_err(|source| TranscriptError::Json { path: p.clone(), source })?;
        t.validate().map_err(|message| TranscriptError::Invalid { path: p, message })?;
        Ok(t)
    }

    /// Writes `<dir>/<rule_id>.json` through a temporary file and rename.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf, TranscriptError> {
        let path = dir.as_ref().join(Self::file_name(&self.rule_id));
        write_atomic(&path, &self.to_json())?;
        Ok(path)
    }
}

pub(crate) fn write_atomic(path: &Path, text: &str) -> Result<(), TranscriptError> {
    let io = |source| TranscriptError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

/// Every `*.json` transcript in `dir`, sorted by rule id.
pub fn load_transcripts(dir: impl AsRef<Path>) -> Result<Vec<Transcript>, TranscriptError> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|source| TranscriptError::Io { path: dir.display().to_string(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".detections.json"))
        })
        .collect();
    paths.sort();
    let mut out = paths.iter().map(Transcript::load).collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|a, b| a.rule_id.cmp(&b.rule_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn turn(stage: StageId, role: Role, content: &str) -> Turn {
        Turn { stage, role, content: content.into() }
    }

    #[test]
    fn validation() {
        let mut t = Transcript::new("r1", Strategy::ChainOfThought, "scripted");
        t.turns.push(turn(StageId::UploadOntology, Role::User, "u"));
        t.turns.push(turn(StageId::UploadOntology, Role::Assistant, "a"));
        t.turns.push(turn(StageId::QueryEntities, Role::User, "q"));
        t.turns.push(turn(StageId::QueryEntities, Role::Assistant, "b"));
        assert!(t.validate().is_ok());
        assert_eq!(t.stages(), [StageId::UploadOntology, StageId::QueryEntities]);
        assert_eq!(t.response(StageId::QueryEntities), Some("b"));
        let mut back = t.clone();
        back.turns.push(turn(StageId::UploadOntology, Role::User, "x"));
        assert!(back.validate().is_err());
        let mut twice = t.clone();
        twice.turns.push(turn(StageId::SuggestModules, Role::Assistant, "x"));
        assert!(twice.validate().is_err());
    }

    #[test]
    fn json_round_trip_and_store() {
        let mut t = Transcript::new("r1", Strategy::ZeroShot, "replay");
        t.turns.push(turn(StageId::ZeroShot, Role::User, "u"));
        t.turns.push(turn(StageId::ZeroShot, Role::Assistant, "a"));
        let json = t.to_json();
        assert!(json.contains("\"strategy\": \"zero-shot\""));
        assert!(!json.contains("metadata"));
        let dir = tempfile::tempdir().unwrap();
        t.save(dir.path()).unwrap();
        std::fs::write(dir.path().join("r1.detections.json"), "{}").unwrap();
        assert_eq!(load_transcripts(dir.path()).unwrap(), vec![t]);
    }
}
