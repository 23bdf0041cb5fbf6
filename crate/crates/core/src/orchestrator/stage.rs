use serde::{Deserialize, Serialize};

/// Steps of the staged conversation, in the order they run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageId {
    UploadOntology,
    QueryEntities,
    ConfirmManualExamination,
    SuggestModules,
    ModuleInfoRequery,
    /// Single prompt carrying the ontology, snippets and question at once.
    ZeroShot,
}

impl StageId {
    pub const CHAIN: [StageId; 5] = [
        StageId::UploadOntology,
        StageId::QueryEntities,
        StageId::ConfirmManualExamination,
        StageId::SuggestModules,
        StageId::ModuleInfoRequery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StageId::UploadOntology => "upload-ontology",
            StageId::QueryEntities => "query-entities",
            StageId::ConfirmManualExamination => "confirm-manual-examination",
            StageId::SuggestModules => "suggest-modules",
            StageId::ModuleInfoRequery => "module-info-requery",
            StageId::ZeroShot => "zero-shot",
        }
    }

    /// Stages whose answers count as detections before module information
    /// is given.
    pub fn is_pre_module(self) -> bool {
        matches!(self, StageId::QueryEntities | StageId::ConfirmManualExamination | StageId::ZeroShot)
    }
}

impl std::fmt::Display for StageId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StageId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageId::CHAIN
            .into_iter()
            .chain([StageId::ZeroShot])
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown stage '{s}'"))
    }
}
