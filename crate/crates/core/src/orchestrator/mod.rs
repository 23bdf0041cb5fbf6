//! Staged chat conversation, backends, prompt templates and transcripts.

mod backend;
mod http;
mod pipeline;
mod stage;
mod templates;
mod transcript;

pub use backend::{
    request_digest, BackendError, BackendRequest, BackendResponse, ChatBackend, CountingBackend, Exchange, Message,
    RecordingBackend, ReplayBackend, ReplayStore, RequestContext, ScriptedBackend,
};
pub use http::{requests_sent, HttpBackend};
pub use pipeline::{
    resolve_modules, run_chain, run_zero_shot, truncate_ontology, DetectionRecord, PipelineError, PipelineInputs,
    PipelineResult, Policy,
};
pub use stage::StageId;
pub use templates::{TemplateError, TemplateName, Templates, PLACEHOLDERS};
pub use transcript::{load_transcripts, RetryNote, Role, Strategy, Transcript, TranscriptError, TranscriptMetadata, Turn};
