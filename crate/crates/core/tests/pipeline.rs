use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use modalign::extract::{build_matcher, AliasConfig, Matcher};
use modalign::orchestrator::{
    run_chain, run_zero_shot, BackendError, BackendRequest, BackendResponse, ChatBackend, CountingBackend,
    PipelineError, PipelineInputs, Policy, RecordingBackend, ReplayBackend, ReplayStore, Role, ScriptedBackend, StageId,
    Templates, Transcript,
};
use modalign::rdf::{build_inventory, parse_turtle, EntityInventory, OntologyGraph};
use modalign::registry::{load_registry, ModuleRegistry};
use modalign::rules::{load_reference, ReferenceAlignment};
use modalign::scoring::{score_rule, ScoreFlag};
use modalign::RuleScore;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

struct World {
    source: OntologyGraph,
    source_inventory: EntityInventory,
    target_text: String,
    matcher: Matcher,
    registry: ModuleRegistry,
    templates: Templates,
    rules: ReferenceAlignment,
}

impl World {
    fn load() -> Self {
        let source = parse_turtle(&std::fs::read_to_string(fixture("gbo.ttl")).unwrap(), "gbo.ttl").unwrap();
        let target_text = std::fs::read_to_string(fixture("gmo.ttl")).unwrap();
        let target = parse_turtle(&target_text, "gmo.ttl").unwrap();
        let matcher = build_matcher(&build_inventory(&target), &AliasConfig::default()).unwrap();
        World {
            source_inventory: build_inventory(&source),
            source,
            target_text,
            matcher,
            registry: load_registry(fixture("registry.txt")).unwrap(),
            templates: Templates::builtin(),
            rules: load_reference(fixture("rules.txt")).unwrap(),
        }
    }

    fn inputs(&self) -> PipelineInputs<'_> {
        PipelineInputs {
            source: &self.source,
            source_inventory: &self.source_inventory,
            source_name: "GBO",
            target_text: &self.target_text,
            target_name: "GMO",
            matcher: &self.matcher,
            registry: Some(&self.registry),
            templates: &self.templates,
        }
    }
}

fn script() -> ScriptedBackend {
    ScriptedBackend::load(fixture("script.json")).unwrap()
}

fn fast_policy() -> Policy {
    Policy { retry_base_delay: Duration::from_millis(1), ..Policy::default() }
}

fn pieces(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn running_example_reaches_full_recall_after_module_info() {
    let w = World::load();
    let rule = w.rules.get("r1").unwrap();
    let r = run_chain(rule, w.inputs(), &script(), &Policy::default()).unwrap();
    assert_eq!(
        r.transcript.stages(),
        [
            StageId::UploadOntology,
            StageId::QueryEntities,
            StageId::ConfirmManualExamination,
            StageId::SuggestModules,
            StageId::ModuleInfoRequery
        ]
    );
    assert_eq!(r.modules, ["FundingAward"]);
    assert_eq!(r.pre_module.pieces(), pieces(&["AwardAmount", "Program"]));
    assert_eq!(
        r.final_detections.pieces(),
        pieces(&["CoPrincipalInvestigatorRole", "FundingAward", "performedBy", "providesAgentRole"])
    );
    assert!(r.flags.contains(&ScoreFlag::UsedModuleInfo));

    let expected = rule.target_pieces();
    let full: RuleScore = score_rule("r1", &expected, &r.final_detections.pieces()).unwrap();
    assert_eq!((full.recall, full.precision), (1.0, 1.0));
    let before: RuleScore = score_rule("r1", &expected, &r.pre_module.pieces()).unwrap();
    assert_eq!((before.recall, before.precision), (0.0, 0.0));
}

#[test]
fn module_prompt_carries_the_suggested_block() {
    let w = World::load();
    let r = run_chain(w.rules.get("r1").unwrap(), w.inputs(), &script(), &Policy::default()).unwrap();
    let prompt = r
        .transcript
        .turns
        .iter()
        .find(|t| t.stage == StageId::ModuleInfoRequery && t.role == Role::User)
        .unwrap();
    assert!(prompt.content.contains("Module: FundingAward\n"));
    assert!(prompt.content.contains("ObjectProperty: providesAgentRole"));
    assert!(!prompt.content.contains("Module: Person"));
    let snippet = &r.transcript.turns[2].content;
    assert!(snippet.contains("owl:unionOf"));
    assert!(snippet.contains("hasCoPrincipalInvestigator"));
}

#[test]
fn satisfied_rule_skips_module_stages() {
    let w = World::load();
    let r = run_chain(w.rules.get("r2").unwrap(), w.inputs(), &script(), &Policy::default()).unwrap();
    assert_eq!(r.transcript.stages(), [StageId::UploadOntology, StageId::QueryEntities]);
    assert_eq!(r.final_detections.pieces(), pieces(&["Program"]));
    assert!(!r.flags.contains(&ScoreFlag::UsedModuleInfo));

    // A threshold of 0 never counts as satisfied.
    let policy = Policy { satisfaction_threshold: 0.0, ..Policy::default() };
    let mut backend = script();
    backend.rules.get_mut("r2").unwrap().insert(StageId::SuggestModules, "Program".into());
    backend.rules.get_mut("r2").unwrap().insert(StageId::ModuleInfoRequery, "gmo#Program again".into());
    let r = run_chain(w.rules.get("r2").unwrap(), w.inputs(), &backend, &policy).unwrap();
    assert_eq!(r.transcript.user_turns(), 4);
}

#[test]
fn builtin_target_of_subclass_rule() {
    let w = World::load();
    let rule = w.rules.get("r3").unwrap();
    let r = run_chain(rule, w.inputs(), &script(), &Policy::default()).unwrap();
    assert_eq!(r.modules, ["Place"]);
    assert_eq!(r.final_detections.pieces(), pieces(&["Place"]));
    assert_eq!(rule.target_pieces(), pieces(&["Place"]));
}

#[test]
fn unresolvable_module_answer_falls_back_to_ranking() {
    let w = World::load();
    let mut backend = script();
    backend.rules.get_mut("r1").unwrap().insert(StageId::SuggestModules, "None of them, sorry.".into());
    let r = run_chain(w.rules.get("r1").unwrap(), w.inputs(), &backend, &Policy::default()).unwrap();
    assert!(r.flags.contains(&ScoreFlag::FallbackRanking));
    assert_eq!(r.modules, ["FundingAward"]);
}

#[test]
fn zero_shot_is_one_exchange() {
    let w = World::load();
    let r = run_zero_shot(w.rules.get("r1").unwrap(), w.inputs(), &script(), &Policy::default()).unwrap();
    assert_eq!(r.transcript.turns.len(), 2);
    assert_eq!(r.transcript.stages(), [StageId::ZeroShot]);
    assert_eq!(r.final_detections, r.pre_module);
    assert_eq!(r.final_detections.pieces(), pieces(&["AwardAmount"]));
    let prompt = &r.transcript.turns[0].content;
    assert!(prompt.contains("gmo:FundingAward a owl:Class"));
    assert!(prompt.contains("main:hasCoPrincipalInvestigator"));
}

#[test]
fn recorded_run_replays_byte_identically() {
    let w = World::load();
    let recorder = RecordingBackend::new(script());
    let mut recorded = Vec::new();
    for rule in &w.rules.rules {
        recorded.push(run_chain(rule, w.inputs(), &recorder, &Policy::default()).unwrap());
    }
    let transcripts: Vec<Transcript> = recorded.iter().map(|r| r.transcript.clone()).collect();
    let store = ReplayStore::from_transcripts(&transcripts);
    assert_eq!(store, recorder.to_store());

    let replay = CountingBackend::new(ReplayBackend::new(store));
    for rec in &recorded {
        let rule = w.rules.get(&rec.rule_id).unwrap();
        let again = run_chain(rule, w.inputs(), &replay, &Policy::default()).unwrap();
        assert_eq!(again.responses, rec.responses);
        assert_eq!(again.detection_record().to_json(), rec.detection_record().to_json());
        assert_eq!(again.transcript.turns, rec.transcript.turns);
    }
    assert_eq!(replay.calls(), recorded.iter().map(|r| r.transcript.user_turns()).sum::<usize>());
}

#[test]
fn changed_prompt_misses_the_replay_store() {
    let w = World::load();
    let recorder = RecordingBackend::new(script());
    run_chain(w.rules.get("r1").unwrap(), w.inputs(), &recorder, &Policy::default()).unwrap();
    let replay = ReplayBackend::new(recorder.to_store());
    let policy = Policy { char_budget: Some(400), ..Policy::default() };
    let err = run_chain(w.rules.get("r1").unwrap(), w.inputs(), &replay, &policy).unwrap_err();
    assert!(matches!(
        err,
        PipelineError::Backend { stage: StageId::UploadOntology, source: BackendError::ReplayMiss { .. }, .. }
    ));
}

/// Fails with a transient error the first `failures` times it is called.
struct Flaky {
    inner: ScriptedBackend,
    failures: usize,
    calls: AtomicUsize,
    fatal: bool,
}

impl ChatBackend for Flaky {
    fn complete(&self, request: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        if n < self.failures {
            return Err(if self.fatal { BackendError::Fatal("bad request".into()) } else { BackendError::Transient("HTTP 503".into()) });
        }
        self.inner.complete(request)
    }

    fn descriptor(&self) -> String {
        "flaky".into()
    }
}

#[test]
fn transient_errors_are_retried_and_noted() {
    let w = World::load();
    let flaky = Flaky { inner: script(), failures: 2, calls: AtomicUsize::new(0), fatal: false };
    let r = run_chain(w.rules.get("r2").unwrap(), w.inputs(), &flaky, &fast_policy()).unwrap();
    assert_eq!(r.transcript.metadata.retries.len(), 2);
    assert_eq!(r.transcript.metadata.retries[1].attempt, 2);
    assert_eq!(flaky.calls.load(Ordering::SeqCst), 4);

    let flaky = Flaky { inner: script(), failures: 10, calls: AtomicUsize::new(0), fatal: false };
    let err = run_chain(w.rules.get("r2").unwrap(), w.inputs(), &flaky, &fast_policy()).unwrap_err();
    assert!(matches!(err, PipelineError::Backend { source: BackendError::Transient(_), .. }));
    assert_eq!(flaky.calls.load(Ordering::SeqCst), 4);
}

#[test]
fn fatal_errors_are_not_retried() {
    let w = World::load();
    let flaky = Flaky { inner: script(), failures: 1, calls: AtomicUsize::new(0), fatal: true };
    let err = run_chain(w.rules.get("r2").unwrap(), w.inputs(), &flaky, &fast_policy()).unwrap_err();
    assert!(matches!(err, PipelineError::Backend { stage: StageId::UploadOntology, source: BackendError::Fatal(_), .. }));
    assert_eq!(flaky.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn transcripts_round_trip_through_files() {
    let w = World::load();
    let dir = tempfile::tempdir().unwrap();
    let r = run_chain(w.rules.get("r1").unwrap(), w.inputs(), &script(), &Policy::default()).unwrap();
    let path = r.transcript.save(dir.path()).unwrap();
    r.detection_record().save(dir.path()).unwrap();
    assert_eq!(Transcript::load(&path).unwrap(), r.transcript);
    let store = ReplayStore::from_dir(dir.path()).unwrap();
    assert!(store.has_rule("r1"));
    assert_eq!(store.len(), 5);
}
