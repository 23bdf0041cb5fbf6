use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn modalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modalign")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn align(rules: &Path, backend: &[&str], out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "align",
        "--source",
        s(&fixture("gbo.ttl")).to_owned().leak(),
        "--target",
        s(&fixture("gmo.ttl")).to_owned().leak(),
        "--registry",
        s(&fixture("registry.txt")).to_owned().leak(),
        "--rules",
        s(rules),
        "--out",
        s(out),
    ];
    args.extend_from_slice(backend);
    args.extend_from_slice(extra);
    modalign(&args)
}

#[test]
fn inspect_counts_entities() {
    let o = modalign(&["inspect", s(&fixture("gbo_snippet.ttl"))]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("classes: 1, object-properties: 1"));
    assert!(text.contains("class Award"));
    assert!(text.contains("object-property hasCoPrincipalInvestigator"));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.ttl");
    std::fs::write(&empty, "").unwrap();
    assert!(stdout(&modalign(&["inspect", s(&empty)])).starts_with("classes: 0, object-properties: 0, data-properties: 0"));

    let bad = dir.path().join("bad.ttl");
    std::fs::write(&bad, "@prefix x: <http://x#> .\nx:a x:b .\n").unwrap();
    let o = modalign(&["inspect", s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.ttl:2:"));
}

#[test]
fn snippet_by_name_and_prefix() {
    let a = modalign(&["snippet", s(&fixture("gbo.ttl")), "hasCoPrincipalInvestigator"]);
    let b = modalign(&["snippet", s(&fixture("gbo.ttl")), "main:hasCoPrincipalInvestigator"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("owl:unionOf"));
    assert_eq!(code(&modalign(&["snippet", s(&fixture("gbo.ttl")), "Nope"])), 2);
}

#[test]
fn suggest_ranks_funding_award_first() {
    let o = modalign(&[
        "suggest",
        "--registry",
        s(&fixture("registry.txt")),
        "--source",
        s(&fixture("gbo.ttl")),
        "--entities",
        "Award,hasCoPrincipalInvestigator",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("FundingAward\t"));
}

#[test]
fn align_replay_writes_outputs_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("two.txt");
    std::fs::write(&rules, std::fs::read_to_string(fixture("rules.txt")).unwrap().lines().take(4).collect::<Vec<_>>().join("\n")).unwrap();
    let out = dir.path().join("out");
    let replay = s(&fixture("replay")).to_owned();
    let o = align(&rules, &["--replay", &replay], &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_dir(out.join("transcripts")).unwrap().count(), 2);
    assert_eq!(std::fs::read_dir(out.join("detections")).unwrap().count(), 2);
    assert!(stdout(&o).contains("backend connections: 0"));

    let again = align(&rules, &["--replay", &replay], &out, &[]);
    assert_eq!(code(&again), 0);
    assert!(stdout(&again).contains("r1: skipped"));
    assert!(stdout(&again).contains("r2: skipped"));
    let forced = align(&rules, &["--replay", &replay], &out, &["--force", "--jobs", "2"]);
    assert!(stdout(&forced).contains("aligned 2, skipped 0, failed 0"));
}

#[test]
fn replay_store_missing_a_rule_fails_that_rule_only() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("replay");
    std::fs::create_dir(&replay).unwrap();
    std::fs::copy(fixture("replay/r1.json"), replay.join("r1.json")).unwrap();
    let rules = dir.path().join("two.txt");
    std::fs::write(&rules, std::fs::read_to_string(fixture("rules.txt")).unwrap().lines().take(4).collect::<Vec<_>>().join("\n")).unwrap();
    let out = dir.path().join("out");
    let o = align(&rules, &["--replay", s(&replay)], &out, &[]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("aligned 1, skipped 0, failed 1"));
    assert!(std::fs::read_to_string(out.join("failures.txt")).unwrap().starts_with("r2: "));
}

#[test]
fn score_running_example_and_pre_module() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    align(&fixture("running_example.txt"), &["--replay", s(&fixture("replay"))], &out, &[]);
    let o = modalign(&["score", "--rules", s(&fixture("running_example.txt")), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "r1,4,4,4,1.0000,1.0000,used-module-info");

    let o = modalign(&["score", "--rules", s(&fixture("running_example.txt")), "--out", s(&out), "--stage", "pre-module"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "r1,4,2,0,0.0000,0.0000,");
}

const FOUR_RULES: &str = "# source: GBO
# target: GMO
q1: Award(x) & hasCoPrincipalInvestigator(x,z) <-> FundingAward(x) & providesAgentRole(x,y) & CoPrincipalInvestigatorRole(y) & performedBy(y,z)
q2: Award(x) & hasCoPrincipalInvestigator(x,z) <-> FundingAward(x) & providesAgentRole(x,y) & CoPrincipalInvestigatorRole(y) & performedBy(y,z)
q3: Award(x) & hasCoPrincipalInvestigator(x,z) <-> FundingAward(x) & providesAgentRole(x,y) & CoPrincipalInvestigatorRole(y) & performedBy(y,z)
q4: Award(x) & hasCoPrincipalInvestigator(x,z) <-> FundingAward(x) & providesAgentRole(x,y) & CoPrincipalInvestigatorRole(y) & performedBy(y,z)
";

const FOUR_ANSWERS: &str = r#"{"rules": {
  "q1": {"zero-shot": "FundingAward, providesAgentRole, CoPrincipalInvestigatorRole and performedBy."},
  "q2": {"zero-shot": "FundingAward, providesAgentRole and CoPrincipalInvestigatorRole."},
  "q3": {"zero-shot": "FundingAward and providesAgentRole."},
  "q4": {"zero-shot": "Nothing in the file matches."}
}}"#;

#[test]
fn four_rule_aggregate_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("four.txt");
    let script = dir.path().join("four.json");
    std::fs::write(&rules, FOUR_RULES).unwrap();
    std::fs::write(&script, FOUR_ANSWERS).unwrap();
    let out = dir.path().join("out");
    let o = align(&rules, &["--script", s(&script)], &out, &["--strategy", "zero-shot"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = modalign(&["score", "--rules", s(&rules), "--out", s(&out), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // Recall [1, 0.75, 0.5, 0]; precision [1, 1, 1, 0].
    assert_eq!(report["recall_thresholds"]["at_least_half"], 0.75);
    assert_eq!(report["recall_thresholds"]["at_least_three_quarters"], 0.5);
    assert_eq!(report["recall_thresholds"]["perfect"], 0.25);
    assert_eq!(report["recall"]["mean"], 0.5625);
    assert_eq!(report["recall"]["median"], 0.625);
    assert_eq!(report["precision"]["mean"], 0.75);
    assert_eq!(report["count_with_module"], 0);
    let csv = std::fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().nth(4).unwrap(), "q4,4,0,0,0.0000,0.0000,no-detections");

    let saved = out.join("report.json");
    let md = modalign(&["report", s(&saved), "--format", "markdown"]);
    assert!(stdout(&md).contains("| ≥ 0.5 | 75.0 | 75.0 |"));
}

#[test]
fn assemble_from_detections() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    align(&fixture("rules.txt"), &["--replay", s(&fixture("replay"))], &out, &[]);
    let o = modalign(&["assemble", "--rules", s(&fixture("rules.txt")), "--target", s(&fixture("gmo.ttl")), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(out.join("assembled.txt")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "r1: Award(x) & hasCoPrincipalInvestigator(x,z) <-> FundingAward(x) & providesAgentRole(x,y) & CoPrincipalInvestigatorRole(y) & performedBy(y,z)"
    );
    assert_eq!(lines[1], "r2: Program(x) <-> Program(x)");
}

#[test]
fn assemble_flags_incomplete_rules() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.txt");
    let script = dir.path().join("s.json");
    std::fs::write(&rules, "r1: Award(x) <-> FundingAward(x) & providesAgentRole(x,y)\n").unwrap();
    std::fs::write(&script, r#"{"rules": {"r1": {"zero-shot": "FundingAward, providesAgentRole and isCruiseOf."}}}"#).unwrap();
    let out = dir.path().join("out");
    align(&rules, &["--script", s(&script)], &out, &["--strategy", "zero-shot"]);
    let o = modalign(&["assemble", "--rules", s(&rules), "--target", s(&fixture("gmo.ttl")), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o).trim_end(),
        "r1: Award(x) <-> FundingAward(x) & providesAgentRole(x,y) # incomplete; unplaced: isCruiseOf"
    );
}

#[test]
fn config_file_supplies_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        format!(
            "source = {}\ntarget = {}\nrules = {}\nregistry = {}\nreplay = {}\nout_dir = out\n",
            s(&fixture("gbo.ttl")),
            s(&fixture("gmo.ttl")),
            s(&fixture("running_example.txt")),
            s(&fixture("registry.txt")),
            s(&fixture("replay")),
        ),
    )
    .unwrap();
    let o = modalign(&["--config", s(&cfg), "align"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/transcripts/r1.json").exists());

    std::fs::write(&cfg, "endpoint = ${MODALIGN_TEST_SURELY_UNSET}\n").unwrap();
    let o = modalign(&["--config", s(&cfg), "align"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("MODALIGN_TEST_SURELY_UNSET is not set"));
}

#[test]
fn live_backend_needs_the_key_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = align(
        &fixture("running_example.txt"),
        &["--endpoint", "http://127.0.0.1:9/v1/chat/completions", "--key-env", "MODALIGN_TEST_NO_KEY"],
        &out,
        &[],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("MODALIGN_TEST_NO_KEY"));
    assert!(!out.join("transcripts").exists());
}

#[test]
fn replay_verify_accepts_fixture_and_rejects_tampering() {
    let base = [
        "replay-verify",
        "--source",
        s(&fixture("gbo.ttl")).to_owned().leak(),
        "--target",
        s(&fixture("gmo.ttl")).to_owned().leak(),
        "--rules",
        s(&fixture("rules.txt")).to_owned().leak(),
        "--registry",
        s(&fixture("registry.txt")).to_owned().leak(),
    ];
    let replay = s(&fixture("replay")).to_owned();
    let mut args = base.to_vec();
    args.extend(["--replay", replay.as_str()]);
    assert_eq!(code(&modalign(&args)), 0);

    let dir = tempfile::tempdir().unwrap();
    let tampered = s(dir.path()).to_owned();
    let text = std::fs::read_to_string(fixture("replay/r2.json")).unwrap();
    std::fs::write(dir.path().join("r2.json"), text.replace("Read it and keep it in mind", "Read it")).unwrap();
    let mut args = base.to_vec();
    args.extend(["--replay", tampered.as_str()]);
    let o = modalign(&args);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("r2: "));
}
