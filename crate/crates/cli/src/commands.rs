//! Every command except `align`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use modalign::assemble::{assemble, compose_rule, AssembleError, AssemblyResult};
use modalign::orchestrator::{run_chain, run_zero_shot, DetectionRecord, ReplayBackend, ReplayStore, Strategy, load_transcripts};
use modalign::rdf::{build_inventory, serialize_snippet, EntityKind, EntityRecord, Iri};
use modalign::registry::{load_registry, rank_modules};
use modalign::scoring::{aggregate, emit_report, parse_report_json, score_rule, scores_csv, ReportFormat, ScoreFlag};
use modalign::{AggregateReport, RuleScore};

use crate::align::{policy, AlignArgs};
use crate::config::Config;
use crate::inputs::{load_rules, parse_ontology, path_arg, require, InputArgs, Loaded};

fn kind_name(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::OntologyClass => "class",
        EntityKind::ObjectProperty => "object-property",
        EntityKind::DataProperty => "data-property",
    }
}

fn names(iris: &BTreeSet<Iri>) -> String {
    iris.iter().map(|i| i.local_name()).collect::<Vec<_>>().join("|")
}

fn one_liner(r: &EntityRecord) -> String {
    let mut line = format!("{} {}", kind_name(r.primary_kind()), r.local_name());
    if let Some(label) = &r.label {
        line.push_str(&format!(" \"{label}\""));
    }
    if !r.super_classes.is_empty() {
        line.push_str(&format!(" subclass-of {}", names(&r.super_classes)));
    }
    if !r.domains.is_empty() {
        line.push_str(&format!(" domain {}", names(&r.domains)));
    }
    if !r.ranges.is_empty() {
        line.push_str(&format!(" range {}", names(&r.ranges)));
    }
    if let Some(inv) = &r.inverse_of {
        line.push_str(&format!(" inverse-of {}", inv.local_name()));
    }
    line
}

pub fn inspect(path: &Path) -> Result<bool> {
    let (_, graph) = parse_ontology(path)?;
    let inv = build_inventory(&graph);
    println!(
        "classes: {}, object-properties: {}, data-properties: {}",
        inv.count(EntityKind::OntologyClass),
        inv.count(EntityKind::ObjectProperty),
        inv.count(EntityKind::DataProperty)
    );
    for r in inv.entities() {
        println!("{}", one_liner(r));
    }
    for d in inv.diagnostics() {
        eprintln!("note: {d}");
    }
    Ok(true)
}

pub fn snippet(path: &Path, entity: &str) -> Result<bool> {
    let (_, graph) = parse_ontology(path)?;
    let inv = build_inventory(&graph);
    let iri = if entity.contains("://") {
        Iri::new(entity).map_err(|e| anyhow::anyhow!("{e}"))?
    } else if let Some((prefix, local)) = entity.split_once(':').filter(|(p, _)| inv.prefixes().contains_key(*p)) {
        Iri::new(format!("{}{local}", inv.prefixes()[prefix])).map_err(|e| anyhow::anyhow!("{e}"))?
    } else {
        let found: Vec<&EntityRecord> = inv.by_local_name(entity).collect();
        match found.as_slice() {
            [one] => one.iri.clone(),
            [] => bail!("no entity named '{entity}' in {}", path.display()),
            many => bail!(
                "'{entity}' is ambiguous: {}",
                many.iter().map(|r| r.iri.as_str()).collect::<Vec<_>>().join(", ")
            ),
        }
    };
    print!("{}", serialize_snippet(&graph, &iri)?);
    Ok(true)
}

#[derive(Debug, Clone, Args)]
pub struct SuggestArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Source entity local names; defaults to the source side of --rule.
    #[arg(long, value_delimiter = ',')]
    pub entities: Vec<String>,
    /// Rule id whose source side is the query.
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
}

pub fn suggest(args: &SuggestArgs, config: &Config) -> Result<bool> {
    let registry = load_registry(require(path_arg(&args.inputs.registry, config, "registry"), "registry")?)?;
    let (_, source) = parse_ontology(&require(path_arg(&args.inputs.source, config, "source"), "source")?)?;
    let inv = build_inventory(&source);
    let mut wanted: Vec<String> = args.entities.clone();
    if let Some(id) = &args.rule {
        let rules = load_rules(&args.inputs, config)?;
        let Some(rule) = rules.get(id) else { bail!("no rule '{id}' in the reference file") };
        wanted.extend(rule.source_pieces());
    }
    if wanted.is_empty() {
        bail!("give --entities or --rule");
    }
    let mut query = Vec::new();
    for name in &wanted {
        match inv.entities().iter().find(|r| r.local_name() == name) {
            Some(r) => query.push(r.clone()),
            None => bail!("no source entity named '{name}'"),
        }
    }
    for (name, score) in rank_modules(&query, &registry, args.top_k)? {
        println!("{name}\t{score:.4}");
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StageChoice {
    Final,
    PreModule,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Folder of detection files; defaults to <out>/detections.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = StageChoice::Final)]
    pub stage: StageChoice,
    /// markdown, csv or json.
    #[arg(long)]
    pub format: Option<ReportFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn out_dir(flag: &Option<PathBuf>, config: &Config) -> PathBuf {
    path_arg(flag, config, "out_dir").unwrap_or_else(|| PathBuf::from("out"))
}

fn report_format(flag: Option<ReportFormat>, config: &Config) -> Result<ReportFormat> {
    Ok(match flag {
        Some(f) => f,
        None => config.get("format").map(str::parse).transpose().map_err(|e: String| anyhow::anyhow!(e))?.unwrap_or(ReportFormat::Markdown),
    })
}

fn extension(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Markdown => "md",
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    }
}

fn load_records(dir: &Path) -> Result<BTreeMap<String, DetectionRecord>> {
    if !dir.is_dir() {
        bail!("detections: {} is not a folder", dir.display());
    }
    Ok(DetectionRecord::load_dir(dir)?.into_iter().map(|r| (r.rule_id.clone(), r)).collect())
}

fn stage_pieces(record: &DetectionRecord, stage: StageChoice) -> BTreeSet<String> {
    match stage {
        StageChoice::Final => record.final_detections.pieces(),
        StageChoice::PreModule => record.pre_module.pieces(),
    }
}

pub fn score(args: &ScoreArgs, config: &Config) -> Result<bool> {
    let rules = load_rules(&InputArgs { rules: args.rules.clone(), ..Default::default() }, config)?;
    let out = out_dir(&args.out, config);
    let dir = args.detections.clone().unwrap_or_else(|| out.join("detections"));
    let records = load_records(&dir)?;
    let format = report_format(args.format, config)?;
    let mut ok = true;
    let mut scores: Vec<RuleScore> = Vec::new();
    for rule in &rules.rules {
        let Some(record) = records.get(rule.id()) else {
            eprintln!("{}: no detection file in {}", rule.id(), dir.display());
            ok = false;
            continue;
        };
        let mut s: RuleScore = score_rule(rule.id(), &rule.target_pieces(), &stage_pieces(record, args.stage))?;
        for flag in &record.flags {
            if !(args.stage == StageChoice::PreModule && *flag == ScoreFlag::UsedModuleInfo) {
                s = s.with_flag(*flag);
            }
        }
        scores.push(s);
    }
    for id in records.keys() {
        if rules.get(id).is_none() {
            eprintln!("{id}: detection file has no reference rule");
            ok = false;
        }
    }
    if scores.is_empty() {
        bail!("nothing to score");
    }
    let report = aggregate(&scores)?;
    let text = emit_report(&report, format);
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("scores.csv"), scores_csv(&scores))?;
    std::fs::write(out.join(format!("report.{}", extension(format))), &text)?;
    if format != ReportFormat::Json {
        std::fs::write(out.join("report.json"), emit_report(&report, ReportFormat::Json))?;
    }
    print!("{text}");
    Ok(ok)
}

#[derive(Debug, Clone, Args)]
pub struct AssembleArgs {
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = StageChoice::Final)]
    pub stage: StageChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn assemble_cmd(args: &AssembleArgs, config: &Config) -> Result<bool> {
    let rules = load_rules(&InputArgs { rules: args.rules.clone(), ..Default::default() }, config)?;
    let (_, target) = parse_ontology(&require(path_arg(&args.target, config, "target"), "target")?)?;
    let inv = build_inventory(&target);
    let out = out_dir(&args.out, config);
    let records = load_records(&args.detections.clone().unwrap_or_else(|| out.join("detections")))?;
    let mut ok = true;
    let mut lines = Vec::new();
    for rule in &rules.rules {
        let Some(record) = records.get(rule.id()) else { continue };
        let detected = stage_pieces(record, args.stage);
        let composed = match assemble(&detected, &inv) {
            Ok(a) => compose_rule(rule.id(), rule.lhs(), &a),
            Err(AssembleError::Empty) => {
                let empty = AssemblyResult { body: Vec::new(), unplaced: BTreeSet::new(), root: None };
                compose_rule(rule.id(), rule.lhs(), &empty)
            }
            Err(e @ AssembleError::Unresolved(_)) => {
                eprintln!("{}: {e}", rule.id());
                ok = false;
                continue;
            }
        };
        lines.push(composed.to_line());
    }
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    std::fs::create_dir_all(&out)?;
    std::fs::write(out.join("assembled.txt"), &text)?;
    print!("{text}");
    Ok(ok)
}

pub fn report(path: &Path, format: Option<ReportFormat>, config: &Config) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    let report: AggregateReport = parse_report_json(&text).with_context(|| format!("{}: not a report", path.display()))?;
    print!("{}", emit_report(&report, report_format(format, config)?));
    Ok(true)
}

/// Reruns every stored transcript against a replay of the whole folder and
/// checks that the conversation comes out unchanged.
pub fn replay_verify(args: &AlignArgs, config: &Config) -> Result<bool> {
    let dir = require(path_arg(&args.replay, config, "replay"), "replay")?;
    let stored = load_transcripts(&dir)?;
    let loaded = Loaded::load(&args.inputs, config, stored.iter().any(|t| t.strategy == Strategy::ChainOfThought))?;
    let policy = policy(args, config)?;
    let backend = ReplayBackend::new(ReplayStore::from_transcripts(&stored));
    let mut ok = true;
    for t in &stored {
        let Some(rule) = loaded.rules.get(&t.rule_id) else {
            println!("{}: no reference rule", t.rule_id);
            ok = false;
            continue;
        };
        let rerun = match t.strategy {
            Strategy::ChainOfThought => run_chain(rule, loaded.inputs(), &backend, &policy),
            Strategy::ZeroShot => run_zero_shot(rule, loaded.inputs(), &backend, &policy),
        };
        match rerun {
            Ok(r) if r.transcript.turns == t.turns => println!("{}: ok ({} turns)", t.rule_id, t.turns.len()),
            Ok(r) => {
                let at = r.transcript.turns.iter().zip(&t.turns).position(|(a, b)| a != b).unwrap_or(t.turns.len().min(r.transcript.turns.len()));
                println!("{}: mismatch at turn {}", t.rule_id, at + 1);
                ok = false;
            }
            Err(e) => {
                println!("{}: {e}", t.rule_id);
                ok = false;
            }
        }
    }
    Ok(ok)
}
