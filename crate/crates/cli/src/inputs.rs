//! Resolving and loading the files a command works on.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use modalign::extract::{build_matcher, AliasConfig, Matcher};
use modalign::orchestrator::{PipelineInputs, Templates};
use modalign::rdf::{build_inventory, parse_turtle, EntityInventory, OntologyGraph};
use modalign::registry::{load_registry, ModuleRegistry};
use modalign::rules::{load_reference, ReferenceAlignment};

use crate::config::Config;

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Source ontology (Turtle).
    #[arg(long)]
    pub source: Option<PathBuf>,
    /// Target ontology (Turtle).
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Reference rule file.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Module registry file.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Folder of prompt template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Extractor alias file.
    #[arg(long)]
    pub aliases: Option<PathBuf>,
    /// Display name of the source ontology in prompts.
    #[arg(long)]
    pub source_name: Option<String>,
    /// Display name of the target ontology in prompts.
    #[arg(long)]
    pub target_name: Option<String>,
}

/// A flag if given, else the config value.
pub fn path_arg(flag: &Option<PathBuf>, config: &Config, key: &str) -> Option<PathBuf> {
    flag.clone().or_else(|| config.path(key))
}

pub fn require(path: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    match path {
        None => bail!("no {what} given (flag --{} or config key {})", what.replace('_', "-"), what),
        Some(p) if !p.exists() => bail!("{what}: {} does not exist", p.display()),
        Some(p) => Ok(p),
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))
}

pub fn parse_ontology(path: &Path) -> Result<(String, OntologyGraph)> {
    let text = read(path)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let graph = parse_turtle(&text, &name).map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((text, graph))
}

pub fn load_rules(args: &InputArgs, config: &Config) -> Result<ReferenceAlignment> {
    let path = require(path_arg(&args.rules, config, "rules"), "rules")?;
    let rules = load_reference(&path)?;
    for d in &rules.diagnostics {
        eprintln!("warning: {d}");
    }
    Ok(rules)
}

/// Everything a pipeline run reads, loaded and validated up front.
pub struct Loaded {
    pub source: OntologyGraph,
    pub source_inventory: EntityInventory,
    pub target_text: String,
    pub matcher: Matcher,
    pub registry: Option<ModuleRegistry>,
    pub templates: Templates,
    pub rules: ReferenceAlignment,
    pub source_name: String,
    pub target_name: String,
}

impl Loaded {
    pub fn load(args: &InputArgs, config: &Config, need_registry: bool) -> Result<Self> {
        let source_path = require(path_arg(&args.source, config, "source"), "source")?;
        let target_path = require(path_arg(&args.target, config, "target"), "target")?;
        let rules = load_rules(args, config)?;
        let registry = match path_arg(&args.registry, config, "registry") {
            Some(p) => Some(load_registry(require(Some(p), "registry")?)?),
            None if need_registry => bail!("no registry given (flag --registry or config key registry)"),
            None => None,
        };
        let templates = match path_arg(&args.templates, config, "templates") {
            Some(p) => Templates::load_dir(p)?,
            None => Templates::builtin(),
        };
        let aliases = match path_arg(&args.aliases, config, "aliases") {
            Some(p) => AliasConfig::load(require(Some(p), "aliases")?)?,
            None => AliasConfig::default(),
        };
        let (_, source) = parse_ontology(&source_path)?;
        let (target_text, target) = parse_ontology(&target_path)?;
        let target_inventory = build_inventory(&target);
        let matcher = build_matcher(&target_inventory, &aliases)?;
        for d in matcher.diagnostics() {
            eprintln!("note: {d}");
        }
        let name_of = |flag: &Option<String>, key: &str, header: &str, path: &Path| {
            flag.clone()
                .or_else(|| config.get(key).map(String::from))
                .or_else(|| (!header.is_empty()).then(|| header.to_string()))
                .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().to_uppercase()).unwrap_or_default())
        };
        Ok(Loaded {
            source_inventory: build_inventory(&source),
            source,
            target_text,
            matcher,
            registry,
            templates,
            source_name: name_of(&args.source_name, "source_name", &rules.source_ontology, &source_path),
            target_name: name_of(&args.target_name, "target_name", &rules.target_ontology, &target_path),
            rules,
        })
    }

    pub fn inputs(&self) -> PipelineInputs<'_> {
        PipelineInputs {
            source: &self.source,
            source_inventory: &self.source_inventory,
            source_name: &self.source_name,
            target_text: &self.target_text,
            target_name: &self.target_name,
            matcher: &self.matcher,
            registry: self.registry.as_ref(),
            templates: &self.templates,
        }
    }
}
