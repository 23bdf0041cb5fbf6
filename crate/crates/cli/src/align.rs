//! The `align` command: run the pipeline for every reference rule.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{bail, Result};
use clap::Args;
use modalign::orchestrator::{
    requests_sent, run_chain, run_zero_shot, ChatBackend, DetectionRecord, HttpBackend, Policy, ReplayBackend,
    ReplayStore, ScriptedBackend, Strategy, Transcript,
};

use crate::config::Config;
use crate::inputs::{path_arg, require, InputArgs, Loaded};

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// chain or zero-shot.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    /// Serve answers from the transcripts in this folder.
    #[arg(long, conflicts_with = "script")]
    pub replay: Option<PathBuf>,
    /// Serve canned answers from a JSON script.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Chat-completions endpoint URL for live runs.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long)]
    pub key_env: Option<String>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Pre-module coverage at which the module stages are skipped; 0 never skips.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Character budget for the uploaded ontology text.
    #[arg(long)]
    pub char_budget: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long)]
    pub retry_delay_ms: Option<u64>,
    /// Modules taken from the lexical ranking when the answer names none.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Rules run concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Rerun rules whose outputs already exist.
    #[arg(long)]
    pub force: bool,
}

fn pick<T: std::str::FromStr>(flag: Option<T>, config: &Config, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => config.parsed(key),
    }
}

pub fn policy(args: &AlignArgs, config: &Config) -> Result<Policy> {
    let d = Policy::default();
    let threshold = pick(args.threshold, config, "threshold")?.unwrap_or(d.satisfaction_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        bail!("threshold must lie in [0, 1], got {threshold}");
    }
    Ok(Policy {
        model: pick(args.model.clone(), config, "model")?.unwrap_or(d.model),
        temperature: pick(args.temperature, config, "temperature")?.unwrap_or(d.temperature),
        satisfaction_threshold: threshold,
        char_budget: pick(args.char_budget, config, "char_budget")?.or(d.char_budget),
        retries: pick(args.retries, config, "retries")?.unwrap_or(d.retries),
        retry_base_delay: pick(args.retry_delay_ms, config, "retry_delay_ms")?
            .map(Duration::from_millis)
            .unwrap_or(d.retry_base_delay),
        top_k: pick(args.top_k, config, "top_k")?.unwrap_or(d.top_k),
        offer_patterns: d.offer_patterns,
    })
}

enum Outcome {
    Aligned(usize),
    Skipped,
    Failed(String),
}

pub fn run(args: &AlignArgs, config: &Config) -> Result<bool> {
    let strategy = pick(args.strategy, config, "strategy")?.unwrap_or(Strategy::ChainOfThought);
    let loaded = Loaded::load(&args.inputs, config, strategy == Strategy::ChainOfThought)?;
    let policy = policy(args, config)?;
    let jobs = pick(args.jobs, config, "jobs")?.unwrap_or(1).max(1);
    let out = path_arg(&args.out, config, "out_dir").unwrap_or_else(|| PathBuf::from("out"));
    let transcripts_dir = out.join("transcripts");
    let detections_dir = out.join("detections");

    // Every input is validated above; only now may a live backend be built.
    let backend: Box<dyn ChatBackend> = if let Some(dir) = path_arg(&args.replay, config, "replay") {
        Box::new(ReplayBackend::new(ReplayStore::from_dir(require(Some(dir), "replay")?)?))
    } else if let Some(file) = path_arg(&args.script, config, "script") {
        Box::new(ScriptedBackend::load(require(Some(file), "script")?)?)
    } else {
        let Some(endpoint) = pick(args.endpoint.clone(), config, "endpoint")? else {
            bail!("no backend: give --replay, --script or --endpoint");
        };
        let key_env = pick(args.key_env.clone(), config, "key_env")?.unwrap_or_else(|| "OPENAI_API_KEY".into());
        let timeout = Duration::from_secs(pick(args.timeout_secs, config, "timeout_secs")?.unwrap_or(120));
        Box::new(HttpBackend::from_env(endpoint, policy.model.clone(), &key_env, timeout)?)
    };
    std::fs::create_dir_all(&transcripts_dir)?;
    std::fs::create_dir_all(&detections_dir)?;

    let rules = &loaded.rules.rules;
    let outcomes: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..rules.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(rule) = rules.get(i) else { break };
        let transcript_path = transcripts_dir.join(Transcript::file_name(rule.id()));
        let detection_path = detections_dir.join(DetectionRecord::file_name(rule.id()));
        let outcome = if !args.force && transcript_path.exists() && detection_path.exists() {
            Outcome::Skipped
        } else {
            let result = match strategy {
                Strategy::ChainOfThought => run_chain(rule, loaded.inputs(), &*backend, &policy),
                Strategy::ZeroShot => run_zero_shot(rule, loaded.inputs(), &*backend, &policy),
            };
            match result {
                Ok(r) => {
                    let saved = r.transcript.save(&transcripts_dir).and_then(|_| r.detection_record().save(&detections_dir));
                    match saved {
                        Ok(_) => Outcome::Aligned(r.transcript.user_turns()),
                        Err(e) => Outcome::Failed(e.to_string()),
                    }
                }
                Err(e) => Outcome::Failed(e.to_string()),
            }
        };
        outcomes.lock().expect("outcome lock")[i] = Some(outcome);
    };
    std::thread::scope(|s| {
        for _ in 0..jobs.min(rules.len().max(1)) {
            s.spawn(work);
        }
    });

    let (mut aligned, mut skipped, mut failures) = (0, 0, Vec::new());
    for (rule, outcome) in rules.iter().zip(outcomes.into_inner().expect("outcome lock")) {
        match outcome.expect("every rule visited") {
            Outcome::Aligned(turns) => {
                aligned += 1;
                println!("{}: aligned ({turns} prompts)", rule.id());
            }
            Outcome::Skipped => {
                skipped += 1;
                println!("{}: skipped (outputs exist)", rule.id());
            }
            Outcome::Failed(message) => {
                eprintln!("{}: failed: {message}", rule.id());
                failures.push(format!("{}: {message}", rule.id()));
            }
        }
    }
    let failures_path = out.join("failures.txt");
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path)?;
        }
    } else {
        std::fs::write(&failures_path, failures.join("\n") + "\n")?;
    }
    println!(
        "aligned {aligned}, skipped {skipped}, failed {}; backend connections: {}",
        failures.len(),
        requests_sent()
    );
    Ok(failures.is_empty())
}
