//! Campaign orchestration: agents × apps × runs, each a full session loop,
//! with traces persisted and aggregated into a report.

mod report;
mod session;

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    scripted_policy, Budget, DecisionPolicy, HttpChatTransport, RemoteConfig, RemotePolicy,
};
use crate::app::{bundled_model, load_app_model_file, AppModel, ModelError};
use crate::hashing::{hash_str, hex_digest, mix_seed};
use crate::metrics::MetricError;
use crate::persona::{AgentProfile, PersonaCatalog, PersonaError, BASELINE_NAME};
use crate::trace::{read_traces, write_traces, Trace};

pub use report::{
    analyze, build_report, bug_overlap, emit_report, AgentBugs, BugOverlap, BugTables,
    CampaignReport, CohesionRow, EffectivenessRow, OverlapRow, Provenance, ReportFormat,
    SimilarityMatrix, UnionSummary,
};
pub use session::{run_session, SessionClock, SessionSpec};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Persona(#[from] PersonaError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    #[default]
    Scripted,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Model file paths, or names of bundled demo apps.
    pub apps: Vec<String>,
    pub agents: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs_per_config: usize,
    /// Baseline runs for the cumulative bug comparison.
    #[serde(default = "default_baseline_reps")]
    pub baseline_repetitions: usize,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remote: Option<RemoteConfig>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_runs() -> usize {
    5
}

fn default_baseline_reps() -> usize {
    9
}

fn default_out() -> PathBuf {
    PathBuf::from("campaign_out")
}

impl CampaignConfig {
    /// All nine personas plus the baseline on the bundled demo apps.
    pub fn demo(seed: u64, out_dir: impl Into<PathBuf>) -> Self {
        let mut agents: Vec<String> = PersonaCatalog::standard().names().map(String::from).collect();
        agents.push(BASELINE_NAME.to_string());
        Self {
            apps: crate::app::BUNDLED_MODELS.iter().map(|(id, _)| id.to_string()).collect(),
            agents,
            runs_per_config: default_runs(),
            baseline_repetitions: default_baseline_reps(),
            budget: Budget::default(),
            seed,
            policy: PolicyKind::Scripted,
            remote: None,
            out_dir: out_dir.into(),
            workers: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| CampaignError::ConfigInvalid(format!("{}: {}", e.path(), e.inner())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Digest over the fields that shape results; the output directory and
    /// worker count are left out.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        canonical.workers = None;
        hex_digest(canonical.to_json().as_bytes())
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: &str| Err(CampaignError::ConfigInvalid(m.to_string()));
        if self.apps.is_empty() {
            return bad("at least one app is required");
        }
        if self.agents.is_empty() {
            return bad("at least one agent is required");
        }
        if self.runs_per_config == 0 {
            return bad("runs_per_config must be at least 1");
        }
        if self.budget.max_steps == 0 || self.budget.max_wall_seconds == 0 {
            return bad("budgets must be positive");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        let unique: BTreeSet<&String> = self.agents.iter().collect();
        if unique.len() != self.agents.len() {
            return bad("agent names must be unique");
        }
        if self.policy == PolicyKind::Remote && self.remote.is_none() {
            return bad("remote policy needs a `remote` section");
        }
        Ok(())
    }

    /// Runs scheduled for `agent`: the baseline also covers the cumulative
    /// comparison.
    pub fn runs_for(&self, agent: &str) -> usize {
        if agent == BASELINE_NAME {
            self.runs_per_config.max(self.baseline_repetitions)
        } else {
            self.runs_per_config
        }
    }

    pub fn run_seed(&self, agent: &str, app_id: &str, run_index: usize) -> u64 {
        mix_seed(&[self.seed, hash_str(agent), hash_str(app_id), run_index as u64])
    }
}

/// Loads a bundled app by name or a model file by path.
pub fn load_app(source: &str) -> Result<AppModel, CampaignError> {
    let path = Path::new(source);
    if path.exists() || source.ends_with(".json") {
        return Ok(load_app_model_file(path)?);
    }
    bundled_model(source).ok_or_else(|| {
        CampaignError::ConfigInvalid(format!("{source:?} is neither a model file nor a bundled app"))
    })
}

pub fn trace_path(root: &Path, app_id: &str, agent: &str, run_index: usize) -> PathBuf {
    root.join(app_id).join(agent).join(format!("run_{run_index}.jsonl"))
}

pub const TRACE_DIR: &str = "traces";
pub const CONFIG_FILE: &str = "config.json";

/// Outcome of [`run_campaign`]: the report plus every trace, in plan order.
pub struct CampaignRun {
    pub report: CampaignReport,
    pub traces: Vec<Trace>,
}

impl CampaignRun {
    pub fn failures(&self) -> usize {
        self.traces.iter().filter(|t| t.failure.is_some()).count()
    }
}

fn build_policy(
    cfg: &CampaignConfig,
    profile: AgentProfile,
) -> Result<Box<dyn DecisionPolicy>, CampaignError> {
    match cfg.policy {
        PolicyKind::Scripted => Ok(Box::new(scripted_policy(profile.persona()))),
        PolicyKind::Remote => {
            let remote = cfg.remote.as_ref().expect("validated");
            let transport = HttpChatTransport::from_config(remote)
                .map_err(|e| CampaignError::ConfigInvalid(e.to_string()))?;
            Ok(Box::new(RemotePolicy::new(transport, remote.max_retries)))
        }
    }
}

/// Runs every (agent, app, run) session, persists traces under
/// `<out_dir>/traces`, and writes the report files.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignRun, CampaignError> {
    cfg.validate()?;
    let catalog = PersonaCatalog::standard();
    let apps: Vec<Arc<AppModel>> = cfg
        .apps
        .iter()
        .map(|s| load_app(s).map(Arc::new))
        .collect::<Result<_, _>>()?;
    let mut specs = Vec::new();
    for app in &apps {
        for agent in &cfg.agents {
            let profile = catalog.resolve(agent)?;
            for run_index in 1..=cfg.runs_for(agent) {
                specs.push(SessionSpec {
                    app: Arc::clone(app),
                    agent_name: agent.clone(),
                    profile,
                    budget: cfg.budget,
                    seed: cfg.run_seed(agent, &app.app_id, run_index),
                    run_index,
                });
            }
        }
    }
    let policies: Vec<(String, Box<dyn DecisionPolicy>)> = cfg
        .agents
        .iter()
        .map(|a| Ok((a.clone(), build_policy(cfg, catalog.resolve(a)?)?)))
        .collect::<Result<_, CampaignError>>()?;
    let clock = match cfg.policy {
        PolicyKind::Scripted => SessionClock::virtual_default(),
        PolicyKind::Remote => SessionClock::Real,
    };

    let workers = cfg
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CampaignError::ConfigInvalid(format!("worker pool: {e}")))?;
    let started = std::time::SystemTime::now();
    let traces: Vec<Trace> = pool.install(|| {
        use rayon::prelude::*;
        specs
            .par_iter()
            .map(|spec| {
                let policy = &policies
                    .iter()
                    .find(|(name, _)| *name == spec.agent_name)
                    .expect("policy per agent")
                    .1;
                run_session(spec, policy.as_ref(), None, clock)
            })
            .collect()
    });
    let finished = std::time::SystemTime::now();

    let trace_root = cfg.out_dir.join(TRACE_DIR);
    persist(cfg, &trace_root, &traces)?;
    let report = build_report(cfg, &traces)?;
    emit_report(&report, ReportFormat::TableDoc, &cfg.out_dir)?;
    emit_report(&report, ReportFormat::CsvBundle, &cfg.out_dir)?;
    write_manifest(&cfg.out_dir, started, finished, traces.len())?;
    Ok(CampaignRun { report, traces })
}

fn persist(cfg: &CampaignConfig, root: &Path, traces: &[Trace]) -> Result<(), CampaignError> {
    fs::create_dir_all(root)?;
    fs::write(root.join(CONFIG_FILE), cfg.to_json())?;
    for t in traces {
        write_traces(&trace_path(root, &t.app_id, &t.agent_name, t.run_index), std::slice::from_ref(t))?;
    }
    Ok(())
}

fn unix_seconds(t: std::time::SystemTime) -> u64 {
    t.duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Wall-clock timestamps live beside the report so the report itself stays
/// reproducible byte for byte.
fn write_manifest(
    out: &Path,
    started: std::time::SystemTime,
    finished: std::time::SystemTime,
    sessions: usize,
) -> Result<(), CampaignError> {
    let manifest = serde_json::json!({
        "started_unix": unix_seconds(started),
        "finished_unix": unix_seconds(finished),
        "sessions": sessions,
    });
    fs::write(
        out.join("run_manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(())
}

/// Reads every trace file under `root` (sorted by path) and the stored
/// campaign config.
pub fn load_traces(root: &Path) -> Result<(CampaignConfig, Vec<Trace>), CampaignError> {
    let cfg_text = fs::read_to_string(root.join(CONFIG_FILE)).map_err(|e| {
        CampaignError::ConfigInvalid(format!("{}: {e}", root.join(CONFIG_FILE).display()))
    })?;
    let cfg = CampaignConfig::from_json(&cfg_text)?;
    let mut files = Vec::new();
    collect_jsonl(root, &mut files)?;
    files.sort();
    let mut traces = Vec::new();
    for f in files {
        traces.extend(read_traces(&f)?);
    }
    Ok((cfg, traces))
}

fn collect_jsonl(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_jsonl(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "jsonl") {
            out.push(path);
        }
    }
    Ok(())
}
