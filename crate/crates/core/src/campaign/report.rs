//! Report assembly from traces and its file renderings.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{load_traces, CampaignConfig, CampaignError};
use crate::metrics::{cohesion, effectiveness, separation, trace_path, HashEmbedder, PathVector};
use crate::persona::BASELINE_NAME;
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRow {
    pub app: String,
    pub agent: String,
    pub run: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_digest: String,
    pub campaign_seed: u64,
    pub runs_per_config: usize,
    pub baseline_repetitions: usize,
    pub sessions: usize,
    pub failed_sessions: usize,
    pub seeds: Vec<SeedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohesionRow {
    pub app: String,
    pub agent: String,
    /// Absent with fewer than two non-empty runs.
    pub cohesion: Option<f64>,
    pub runs: usize,
}

/// Pairwise separation per app; the diagonal holds cohesion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub app: String,
    pub labels: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl SimilarityMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        self.cells[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessRow {
    pub app: String,
    pub agent: String,
    pub general: Option<f64>,
    /// Absent when the agent issued no input on this app.
    pub input: Option<f64>,
    pub events: usize,
    pub input_events: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentBugs {
    pub agent: String,
    pub crashes: BTreeSet<String>,
    pub functional: BTreeSet<String>,
}

impl AgentBugs {
    pub fn all(&self) -> BTreeSet<String> {
        self.crashes.union(&self.functional).cloned().collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugOverlap {
    pub only_a: BTreeSet<String>,
    pub only_b: BTreeSet<String>,
    pub shared: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub agent: String,
    pub overlap: BugOverlap,
}

/// All persona agents' runs against all baseline runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnionSummary {
    pub persona_runs: usize,
    pub baseline_runs: usize,
    pub persona_union: BTreeSet<String>,
    pub baseline_union: BTreeSet<String>,
    pub overlap: BugOverlap,
    pub strict_superset: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugTables {
    pub per_agent: Vec<AgentBugs>,
    pub overlap_vs_baseline: Vec<OverlapRow>,
    pub union: Option<UnionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub provenance: Provenance,
    pub cohesion: Vec<CohesionRow>,
    pub separation: Vec<SimilarityMatrix>,
    pub effectiveness: Vec<EffectivenessRow>,
    pub bugs: BugTables,
}

impl CampaignReport {
    pub fn cohesion_of(&self, app: &str, agent: &str) -> Option<f64> {
        self.cohesion
            .iter()
            .find(|r| r.app == app && r.agent == agent)
            .and_then(|r| r.cohesion)
    }

    pub fn matrix(&self, app: &str) -> Option<&SimilarityMatrix> {
        self.separation.iter().find(|m| m.app == app)
    }

    pub fn effectiveness_of(&self, app: &str, agent: &str) -> Option<&EffectivenessRow> {
        self.effectiveness
            .iter()
            .find(|r| r.app == app && r.agent == agent)
    }

    pub fn bugs_of(&self, agent: &str) -> Option<&AgentBugs> {
        self.bugs.per_agent.iter().find(|b| b.agent == agent)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn bug_sets<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut crashes = BTreeSet::new();
    let mut functional = BTreeSet::new();
    for t in traces {
        for e in &t.events {
            crashes.extend(e.findings.crashes.iter().cloned());
            functional.extend(e.findings.functional.iter().cloned());
        }
    }
    (crashes, functional)
}

fn union<'a>(traces: impl IntoIterator<Item = &'a Trace>) -> BTreeSet<String> {
    traces
        .into_iter()
        .flat_map(|t| t.triggered_bugs.iter().cloned())
        .collect()
}

pub fn bug_overlap(a: &[&Trace], b: &[&Trace]) -> BugOverlap {
    overlap_of(&union(a.iter().copied()), &union(b.iter().copied()))
}

fn overlap_of(a: &BTreeSet<String>, b: &BTreeSet<String>) -> BugOverlap {
    BugOverlap {
        only_a: a.difference(b).cloned().collect(),
        only_b: b.difference(a).cloned().collect(),
        shared: a.intersection(b).cloned().collect(),
    }
}

/// Traces of one (app, agent) in run order, limited to the first `runs`.
fn runs_of<'a>(traces: &'a [Trace], app: &str, agent: &str, runs: usize) -> Vec<&'a Trace> {
    let mut v: Vec<&Trace> = traces
        .iter()
        .filter(|t| t.app_id == app && t.agent_name == agent)
        .collect();
    v.sort_by_key(|t| t.run_index);
    v.truncate(runs);
    v
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Aggregates traces into the report. Every number is a function of the
/// traces and the stored config only.
pub fn build_report(cfg: &CampaignConfig, traces: &[Trace]) -> Result<CampaignReport, CampaignError> {
    let apps: Vec<String> = traces
        .iter()
        .map(|t| t.app_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let agents: Vec<String> = cfg
        .agents
        .iter()
        .filter(|a| traces.iter().any(|t| &t.agent_name == *a))
        .cloned()
        .collect();
    let k = cfg.runs_per_config;
    let embedder = HashEmbedder::default();

    let mut cohesion_rows = Vec::new();
    let mut matrices = Vec::new();
    let mut eff_rows = Vec::new();
    for app in &apps {
        let mut paths: Vec<Vec<PathVector>> = Vec::new();
        for agent in &agents {
            let runs = runs_of(traces, app, agent, k);
            let p: Vec<PathVector> = runs
                .iter()
                .filter(|t| !t.events.is_empty())
                .map(|t| trace_path(t, &embedder))
                .collect::<Result<_, _>>()?;
            cohesion_rows.push(CohesionRow {
                app: app.clone(),
                agent: agent.clone(),
                cohesion: if p.len() >= 2 { Some(cohesion(&p)?) } else { None },
                runs: p.len(),
            });
            paths.push(p);

            let (mut events, mut effective, mut inputs, mut effective_inputs) = (0, 0, 0, 0);
            for t in &runs {
                let e = effectiveness(t);
                events += e.events;
                effective += e.effective;
                inputs += e.input_events;
                effective_inputs += e.effective_inputs;
            }
            eff_rows.push(EffectivenessRow {
                app: app.clone(),
                agent: agent.clone(),
                general: ratio(effective, events),
                input: ratio(effective_inputs, inputs),
                events,
                input_events: inputs,
            });
        }
        let n = agents.len();
        let mut cells = vec![vec![None; n]; n];
        for i in 0..n {
            cells[i][i] = (paths[i].len() >= 2).then(|| cohesion(&paths[i])).transpose()?;
            for j in i + 1..n {
                if !paths[i].is_empty() && !paths[j].is_empty() {
                    let s = separation(&paths[i], &paths[j])?;
                    cells[i][j] = Some(s);
                    cells[j][i] = Some(s);
                }
            }
        }
        matrices.push(SimilarityMatrix {
            app: app.clone(),
            labels: agents.clone(),
            cells,
        });
    }

    let per_agent_traces = |agent: &str, runs: usize| -> Vec<&Trace> {
        apps.iter().flat_map(|app| runs_of(traces, app, agent, runs)).collect()
    };
    let per_agent: Vec<AgentBugs> = agents
        .iter()
        .map(|agent| {
            let (crashes, functional) = bug_sets(per_agent_traces(agent, k));
            AgentBugs {
                agent: agent.clone(),
                crashes,
                functional,
            }
        })
        .collect();
    let has_baseline = agents.iter().any(|a| a == BASELINE_NAME);
    let personas: Vec<&String> = agents.iter().filter(|a| *a != BASELINE_NAME).collect();
    let overlap_vs_baseline = if has_baseline {
        let base = per_agent_traces(BASELINE_NAME, k);
        personas
            .iter()
            .map(|agent| OverlapRow {
                agent: (*agent).clone(),
                overlap: bug_overlap(&per_agent_traces(agent, k), &base),
            })
            .collect()
    } else {
        Vec::new()
    };
    let union_summary = (has_baseline && !personas.is_empty()).then(|| {
        let persona_traces: Vec<&Trace> = personas
            .iter()
            .flat_map(|a| per_agent_traces(a, k))
            .collect();
        let baseline_traces = per_agent_traces(BASELINE_NAME, cfg.runs_for(BASELINE_NAME));
        let persona_union = union(persona_traces.iter().copied());
        let baseline_union = union(baseline_traces.iter().copied());
        UnionSummary {
            persona_runs: persona_traces.len(),
            baseline_runs: baseline_traces.len(),
            strict_superset: persona_union.is_superset(&baseline_union)
                && persona_union.len() > baseline_union.len(),
            overlap: overlap_of(&persona_union, &baseline_union),
            persona_union,
            baseline_union,
        }
    });

    let mut seeds: Vec<SeedRow> = traces
        .iter()
        .map(|t| SeedRow {
            app: t.app_id.clone(),
            agent: t.agent_name.clone(),
            run: t.run_index,
            seed: t.seed,
        })
        .collect();
    seeds.sort_by(|a, b| (&a.app, &a.agent, a.run).cmp(&(&b.app, &b.agent, b.run)));

    Ok(CampaignReport {
        provenance: Provenance {
            config_digest: cfg.digest(),
            campaign_seed: cfg.seed,
            runs_per_config: cfg.runs_per_config,
            baseline_repetitions: cfg.baseline_repetitions,
            sessions: traces.len(),
            failed_sessions: traces.iter().filter(|t| t.failure.is_some()).count(),
            seeds,
        },
        cohesion: cohesion_rows,
        separation: matrices,
        effectiveness: eff_rows,
        bugs: BugTables {
            per_agent,
            overlap_vs_baseline,
            union: union_summary,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    /// `report.json` plus the readable `report.md` summary.
    TableDoc,
    /// One CSV per table under `csv/`.
    CsvBundle,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"))
}

fn ids(set: &BTreeSet<String>) -> String {
    if set.is_empty() {
        "-".into()
    } else {
        set.iter().cloned().collect::<Vec<_>>().join(", ")
    }
}

fn markdown(r: &CampaignReport) -> String {
    let mut s = String::new();
    let p = &r.provenance;
    let _ = writeln!(s, "# Campaign report\n");
    let _ = writeln!(
        s,
        "config `{}`, seed {}, {} sessions ({} failed), {} runs per agent, {} baseline repetitions\n",
        &p.config_digest[..12],
        p.campaign_seed,
        p.sessions,
        p.failed_sessions,
        p.runs_per_config,
        p.baseline_repetitions
    );
    let _ = writeln!(s, "## Intra-agent cohesion\n");
    let apps: Vec<&str> = r.separation.iter().map(|m| m.app.as_str()).collect();
    let agents: Vec<&str> = r
        .separation
        .first()
        .map(|m| m.labels.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let _ = writeln!(s, "| agent | {} |", apps.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(apps.len()));
    for agent in &agents {
        let row: Vec<String> = apps.iter().map(|app| cell(r.cohesion_of(app, agent))).collect();
        let _ = writeln!(s, "| {agent} | {} |", row.join(" | "));
    }
    for m in &r.separation {
        let _ = writeln!(s, "\n## Similarity matrix: {}\n", m.app);
        let _ = writeln!(s, "| | {} |", m.labels.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(m.labels.len()));
        for (label, row) in m.labels.iter().zip(&m.cells) {
            let row: Vec<String> = row.iter().map(|c| cell(*c)).collect();
            let _ = writeln!(s, "| {label} | {} |", row.join(" | "));
        }
    }
    let _ = writeln!(s, "\n## Effectiveness (general / input)\n");
    let _ = writeln!(s, "| agent | {} |", apps.join(" | "));
    let _ = writeln!(s, "|---|{}", "---|".repeat(apps.len()));
    for agent in &agents {
        let row: Vec<String> = apps
            .iter()
            .map(|app| {
                r.effectiveness_of(app, agent)
                    .map_or("-".into(), |e| format!("{} / {}", cell(e.general), cell(e.input)))
            })
            .collect();
        let _ = writeln!(s, "| {agent} | {} |", row.join(" | "));
    }
    let _ = writeln!(s, "\n## Bugs per agent\n");
    let _ = writeln!(s, "| agent | crash | functional |");
    let _ = writeln!(s, "|---|---|---|");
    for b in &r.bugs.per_agent {
        let _ = writeln!(s, "| {} | {} | {} |", b.agent, ids(&b.crashes), ids(&b.functional));
    }
    if !r.bugs.overlap_vs_baseline.is_empty() {
        let _ = writeln!(s, "\n## Overlap with baseline\n");
        let _ = writeln!(s, "| agent | agent only | shared | baseline only |");
        let _ = writeln!(s, "|---|---|---|---|");
        for o in &r.bugs.overlap_vs_baseline {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                o.agent,
                ids(&o.overlap.only_a),
                ids(&o.overlap.shared),
                ids(&o.overlap.only_b)
            );
        }
    }
    if let Some(u) = &r.bugs.union {
        let _ = writeln!(s, "\n## All persona agents vs repeated baseline\n");
        let _ = writeln!(
            s,
            "- persona agents ({} runs): {}\n- baseline ({} runs): {}\n- persona only: {}\n- baseline only: {}\n- strict superset: {}",
            u.persona_runs,
            ids(&u.persona_union),
            u.baseline_runs,
            ids(&u.baseline_union),
            ids(&u.overlap.only_a),
            ids(&u.overlap.only_b),
            u.strict_superset
        );
    }
    s
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, rows: Vec<[String; 4]>) -> Result<(), CampaignError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CampaignError::Io(e.into()))?;
    w.write_record(["agent", "app", "metric", "value"])
        .map_err(|e| CampaignError::Io(e.into()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CampaignError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_bundle(r: &CampaignReport, dir: &Path) -> Result<(), CampaignError> {
    fs::create_dir_all(dir)?;
    let cohesion = r
        .cohesion
        .iter()
        .filter_map(|c| {
            c.cohesion
                .map(|v| [c.agent.clone(), c.app.clone(), "cohesion".into(), num(v)])
        })
        .collect();
    write_csv(&dir.join("cohesion.csv"), cohesion)?;

    let mut sep = Vec::new();
    for m in &r.separation {
        for (i, a) in m.labels.iter().enumerate() {
            for (j, b) in m.labels.iter().enumerate() {
                if let (true, Some(v)) = (i != j, m.cells[i][j]) {
                    sep.push([a.clone(), m.app.clone(), format!("separation:{b}"), num(v)]);
                }
            }
        }
    }
    write_csv(&dir.join("separation.csv"), sep)?;

    let mut eff = Vec::new();
    for e in &r.effectiveness {
        if let Some(v) = e.general {
            eff.push([e.agent.clone(), e.app.clone(), "general".into(), num(v)]);
        }
        if let Some(v) = e.input {
            eff.push([e.agent.clone(), e.app.clone(), "input".into(), num(v)]);
        }
    }
    write_csv(&dir.join("effectiveness.csv"), eff)?;

    let mut bugs = Vec::new();
    for b in &r.bugs.per_agent {
        for id in &b.crashes {
            bugs.push([b.agent.clone(), "all".into(), format!("crash:{id}"), "1".into()]);
        }
        for id in &b.functional {
            bugs.push([b.agent.clone(), "all".into(), format!("functional:{id}"), "1".into()]);
        }
    }
    write_csv(&dir.join("bugs.csv"), bugs)?;

    let mut overlap = Vec::new();
    for o in &r.bugs.overlap_vs_baseline {
        for (metric, set) in [
            ("agent_only", &o.overlap.only_a),
            ("shared", &o.overlap.shared),
            ("baseline_only", &o.overlap.only_b),
        ] {
            overlap.push([o.agent.clone(), "all".into(), metric.into(), set.len().to_string()]);
        }
    }
    if let Some(u) = &r.bugs.union {
        for (metric, n) in [
            ("persona_union", u.persona_union.len()),
            ("baseline_union", u.baseline_union.len()),
            ("persona_only", u.overlap.only_a.len()),
            ("baseline_only", u.overlap.only_b.len()),
        ] {
            overlap.push(["ALL".into(), "all".into(), metric.into(), n.to_string()]);
        }
    }
    write_csv(&dir.join("overlap.csv"), overlap)
}

pub fn emit_report(r: &CampaignReport, format: ReportFormat, out: &Path) -> Result<(), CampaignError> {
    fs::create_dir_all(out)?;
    match format {
        ReportFormat::TableDoc => {
            fs::write(out.join("report.json"), r.to_json())?;
            fs::write(out.join("report.md"), markdown(r))?;
            Ok(())
        }
        ReportFormat::CsvBundle => csv_bundle(r, &out.join("csv")),
    }
}

/// Rebuilds the report from a trace directory and writes both formats.
pub fn analyze(trace_dir: &Path, out: &Path) -> Result<CampaignReport, CampaignError> {
    let (cfg, traces) = load_traces(trace_dir)?;
    let report = build_report(&cfg, &traces)?;
    emit_report(&report, ReportFormat::TableDoc, out)?;
    emit_report(&report, ReportFormat::CsvBundle, out)?;
    Ok(report)
}
