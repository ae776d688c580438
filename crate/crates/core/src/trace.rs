//! Exploration traces and their on-disk form (one JSON object per line).

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{DecisionRecord, OutcomeDigest, TestOperation};
use crate::app::WidgetKind;
use crate::exec::{BugFindings, IntentVerdict};
use crate::persona::Persona;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub step_index: usize,
    pub operation: TestOperation,
    pub target_kind: WidgetKind,
    pub target_label: String,
    pub outcome_digest: OutcomeDigest,
    pub verdict: IntentVerdict,
    pub findings: BugFindings,
    pub purified_phrase: String,
}

impl From<&DecisionRecord> for TraceEvent {
    fn from(r: &DecisionRecord) -> Self {
        Self {
            step_index: r.step_index,
            operation: r.operation.clone(),
            target_kind: r.target_kind,
            target_label: r.target_label.clone(),
            outcome_digest: r.outcome_digest.clone(),
            verdict: r.verdict.clone(),
            findings: r.findings.clone(),
            purified_phrase: r.phrase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub agent_name: String,
    /// `None` for the baseline agent.
    pub persona: Option<Persona>,
    pub app_id: String,
    pub task: String,
    /// 1-based.
    pub run_index: usize,
    pub seed: u64,
    pub events: Vec<TraceEvent>,
    /// Seconds on the session clock.
    pub wall_time: f64,
    pub triggered_bugs: BTreeSet<String>,
    /// Set when the session ended on a policy or backend failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl Trace {
    pub fn crashed(&self) -> bool {
        self.events
            .last()
            .is_some_and(|e| !e.findings.crashes.is_empty())
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

/// Writes traces one per line.
pub fn write_traces(path: &Path, traces: &[Trace]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = io::BufWriter::new(fs::File::create(path)?);
    for t in traces {
        writeln!(out, "{}", t.to_json_line())?;
    }
    out.flush()
}

pub fn read_traces(path: &Path) -> io::Result<Vec<Trace>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut traces = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), n + 1),
            )
        })?;
        traces.push(t);
    }
    Ok(traces)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::agent::{ExpectedEffect, OpParams, TestIntent};
    use crate::app::Action;

    pub fn event(action: Action, kind: WidgetKind, label: &str, state_changed: bool) -> TraceEvent {
        let operation = TestOperation {
            intent: TestIntent::new("explore", ExpectedEffect::ScreenChange),
            target_ref: 0,
            action,
            params: (action == Action::Input).then(|| OpParams::text("7")),
            summary: String::new(),
        };
        TraceEvent {
            step_index: 0,
            purified_phrase: crate::metrics::purify_action(action, kind, label),
            operation,
            target_kind: kind,
            target_label: label.into(),
            outcome_digest: OutcomeDigest {
                accepted: true,
                state_changed,
                intent_fulfilled: state_changed,
                bugs: BTreeSet::new(),
                screen_before: "home".into(),
                screen_after: Some("home".into()),
            },
            verdict: IntentVerdict {
                fulfilled: state_changed,
                reason: "fixture".into(),
            },
            findings: BugFindings::default(),
        }
    }

    pub fn trace(events: Vec<TraceEvent>) -> Trace {
        Trace {
            agent_name: "P_A".into(),
            persona: Some("A.a.i".parse().unwrap()),
            app_id: "alarm_clock".into(),
            task: "edit alarm".into(),
            run_index: 1,
            seed: 3,
            events,
            wall_time: 30.0,
            triggered_bugs: BTreeSet::new(),
            failure: None,
        }
    }
}
