//! Operation execution against a backend, intent checking and
//! display-level anomaly detection.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{ChatMessage, ChatTransport, ExpectedEffect, OpParams, TestIntent, TestOperation};
use crate::app::{
    reset, Action, AppModel, Point, Rejection, SimError, SimEvent, SimulatorState, StepOutcome,
};
use crate::perception::{GuiStateDoc, RawGuiSnapshot};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("target ref {target_ref} out of range ({len} widgets)")]
    TargetOutOfRange { target_ref: usize, len: usize },
    #[error("backend failure: {0}")]
    BackendFailure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentVerdict {
    pub fulfilled: bool,
    pub reason: String,
}

impl IntentVerdict {
    fn yes(reason: impl Into<String>) -> Self {
        Self {
            fulfilled: true,
            reason: reason.into(),
        }
    }

    fn no(reason: impl Into<String>) -> Self {
        Self {
            fulfilled: false,
            reason: reason.into(),
        }
    }

    /// Verdict for a step that ended the session.
    pub fn crashed(bug: &str) -> Self {
        Self::no(format!("session crashed ({bug})"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anomaly {
    pub widget_ref: usize,
    pub description: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugFindings {
    pub crashes: BTreeSet<String>,
    pub functional: BTreeSet<String>,
    pub anomalies: Vec<Anomaly>,
}

impl BugFindings {
    pub fn is_empty(&self) -> bool {
        self.crashes.is_empty() && self.functional.is_empty() && self.anomalies.is_empty()
    }

    /// Seeded bug ids, crashes first.
    pub fn bug_ids(&self) -> impl Iterator<Item = &String> {
        self.crashes.iter().chain(&self.functional)
    }
}

pub fn resolve_coordinates(doc: &GuiStateDoc, op: &TestOperation) -> Result<Point, ExecError> {
    doc.record(op.target_ref)
        .map(|r| r.bounds.center())
        .ok_or(ExecError::TargetOutOfRange {
            target_ref: op.target_ref,
            len: doc.widgets.len(),
        })
}

/// Device-facing contract; coordinates are canvas pixels.
pub trait ExecutionBackend {
    fn reset(&mut self, seed: u64);
    fn snapshot(&self) -> Result<RawGuiSnapshot, ExecError>;
    fn apply(
        &mut self,
        at: Point,
        action: Action,
        params: Option<&OpParams>,
    ) -> Result<StepOutcome, ExecError>;
}

/// Adapts coordinates back to widget events by hit-testing.
pub struct SimulatorBackend {
    state: SimulatorState,
}

impl SimulatorBackend {
    pub fn new(app: Arc<AppModel>, seed: u64) -> Self {
        Self {
            state: reset(app, seed),
        }
    }

    pub fn state(&self) -> &SimulatorState {
        &self.state
    }
}

fn sim_failure(e: SimError) -> ExecError {
    ExecError::BackendFailure(e.to_string())
}

impl ExecutionBackend for SimulatorBackend {
    fn reset(&mut self, seed: u64) {
        self.state = reset(Arc::clone(self.state.app()), seed);
    }

    fn snapshot(&self) -> Result<RawGuiSnapshot, ExecError> {
        self.state.current_snapshot().map_err(sim_failure)
    }

    fn apply(
        &mut self,
        at: Point,
        action: Action,
        params: Option<&OpParams>,
    ) -> Result<StepOutcome, ExecError> {
        let snapshot = self.snapshot()?;
        // later widgets draw on top
        let Some(hit) = snapshot
            .widgets
            .iter()
            .rev()
            .find(|w| !w.hidden && w.bounds.contains(at))
        else {
            return Ok(StepOutcome {
                accepted: false,
                state_changed: false,
                crash: None,
                functional_hits: BTreeSet::new(),
                rejection: Some(Rejection::UnsupportedAction),
                new_snapshot: Some(snapshot),
            });
        };
        let event = SimEvent {
            widget: hit.id.clone(),
            action,
            text: params.and_then(|p| p.text.clone()),
            direction: params.and_then(|p| p.direction),
        };
        self.state.apply_event(&event).map_err(sim_failure)
    }
}

pub fn execute(
    backend: &mut dyn ExecutionBackend,
    doc: &GuiStateDoc,
    op: &TestOperation,
) -> Result<StepOutcome, ExecError> {
    let at = resolve_coordinates(doc, op)?;
    backend.apply(at, op.action, op.params.as_ref())
}

/// Optional learned second opinion. It may only add: confirm an intent the
/// rules rejected, or report extra anomalies.
pub trait Judge: Send + Sync {
    fn confirms_intent(&self, prev: &GuiStateDoc, next: &GuiStateDoc, intent: &TestIntent) -> bool;
    fn extra_anomalies(&self, next: &GuiStateDoc) -> Vec<Anomaly>;
}

pub fn intent_check(prev: &GuiStateDoc, next: &GuiStateDoc, intent: &TestIntent) -> IntentVerdict {
    match intent.expected_effect {
        ExpectedEffect::ScreenChange => {
            if prev.screen_id != next.screen_id {
                IntentVerdict::yes(format!("screen changed {} -> {}", prev.screen_id, next.screen_id))
            } else {
                IntentVerdict::no(format!("screen stayed on {}", prev.screen_id))
            }
        }
        ExpectedEffect::ValueChange => {
            let changed = next.widgets.iter().find(|n| {
                prev.widgets.iter().any(|p| {
                    p.reference == n.reference
                        && p.kind == n.kind
                        && p.label == n.label
                        && p.value != n.value
                })
            });
            match changed {
                Some(w) => IntentVerdict::yes(format!("value of {} changed", w.label)),
                None => IntentVerdict::no("no widget value changed"),
            }
        }
        ExpectedEffect::RevealWidget => {
            let appeared = next.widgets.iter().find(|n| {
                !prev
                    .widgets
                    .iter()
                    .any(|p| p.kind == n.kind && p.label == n.label)
            });
            match appeared {
                Some(w) => IntentVerdict::yes(format!("{} appeared", w.label)),
                None => IntentVerdict::no("no new widget appeared"),
            }
        }
        ExpectedEffect::NoneExpected => {
            if prev.screen_id == next.screen_id && prev.widgets == next.widgets {
                IntentVerdict::yes("GUI unchanged as expected")
            } else {
                IntentVerdict::no("GUI changed although no effect was expected")
            }
        }
    }
}

pub fn intent_check_with(
    prev: &GuiStateDoc,
    next: &GuiStateDoc,
    intent: &TestIntent,
    judge: Option<&dyn Judge>,
) -> IntentVerdict {
    let verdict = intent_check(prev, next, intent);
    match judge {
        Some(j) if !verdict.fulfilled && j.confirms_intent(prev, next, intent) => {
            IntentVerdict::yes(format!("judge overrode: {}", verdict.reason))
        }
        _ => verdict,
    }
}

/// Seeded bugs from the outcome plus geometric anomalies on `next`.
pub fn detect_bugs(outcome: &StepOutcome, next: Option<&GuiStateDoc>) -> BugFindings {
    let mut findings = BugFindings {
        crashes: outcome.crash.iter().cloned().collect(),
        functional: outcome.functional_hits.clone(),
        anomalies: Vec::new(),
    };
    let Some(doc) = next else {
        return findings;
    };
    let active: Vec<_> = doc.interactable().collect();
    for (i, a) in active.iter().enumerate() {
        for b in &active[i + 1..] {
            if a.bounds.overlaps(&b.bounds) {
                findings.anomalies.push(Anomaly {
                    widget_ref: a.reference,
                    description: format!("{} overlaps {}", a.label, b.label),
                });
                findings.anomalies.push(Anomaly {
                    widget_ref: b.reference,
                    description: format!("{} overlaps {}", b.label, a.label),
                });
            }
        }
    }
    for w in &doc.widgets {
        if !w.bounds.within_canvas() {
            findings.anomalies.push(Anomaly {
                widget_ref: w.reference,
                description: format!("{} extends beyond the screen", w.label),
            });
        }
        if w.interactable && w.label.trim().is_empty() {
            findings.anomalies.push(Anomaly {
                widget_ref: w.reference,
                description: "interactable widget without a label".into(),
            });
        }
    }
    findings
}

pub fn detect_bugs_with(
    outcome: &StepOutcome,
    next: Option<&GuiStateDoc>,
    judge: Option<&dyn Judge>,
) -> BugFindings {
    let mut findings = detect_bugs(outcome, next);
    if let (Some(j), Some(doc)) = (judge, next) {
        findings.anomalies.extend(j.extra_anomalies(doc));
    }
    findings
}

/// Judge that asks a chat model. Transport or parse failures count as
/// "no opinion".
pub struct RemoteJudge<T: ChatTransport> {
    transport: T,
}

#[derive(Deserialize)]
struct JudgeReply {
    #[serde(default)]
    fulfilled: bool,
    #[serde(default)]
    anomalies: Vec<Anomaly>,
}

impl<T: ChatTransport> RemoteJudge<T> {
    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    fn ask(&self, prompt: String) -> Option<JudgeReply> {
        let reply = self
            .transport
            .complete(&[ChatMessage::user(prompt)])
            .map_err(|e| log::warn!("judge request failed: {e}"))
            .ok()?;
        let start = reply.find('{')?;
        let end = reply.rfind('}')?;
        serde_json::from_str(reply.get(start..=end)?)
            .map_err(|e| log::warn!("unparseable judge reply: {e}"))
            .ok()
    }
}

impl<T: ChatTransport> Judge for RemoteJudge<T> {
    fn confirms_intent(&self, prev: &GuiStateDoc, next: &GuiStateDoc, intent: &TestIntent) -> bool {
        let prompt = format!(
            "A GUI tester intended to: {}\nBefore:\n{}\nAfter:\n{}\n\
             Did the operation achieve the intent? Reply {{\"fulfilled\": true|false}}.",
            intent.goal,
            prev.to_json(),
            next.to_json()
        );
        self.ask(prompt).is_some_and(|r| r.fulfilled)
    }

    fn extra_anomalies(&self, next: &GuiStateDoc) -> Vec<Anomaly> {
        let prompt = format!(
            "Inspect this GUI state for display problems (obscured, truncated or \
             misplaced widgets):\n{}\nReply {{\"anomalies\": [{{\"widget_ref\": <ref>, \
             \"description\": \"...\"}}]}}.",
            next.to_json()
        );
        self.ask(prompt)
            .map(|r| r.anomalies)
            .unwrap_or_default()
            .into_iter()
            .filter(|a| a.widget_ref < next.widgets.len())
            .collect()
    }
}
