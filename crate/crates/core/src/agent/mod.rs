//! Decision agent: persona-conditioned context, two-stage intent → operation
//! decisions, repeat guard and hidden-widget search.

mod inputs;
mod prompt;
mod remote;
mod scripted;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app::{Action, ScrollDirection, WidgetKind};
use crate::exec::{BugFindings, IntentVerdict};
use crate::perception::{dot, tokens, GuiStateDoc, RawGuiSnapshot, RawWidget};
use crate::persona::Persona;

pub use inputs::{generate_input, habit_class, GeneratedInput};
pub use prompt::{build_prompt, PromptDoc, PromptSection, HISTORY_WINDOW};
pub use remote::{
    parse_decision, ChatMessage, ChatTransport, HttpChatTransport, RemoteConfig, RemotePolicy,
    TransportError, DEFAULT_API_KEY_ENV,
};
pub use scripted::{scripted_policy, ScriptedPolicy};

pub const REPEAT_WINDOW: usize = 3;
pub const REPEAT_SIMILARITY: f64 = 0.99;
/// Earlier identical calls needed before a repeat is refused, so a
/// dismiss button may be pressed again but not a third time in a row.
pub const REPEAT_MIN_OCCURRENCES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("no actionable widget on screen {0:?} and no hidden candidates")]
    NoActionableWidget(String),
    #[error("policy failure: {0}")]
    PolicyFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedEffect {
    ScreenChange,
    ValueChange,
    RevealWidget,
    NoneExpected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestIntent {
    pub goal: String,
    pub expected_effect: ExpectedEffect,
}

impl TestIntent {
    pub fn new(goal: impl Into<String>, expected_effect: ExpectedEffect) -> Self {
        let goal = goal.into();
        assert!(!goal.trim().is_empty(), "intent goal must be non-empty");
        Self {
            goal,
            expected_effect,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<ScrollDirection>,
}

impl OpParams {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: Some(text.into()),
            direction: None,
        }
    }

    pub fn direction(direction: ScrollDirection) -> Self {
        Self {
            text: None,
            direction: Some(direction),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOperation {
    pub intent: TestIntent,
    pub target_ref: usize,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<OpParams>,
    pub summary: String,
}

impl TestOperation {
    pub fn text(&self) -> Option<&str> {
        self.params.as_ref().and_then(|p| p.text.as_deref())
    }

    /// Identity used by the repeat guard: target, action and parameters.
    pub fn same_call(&self, other: &TestOperation) -> bool {
        self.target_ref == other.target_ref
            && self.action == other.action
            && self.params == other.params
    }

    pub fn check_against(&self, doc: &GuiStateDoc) -> Result<(), String> {
        if self.target_ref >= doc.widgets.len() {
            return Err(format!(
                "target_ref {} out of range for {} widgets",
                self.target_ref,
                doc.widgets.len()
            ));
        }
        if self.action == Action::Input && self.text().is_none() {
            return Err("input action requires params.text".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeDigest {
    pub accepted: bool,
    pub state_changed: bool,
    pub intent_fulfilled: bool,
    pub bugs: BTreeSet<String>,
    pub screen_before: String,
    /// Absent after a crash.
    pub screen_after: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step_index: usize,
    #[serde(skip)]
    pub gui_doc_signature: Vec<f64>,
    pub operation: TestOperation,
    pub target_kind: WidgetKind,
    pub target_label: String,
    pub outcome_digest: OutcomeDigest,
    pub verdict: IntentVerdict,
    pub findings: BugFindings,
}

impl DecisionRecord {
    pub fn phrase(&self) -> String {
        crate::metrics::purify_action(self.operation.action, self.target_kind, &self.target_label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_steps: usize,
    pub max_wall_seconds: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_steps: 40,
            max_wall_seconds: 1200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionContext {
    pub app_id: String,
    pub task: String,
    pub persona: Option<Persona>,
    history: Vec<DecisionRecord>,
    pub budget: Budget,
    pub seed: u64,
}

impl SessionContext {
    pub fn new(app_id: &str, task: &str, persona: Option<Persona>, budget: Budget, seed: u64) -> Self {
        assert!(
            budget.max_steps > 0 && budget.max_wall_seconds > 0,
            "budgets must be positive"
        );
        Self {
            app_id: app_id.to_string(),
            task: task.to_string(),
            persona,
            history: Vec::new(),
            budget,
            seed,
        }
    }

    pub fn step_index(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[DecisionRecord] {
        &self.history
    }

    /// Appends the next record; step indices stay contiguous.
    pub fn push(&mut self, mut record: DecisionRecord) {
        record.step_index = self.history.len();
        self.history.push(record);
    }

    pub fn into_history(self) -> Vec<DecisionRecord> {
        self.history
    }
}

/// What the agent sees at one step: the textual state document plus the
/// filtered snapshot it was built from (refs index its visible widgets in
/// reading order).
#[derive(Debug, Clone)]
pub struct Observation {
    pub doc: GuiStateDoc,
    pub snapshot: RawGuiSnapshot,
}

impl Observation {
    pub fn new(doc: GuiStateDoc, snapshot: RawGuiSnapshot) -> Self {
        Self { doc, snapshot }
    }

    pub fn widget_for_ref(&self, reference: usize) -> Option<&RawWidget> {
        self.snapshot.visible_in_reading_order().get(reference).copied()
    }

    fn ref_for_widget(&self, id: &str) -> Option<usize> {
        self.snapshot
            .visible_in_reading_order()
            .iter()
            .position(|w| w.id == id)
    }

    fn has_hidden_candidates(&self) -> bool {
        self.snapshot.widgets.iter().any(|w| {
            w.hidden
                && w.revealed_by
                    .as_deref()
                    .is_some_and(|opener| self.ref_for_widget(opener).is_some())
        })
    }
}

/// Action the agent issues for a widget kind.
pub fn default_action(kind: WidgetKind) -> Action {
    match kind {
        WidgetKind::InputField => Action::Input,
        WidgetKind::Toggle => Action::Toggle,
        _ => Action::Click,
    }
}

/// A pluggable decision maker. `excluded` lists operations already
/// rejected by the repeat guard during this step.
pub trait DecisionPolicy: Send + Sync {
    fn propose(
        &self,
        ctx: &SessionContext,
        obs: &Observation,
        excluded: &[TestOperation],
    ) -> Result<TestOperation, AgentError>;
}

const MAX_GUARD_REJECTIONS: usize = 8;

/// Two-stage decision with the repeat guard applied to every proposal.
pub fn decide(
    policy: &dyn DecisionPolicy,
    ctx: &SessionContext,
    obs: &Observation,
) -> Result<TestOperation, AgentError> {
    if obs.doc.interactable().next().is_none() && !obs.has_hidden_candidates() {
        return Err(AgentError::NoActionableWidget(obs.doc.screen_id.clone()));
    }
    let mut excluded = Vec::new();
    for _ in 0..=MAX_GUARD_REJECTIONS {
        let op = policy.propose(ctx, obs, &excluded)?;
        op.check_against(&obs.doc).map_err(AgentError::PolicyFailure)?;
        if repeat_guard(ctx.history(), &op, &obs.doc.signature) {
            return Ok(op);
        }
        log::debug!("repeat guard rejected {:?} on {}", op.summary, obs.doc.screen_id);
        excluded.push(op);
    }
    Err(AgentError::NoActionableWidget(obs.doc.screen_id.clone()))
}

/// Returns false (reject) iff `op` repeats a call at least
/// [`REPEAT_MIN_OCCURRENCES`] times among the last [`REPEAT_WINDOW`] records
/// and every such record's state signature is at least
/// [`REPEAT_SIMILARITY`] similar to `current_sig`.
pub fn repeat_guard(history: &[DecisionRecord], op: &TestOperation, current_sig: &[f64]) -> bool {
    repeat_guard_with(history, op, current_sig, REPEAT_WINDOW, REPEAT_SIMILARITY)
}

pub fn repeat_guard_with(
    history: &[DecisionRecord],
    op: &TestOperation,
    current_sig: &[f64],
    window: usize,
    similarity: f64,
) -> bool {
    let recent = &history[history.len().saturating_sub(window)..];
    let repeats: Vec<&DecisionRecord> = recent.iter().filter(|r| r.operation.same_call(op)).collect();
    if repeats.len() < REPEAT_MIN_OCCURRENCES {
        return true;
    }
    !repeats
        .iter()
        .all(|r| dot(&r.gui_doc_signature, current_sig) >= similarity)
}

/// Reveal actions (clicks on visible openers) whose hidden widgets share a
/// token with the intent goal, best overlap first, reading order on ties.
pub fn hidden_widget_search(
    doc: &GuiStateDoc,
    intent: &TestIntent,
    snapshot: &RawGuiSnapshot,
) -> Vec<TestOperation> {
    let goal: BTreeSet<String> = tokens(&intent.goal).into_iter().collect();
    let order = snapshot.visible_in_reading_order();
    let mut scored: Vec<(usize, usize, &str)> = Vec::new();
    for hidden in snapshot.widgets.iter().filter(|w| w.hidden) {
        let Some(opener) = hidden.revealed_by.as_deref() else {
            continue;
        };
        let Some(reference) = order.iter().position(|w| w.id == opener) else {
            continue;
        };
        if reference >= doc.widgets.len() {
            continue;
        }
        let overlap = tokens(&hidden.label)
            .into_iter()
            .collect::<BTreeSet<_>>()
            .intersection(&goal)
            .count();
        if overlap == 0 {
            continue;
        }
        match scored.iter_mut().find(|(r, _, _)| *r == reference) {
            Some(entry) => entry.1 = entry.1.max(overlap),
            None => scored.push((reference, overlap, &doc.widgets[reference].label)),
        }
    }
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .map(|(reference, _, label)| TestOperation {
            intent: intent.clone(),
            target_ref: reference,
            action: Action::Click,
            params: None,
            summary: format!("reveal hidden widgets behind {label}"),
        })
        .collect()
}
