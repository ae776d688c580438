//! One session: snapshot → perception → decide → execute → validate → record.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use crate::agent::{
    decide, AgentError, Budget, DecisionPolicy, DecisionRecord, Observation, OutcomeDigest,
    SessionContext,
};
use crate::app::AppModel;
use crate::exec::{
    detect_bugs_with, execute, intent_check_with, ExecutionBackend, IntentVerdict, Judge,
    SimulatorBackend,
};
use crate::perception::{prepare, Perception};
use crate::persona::AgentProfile;
use crate::trace::{Trace, TraceEvent};

/// How session time is measured against the wall-clock budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionClock {
    /// Each step costs a fixed number of seconds; keeps scripted runs
    /// reproducible.
    Virtual { seconds_per_step: u64 },
    Real,
}

impl SessionClock {
    pub fn virtual_default() -> Self {
        SessionClock::Virtual {
            seconds_per_step: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionSpec {
    pub app: Arc<AppModel>,
    pub agent_name: String,
    pub profile: AgentProfile,
    pub budget: Budget,
    pub seed: u64,
    /// 1-based.
    pub run_index: usize,
}

pub fn run_session(
    spec: &SessionSpec,
    policy: &dyn DecisionPolicy,
    judge: Option<&dyn Judge>,
    clock: SessionClock,
) -> Trace {
    let started = Instant::now();
    let elapsed = |steps: usize| match clock {
        SessionClock::Virtual { seconds_per_step } => (steps as u64 * seconds_per_step) as f64,
        SessionClock::Real => started.elapsed().as_secs_f64(),
    };
    let mut backend = SimulatorBackend::new(Arc::clone(&spec.app), spec.seed);
    let mut perception = Perception::default();
    let mut ctx = SessionContext::new(
        &spec.app.app_id,
        &spec.app.core_task,
        spec.profile.persona(),
        spec.budget,
        spec.seed,
    );
    let mut failure = None;

    while ctx.step_index() < spec.budget.max_steps
        && elapsed(ctx.step_index()) < spec.budget.max_wall_seconds as f64
    {
        let raw = match backend.snapshot() {
            Ok(raw) => raw,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let obs = Observation::new(perception.perceive(&raw), prepare(&raw));
        let op = match decide(policy, &ctx, &obs) {
            Ok(op) => op,
            Err(AgentError::NoActionableWidget(screen)) => {
                log::info!("{}: nothing to do on {screen}; ending session", spec.agent_name);
                break;
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let target = obs.doc.record(op.target_ref).expect("checked by decide").clone();
        let outcome = match execute(&mut backend, &obs.doc, &op) {
            Ok(o) => o,
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        };
        let next = outcome.new_snapshot.as_ref().map(|s| perception.perceive(s));
        let verdict = match (&next, &outcome.crash) {
            (Some(n), _) => intent_check_with(&obs.doc, n, &op.intent, judge),
            (None, Some(bug)) => IntentVerdict::crashed(bug),
            (None, None) => IntentVerdict::crashed("unknown"),
        };
        let findings = detect_bugs_with(&outcome, next.as_ref(), judge);
        let digest = OutcomeDigest {
            accepted: outcome.accepted,
            state_changed: outcome.state_changed,
            intent_fulfilled: verdict.fulfilled,
            bugs: findings.bug_ids().cloned().collect(),
            screen_before: obs.doc.screen_id.clone(),
            screen_after: next.as_ref().map(|n| n.screen_id.clone()),
        };
        let crashed = outcome.crash.is_some();
        ctx.push(DecisionRecord {
            step_index: ctx.step_index(),
            gui_doc_signature: obs.doc.signature.clone(),
            operation: op,
            target_kind: target.kind,
            target_label: target.label,
            outcome_digest: digest,
            verdict,
            findings,
        });
        if crashed {
            break;
        }
    }

    let steps = ctx.step_index();
    let events: Vec<TraceEvent> = ctx.history().iter().map(TraceEvent::from).collect();
    let triggered_bugs: BTreeSet<String> = events
        .iter()
        .flat_map(|e| e.outcome_digest.bugs.iter().cloned())
        .collect();
    Trace {
        agent_name: spec.agent_name.clone(),
        persona: spec.profile.persona(),
        app_id: spec.app.app_id.clone(),
        task: spec.app.core_task.clone(),
        run_index: spec.run_index,
        seed: spec.seed,
        events,
        wall_time: elapsed(steps),
        triggered_bugs,
        failure,
    }
}
