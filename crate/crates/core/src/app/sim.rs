//! Runtime for an [`AppModel`]: one [`SimulatorState`] per session.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{
    Action, AppModel, BugKind, Charset, InputClass, InputRule, Screen, Trigger, WidgetSpec,
};
use crate::hashing::stable_hash64;
use crate::perception::{RawGuiSnapshot, RawWidget};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("session crashed; no further events are accepted")]
    SessionCrashed,
    #[error("widget {0:?} is not on the current screen")]
    UnknownWidget(String),
    #[error("widget {0:?} is hidden")]
    HiddenWidget(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrollDirection {
    Up,
    Down,
}

/// A widget-addressed event, as the simulator consumes it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimEvent {
    pub widget: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<ScrollDirection>,
}

impl SimEvent {
    pub fn click(widget: &str) -> Self {
        Self::new(widget, Action::Click)
    }

    pub fn toggle(widget: &str) -> Self {
        Self::new(widget, Action::Toggle)
    }

    pub fn input(widget: &str, text: &str) -> Self {
        Self {
            text: Some(text.to_string()),
            ..Self::new(widget, Action::Input)
        }
    }

    pub fn scroll(widget: &str, direction: ScrollDirection) -> Self {
        Self {
            direction: Some(direction),
            ..Self::new(widget, Action::Scroll)
        }
    }

    fn new(widget: &str, action: Action) -> Self {
        Self {
            widget: widget.to_string(),
            action,
            text: None,
            direction: None,
        }
    }
}

/// Why an event was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    UnsupportedAction,
    NotScrollable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub accepted: bool,
    pub state_changed: bool,
    pub crash: Option<String>,
    pub functional_hits: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<Rejection>,
    /// Post-event snapshot; absent once the session has crashed.
    pub new_snapshot: Option<RawGuiSnapshot>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulatorState {
    #[serde(skip)]
    app: Arc<AppModel>,
    pub app_id: String,
    pub current_screen: String,
    pub variables: BTreeMap<String, String>,
    pub session_events: Vec<String>,
    /// Number of event tags produced by the first accepted event.
    first_event_tags: usize,
    event_count: usize,
    pub crashed: bool,
    pub triggered_bugs: BTreeSet<String>,
    pub rng_seed: u64,
}

const OPEN_PREFIX: &str = "__open:";
const PAGE_PREFIX: &str = "__page:";

pub fn reset(app: Arc<AppModel>, seed: u64) -> SimulatorState {
    SimulatorState {
        app_id: app.app_id.clone(),
        current_screen: app.entry_screen.clone(),
        variables: app.variables.clone(),
        session_events: Vec::new(),
        first_event_tags: 0,
        event_count: 0,
        crashed: false,
        triggered_bugs: BTreeSet::new(),
        rng_seed: seed,
        app,
    }
}

/// Partitions every text into exactly one class under `rule`.
pub fn classify_input(rule: &InputRule, text: &str) -> InputClass {
    let len = text.chars().count();
    if !text.chars().all(|c| rule.charset.admits(c)) || len > rule.max_len {
        InputClass::Invalid
    } else if len >= rule.short_len {
        InputClass::ValidLong
    } else {
        InputClass::ValidShort
    }
}

impl SimulatorState {
    pub fn app(&self) -> &Arc<AppModel> {
        &self.app
    }

    fn screen(&self) -> &Screen {
        self.app
            .screen(&self.current_screen)
            .expect("current screen exists in a validated model")
    }

    fn var(&self, name: &str) -> &str {
        self.variables.get(name).map(String::as_str).unwrap_or("")
    }

    fn page(&self) -> usize {
        self.var(&format!("{PAGE_PREFIX}{}", self.current_screen))
            .parse()
            .unwrap_or(0)
    }

    /// Stable hash over the current screen and the sorted variables.
    pub fn signature(&self) -> u64 {
        let mut buf = String::new();
        buf.push_str(&self.current_screen);
        for (k, v) in &self.variables {
            buf.push('\u{1f}');
            buf.push_str(k);
            buf.push('=');
            buf.push_str(v);
        }
        stable_hash64(buf.as_bytes())
    }

    fn on_page(&self, screen: &Screen, index: usize) -> bool {
        match screen.page_size {
            Some(size) => {
                let start = self.page() * size;
                (start..start + size).contains(&index)
            }
            None => true,
        }
    }

    fn is_hidden(&self, w: &WidgetSpec) -> bool {
        w.revealed_by
            .as_ref()
            .is_some_and(|opener| self.var(&format!("{OPEN_PREFIX}{opener}")) != "true")
    }

    fn render(&self, w: &WidgetSpec) -> RawWidget {
        let live_value = w.bind.as_deref().map(|v| self.var(v)).unwrap_or("").to_string();
        let bounds = match w.expand {
            Some(expand) if live_value.chars().count() >= expand.min_len => expand.bounds,
            _ => w.bounds,
        };
        RawWidget {
            id: w.id.clone(),
            kind: w.kind,
            label: w.label.clone(),
            bounds,
            live_value,
            transient: w.transient,
            hidden: self.is_hidden(w),
            core: w.core,
            interactable: w.interactable(),
            revealed_by: w.revealed_by.clone(),
            input_rule: w.input_rule,
        }
    }

    pub fn current_snapshot(&self) -> Result<RawGuiSnapshot, SimError> {
        if self.crashed {
            return Err(SimError::SessionCrashed);
        }
        Ok(self.snapshot_unchecked())
    }

    fn snapshot_unchecked(&self) -> RawGuiSnapshot {
        let screen = self.screen();
        RawGuiSnapshot {
            screen_id: screen.id.clone(),
            widgets: screen
                .widgets
                .iter()
                .enumerate()
                .filter(|(i, _)| self.on_page(screen, *i))
                .map(|(_, w)| self.render(w))
                .collect(),
        }
    }

    pub fn apply_event(&mut self, event: &SimEvent) -> Result<StepOutcome, SimError> {
        if self.crashed {
            return Err(SimError::SessionCrashed);
        }
        let app = Arc::clone(&self.app);
        let screen = app
            .screen(&self.current_screen)
            .expect("current screen exists in a validated model");
        let Some((index, widget)) = screen
            .widgets
            .iter()
            .enumerate()
            .find(|(_, w)| w.id == event.widget)
        else {
            return Err(SimError::UnknownWidget(event.widget.clone()));
        };
        if !self.on_page(screen, index) || self.is_hidden(widget) {
            return Err(SimError::HiddenWidget(event.widget.clone()));
        }

        let before = self.signature();
        let screen_before = self.current_screen.clone();

        if event.action == Action::Scroll {
            return Ok(self.scroll(screen, event.direction.unwrap_or(ScrollDirection::Down), before));
        }

        let Some(effects) = widget.actions.get(&event.action) else {
            return Ok(self.rejected(Rejection::UnsupportedAction));
        };

        let mut tags = vec![format!("{}:{}", event.action, widget.id)];
        let text = event.text.clone().unwrap_or_default();
        let input_class = widget.input_rule.map(|rule| classify_input(&rule, &text));
        let pre_vars = self.variables.clone();
        let holds = |effect: &super::model::Effect| {
            effect.when.as_ref().is_none_or(|c| {
                pre_vars.get(&c.var).map(String::as_str).unwrap_or("") == c.equals
            }) && effect.when_input.is_none_or(|class| input_class == Some(class))
        };

        let mut goto = None;
        for effect in effects.iter().filter(|e| holds(e)) {
            for (k, v) in &effect.set {
                self.variables.insert(k.clone(), v.clone());
            }
            if let Some(var) = &effect.flip {
                let next = if self.var(var) == "true" { "false" } else { "true" };
                self.variables.insert(var.clone(), next.to_string());
            }
            if let Some(input) = &effect.input {
                let rejected = input.validate && input_class == Some(InputClass::Invalid);
                if !rejected {
                    self.variables.insert(input.var.clone(), text.clone());
                }
            }
            for var in &effect.clear {
                self.variables.insert(var.clone(), String::new());
            }
            if let Some(tag) = &effect.tag {
                tags.push(tag.clone());
            }
            if let Some(target) = &effect.goto {
                goto = Some(target.clone());
            }
        }

        // menu state: selecting a revealed widget closes its opener,
        // activating an opener reveals its widgets
        if let Some(opener) = &widget.revealed_by {
            self.variables.remove(&format!("{OPEN_PREFIX}{opener}"));
        }
        if screen.widgets.iter().any(|w| w.revealed_by.as_deref() == Some(&widget.id)) {
            self.variables
                .insert(format!("{OPEN_PREFIX}{}", widget.id), "true".to_string());
        }
        if let Some(target) = goto {
            if target != self.current_screen {
                self.leave_screen(screen);
                self.current_screen = target;
            }
        }

        self.record_tags(tags);
        let (crash, functional_hits) = self.evaluate_bugs(&screen_before, widget, event.action, input_class);
        let state_changed = self.signature() != before;
        Ok(StepOutcome {
            accepted: true,
            state_changed,
            crash,
            functional_hits,
            rejection: None,
            new_snapshot: (!self.crashed).then(|| self.snapshot_unchecked()),
        })
    }

    fn rejected(&self, why: Rejection) -> StepOutcome {
        StepOutcome {
            accepted: false,
            state_changed: false,
            crash: None,
            functional_hits: BTreeSet::new(),
            rejection: Some(why),
            new_snapshot: Some(self.snapshot_unchecked()),
        }
    }

    fn scroll(&mut self, screen: &Screen, direction: ScrollDirection, before: u64) -> StepOutcome {
        let Some(size) = screen.page_size else {
            return self.rejected(Rejection::NotScrollable);
        };
        let pages = screen.widgets.len().div_ceil(size).max(1);
        let page = self.page();
        let next = match direction {
            ScrollDirection::Down => (page + 1).min(pages - 1),
            ScrollDirection::Up => page.saturating_sub(1),
        };
        if next != page {
            self.variables
                .insert(format!("{PAGE_PREFIX}{}", screen.id), next.to_string());
        }
        let dir = match direction {
            ScrollDirection::Up => "up",
            ScrollDirection::Down => "down",
        };
        self.record_tags(vec![format!("scroll:{}:{dir}", screen.id)]);
        StepOutcome {
            accepted: true,
            state_changed: self.signature() != before,
            crash: None,
            functional_hits: BTreeSet::new(),
            rejection: None,
            new_snapshot: Some(self.snapshot_unchecked()),
        }
    }

    fn leave_screen(&mut self, screen: &Screen) {
        for w in &screen.widgets {
            self.variables.remove(&format!("{OPEN_PREFIX}{}", w.id));
        }
        self.variables.remove(&format!("{PAGE_PREFIX}{}", screen.id));
    }

    fn record_tags(&mut self, tags: Vec<String>) {
        if self.event_count == 0 {
            self.first_event_tags = tags.len();
        }
        self.event_count += 1;
        self.session_events.extend(tags);
    }

    fn evaluate_bugs(
        &mut self,
        screen_before: &str,
        widget: &WidgetSpec,
        action: Action,
        input_class: Option<InputClass>,
    ) -> (Option<String>, BTreeSet<String>) {
        let app = Arc::clone(&self.app);
        let mut crash = None;
        let mut functional = BTreeSet::new();
        for bug in &app.bugs {
            if self.triggered_bugs.contains(&bug.id) {
                continue;
            }
            let hit = match &bug.trigger {
                Trigger::Point {
                    screen,
                    widget: target,
                    action: wanted,
                    required_input_class,
                } => {
                    screen == screen_before
                        && *target == widget.id
                        && *wanted == action
                        && required_input_class.is_none_or(|c| input_class == Some(c))
                }
                Trigger::Sequence { events, anchored } => {
                    sequence_matches(&self.session_events, self.first_event_tags, events, *anchored)
                }
            };
            if !hit {
                continue;
            }
            self.triggered_bugs.insert(bug.id.clone());
            match bug.kind {
                BugKind::Crash => {
                    if crash.is_none() {
                        crash = Some(bug.id.clone());
                    }
                    self.crashed = true;
                }
                BugKind::Functional => {
                    functional.insert(bug.id.clone());
                }
            }
        }
        (crash, functional)
    }
}

/// In-order subsequence match. When `anchored`, the first pattern tag must
/// fall within the first `first_len` log entries (the first event's tags).
fn sequence_matches(log: &[String], first_len: usize, pattern: &[String], anchored: bool) -> bool {
    let mut rest = pattern.iter();
    let mut pos = 0;
    if anchored {
        let Some(head) = rest.next() else { return true };
        match log[..first_len.min(log.len())].iter().position(|t| t == head) {
            Some(i) => pos = i + 1,
            None => return false,
        }
    }
    let mut want = rest.next();
    for tag in &log[pos..] {
        match want {
            Some(w) if w == tag => want = rest.next(),
            Some(_) => {}
            None => break,
        }
    }
    want.is_none()
}

/// Characters admitted by a charset, used by input generators.
pub fn charset_pool(charset: Charset) -> &'static [u8] {
    match charset {
        Charset::Digits => b"0123456789",
        Charset::Letters => b"abcdefghijklmnopqrstuvwxyz",
        Charset::Alphanumeric | Charset::Text => b"abcdefghijklmnopqrstuvwxyz0123456789",
    }
}

/// Characters a charset rejects; empty when only length can be violated.
pub fn violating_pool(charset: Charset) -> &'static [u8] {
    match charset {
        Charset::Digits => b"abcdefghijklmnopqrstuvwxyz",
        Charset::Letters => b"0123456789",
        Charset::Alphanumeric => b"!@#$%&*?",
        Charset::Text => b"",
    }
}
