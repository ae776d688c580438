//! Deterministic rule-based policy standing in for the language model.
//!
//! Each interactable widget is scored from the persona:
//!
//! | strategy | weight 7 | weight 1 |
//! |---|---|---|
//! | a (click) | non-input widgets | input fields |
//! | b (core)  | core-flagged widgets and task openers | the rest |
//! | c (input) | input fields | the rest |
//!
//! Input fields get a habit pull (valid_long +1, invalid +4). An untried
//! (widget, action) pair earns +2; a tried one loses 1 per earlier use,
//! up to 6.
//!
//! Mindset A takes the argmax with reading order breaking ties. It adds
//! +1 to widgets that keep the current screen and gives Back, Cancel and
//! Close no novelty. Mindset B adds +2 to widgets that may open an
//! unvisited screen, then samples among the five best with softmax
//! weights at temperature 0.25. Without a persona every interactable
//! widget is equally likely.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::inputs::{generate_input, habit_class};
use super::{
    default_action, hidden_widget_search, AgentError, DecisionPolicy, ExpectedEffect, Observation,
    OpParams, SessionContext, TestIntent, TestOperation,
};
use crate::app::{Action, InputClass, WidgetKind};
use crate::hashing::mix_seed;
use crate::perception::WidgetRecord;
use crate::persona::{Habit, Mindset, Persona, Strategy};

const TOP_K: usize = 5;
const PREFERRED_WEIGHT: f64 = 7.0;
const OTHER_WEIGHT: f64 = 1.0;
const NOVELTY_BONUS: f64 = 2.0;
const REPEAT_PENALTY: f64 = 1.0;
const MAX_PENALIZED_REPEATS: usize = 6;
const SAME_SCREEN_BONUS: f64 = 1.0;
const NEW_SCREEN_BONUS: f64 = 2.0;
const SAMPLING_TEMPERATURE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScriptedPolicy {
    persona: Option<Persona>,
}

pub fn scripted_policy(persona: Option<Persona>) -> ScriptedPolicy {
    ScriptedPolicy { persona }
}

/// What the session has learned so far about where widgets lead.
struct SessionMemory {
    tried: BTreeMap<(String, String, Action), usize>,
    transitions: BTreeMap<(String, String, Action), String>,
    visited: BTreeSet<String>,
    inputs_per_field: BTreeMap<(String, String), usize>,
    /// Openers hiding widgets that mention the task.
    task_openers: BTreeSet<usize>,
}

impl SessionMemory {
    fn from_context(ctx: &SessionContext, obs: &Observation) -> Self {
        let task = TestIntent::new(ctx.task.clone(), ExpectedEffect::RevealWidget);
        let mut memory = SessionMemory {
            tried: BTreeMap::new(),
            transitions: BTreeMap::new(),
            visited: BTreeSet::from([obs.doc.screen_id.clone()]),
            inputs_per_field: BTreeMap::new(),
            task_openers: hidden_widget_search(&obs.doc, &task, &obs.snapshot)
                .into_iter()
                .map(|op| op.target_ref)
                .collect(),
        };
        for r in ctx.history() {
            let d = &r.outcome_digest;
            let key = (d.screen_before.clone(), r.target_label.clone(), r.operation.action);
            *memory.tried.entry(key.clone()).or_default() += 1;
            memory.visited.insert(d.screen_before.clone());
            if let Some(after) = &d.screen_after {
                memory.visited.insert(after.clone());
                if d.accepted {
                    memory.transitions.insert(key, after.clone());
                }
            }
            if r.operation.action == Action::Input {
                *memory
                    .inputs_per_field
                    .entry((d.screen_before.clone(), r.target_label.clone()))
                    .or_default() += 1;
            }
        }
        memory
    }
}

/// Extra draw toward input fields: testers who stress boundaries or hunt
/// for errors look for fields to type into.
fn habit_pull(habit: Habit) -> f64 {
    match habit {
        Habit::ValidShort => 0.0,
        Habit::ValidLong => 1.0,
        Habit::Invalid => 4.0,
    }
}

/// Back-navigation labels; coherent testers finish a screen before leaving it.
fn is_retreat(label: &str) -> bool {
    matches!(label.trim().to_ascii_lowercase().as_str(), "back" | "cancel" | "close")
}

struct Candidate<'a> {
    record: &'a WidgetRecord,
    action: Action,
    score: f64,
}

impl ScriptedPolicy {
    pub fn persona(&self) -> Option<Persona> {
        self.persona
    }

    fn strategy_weight(strategy: Strategy, record: &WidgetRecord, core: bool) -> f64 {
        let input = record.kind == WidgetKind::InputField;
        let preferred = match strategy {
            Strategy::ClickOriented => !input,
            Strategy::CoreFunctionFocused => core,
            Strategy::InputOriented => input,
        };
        if preferred {
            PREFERRED_WEIGHT
        } else {
            OTHER_WEIGHT
        }
    }

    fn score(
        &self,
        persona: Persona,
        obs: &Observation,
        memory: &SessionMemory,
        record: &WidgetRecord,
        action: Action,
    ) -> f64 {
        let screen = &obs.doc.screen_id;
        let core = obs
            .widget_for_ref(record.reference)
            .is_some_and(|w| w.core)
            || memory.task_openers.contains(&record.reference);
        let key = (screen.clone(), record.label.clone(), action);
        let mut score = Self::strategy_weight(persona.strategy, record, core);
        if record.kind == WidgetKind::InputField {
            score += habit_pull(persona.habit);
        }
        let retreat = persona.mindset == Mindset::SequentialCoherent && is_retreat(&record.label);
        match memory.tried.get(&key) {
            None if !retreat => score += NOVELTY_BONUS,
            None => {}
            Some(n) => score -= REPEAT_PENALTY * (*n).min(MAX_PENALIZED_REPEATS) as f64,
        }
        let known = memory.transitions.get(&key);
        match persona.mindset {
            Mindset::SequentialCoherent => {
                let in_place = matches!(record.kind, WidgetKind::Toggle | WidgetKind::InputField);
                if in_place || known.is_some_and(|s| s == screen) {
                    score += SAME_SCREEN_BONUS;
                }
            }
            Mindset::DivergentNonlinear => {
                let may_navigate = match known {
                    Some(target) => !memory.visited.contains(target),
                    None => {
                        action == Action::Click
                            && matches!(
                                record.kind,
                                WidgetKind::Button | WidgetKind::ListItem | WidgetKind::MenuItem
                            )
                    }
                };
                if may_navigate {
                    score += NEW_SCREEN_BONUS;
                }
            }
        }
        score
    }

    fn rng(ctx: &SessionContext, excluded: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(&[ctx.seed, ctx.step_index() as u64, excluded as u64]))
    }

    /// Stage 1: pick the target and articulate the intent.
    fn choose_intent<'a>(
        &self,
        ctx: &SessionContext,
        obs: &'a Observation,
        excluded: &[TestOperation],
    ) -> Option<(&'a WidgetRecord, Action, TestIntent)> {
        let memory = SessionMemory::from_context(ctx, obs);
        let mut candidates: Vec<Candidate<'a>> = obs
            .doc
            .interactable()
            .map(|record| (record, default_action(record.kind)))
            .filter(|(record, action)| {
                !excluded
                    .iter()
                    .any(|op| op.target_ref == record.reference && op.action == *action)
            })
            .map(|(record, action)| Candidate {
                record,
                action,
                score: 0.0,
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let mut rng = Self::rng(ctx, excluded.len());
        let chosen = match self.persona {
            None => {
                let i = rng.random_range(0..candidates.len());
                &candidates[i]
            }
            Some(persona) => {
                for c in &mut candidates {
                    c.score = self.score(persona, obs, &memory, c.record, c.action);
                }
                // stable: equal scores keep reading order
                candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
                match persona.mindset {
                    Mindset::SequentialCoherent => &candidates[0],
                    Mindset::DivergentNonlinear => {
                        let top = &candidates[..candidates.len().min(TOP_K)];
                        let best = top[0].score;
                        let weights: Vec<f64> = top.iter().map(|c| ((c.score - best) / SAMPLING_TEMPERATURE).exp()).collect();
                        let total: f64 = weights.iter().sum();
                        let mut draw = rng.random::<f64>() * total;
                        let mut pick = top.len() - 1;
                        for (i, w) in weights.iter().enumerate() {
                            if draw < *w {
                                pick = i;
                                break;
                            }
                            draw -= w;
                        }
                        &top[pick]
                    }
                }
            }
        };
        let record = chosen.record;
        let action = chosen.action;
        let label = &record.label;
        let key = (obs.doc.screen_id.clone(), label.clone(), action);
        let intent = match action {
            Action::Input => TestIntent::new(
                format!("enter {} text into {label}", self.input_words()),
                ExpectedEffect::ValueChange,
            ),
            Action::Toggle => TestIntent::new(format!("toggle {label}"), ExpectedEffect::ValueChange),
            _ => {
                let opener = obs
                    .widget_for_ref(record.reference)
                    .is_some_and(|w| {
                        obs.snapshot
                            .widgets
                            .iter()
                            .any(|h| h.revealed_by.as_deref() == Some(w.id.as_str()))
                    });
                if opener {
                    TestIntent::new(format!("open the {label} menu"), ExpectedEffect::RevealWidget)
                } else if memory.transitions.get(&key) == Some(&obs.doc.screen_id) {
                    TestIntent::new(format!("tap {label}"), ExpectedEffect::ValueChange)
                } else {
                    TestIntent::new(format!("open {label}"), ExpectedEffect::ScreenChange)
                }
            }
        };
        Some((record, action, intent))
    }

    fn input_class(&self) -> InputClass {
        self.persona
            .map(|p| habit_class(p.habit))
            .unwrap_or(InputClass::ValidShort)
    }

    fn input_words(&self) -> &'static str {
        match self.input_class() {
            InputClass::ValidShort => "short valid",
            InputClass::ValidLong => "long valid",
            InputClass::Invalid => "invalid",
        }
    }

    /// Stage 2: turn the intent into a concrete operation.
    fn realize(
        &self,
        ctx: &SessionContext,
        obs: &Observation,
        record: &WidgetRecord,
        action: Action,
        intent: TestIntent,
    ) -> TestOperation {
        let params = (action == Action::Input).then(|| {
            let widget = obs.widget_for_ref(record.reference);
            let rule = widget.and_then(|w| w.input_rule);
            let field_id = widget.map(|w| w.id.as_str()).unwrap_or(record.label.as_str());
            let memory = SessionMemory::from_context(ctx, obs);
            let attempt = memory
                .inputs_per_field
                .get(&(obs.doc.screen_id.clone(), record.label.clone()))
                .copied()
                .unwrap_or(0);
            let text = match rule {
                Some(rule) => generate_input(self.input_class(), &rule, ctx.seed, field_id, attempt).text,
                None => {
                    log::warn!("no input rule for {field_id}; typing a placeholder");
                    "text".to_string()
                }
            };
            OpParams::text(text)
        });
        let summary = match (&params, action) {
            (Some(p), _) => format!(
                "{} {:?} into {}",
                action.verb(),
                p.text.as_deref().unwrap_or(""),
                record.label
            ),
            (None, _) => format!("{} {}", action.verb(), record.label),
        };
        TestOperation {
            intent,
            target_ref: record.reference,
            action,
            params,
            summary,
        }
    }
}

impl DecisionPolicy for ScriptedPolicy {
    fn propose(
        &self,
        ctx: &SessionContext,
        obs: &Observation,
        excluded: &[TestOperation],
    ) -> Result<TestOperation, AgentError> {
        if let Some((record, action, intent)) = self.choose_intent(ctx, obs, excluded) {
            return Ok(self.realize(ctx, obs, record, action, intent));
        }
        let intent = TestIntent::new(ctx.task.clone(), ExpectedEffect::RevealWidget);
        hidden_widget_search(&obs.doc, &intent, &obs.snapshot)
            .into_iter()
            .find(|op| !excluded.iter().any(|e| e.same_call(op)))
            .ok_or_else(|| AgentError::NoActionableWidget(obs.doc.screen_id.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{decide, Budget};
    use crate::app::{classify_input, Charset, InputRule, Rect};
    use crate::perception::{mark_transient, textualize, RawGuiSnapshot, RawWidget};
    use crate::persona::parse_persona;

    fn widget(id: &str, kind: WidgetKind, label: &str, y: i32) -> RawWidget {
        RawWidget {
            id: id.into(),
            kind,
            label: label.into(),
            bounds: Rect::new(20, y, 300, 80),
            live_value: String::new(),
            transient: false,
            hidden: false,
            core: false,
            interactable: true,
            revealed_by: None,
            input_rule: (kind == WidgetKind::InputField).then_some(InputRule {
                charset: Charset::Digits,
                max_len: 2,
                short_len: 2,
            }),
        }
    }

    fn obs(widgets: Vec<RawWidget>) -> Observation {
        let snap = mark_transient(&RawGuiSnapshot {
            screen_id: "s".into(),
            widgets,
        });
        Observation::new(textualize(&snap), snap)
    }

    fn ctx(code: Option<&str>, seed: u64) -> SessionContext {
        SessionContext::new(
            "app",
            "edit the alarm",
            code.map(|c| parse_persona(c).unwrap()),
            Budget::default(),
            seed,
        )
    }

    #[test]
    fn input_strategy_picks_the_field() {
        let mut ws: Vec<RawWidget> = (0..5)
            .map(|i| widget(&format!("b{i}"), WidgetKind::Button, &format!("B{i}"), i * 100))
            .collect();
        ws.push(widget("f", WidgetKind::InputField, "Hour", 900));
        let o = obs(ws);
        for code in ["A.c.iii", "A.c.ii"] {
            let op = decide(&scripted_policy(Some(parse_persona(code).unwrap())), &ctx(Some(code), 3), &o).unwrap();
            assert_eq!(op.action, Action::Input, "{code}");
            assert_eq!(o.doc.widgets[op.target_ref].label, "Hour");
        }
        // Mindset B samples, so the field is only the most frequent pick.
        let policy = scripted_policy(Some(parse_persona("B.c.i").unwrap()));
        let mut counts = BTreeMap::new();
        for seed in 0..200 {
            let op = decide(&policy, &ctx(Some("B.c.i"), seed), &o).unwrap();
            *counts.entry(o.doc.widgets[op.target_ref].label.clone()).or_insert(0) += 1;
        }
        let top = counts.iter().max_by_key(|(_, n)| **n).unwrap().0;
        assert_eq!(top, "Hour", "{counts:?}");
    }

    #[test]
    fn invalid_habit_payload_fails_charset() {
        let o = obs(vec![
            widget("h", WidgetKind::InputField, "Hour", 100),
            widget("m", WidgetKind::InputField, "Minute", 200),
            widget("save", WidgetKind::Button, "Save", 300),
        ]);
        let op = decide(&scripted_policy(Some(parse_persona("A.c.iii").unwrap())), &ctx(Some("A.c.iii"), 1), &o).unwrap();
        assert_eq!(o.doc.widgets[op.target_ref].label, "Hour");
        let rule = o.widget_for_ref(op.target_ref).unwrap().input_rule.unwrap();
        assert_eq!(classify_input(&rule, op.text().unwrap()), InputClass::Invalid);
        assert_eq!(op.intent.expected_effect, ExpectedEffect::ValueChange);
    }

    #[test]
    fn mindset_a_is_deterministic_argmax() {
        let o = obs(vec![
            widget("x", WidgetKind::Button, "Settings", 100),
            widget("y", WidgetKind::Toggle, "Vibration", 200),
            widget("z", WidgetKind::Button, "Save", 300),
        ]);
        let p = scripted_policy(Some(parse_persona("A.a.i").unwrap()));
        let a = decide(&p, &ctx(Some("A.a.i"), 1), &o).unwrap();
        let b = decide(&p, &ctx(Some("A.a.i"), 999), &o).unwrap();
        assert_eq!(a, b);
        // toggle earns the same-screen bonus
        assert_eq!(o.doc.widgets[a.target_ref].label, "Vibration");
    }

    #[test]
    fn mindset_b_is_seeded() {
        let o = obs((0..6)
            .map(|i| widget(&format!("b{i}"), WidgetKind::Button, &format!("Item {i}"), i * 100))
            .collect());
        let p = scripted_policy(Some(parse_persona("B.a.ii").unwrap()));
        let picks: BTreeSet<usize> = (0..40)
            .map(|seed| decide(&p, &ctx(Some("B.a.ii"), seed), &o).unwrap().target_ref)
            .collect();
        assert!(picks.len() > 1);
        assert!(picks.iter().all(|r| *r < 5), "top-5 only: {picks:?}");
        let again = decide(&p, &ctx(Some("B.a.ii"), 7), &o).unwrap();
        assert_eq!(again, decide(&p, &ctx(Some("B.a.ii"), 7), &o).unwrap());
    }

    #[test]
    fn baseline_is_uniform_over_interactables() {
        let o = obs((0..4)
            .map(|i| widget(&format!("b{i}"), WidgetKind::Button, &format!("Item {i}"), i * 100))
            .collect());
        let p = scripted_policy(None);
        let picks: BTreeSet<usize> = (0..60)
            .map(|seed| decide(&p, &ctx(None, seed), &o).unwrap().target_ref)
            .collect();
        assert_eq!(picks.len(), 4);
    }

    #[test]
    fn core_strategy_prefers_core_widgets() {
        let mut core = widget("save", WidgetKind::Button, "Save", 900);
        core.core = true;
        let o = obs(vec![
            widget("x", WidgetKind::Button, "Help", 100),
            widget("y", WidgetKind::Button, "About", 200),
            core,
        ]);
        let op = decide(&scripted_policy(Some(parse_persona("A.b.ii").unwrap())), &ctx(Some("A.b.ii"), 0), &o).unwrap();
        assert_eq!(o.doc.widgets[op.target_ref].label, "Save");
    }

    #[test]
    fn core_strategy_treats_task_openers_as_core() {
        let mut item = widget("ch", WidgetKind::MenuItem, "Edit Alarm", 500);
        item.hidden = true;
        item.revealed_by = Some("more".into());
        let o = obs(vec![
            widget("x", WidgetKind::Button, "Help", 100),
            widget("more", WidgetKind::Button, "More", 200),
            item,
        ]);
        let op = decide(&scripted_policy(Some(parse_persona("A.b.ii").unwrap())), &ctx(Some("A.b.ii"), 0), &o).unwrap();
        assert_eq!(o.doc.widgets[op.target_ref].label, "More");
        assert_eq!(op.intent.expected_effect, ExpectedEffect::RevealWidget);
    }

    #[test]
    fn exhausted_candidates_fall_back_to_hidden_search() {
        let mut item = widget("ch", WidgetKind::MenuItem, "Edit Alarm", 500);
        item.hidden = true;
        item.revealed_by = Some("more".into());
        let o = obs(vec![widget("more", WidgetKind::Button, "More", 100), item]);
        let p = scripted_policy(None);
        let c = ctx(None, 0);
        let first = p.propose(&c, &o, &[]).unwrap();
        // the opener is the only candidate; once excluded the search has nothing new
        assert!(matches!(
            p.propose(&c, &o, &[first]),
            Err(AgentError::NoActionableWidget(_))
        ));
    }
}
