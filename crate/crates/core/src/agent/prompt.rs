use serde::Serialize;

use super::SessionContext;
use crate::perception::GuiStateDoc;
use crate::persona::render_persona_prompt;

/// Number of most recent actions replayed in the history digest.
pub const HISTORY_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptSection {
    pub title: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptDoc {
    pub sections: Vec<PromptSection>,
}

impl PromptDoc {
    pub fn section(&self, title: &str) -> Option<&PromptSection> {
        self.sections.iter().find(|s| s.title == title)
    }

    pub fn render(&self) -> String {
        self.sections
            .iter()
            .map(|s| format!("### {}\n{}\n", s.title, s.body.trim_end()))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub(crate) const DECISION_SCHEMA: &str = r#"Reply with exactly one JSON object and nothing else:
{"intent": "<imperative test goal>",
 "expected_effect": "screen_change" | "value_change" | "reveal_widget" | "none_expected",
 "target_ref": <ref of the widget to operate>,
 "action": "click" | "input" | "toggle" | "scroll",
 "params": {"text": "<text to type>"} | {"direction": "up" | "down"} | null,
 "summary": "<one sentence describing the operation>"}
First decide the test intent, then choose the single operation that achieves it.
Do not repeat an operation that just had no effect."#;

pub fn build_prompt(ctx: &SessionContext, doc: &GuiStateDoc) -> PromptDoc {
    let mut sections = vec![PromptSection {
        title: "Identity and Task".into(),
        body: format!(
            "You are an automated GUI tester exploring the app \"{}\".\nTesting task: {}",
            ctx.app_id, ctx.task
        ),
    }];
    if let Some(persona) = &ctx.persona {
        sections.push(PromptSection {
            title: "Persona".into(),
            body: render_persona_prompt(persona),
        });
    }
    let history = ctx.history();
    let recent = &history[history.len().saturating_sub(HISTORY_WINDOW)..];
    let digest = if recent.is_empty() {
        "(no actions yet)".to_string()
    } else {
        recent
            .iter()
            .map(|r| {
                let d = &r.outcome_digest;
                let effect = if !d.accepted {
                    "rejected"
                } else if !d.bugs.is_empty() {
                    "bug triggered"
                } else if d.state_changed {
                    "state changed"
                } else {
                    "no visible effect"
                };
                format!("{}. {} -> {}", r.step_index + 1, r.phrase(), effect)
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    sections.push(PromptSection {
        title: "History".into(),
        body: digest,
    });
    sections.push(PromptSection {
        title: "Current GUI State".into(),
        body: doc.to_json(),
    });
    sections.push(PromptSection {
        title: "Output Format".into(),
        body: DECISION_SCHEMA.into(),
    });
    PromptDoc { sections }
}
