//! Declarative app models: screens, widgets, guarded effects and seeded bugs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CANVAS_WIDTH: i32 = 1080;
pub const CANVAS_HEIGHT: i32 = 1920;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("dangling reference at {path}: {id:?} does not exist")]
    DanglingReference { path: String, id: String },
    #[error("cannot read model {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::SchemaViolation {
        path: path.into(),
        message: message.into(),
    }
}

fn dangling(path: impl Into<String>, id: &str) -> ModelError {
    ModelError::DanglingReference {
        path: path.into(),
        id: id.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    pub const fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Self { x, y, w, h }
    }

    /// Integer center, floor division.
    pub fn center(&self) -> Point {
        Point {
            x: self.x + self.w.div_euclid(2),
            y: self.y + self.h.div_euclid(2),
        }
    }

    /// Half-open containment: `[x, x+w) × [y, y+h)`.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x && p.x < self.x + self.w && p.y >= self.y && p.y < self.y + self.h
    }

    /// True when the two rectangles share a region of positive area.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    pub fn within_canvas(&self) -> bool {
        self.x >= 0
            && self.y >= 0
            && self.w > 0
            && self.h > 0
            && self.x + self.w <= CANVAS_WIDTH
            && self.y + self.h <= CANVAS_HEIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetKind {
    Button,
    Toggle,
    InputField,
    ListItem,
    MenuItem,
    StaticText,
    Decoration,
}

impl WidgetKind {
    /// Human-readable kind name used in fallback descriptors.
    pub fn display_name(self) -> &'static str {
        match self {
            WidgetKind::Button => "button",
            WidgetKind::Toggle => "toggle",
            WidgetKind::InputField => "input field",
            WidgetKind::ListItem => "list item",
            WidgetKind::MenuItem => "menu item",
            WidgetKind::StaticText => "text",
            WidgetKind::Decoration => "decoration",
        }
    }

    pub fn is_clickable(self) -> bool {
        matches!(
            self,
            WidgetKind::Button | WidgetKind::Toggle | WidgetKind::ListItem | WidgetKind::MenuItem
        )
    }

    /// Kinds that can never carry actions.
    pub fn is_inert(self) -> bool {
        matches!(self, WidgetKind::StaticText | WidgetKind::Decoration)
    }
}

impl fmt::Display for WidgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Click,
    Input,
    Toggle,
    Scroll,
}

impl Action {
    pub fn verb(self) -> &'static str {
        match self {
            Action::Click => "click",
            Action::Input => "input",
            Action::Toggle => "toggle",
            Action::Scroll => "scroll",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.verb())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputClass {
    ValidShort,
    ValidLong,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Charset {
    Digits,
    Letters,
    /// ASCII letters, digits and spaces.
    Alphanumeric,
    /// Any printable text; only the length limit can be violated.
    Text,
}

impl Charset {
    pub fn admits(self, c: char) -> bool {
        match self {
            Charset::Digits => c.is_ascii_digit(),
            Charset::Letters => c.is_ascii_alphabetic(),
            Charset::Alphanumeric => c.is_ascii_alphanumeric() || c == ' ',
            Charset::Text => !c.is_control(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InputRule {
    pub charset: Charset,
    pub max_len: usize,
    pub short_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Condition {
    pub var: String,
    pub equals: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputEffect {
    pub var: String,
    /// Reject text the field's rule classifies as invalid.
    #[serde(default)]
    pub validate: bool,
}

/// One guarded effect block. Blocks whose `when` holds against the
/// pre-event variables are applied in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<Condition>,
    /// Only for input events: the block applies when the typed text falls
    /// in this class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when_input: Option<InputClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goto: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub set: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputEffect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clear: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

/// Alternate geometry used once the bound value reaches `min_len` chars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expand {
    pub min_len: usize,
    pub bounds: Rect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WidgetSpec {
    pub id: String,
    pub kind: WidgetKind,
    #[serde(default)]
    pub label: String,
    pub bounds: Rect,
    #[serde(default)]
    pub core: bool,
    #[serde(default)]
    pub transient: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed_by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_rule: Option<InputRule>,
    /// Variable shown as the widget's live value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expand: Option<Expand>,
    #[serde(default)]
    pub actions: BTreeMap<Action, Vec<Effect>>,
}

impl WidgetSpec {
    pub fn interactable(&self) -> bool {
        !self.actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Screen {
    pub id: String,
    pub widgets: Vec<WidgetSpec>,
    /// Number of widgets visible at once; enables scrolling when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BugKind {
    Crash,
    Functional,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Trigger {
    Point {
        screen: String,
        widget: String,
        action: Action,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        required_input_class: Option<InputClass>,
    },
    /// Ordered event tags that must all occur, in order, within one
    /// session. With `anchored`, the first tag must belong to the
    /// session's first event.
    Sequence {
        events: Vec<String>,
        #[serde(default)]
        anchored: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BugSpec {
    pub id: String,
    pub kind: BugKind,
    pub trigger: Trigger,
    pub symptom: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppModel {
    pub app_id: String,
    pub entry_screen: String,
    pub screens: Vec<Screen>,
    #[serde(default)]
    pub bugs: Vec<BugSpec>,
    pub core_task: String,
    /// Initial variable values.
    #[serde(default)]
    pub variables: BTreeMap<String, String>,
}

impl AppModel {
    pub fn screen(&self, id: &str) -> Option<&Screen> {
        self.screens.iter().find(|s| s.id == id)
    }

    pub fn widget(&self, id: &str) -> Option<(&Screen, &WidgetSpec)> {
        self.screens
            .iter()
            .find_map(|s| s.widgets.iter().find(|w| w.id == id).map(|w| (s, w)))
    }

    pub fn bug(&self, id: &str) -> Option<&BugSpec> {
        self.bugs.iter().find(|b| b.id == id)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.app_id.trim().is_empty() {
            return Err(schema("app_id", "must be non-empty"));
        }
        if self.screens.is_empty() {
            return Err(schema("screens", "at least one screen is required"));
        }
        let mut screen_ids = BTreeSet::new();
        for (si, screen) in self.screens.iter().enumerate() {
            if !screen_ids.insert(screen.id.as_str()) {
                return Err(schema(format!("screens[{si}].id"), format!("duplicate screen id {:?}", screen.id)));
            }
            if screen.page_size == Some(0) {
                return Err(schema(format!("screens[{si}].page_size"), "must be positive"));
            }
        }
        if !screen_ids.contains(self.entry_screen.as_str()) {
            return Err(dangling("entry_screen", &self.entry_screen));
        }

        let mut widget_ids = BTreeSet::new();
        for (si, screen) in self.screens.iter().enumerate() {
            for (wi, w) in screen.widgets.iter().enumerate() {
                let at = format!("screens[{si}].widgets[{wi}]");
                if !widget_ids.insert(w.id.as_str()) {
                    return Err(schema(format!("{at}.id"), format!("duplicate widget id {:?}", w.id)));
                }
                if w.kind.is_inert() && !w.actions.is_empty() {
                    return Err(schema(format!("{at}.actions"), "static_text and decoration widgets take no actions"));
                }
                match (&w.input_rule, w.kind) {
                    (Some(rule), WidgetKind::InputField) => {
                        if rule.short_len == 0 || rule.short_len > rule.max_len {
                            return Err(schema(format!("{at}.input_rule"), "requires 0 < short_len <= max_len"));
                        }
                    }
                    (None, WidgetKind::InputField) => {
                        return Err(schema(format!("{at}.input_rule"), "input_field requires an input_rule"));
                    }
                    (Some(_), _) => {
                        return Err(schema(format!("{at}.input_rule"), "only input_field widgets carry an input_rule"));
                    }
                    (None, _) => {}
                }
                if w.expand.is_some() && w.bind.is_none() {
                    return Err(schema(format!("{at}.expand"), "expand requires a bound variable"));
                }
                for (action, effects) in &w.actions {
                    if *action == Action::Input && w.kind != WidgetKind::InputField {
                        return Err(schema(format!("{at}.actions.input"), "only input fields accept input"));
                    }
                    for (ei, effect) in effects.iter().enumerate() {
                        if let Some(target) = &effect.goto {
                            if !screen_ids.contains(target.as_str()) {
                                return Err(dangling(format!("{at}.actions.{action}[{ei}].goto"), target));
                            }
                        }
                    }
                }
            }
        }
        for (si, screen) in self.screens.iter().enumerate() {
            for (wi, w) in screen.widgets.iter().enumerate() {
                if let Some(opener) = &w.revealed_by {
                    if !screen.widgets.iter().any(|o| &o.id == opener && o.id != w.id) {
                        return Err(dangling(format!("screens[{si}].widgets[{wi}].revealed_by"), opener));
                    }
                }
            }
        }

        let mut bug_ids = BTreeSet::new();
        for (bi, bug) in self.bugs.iter().enumerate() {
            if !bug_ids.insert(bug.id.as_str()) {
                return Err(schema(format!("bugs[{bi}].id"), format!("duplicate bug id {:?}", bug.id)));
            }
            match &bug.trigger {
                Trigger::Point { screen, widget, .. } => {
                    let Some(s) = self.screen(screen) else {
                        return Err(dangling(format!("bugs[{bi}].trigger.screen"), screen));
                    };
                    if !s.widgets.iter().any(|w| &w.id == widget) {
                        return Err(dangling(format!("bugs[{bi}].trigger.widget"), widget));
                    }
                }
                Trigger::Sequence { events, .. } => {
                    if events.is_empty() {
                        return Err(schema(format!("bugs[{bi}].trigger.events"), "sequence trigger must be non-empty"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates an app-model document.
pub fn load_app_model(document: &str) -> Result<AppModel, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let model: AppModel = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path.is_empty() { "$".to_string() } else { path }, e.into_inner().to_string())
    })?;
    model.validate()?;
    Ok(model)
}

pub fn load_app_model_file(path: &Path) -> Result<AppModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_app_model(&text)
}

/// Demo models shipped with the crate, by app id.
pub const BUNDLED_MODELS: [(&str, &str); 3] = [
    ("alarm_clock", include_str!("../../models/alarm_clock.json")),
    ("notes_input_rich", include_str!("../../models/notes_input_rich.json")),
    ("shop_browse", include_str!("../../models/shop_browse.json")),
];

pub fn bundled_model(app_id: &str) -> Option<AppModel> {
    BUNDLED_MODELS
        .iter()
        .find(|(id, _)| *id == app_id)
        .map(|(_, doc)| load_app_model(doc).expect("bundled model is valid"))
}

pub fn bundled_models() -> Vec<AppModel> {
    BUNDLED_MODELS
        .iter()
        .map(|(_, doc)| load_app_model(doc).expect("bundled model is valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "app_id": "mini",
            "entry_screen": "home",
            "core_task": "poke the button",
            "screens": [
                {"id": "home", "widgets": [
                    {"id": "w_go", "kind": "button", "label": "Go", "bounds": {"x": 0, "y": 0, "w": 100, "h": 50},
                     "actions": {"click": [{"goto": "next"}]}}
                ]},
                {"id": "next", "widgets": []}
            ],
            "bugs": []
        })
    }

    #[test]
    fn loads_minimal_model() {
        let m = load_app_model(&minimal().to_string()).unwrap();
        assert_eq!(m.screens.len(), 2);
        assert!(m.widget("w_go").is_some());
    }

    #[test]
    fn dangling_transition_target() {
        let mut v = minimal();
        v["screens"][0]["widgets"][0]["actions"]["click"][0]["goto"] = "nowhere".into();
        match load_app_model(&v.to_string()) {
            Err(ModelError::DanglingReference { path, id }) => {
                assert_eq!(id, "nowhere");
                assert!(path.contains("goto"), "{path}");
            }
            other => panic!("expected dangling reference, got {other:?}"),
        }
    }

    #[test]
    fn empty_screens_is_schema_violation() {
        let mut v = minimal();
        v["screens"] = serde_json::json!([]);
        assert!(matches!(
            load_app_model(&v.to_string()),
            Err(ModelError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn reports_field_path_for_type_errors() {
        let mut v = minimal();
        v["screens"][0]["widgets"][0]["kind"] = "slider".into();
        match load_app_model(&v.to_string()) {
            Err(ModelError::SchemaViolation { path, .. }) => {
                assert_eq!(path, "screens[0].widgets[0].kind");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn static_widgets_take_no_actions() {
        let mut v = minimal();
        v["screens"][0]["widgets"][0]["kind"] = "decoration".into();
        assert!(matches!(
            load_app_model(&v.to_string()),
            Err(ModelError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn input_rule_iff_input_field() {
        let mut v = minimal();
        v["screens"][0]["widgets"][0]["kind"] = "input_field".into();
        assert!(load_app_model(&v.to_string()).is_err());
        v["screens"][0]["widgets"][0]["input_rule"] =
            serde_json::json!({"charset": "digits", "max_len": 2, "short_len": 3});
        assert!(load_app_model(&v.to_string()).is_err());
        v["screens"][0]["widgets"][0]["input_rule"] =
            serde_json::json!({"charset": "digits", "max_len": 2, "short_len": 2});
        assert!(load_app_model(&v.to_string()).is_ok());
    }

    #[test]
    fn duplicate_widget_ids_rejected() {
        let mut v = minimal();
        v["screens"][1]["widgets"] = serde_json::json!([
            {"id": "w_go", "kind": "static_text", "label": "dup", "bounds": {"x": 0, "y": 0, "w": 10, "h": 10}}
        ]);
        assert!(matches!(
            load_app_model(&v.to_string()),
            Err(ModelError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn bug_trigger_references_checked() {
        let mut v = minimal();
        v["bugs"] = serde_json::json!([
            {"id": "b1", "kind": "crash", "symptom": "boom",
             "trigger": {"type": "point", "screen": "home", "widget": "w_missing", "action": "click"}}
        ]);
        assert!(matches!(
            load_app_model(&v.to_string()),
            Err(ModelError::DanglingReference { .. })
        ));
        v["bugs"] = serde_json::json!([
            {"id": "b1", "kind": "functional", "symptom": "boom",
             "trigger": {"type": "sequence", "events": []}}
        ]);
        assert!(matches!(
            load_app_model(&v.to_string()),
            Err(ModelError::SchemaViolation { .. })
        ));
    }

    #[test]
    fn bundled_alarm_clock_screens() {
        let m = bundled_model("alarm_clock").unwrap();
        let ids: BTreeSet<&str> = m.screens.iter().map(|s| s.id.as_str()).collect();
        for id in ["home", "edit_alarm", "type_menu", "sound_settings"] {
            assert!(ids.contains(id), "missing {id}");
        }
    }

    #[test]
    fn all_bundled_models_validate() {
        assert_eq!(bundled_models().len(), 3);
    }

    #[test]
    fn rect_geometry() {
        assert_eq!(Rect::new(100, 200, 80, 40).center(), Point { x: 140, y: 220 });
        assert_eq!(Rect::new(0, 0, 1, 1).center(), Point { x: 0, y: 0 });
        assert!(Rect::new(0, 0, 10, 10).overlaps(&Rect::new(5, 5, 10, 10)));
        assert!(!Rect::new(0, 0, 10, 10).overlaps(&Rect::new(10, 0, 10, 10)));
        assert!(!Rect::new(1000, 0, 100, 10).within_canvas());
    }
}
