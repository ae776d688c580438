//! Persona schema: a ⟨mindset, strategy, habit⟩ tuple describing a crowd
//! tester archetype, the nine shipped agent configurations, and the prompt
//! block each persona injects into the decision context.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Agent name reserved for the non-personified baseline.
pub const BASELINE_NAME: &str = "P_X";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PersonaError {
    #[error("malformed persona code {0:?}: expected <A|B>.<a|b|c>.<i|ii|iii>")]
    MalformedPersonaCode(String),
    #[error("unknown agent name {0:?}")]
    UnknownAgentName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mindset {
    SequentialCoherent,
    DivergentNonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ClickOriented,
    CoreFunctionFocused,
    InputOriented,
}

/// Input style. Codes follow the agent configuration table:
/// `i` is valid and long, `ii` valid and short, `iii` invalid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Habit {
    ValidLong,
    ValidShort,
    Invalid,
}

impl Mindset {
    pub const ALL: [Mindset; 2] = [Mindset::SequentialCoherent, Mindset::DivergentNonlinear];

    pub fn code(self) -> &'static str {
        match self {
            Mindset::SequentialCoherent => "A",
            Mindset::DivergentNonlinear => "B",
        }
    }

    fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::ClickOriented,
        Strategy::CoreFunctionFocused,
        Strategy::InputOriented,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Strategy::ClickOriented => "a",
            Strategy::CoreFunctionFocused => "b",
            Strategy::InputOriented => "c",
        }
    }

    fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code)
    }
}

impl Habit {
    pub const ALL: [Habit; 3] = [Habit::ValidLong, Habit::ValidShort, Habit::Invalid];

    pub fn code(self) -> &'static str {
        match self {
            Habit::ValidLong => "i",
            Habit::ValidShort => "ii",
            Habit::Invalid => "iii",
        }
    }

    fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.code() == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Persona {
    pub mindset: Mindset,
    pub strategy: Strategy,
    pub habit: Habit,
}

impl Persona {
    pub const fn new(mindset: Mindset, strategy: Strategy, habit: Habit) -> Self {
        Self {
            mindset,
            strategy,
            habit,
        }
    }

    /// Canonical `<m>.<s>.<h>` code.
    pub fn code(&self) -> String {
        format!(
            "{}.{}.{}",
            self.mindset.code(),
            self.strategy.code(),
            self.habit.code()
        )
    }

    /// Every tuple in the 2×3×3 persona space.
    pub fn all() -> impl Iterator<Item = Persona> {
        Mindset::ALL.into_iter().flat_map(|m| {
            Strategy::ALL
                .into_iter()
                .flat_map(move |s| Habit::ALL.into_iter().map(move |h| Persona::new(m, s, h)))
        })
    }
}

impl fmt::Display for Persona {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for Persona {
    type Err = PersonaError;

    fn from_str(code: &str) -> Result<Self, Self::Err> {
        parse_persona(code)
    }
}

impl Serialize for Persona {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for Persona {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        parse_persona(&code).map_err(serde::de::Error::custom)
    }
}

pub fn parse_persona(code: &str) -> Result<Persona, PersonaError> {
    let malformed = || PersonaError::MalformedPersonaCode(code.to_string());
    let parts: Vec<&str> = code.split('.').collect();
    let [m, s, h] = parts.as_slice() else {
        return Err(malformed());
    };
    Ok(Persona {
        mindset: Mindset::from_code(m).ok_or_else(malformed)?,
        strategy: Strategy::from_code(s).ok_or_else(malformed)?,
        habit: Habit::from_code(h).ok_or_else(malformed)?,
    })
}

/// A resolved agent: either a persona-guided agent or the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentProfile {
    Persona(Persona),
    Baseline,
}

impl AgentProfile {
    pub fn persona(&self) -> Option<Persona> {
        match self {
            AgentProfile::Persona(p) => Some(*p),
            AgentProfile::Baseline => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaCatalog {
    pub entries: BTreeMap<String, Persona>,
}

impl PersonaCatalog {
    /// The nine persona-guided agents P_A through P_I.
    pub fn standard() -> Self {
        use Habit::*;
        use Mindset::*;
        use Strategy::*;
        let rows = [
            ("P_A", SequentialCoherent, ClickOriented, ValidLong),
            ("P_B", SequentialCoherent, CoreFunctionFocused, ValidShort),
            ("P_C", SequentialCoherent, InputOriented, Invalid),
            ("P_D", DivergentNonlinear, CoreFunctionFocused, Invalid),
            ("P_E", DivergentNonlinear, ClickOriented, ValidShort),
            ("P_F", DivergentNonlinear, InputOriented, ValidLong),
            ("P_G", SequentialCoherent, ClickOriented, Invalid),
            ("P_H", DivergentNonlinear, CoreFunctionFocused, ValidLong),
            ("P_I", SequentialCoherent, InputOriented, ValidShort),
        ];
        Self {
            entries: rows
                .into_iter()
                .map(|(name, m, s, h)| (name.to_string(), Persona::new(m, s, h)))
                .collect(),
        }
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Persona)>,
        S: Into<String>,
    {
        Self {
            entries: entries.into_iter().map(|(n, p)| (n.into(), p)).collect(),
        }
    }

    pub fn lookup(&self, name: &str) -> Result<Persona, PersonaError> {
        self.entries
            .get(name)
            .copied()
            .ok_or_else(|| PersonaError::UnknownAgentName(name.to_string()))
    }

    /// Like [`lookup`](Self::lookup) but also accepts the baseline name.
    pub fn resolve(&self, name: &str) -> Result<AgentProfile, PersonaError> {
        if name == BASELINE_NAME {
            return Ok(AgentProfile::Baseline);
        }
        self.lookup(name).map(AgentProfile::Persona)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }
}

pub fn catalog_lookup(catalog: &PersonaCatalog, name: &str) -> Result<Persona, PersonaError> {
    catalog.lookup(name)
}

/// One value pair across two persona dimensions that no catalog entry covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MissingPair {
    MindsetStrategy(Mindset, Strategy),
    MindsetHabit(Mindset, Habit),
    StrategyHabit(Strategy, Habit),
}

impl fmt::Display for MissingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingPair::MindsetStrategy(m, s) => write!(f, "({},{})", m.code(), s.code()),
            MissingPair::MindsetHabit(m, h) => write!(f, "({},{})", m.code(), h.code()),
            MissingPair::StrategyHabit(s, h) => write!(f, "({},{})", s.code(), h.code()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub missing: Vec<MissingPair>,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }
}

pub fn verify_pairwise_coverage(catalog: &PersonaCatalog) -> CoverageReport {
    let personas: Vec<Persona> = catalog.entries.values().copied().collect();
    let mut missing = Vec::new();
    for m in Mindset::ALL {
        for s in Strategy::ALL {
            if !personas.iter().any(|p| p.mindset == m && p.strategy == s) {
                missing.push(MissingPair::MindsetStrategy(m, s));
            }
        }
    }
    for m in Mindset::ALL {
        for h in Habit::ALL {
            if !personas.iter().any(|p| p.mindset == m && p.habit == h) {
                missing.push(MissingPair::MindsetHabit(m, h));
            }
        }
    }
    for s in Strategy::ALL {
        for h in Habit::ALL {
            if !personas.iter().any(|p| p.strategy == s && p.habit == h) {
                missing.push(MissingPair::StrategyHabit(s, h));
            }
        }
    }
    CoverageReport { missing }
}

fn mindset_text(m: Mindset) -> (&'static str, &'static str) {
    match m {
        Mindset::SequentialCoherent => (
            "A. sequential_and_coherent",
            "You follow a structured, linear exploration path with a goal-directed flow. \
             Finish the workflow in front of you step by step, top to bottom, before moving on.",
        ),
        Mindset::DivergentNonlinear => (
            "B. divergent_and_non-linear",
            "You explore in a scattered, curiosity-driven way. \
             Jump to secondary pages and settings you have not seen yet whenever something catches your eye.",
        ),
    }
}

fn strategy_text(s: Strategy) -> (&'static str, &'static str) {
    match s {
        Strategy::ClickOriented => (
            "a. click_oriented",
            "You favor general interaction with clickable widgets such as buttons, toggles, list entries and menu items.",
        ),
        Strategy::CoreFunctionFocused => (
            "b. core_function_focused",
            "You prioritize the core function of the app and the widgets central to the task, ignoring peripheral features.",
        ),
        Strategy::InputOriented => (
            "c. input_oriented",
            "You concentrate on widgets that accept user input and try to fill every text field you encounter.",
        ),
    }
}

fn habit_text(h: Habit) -> (&'static str, &'static str) {
    match h {
        Habit::ValidLong => (
            "i. valid_and_long",
            "When typing, enter valid values that are as long or extreme as the field allows, to stress the interface.",
        ),
        Habit::ValidShort => (
            "ii. valid_and_short",
            "When typing, enter short, standard values like an ordinary user would.",
        ),
        Habit::Invalid => (
            "iii. invalid",
            "When typing, enter characters the field should reject, aiming at error-triggering edge cases.",
        ),
    }
}

/// Renders the three-section persona block injected into the decision prompt.
pub fn render_persona_prompt(p: &Persona) -> String {
    let sections = [
        ("Testing Mindset", mindset_text(p.mindset)),
        ("Exploration Strategy", strategy_text(p.strategy)),
        ("Interaction Habit", habit_text(p.habit)),
    ];
    let mut out = format!("You are a crowdsourced GUI tester with persona {}.\n", p.code());
    for (title, (attribute, description)) in sections {
        out.push_str(&format!("## {title}\n{attribute}: {description}\n"));
    }
    out
}
