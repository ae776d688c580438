//! App models and the session simulator that executes them.

mod model;
mod sim;

pub use model::{
    bundled_model, bundled_models, load_app_model, load_app_model_file, Action, AppModel, BugKind,
    BugSpec, Charset, Condition, Effect, Expand, InputClass, InputEffect, InputRule, ModelError,
    Point, Rect, Screen, Trigger, WidgetKind, WidgetSpec, BUNDLED_MODELS, CANVAS_HEIGHT,
    CANVAS_WIDTH,
};
pub use sim::{
    charset_pool, classify_input, reset, violating_pool, Rejection, ScrollDirection, SimError,
    SimEvent, SimulatorState, StepOutcome,
};
