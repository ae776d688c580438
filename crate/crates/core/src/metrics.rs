//! Trace purification, phrase embedding, order-sensitive path encoding and
//! the cohesion / separation / effectiveness metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app::{Action, WidgetKind};
use crate::hashing::hash_str;
use crate::trace::Trace;

pub const DEFAULT_EMBED_DIM: usize = 64;
pub const DEFAULT_DECAY: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("cannot encode an empty path")]
    EmptyPath,
    #[error("zero-length vector")]
    ZeroVector,
    #[error("need at least {needed} paths, got {got}")]
    InsufficientPaths { needed: usize, got: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

fn is_fallback_descriptor(label: &str) -> bool {
    label.contains(" at (") && label.ends_with(')')
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// `"<verb> <normalized label>"`. Buttons get a trailing `button` unless the
/// label already ends with it; fallback descriptors are kept verbatim.
pub fn purify_action(action: Action, kind: WidgetKind, label: &str) -> String {
    let lower = label.to_lowercase();
    let object = if is_fallback_descriptor(&lower) {
        collapse(&lower)
    } else {
        let stripped: String = lower
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();
        let mut object = collapse(&stripped);
        if object.is_empty() {
            // symbol-only labels such as "+"
            object = collapse(&lower);
        }
        if object.is_empty() {
            object = kind.display_name().to_string();
        } else if kind == WidgetKind::Button && !object.ends_with("button") {
            object.push_str(" button");
        }
        object
    };
    format!("{} {object}", action.verb())
}

pub fn purify(trace: &Trace) -> Vec<String> {
    trace
        .events
        .iter()
        .map(|e| purify_action(e.operation.action, e.target_kind, &e.target_label))
        .collect()
}

/// Provider seam for phrase embeddings.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, phrase: &str) -> Vec<f64>;
}

/// Feature-hashed bag of whitespace tokens, unit-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self {
            dim: DEFAULT_EMBED_DIM,
        }
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, phrase: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for token in phrase.split_whitespace() {
            v[(hash_str(token) % self.dim as u64) as usize] += 1.0;
        }
        normalize(v)
    }
}

pub fn embed_phrase(phrase: &str) -> Vec<f64> {
    HashEmbedder::default().embed(phrase)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Unit vector summarizing one exploration path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathVector {
    pub values: Vec<f64>,
}

pub fn encode_path(phrases: &[Vec<f64>]) -> Result<PathVector, MetricError> {
    encode_path_with(phrases, DEFAULT_DECAY)
}

/// Forward sum `Σ γ^(T−t) e_t` concatenated with backward sum
/// `Σ γ^(t−1) e_t` (t is 1-based), then unit-normalized.
pub fn encode_path_with(phrases: &[Vec<f64>], gamma: f64) -> Result<PathVector, MetricError> {
    let first = phrases.first().ok_or(MetricError::EmptyPath)?;
    let d = first.len();
    let t_len = phrases.len();
    let mut forward = vec![0.0; d];
    let mut backward = vec![0.0; d];
    for (i, e) in phrases.iter().enumerate() {
        if e.len() != d {
            return Err(MetricError::DimensionMismatch(d, e.len()));
        }
        let wf = gamma.powi((t_len - 1 - i) as i32);
        let wb = gamma.powi(i as i32);
        for k in 0..d {
            forward[k] += wf * e[k];
            backward[k] += wb * e[k];
        }
    }
    forward.extend(backward);
    if norm(&forward) == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    Ok(PathVector {
        values: normalize(forward),
    })
}

pub fn trace_path(trace: &Trace, embedder: &dyn Embedder) -> Result<PathVector, MetricError> {
    let vectors: Vec<Vec<f64>> = purify(trace).iter().map(|p| embedder.embed(p)).collect();
    encode_path(&vectors)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    if u.len() != v.len() {
        return Err(MetricError::DimensionMismatch(u.len(), v.len()));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Mean cosine over all unordered pairs.
pub fn cohesion(paths: &[PathVector]) -> Result<f64, MetricError> {
    let n = paths.len();
    if n < 2 {
        return Err(MetricError::InsufficientPaths { needed: 2, got: n });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += cosine(&paths[i].values, &paths[j].values)?;
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Mean cosine over the |M|×|N| cross pairs.
pub fn separation(m: &[PathVector], n: &[PathVector]) -> Result<f64, MetricError> {
    if m.is_empty() || n.is_empty() {
        return Err(MetricError::InsufficientPaths {
            needed: 1,
            got: m.len().min(n.len()),
        });
    }
    let mut total = 0.0;
    for a in m {
        for b in n {
            total += cosine(&a.values, &b.values)?;
        }
    }
    Ok(total / (m.len() * n.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effectiveness {
    pub general: f64,
    /// Absent when the trace has no input events.
    pub input: Option<f64>,
    pub events: usize,
    pub effective: usize,
    pub input_events: usize,
    pub effective_inputs: usize,
}

/// An event is effective when it changed GUI state or triggered a bug.
pub fn effectiveness(trace: &Trace) -> Effectiveness {
    let mut c = Effectiveness {
        general: 0.0,
        input: None,
        events: trace.events.len(),
        effective: 0,
        input_events: 0,
        effective_inputs: 0,
    };
    for e in &trace.events {
        let d = &e.outcome_digest;
        let effective = (d.accepted && d.state_changed) || !d.bugs.is_empty();
        let input = e.operation.action == Action::Input;
        c.effective += effective as usize;
        c.input_events += input as usize;
        c.effective_inputs += (input && effective) as usize;
    }
    if c.events > 0 {
        c.general = c.effective as f64 / c.events as f64;
    }
    if c.input_events > 0 {
        c.input = Some(c.effective_inputs as f64 / c.input_events as f64);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::fixtures::{event, trace};
    use proptest::prelude::*;

    #[test]
    fn exemplar_phrases() {
        assert_eq!(purify_action(Action::Click, WidgetKind::Button, "Save"), "click save button");
        assert_eq!(
            purify_action(Action::Input, WidgetKind::InputField, "Alarm Time"),
            "input alarm time"
        );
        assert_eq!(
            purify_action(Action::Click, WidgetKind::Button, "button at (40,60)"),
            "click button at (40,60)"
        );
        assert_eq!(purify_action(Action::Click, WidgetKind::Button, "Play Button"), "click play button");
        assert_eq!(purify_action(Action::Click, WidgetKind::Button, "+"), "click + button");
        assert_eq!(purify_action(Action::Toggle, WidgetKind::Toggle, "  Vibrate!  "), "toggle vibrate");
    }

    #[test]
    fn purify_is_total() {
        let t = trace(vec![
            event(Action::Click, WidgetKind::Button, "Save", true),
            event(Action::Input, WidgetKind::InputField, "Alarm Time", true),
            event(Action::Click, WidgetKind::ListItem, "", false),
        ]);
        let phrases = purify(&t);
        assert_eq!(phrases.len(), 3);
        assert!(phrases.iter().all(|p| !p.is_empty()));
        assert_eq!(phrases[2], "click list item");
    }

    #[test]
    fn embedding_is_unit_and_separates_exemplars() {
        let a = embed_phrase("click save button");
        let b = embed_phrase("input alarm time");
        assert!((norm(&a) - 1.0).abs() < 1e-12);
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(cosine(&a, &b).unwrap() < 1.0);
    }

    #[test]
    fn single_phrase_path_duplicates_embedding() {
        let e = embed_phrase("click save button");
        let p = encode_path(std::slice::from_ref(&e)).unwrap();
        let mut expected = e.clone();
        expected.extend(&e);
        let expected = normalize(expected);
        for (x, y) in p.values.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(encode_path(&[]), Err(MetricError::EmptyPath));
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 1.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(MetricError::ZeroVector));
    }

    fn unit_at(theta: f64) -> PathVector {
        PathVector {
            values: vec![theta.cos(), theta.sin()],
        }
    }

    #[test]
    fn cohesion_examples() {
        let same: Vec<_> = (0..5).map(|_| unit_at(0.3)).collect();
        assert!((cohesion(&same).unwrap() - 1.0).abs() < 1e-9);
        assert!(cohesion(&[unit_at(0.0), unit_at(std::f64::consts::FRAC_PI_2)]).unwrap().abs() < 1e-15);
        assert_eq!(
            cohesion(&[unit_at(0.0)]),
            Err(MetricError::InsufficientPaths { needed: 2, got: 1 })
        );
    }

    #[test]
    fn separation_example() {
        let m = vec![unit_at(0.0); 3];
        let n = vec![unit_at(std::f64::consts::FRAC_PI_3); 2];
        assert!((separation(&m, &n).unwrap() - 0.5).abs() < 1e-12);
        assert!(separation(&m, &[]).is_err());
    }

    #[test]
    fn effectiveness_counts() {
        let mut events: Vec<_> = (0..10)
            .map(|i| event(Action::Click, WidgetKind::Button, "Save", i < 7))
            .collect();
        let e = effectiveness(&trace(events.clone()));
        assert!((e.general - 0.7).abs() < 1e-12);
        assert_eq!(e.input, None);
        events[9] = event(Action::Input, WidgetKind::InputField, "Hour", false);
        events[8] = event(Action::Input, WidgetKind::InputField, "Hour", true);
        let e = effectiveness(&trace(events));
        assert_eq!(e.input, Some(0.5));
    }

    #[test]
    fn bug_events_are_effective() {
        let mut ev = event(Action::Input, WidgetKind::InputField, "Hour", false);
        ev.outcome_digest.bugs.insert("cb_hour".into());
        ev.outcome_digest.screen_after = None;
        let e = effectiveness(&trace(vec![ev, event(Action::Click, WidgetKind::Button, "Save", true)]));
        assert_eq!(e.general, 1.0);
        assert_eq!(e.input, Some(1.0));
    }

    fn random_unit(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, dim)
            .prop_filter("nonzero", |v| norm(v) > 1e-3)
            .prop_map(normalize)
    }

    proptest! {
        #[test]
        fn encoded_paths_are_unit(path in prop::collection::vec(random_unit(8), 1..12)) {
            let p = encode_path(&path).unwrap();
            prop_assert!((norm(&p.values) - 1.0).abs() < 1e-9);
            prop_assert_eq!(p.values.len(), 16);
        }

        #[test]
        fn swapping_distinct_phrases_changes_path(a in random_unit(8), b in random_unit(8)) {
            prop_assume!(cosine(&a, &b).unwrap() < 1.0 - 1e-6);
            let ab = encode_path(&[a.clone(), b.clone()]).unwrap();
            let ba = encode_path(&[b, a]).unwrap();
            prop_assert!(cosine(&ab.values, &ba.values).unwrap() < 1.0 - 1e-6);
        }

        #[test]
        fn cohesion_of_copies_is_one(v in random_unit(6), k in 2usize..=10) {
            let paths = vec![PathVector { values: v }; k];
            prop_assert!((cohesion(&paths).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn separation_is_symmetric_and_bounded(
            m in prop::collection::vec(random_unit(6), 1..6),
            n in prop::collection::vec(random_unit(6), 1..6),
        ) {
            let m: Vec<_> = m.into_iter().map(|values| PathVector { values }).collect();
            let n: Vec<_> = n.into_iter().map(|values| PathVector { values }).collect();
            let s = separation(&m, &n).unwrap();
            prop_assert!((s - separation(&n, &m).unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
