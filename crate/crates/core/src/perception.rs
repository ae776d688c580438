//! GUI state understanding over structured snapshots: static-content
//! filtering, transient marking, textualization into a canonical state
//! document, and a persistence cache for near-duplicate states.

use serde::{Deserialize, Serialize};

use crate::app::{InputRule, Rect, WidgetKind};
use crate::hashing::hash_str;

/// Dimension of [`GuiStateDoc::signature`].
pub const SIGNATURE_DIM: usize = 128;
pub const DEFAULT_CACHE_THRESHOLD: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawWidget {
    pub id: String,
    pub kind: WidgetKind,
    pub label: String,
    pub bounds: Rect,
    pub live_value: String,
    pub transient: bool,
    pub hidden: bool,
    pub core: bool,
    pub interactable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed_by: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_rule: Option<InputRule>,
}

impl RawWidget {
    /// Semantic descriptor: the label, or `"<kind> at (x,y)"` when unlabeled.
    pub fn descriptor(&self) -> String {
        descriptor(self.kind, &self.label, self.bounds)
    }
}

fn descriptor(kind: WidgetKind, label: &str, bounds: Rect) -> String {
    if label.trim().is_empty() {
        format!("{} at ({},{})", kind.display_name(), bounds.x, bounds.y)
    } else {
        label.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGuiSnapshot {
    pub screen_id: String,
    pub widgets: Vec<RawWidget>,
}

impl RawGuiSnapshot {
    pub fn widget(&self, id: &str) -> Option<&RawWidget> {
        self.widgets.iter().find(|w| w.id == id)
    }

    /// Visible widgets in reading order (y, then x, then id).
    pub fn visible_in_reading_order(&self) -> Vec<&RawWidget> {
        let mut visible: Vec<&RawWidget> = self.widgets.iter().filter(|w| !w.hidden).collect();
        visible.sort_by(|a, b| {
            (a.bounds.y, a.bounds.x, &a.id).cmp(&(b.bounds.y, b.bounds.x, &b.id))
        });
        visible
    }
}

/// One widget in a [`GuiStateDoc`]. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetRecord {
    #[serde(rename = "ref")]
    pub reference: usize,
    #[serde(rename = "type")]
    pub kind: WidgetKind,
    pub label: String,
    pub value: String,
    pub interactable: bool,
    pub transient: bool,
    pub bounds: Rect,
}

/// Canonical textual state document handed to the decision agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuiStateDoc {
    pub screen_id: String,
    pub widgets: Vec<WidgetRecord>,
    #[serde(skip)]
    pub signature: Vec<f64>,
}

#[derive(Serialize)]
struct DocBody<'a> {
    screen_id: &'a str,
    widgets: &'a [WidgetRecord],
}

impl GuiStateDoc {
    /// Canonical serialization (signature excluded).
    pub fn to_json(&self) -> String {
        serde_json::to_string(&DocBody {
            screen_id: &self.screen_id,
            widgets: &self.widgets,
        })
        .expect("doc serializes")
    }

    pub fn record(&self, reference: usize) -> Option<&WidgetRecord> {
        self.widgets.get(reference)
    }

    pub fn interactable(&self) -> impl Iterator<Item = &WidgetRecord> {
        self.widgets.iter().filter(|w| w.interactable)
    }
}

pub fn filter_static(s: &RawGuiSnapshot) -> RawGuiSnapshot {
    RawGuiSnapshot {
        screen_id: s.screen_id.clone(),
        widgets: s
            .widgets
            .iter()
            .filter(|w| {
                w.interactable
                    || !(w.kind == WidgetKind::Decoration || w.kind == WidgetKind::StaticText)
            })
            .cloned()
            .collect(),
    }
}

pub fn mark_transient(s: &RawGuiSnapshot) -> RawGuiSnapshot {
    let mut out = s.clone();
    for w in &mut out.widgets {
        w.transient = w.transient || w.revealed_by.is_some();
    }
    out
}

/// Static filtering followed by transient marking; refs in a document
/// index this snapshot's visible widgets in reading order.
pub fn prepare(raw: &RawGuiSnapshot) -> RawGuiSnapshot {
    mark_transient(&filter_static(raw))
}

/// Lowercase alphanumeric tokens.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn accumulate(acc: &mut [f64], feature: &str) {
    let idx = (hash_str(feature) % acc.len() as u64) as usize;
    acc[idx] += 1.0;
}

/// Feature-hashed unit vector over (type, label tokens, transient flag)
/// of every record.
pub fn doc_signature<'a, I>(records: I) -> Vec<f64>
where
    I: IntoIterator<Item = (WidgetKind, &'a str, bool)>,
{
    let mut acc = vec![0.0; SIGNATURE_DIM];
    for (kind, label, transient) in records {
        accumulate(&mut acc, &format!("type:{}", kind.display_name()));
        for tok in tokens(label) {
            accumulate(&mut acc, &format!("tok:{tok}"));
        }
        if transient {
            accumulate(&mut acc, "transient");
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // empty screen: a fixed unit vector keeps the invariant
        acc[0] = 1.0;
    } else {
        acc.iter_mut().for_each(|v| *v /= norm);
    }
    acc
}

/// Rule-based textualization of a filtered, transient-marked snapshot.
pub fn textualize(s: &RawGuiSnapshot) -> GuiStateDoc {
    let widgets: Vec<WidgetRecord> = s
        .visible_in_reading_order()
        .into_iter()
        .enumerate()
        .map(|(i, w)| WidgetRecord {
            reference: i,
            kind: w.kind,
            label: w.descriptor(),
            value: w.live_value.clone(),
            interactable: w.interactable,
            transient: w.transient,
            bounds: w.bounds,
        })
        .collect();
    let signature = doc_signature(widgets.iter().map(|r| (r.kind, r.label.as_str(), r.transient)));
    GuiStateDoc {
        screen_id: s.screen_id.clone(),
        widgets,
        signature,
    }
}

/// Signature of the document a snapshot textualizes to, computed without
/// textualizing.
pub fn snapshot_signature(s: &RawGuiSnapshot) -> Vec<f64> {
    let visible = s.visible_in_reading_order();
    let labels: Vec<(WidgetKind, String, bool)> = visible
        .iter()
        .map(|w| (w.kind, w.descriptor(), w.transient))
        .collect();
    doc_signature(labels.iter().map(|(k, l, t)| (*k, l.as_str(), *t)))
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Near-duplicate state cache keyed by unit-norm signatures.
#[derive(Debug, Clone)]
pub struct PersistenceCache {
    entries: Vec<(Vec<f64>, GuiStateDoc)>,
    threshold: f64,
}

impl Default for PersistenceCache {
    fn default() -> Self {
        Self::new(DEFAULT_CACHE_THRESHOLD)
    }
}

impl PersistenceCache {
    pub fn new(threshold: f64) -> Self {
        assert!(
            threshold > 0.0 && threshold <= 1.0,
            "cache threshold must lie in (0, 1]"
        );
        Self {
            entries: Vec::new(),
            threshold,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stored doc with the highest cosine to `sig`, if that cosine exceeds
    /// the threshold. Signatures are unit-norm, so cosine is a dot product.
    pub fn lookup(&self, sig: &[f64]) -> Option<&GuiStateDoc> {
        let mut best: Option<(f64, &GuiStateDoc)> = None;
        for (stored, doc) in &self.entries {
            let sim = dot(stored, sig);
            if best.is_none_or(|(b, _)| sim > b) {
                best = Some((sim, doc));
            }
        }
        best.filter(|(sim, _)| *sim > self.threshold).map(|(_, d)| d)
    }

    pub fn insert(&mut self, sig: Vec<f64>, doc: GuiStateDoc) {
        self.entries.push((sig, doc));
    }
}

/// Provider seam for textualization; a remote multimodal labeler can
/// stand in for the rule-based default.
pub trait Textualizer: Send + Sync {
    fn textualize(&self, snapshot: &RawGuiSnapshot) -> GuiStateDoc;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct RuleTextualizer;

impl Textualizer for RuleTextualizer {
    fn textualize(&self, snapshot: &RawGuiSnapshot) -> GuiStateDoc {
        textualize(snapshot)
    }
}

/// Session-local perception pipeline with its persistence cache.
pub struct Perception<T: Textualizer = RuleTextualizer> {
    textualizer: T,
    cache: PersistenceCache,
    hits: usize,
}

impl Default for Perception<RuleTextualizer> {
    fn default() -> Self {
        Self::new(RuleTextualizer, PersistenceCache::default())
    }
}

impl<T: Textualizer> Perception<T> {
    pub fn new(textualizer: T, cache: PersistenceCache) -> Self {
        Self {
            textualizer,
            cache,
            hits: 0,
        }
    }

    pub fn cache_hits(&self) -> usize {
        self.hits
    }

    /// Runs the full pipeline. On a cache hit the stored labeling is reused
    /// and only live values and geometry are refreshed from the snapshot.
    pub fn perceive(&mut self, raw: &RawGuiSnapshot) -> GuiStateDoc {
        let marked = prepare(raw);
        let sig = snapshot_signature(&marked);
        if let Some(cached) = self.cache.lookup(&sig) {
            if let Some(doc) = refresh(cached, &marked, &sig) {
                self.hits += 1;
                return doc;
            }
        }
        let doc = self.textualizer.textualize(&marked);
        self.cache.insert(sig, doc.clone());
        doc
    }
}

fn refresh(cached: &GuiStateDoc, marked: &RawGuiSnapshot, sig: &[f64]) -> Option<GuiStateDoc> {
    let visible = marked.visible_in_reading_order();
    if cached.screen_id != marked.screen_id || visible.len() != cached.widgets.len() {
        return None;
    }
    let widgets = cached
        .widgets
        .iter()
        .zip(visible)
        .map(|(rec, w)| WidgetRecord {
            value: w.live_value.clone(),
            bounds: w.bounds,
            interactable: w.interactable,
            transient: w.transient,
            ..rec.clone()
        })
        .collect();
    Some(GuiStateDoc {
        screen_id: cached.screen_id.clone(),
        widgets,
        signature: sig.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(id: &str, kind: WidgetKind, label: &str, x: i32, y: i32, interactable: bool) -> RawWidget {
        RawWidget {
            id: id.into(),
            kind,
            label: label.into(),
            bounds: Rect::new(x, y, 100, 50),
            live_value: String::new(),
            transient: false,
            hidden: false,
            core: false,
            interactable,
            revealed_by: None,
            input_rule: None,
        }
    }

    fn snap(widgets: Vec<RawWidget>) -> RawGuiSnapshot {
        RawGuiSnapshot {
            screen_id: "s".into(),
            widgets,
        }
    }

    #[test]
    fn filter_drops_decorations_only() {
        let s = snap(vec![
            w("a", WidgetKind::Button, "A", 0, 0, true),
            w("d1", WidgetKind::Decoration, "", 0, 60, false),
            w("t", WidgetKind::Toggle, "", 0, 120, true),
            w("d2", WidgetKind::Decoration, "", 0, 180, false),
            w("s", WidgetKind::StaticText, "Hello", 0, 240, false),
        ]);
        let out = filter_static(&s);
        assert_eq!(out.widgets.len(), 2);
        assert!(out.widgets.iter().any(|w| w.id == "t"));

        let clean = snap(vec![w("a", WidgetKind::Button, "A", 0, 0, true)]);
        assert_eq!(
            serde_json::to_string(&filter_static(&clean)).unwrap(),
            serde_json::to_string(&clean).unwrap()
        );
    }

    #[test]
    fn five_widgets_two_decorations() {
        let s = snap(vec![
            w("a", WidgetKind::Button, "A", 0, 0, true),
            w("b", WidgetKind::Button, "B", 0, 60, true),
            w("c", WidgetKind::InputField, "C", 0, 120, true),
            w("d1", WidgetKind::Decoration, "", 0, 180, false),
            w("d2", WidgetKind::Decoration, "", 0, 240, false),
        ]);
        assert_eq!(filter_static(&s).widgets.len(), 3);
    }

    #[test]
    fn transient_marking() {
        let mut item = w("m", WidgetKind::MenuItem, "Audio", 0, 0, true);
        item.revealed_by = Some("opener".into());
        let s = snap(vec![item, w("b", WidgetKind::Button, "B", 0, 60, true)]);
        let once = mark_transient(&s);
        assert!(once.widgets[0].transient);
        assert!(!once.widgets[1].transient);
        assert_eq!(mark_transient(&once), once);
    }

    #[test]
    fn reading_order_and_fallback_label() {
        let s = snap(vec![
            w("low", WidgetKind::Button, "Low", 0, 300, true),
            w("anon", WidgetKind::Button, "", 40, 60, true),
            w("high", WidgetKind::Button, "High", 0, 10, true),
        ]);
        let doc = textualize(&s);
        let labels: Vec<&str> = doc.widgets.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["High", "button at (40,60)", "Low"]);
        assert_eq!(doc.widgets[2].reference, 2);
        assert_eq!(textualize(&s).to_json(), doc.to_json());
        assert_eq!(textualize(&s).signature, doc.signature);
    }

    #[test]
    fn doc_key_order() {
        let doc = textualize(&snap(vec![w("a", WidgetKind::Button, "Save", 1, 2, true)]));
        assert_eq!(
            doc.to_json(),
            r#"{"screen_id":"s","widgets":[{"ref":0,"type":"button","label":"Save","value":"","interactable":true,"transient":false,"bounds":{"x":1,"y":2,"w":100,"h":50}}]}"#
        );
    }

    #[test]
    fn signature_unit_norm_and_stable() {
        let doc = textualize(&snap(vec![
            w("a", WidgetKind::Button, "Save alarm", 0, 0, true),
            w("b", WidgetKind::Toggle, "Vibration", 0, 60, true),
        ]));
        let n = dot(&doc.signature, &doc.signature);
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(doc.signature.len(), SIGNATURE_DIM);
        let empty = textualize(&snap(vec![]));
        assert!((dot(&empty.signature, &empty.signature) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hidden_widgets_left_out_of_doc() {
        let mut hidden = w("h", WidgetKind::MenuItem, "Hidden", 0, 0, true);
        hidden.hidden = true;
        let doc = textualize(&snap(vec![hidden, w("v", WidgetKind::Button, "V", 0, 60, true)]));
        assert_eq!(doc.widgets.len(), 1);
    }

    #[test]
    fn cache_hit_and_miss() {
        let mut cache = PersistenceCache::default();
        let doc = textualize(&snap(vec![w("a", WidgetKind::Button, "A", 0, 0, true)]));
        assert!(cache.lookup(&doc.signature).is_none());
        cache.insert(doc.signature.clone(), doc.clone());
        assert_eq!(cache.lookup(&doc.signature), Some(&doc));

        // cosine 0.95 between stored and query
        let mut c2 = PersistenceCache::new(0.99);
        let a = vec![1.0, 0.0];
        let b = vec![0.95, (1.0f64 - 0.95 * 0.95).sqrt()];
        c2.insert(a, doc.clone());
        assert!(c2.lookup(&b).is_none());
        let mut c3 = PersistenceCache::new(0.9);
        c3.insert(vec![1.0, 0.0], doc.clone());
        assert!(c3.lookup(&b).is_some());
    }

    #[test]
    fn perception_refreshes_values_on_hit() {
        let mut field = w("f", WidgetKind::InputField, "Title", 0, 0, true);
        let mut p = Perception::default();
        let first = p.perceive(&snap(vec![field.clone()]));
        field.live_value = "hello".into();
        let second = p.perceive(&snap(vec![field]));
        assert_eq!(p.cache_hits(), 1);
        assert_eq!(second.widgets[0].value, "hello");
        assert_eq!(first.widgets[0].label, second.widgets[0].label);
    }
}
