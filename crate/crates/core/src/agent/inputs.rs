//! Habit-conformant input payloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::app::{charset_pool, classify_input, violating_pool, InputClass, InputRule};
use crate::hashing::{hash_str, mix_seed};
use crate::persona::Habit;

pub fn habit_class(habit: Habit) -> InputClass {
    match habit {
        Habit::ValidLong => InputClass::ValidLong,
        Habit::ValidShort => InputClass::ValidShort,
        Habit::Invalid => InputClass::Invalid,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedInput {
    pub text: String,
    /// Class the field's rule assigns to `text`.
    pub class: InputClass,
}

impl GeneratedInput {
    pub fn conforms_to(&self, wanted: InputClass) -> bool {
        self.class == wanted
    }
}

fn pick(rng: &mut ChaCha8Rng, pool: &[u8], n: usize) -> String {
    (0..n).map(|_| pool[rng.random_range(0..pool.len())] as char).collect()
}

/// Generates text of class `wanted` for a field. Deterministic in
/// `(seed, field_id, attempt)`; `attempt` counts earlier inputs into the
/// same field this session so retyping produces fresh text.
///
/// - valid_short: one admitted character (empty only when `short_len == 1`)
/// - valid_long: `max_len` admitted characters
/// - invalid: one rejected character, or `max_len + 1` admitted characters
///   when the charset rejects nothing
pub fn generate_input(
    wanted: InputClass,
    rule: &InputRule,
    seed: u64,
    field_id: &str,
    attempt: usize,
) -> GeneratedInput {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[seed, hash_str(field_id), attempt as u64]));
    let pool = charset_pool(rule.charset);
    let text = match wanted {
        InputClass::ValidShort => {
            let n = if rule.short_len > 1 { 1 } else { 0 };
            pick(&mut rng, pool, n)
        }
        InputClass::ValidLong => pick(&mut rng, pool, rule.max_len),
        InputClass::Invalid => {
            let bad = violating_pool(rule.charset);
            if bad.is_empty() {
                pick(&mut rng, pool, rule.max_len + 1)
            } else {
                pick(&mut rng, bad, 1)
            }
        }
    };
    let class = classify_input(rule, &text);
    if class != wanted {
        log::warn!(
            "cannot generate {wanted:?} text for {field_id} under {:?}; produced {class:?}",
            rule.charset
        );
    }
    GeneratedInput { text, class }
}
