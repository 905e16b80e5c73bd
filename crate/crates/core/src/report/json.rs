//! Canonical JSON helpers. serde_json's default map is ordered, so object
//! keys serialize sorted; floats use the shortest representation that parses
//! back to the identical bit pattern, making serialize -> parse -> serialize
//! a fixed point.
//!
//! Wall-clock measurements live in fields whose names end in `_secs`. They
//! are split out of result documents into a parallel "timings" tree so that
//! everything else is byte-identical across reruns.

use serde_json::{Map, Value};

pub const VOLATILE_SUFFIX: &str = "_secs";

/// Canonical pretty-printed form with a trailing newline.
pub fn canonical(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// Splits a value into (stable, timings): every object key ending in
/// `_secs` moves to the timings tree, which mirrors the original structure.
/// Array positions are preserved with nulls where an element contributed no
/// timing fields; objects keep their `kind` tag for readability.
pub fn split_volatile(value: Value) -> (Value, Option<Value>) {
    match value {
        Value::Object(map) => {
            let kind_tag = map.get("kind").cloned();
            let mut stable = Map::new();
            let mut volatile = Map::new();
            for (key, inner) in map {
                if key.ends_with(VOLATILE_SUFFIX) {
                    volatile.insert(key, inner);
                } else {
                    let (s, v) = split_volatile(inner);
                    stable.insert(key.clone(), s);
                    if let Some(v) = v {
                        volatile.insert(key, v);
                    }
                }
            }
            let volatile = if volatile.is_empty() {
                None
            } else {
                if let Some(kind) = kind_tag {
                    volatile.entry("kind".to_string()).or_insert(kind);
                }
                Some(Value::Object(volatile))
            };
            (Value::Object(stable), volatile)
        }
        Value::Array(items) => {
            let mut stable = Vec::with_capacity(items.len());
            let mut volatile = Vec::with_capacity(items.len());
            let mut any = false;
            for item in items {
                let (s, v) = split_volatile(item);
                stable.push(s);
                any |= v.is_some();
                volatile.push(v.unwrap_or(Value::Null));
            }
            (
                Value::Array(stable),
                if any { Some(Value::Array(volatile)) } else { None },
            )
        }
        leaf => (leaf, None),
    }
}
