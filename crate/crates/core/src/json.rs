//! Canonical JSON: single line, object keys sorted.

use serde::Serialize;

/// Serializes `value` as single-line JSON with every object's keys sorted.
///
/// Going through `serde_json::Value` sorts keys because its map type is a
/// `BTreeMap` (the `preserve_order` feature is not enabled anywhere in the
/// workspace).
pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    serde_json::to_string(&tree)
}
