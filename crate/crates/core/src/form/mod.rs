//! PHP-style decoding of `application/x-www-form-urlencoded` bodies into
//! nested structures, reproducing the `parse_str` bracket semantics that
//! turn `username[$ne]=1` into a nested map. This is the root cause of the
//! array-injection attack surface and is deliberately faithful, quirks
//! included.
//!
//! The pinned behavior lives in `parse_str_golden.json`; any divergence
//! from that corpus is a bug here, not in the corpus.

use crate::value::Value;
use indexmap::IndexMap;

/// Golden corpus pinning the emulated `parse_str` behavior. Shared by the
/// unit suite and the acceptance suite.
pub const PARSE_STR_GOLDEN_JSON: &str = include_str!("parse_str_golden.json");

/// Decoded form structure. Leaves are always text; decoding never infers
/// numbers or booleans.
#[derive(Debug, Clone, PartialEq)]
pub enum FormTree {
    Leaf(String),
    Map(IndexMap<String, FormTree>),
    List(Vec<FormTree>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Named(String),
    Append,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyPath {
    pub root: String,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("form key decodes to an empty name")]
pub struct DecodeError;

/// Split a percent-decoded key like `root[s1][s2]` into its path.
///
/// Quirks mirrored from the emulated runtime: dots and spaces in the root
/// are mangled to underscores, text after a closed bracket that is not
/// another `[` is ignored, and an unclosed `[` turns the whole key into a
/// single literal root.
pub fn parse_key_path(raw_key: &str) -> Result<KeyPath, DecodeError> {
    if raw_key.is_empty() {
        return Err(DecodeError);
    }
    let bytes = raw_key.as_bytes();
    let root_end = raw_key.find('[').unwrap_or(raw_key.len());
    let root = mangle_root(&raw_key[..root_end]);
    if root.is_empty() {
        return Err(DecodeError);
    }
    let mut segments = Vec::new();
    let mut i = root_end;
    while i < bytes.len() && bytes[i] == b'[' {
        match raw_key[i + 1..].find(']') {
            Some(rel) => {
                let seg = &raw_key[i + 1..i + 1 + rel];
                segments.push(if seg.is_empty() {
                    Segment::Append
                } else {
                    Segment::Named(seg.to_string())
                });
                i += 1 + rel + 1;
            }
            None => {
                // Unclosed bracket: the whole raw key is one literal root.
                return Ok(KeyPath {
                    root: raw_key.to_string(),
                    segments: Vec::new(),
                });
            }
        }
    }
    // Anything after the last `]` that is not a new `[` is ignored.
    Ok(KeyPath { root, segments })
}

fn mangle_root(root: &str) -> String {
    root.chars()
        .map(|c| if c == '.' || c == ' ' { '_' } else { c })
        .collect()
}

/// Decode a `k=v&k=v` body into a nested tree. Total: malformed pairs and
/// undecodable names are skipped or taken literally, never an error.
pub fn decode_form(body: &str) -> FormTree {
    let mut root: IndexMap<String, FormTree> = IndexMap::new();
    for piece in body.split('&') {
        if piece.is_empty() {
            continue;
        }
        let (raw_key, raw_value) = match piece.find('=') {
            Some(pos) => (&piece[..pos], &piece[pos + 1..]),
            None => (piece, ""),
        };
        let key = percent_decode(raw_key);
        let value = percent_decode(raw_value);
        let Ok(path) = parse_key_path(&key) else {
            continue;
        };
        let slot = root
            .entry(path.root)
            .or_insert_with(|| FormTree::Leaf(String::new()));
        insert_at(slot, &path.segments, value);
    }
    FormTree::Map(root)
}

fn insert_at(node: &mut FormTree, segments: &[Segment], value: String) {
    let Some((first, rest)) = segments.split_first() else {
        *node = FormTree::Leaf(value);
        return;
    };
    match first {
        Segment::Named(name) => {
            let map = to_map(node);
            let child = map
                .entry(name.clone())
                .or_insert_with(|| FormTree::Leaf(String::new()));
            insert_at(child, rest, value);
        }
        Segment::Append => match node {
            FormTree::List(items) => {
                items.push(FormTree::Leaf(String::new()));
                let child = items.last_mut().expect("just pushed");
                insert_at(child, rest, value);
            }
            FormTree::Map(map) => {
                // Appends on a map continue from the next integer key,
                // like the emulated runtime does.
                let next = next_int_key(map);
                let child = map
                    .entry(next)
                    .or_insert_with(|| FormTree::Leaf(String::new()));
                insert_at(child, rest, value);
            }
            FormTree::Leaf(_) => {
                *node = FormTree::List(vec![FormTree::Leaf(String::new())]);
                if let FormTree::List(items) = node {
                    insert_at(items.last_mut().expect("just pushed"), rest, value);
                }
            }
        },
    }
}

/// Named writes need a map; lists convert to maps keyed by their
/// stringified indices and leaves are discarded.
fn to_map(node: &mut FormTree) -> &mut IndexMap<String, FormTree> {
    if let FormTree::List(items) = node {
        let converted = items
            .drain(..)
            .enumerate()
            .map(|(i, t)| (i.to_string(), t))
            .collect();
        *node = FormTree::Map(converted);
    } else if let FormTree::Leaf(_) = node {
        *node = FormTree::Map(IndexMap::new());
    }
    match node {
        FormTree::Map(map) => map,
        _ => unreachable!("node was just converted to a map"),
    }
}

fn next_int_key(map: &IndexMap<String, FormTree>) -> String {
    map.keys()
        .filter_map(|k| k.parse::<i64>().ok())
        .filter(|k| *k >= 0)
        .max()
        .map(|m| m + 1)
        .unwrap_or(0)
        .to_string()
}

/// `+` means space, `%hh` decodes to a byte, anything malformed stays
/// literal. Non-UTF-8 byte sequences are replaced lossily.
fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => {
                out.push(b' ');
                i += 1;
            }
            b'%' if i + 2 < bytes.len() => {
                match (hex_val(bytes[i + 1]), hex_val(bytes[i + 2])) {
                    (Some(hi), Some(lo)) => {
                        out.push(hi * 16 + lo);
                        i += 3;
                    }
                    _ => {
                        out.push(b'%');
                        i += 1;
                    }
                }
            }
            b => {
                out.push(b);
                i += 1;
            }
        }
    }
    String::from_utf8_lossy(&out).into_owned()
}

fn hex_val(b: u8) -> Option<u8> {
    match b {
        b'0'..=b'9' => Some(b - b'0'),
        b'a'..=b'f' => Some(b - b'a' + 10),
        b'A'..=b'F' => Some(b - b'A' + 10),
        _ => None,
    }
}

/// Lift a decoded form into the query/document value model, verbatim.
/// Deliberately performs no validation: this is the step that hands
/// attacker-shaped structure straight to the query layer.
pub fn form_to_value(tree: &FormTree) -> Value {
    match tree {
        FormTree::Leaf(s) => Value::Text(s.clone()),
        FormTree::Map(map) => {
            Value::Object(map.iter().map(|(k, v)| (k.clone(), form_to_value(v))).collect())
        }
        FormTree::List(items) => Value::Array(items.iter().map(form_to_value).collect()),
    }
}

impl FormTree {
    /// Convenience lookup for top-level fields of a decoded body.
    pub fn field(&self, name: &str) -> Option<&FormTree> {
        match self {
            FormTree::Map(map) => map.get(name),
            _ => None,
        }
    }

    pub fn as_leaf(&self) -> Option<&str> {
        match self {
            FormTree::Leaf(s) => Some(s),
            _ => None,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            FormTree::Leaf(_) => 1,
            FormTree::Map(map) => 1 + map.values().map(FormTree::node_count).sum::<usize>(),
            FormTree::List(items) => 1 + items.iter().map(FormTree::node_count).sum::<usize>(),
        }
    }
}
