//! Operator-query evaluation against a single document.
//!
//! Supported shapes: scalar/structural equality on ordinary keys, operator
//! objects (`$ne`, `$eq`, `$gt`, `$lt`) as field values, and the top-level
//! `$or` / `$and` / `$comment` keys. Equality is type-sensitive: `Int 1`
//! never equals `Text "1"`.

use crate::value::Value;
use indexmap::IndexMap;
use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("{0} requires a non-empty array of query objects")]
    BadLogicalOperand(String),
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("operator object for field {field} mixes operators with plain key {key}")]
    MixedOperatorObject { field: String, key: String },
}

/// True iff every top-level query entry matches `doc`.
///
/// Entries are evaluated in order and matching short-circuits on the first
/// failed entry, so errors hiding behind an already-failed entry are not
/// reported. `$or` likewise stops at its first matching branch.
pub fn match_query(
    query: &IndexMap<String, Value>,
    doc: &IndexMap<String, Value>,
) -> Result<bool, QueryError> {
    for (key, operand) in query {
        if !match_entry(key, operand, doc)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn match_entry(
    key: &str,
    operand: &Value,
    doc: &IndexMap<String, Value>,
) -> Result<bool, QueryError> {
    match key {
        "$comment" => Ok(true),
        "$or" => {
            let branches = logical_branches("$or", operand)?;
            for branch in branches {
                let obj = branch
                    .as_object()
                    .ok_or_else(|| QueryError::BadLogicalOperand("$or".into()))?;
                if match_query(obj, doc)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        "$and" => {
            let branches = logical_branches("$and", operand)?;
            for branch in branches {
                let obj = branch
                    .as_object()
                    .ok_or_else(|| QueryError::BadLogicalOperand("$and".into()))?;
                if !match_query(obj, doc)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ if key.starts_with('$') => Err(QueryError::UnknownOperator(key.to_string())),
        field => match_field(field, operand, doc.get(field)),
    }
}

fn logical_branches<'q>(op: &str, operand: &'q Value) -> Result<&'q [Value], QueryError> {
    match operand.as_array() {
        Some(items) if !items.is_empty() => Ok(items),
        _ => Err(QueryError::BadLogicalOperand(op.into())),
    }
}

fn match_field(
    field: &str,
    operand: &Value,
    doc_value: Option<&Value>,
) -> Result<bool, QueryError> {
    if let Value::Object(spec) = operand {
        if spec.keys().any(|k| k.starts_with('$')) {
            return match_operator_object(field, spec, doc_value);
        }
    }
    // Plain value (or operator-free object): structural equality on a
    // present field.
    Ok(doc_value == Some(operand))
}

fn match_operator_object(
    field: &str,
    spec: &IndexMap<String, Value>,
    doc_value: Option<&Value>,
) -> Result<bool, QueryError> {
    for (op, operand) in spec {
        let matched = match op.as_str() {
            "$ne" => doc_value != Some(operand),
            "$eq" => doc_value == Some(operand),
            "$gt" => ordered(doc_value, operand, Ordering::Greater),
            "$lt" => ordered(doc_value, operand, Ordering::Less),
            other if other.starts_with('$') => {
                return Err(QueryError::UnknownOperator(other.to_string()))
            }
            other => {
                return Err(QueryError::MixedOperatorObject {
                    field: field.to_string(),
                    key: other.to_string(),
                })
            }
        };
        if !matched {
            return Ok(false);
        }
    }
    Ok(true)
}

fn ordered(doc_value: Option<&Value>, operand: &Value, want: Ordering) -> bool {
    // An absent field never satisfies a comparison.
    doc_value
        .and_then(|v| compare_order(v, operand))
        .map(|ord| ord == want)
        .unwrap_or(false)
}

/// Ordering for `$gt`/`$lt`: numeric across Int/Float, lexicographic on
/// text, undefined (no match) across any other pairing.
fn compare_order(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Int(x), Value::Float(y)) => (*x as f64).partial_cmp(y),
        (Value::Float(x), Value::Int(y)) => x.partial_cmp(&(*y as f64)),
        (Value::Float(x), Value::Float(y)) => x.partial_cmp(y),
        (Value::Text(x), Value::Text(y)) => Some(x.as_str().cmp(y.as_str())),
        _ => None,
    }
}
