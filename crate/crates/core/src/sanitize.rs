//! Mitigation primitives applied by the hardened endpoint twins: scalar
//! casting, operator-key rejection, literal escaping, field allow-lists,
//! content-type enforcement and a two-role RBAC check.

use crate::value::Value;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    User,
    Admin,
}

impl Role {
    pub fn parse(name: &str) -> Option<Role> {
        match name {
            "user" => Some(Role::User),
            "admin" => Some(Role::Admin),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Admin => "admin",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SanitizeErrorKind {
    NotScalar,
    OperatorKey,
    FieldNotAllowed,
    BadContentType,
    Forbidden,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind:?}: {detail}")]
pub struct SanitizeError {
    pub kind: SanitizeErrorKind,
    pub detail: String,
}

impl SanitizeError {
    fn new(kind: SanitizeErrorKind, detail: impl Into<String>) -> Self {
        SanitizeError { kind, detail: detail.into() }
    }
}

/// Force a request parameter to text. Nested structure is rejected, not
/// flattened: an attacker-supplied operator object must not survive in
/// any form.
pub fn cast_scalar_text(v: &Value) -> Result<Value, SanitizeError> {
    match v {
        Value::Text(s) => Ok(Value::Text(s.clone())),
        Value::Int(i) => Ok(Value::Text(i.to_string())),
        Value::Float(f) => Ok(Value::Text(format!("{f:?}"))),
        Value::Bool(b) => Ok(Value::Text(b.to_string())),
        Value::Null | Value::Array(_) | Value::Object(_) => Err(SanitizeError::new(
            SanitizeErrorKind::NotScalar,
            format!("expected a scalar parameter, got {}", variant_name(v)),
        )),
    }
}

fn variant_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "bool",
        Value::Int(_) => "int",
        Value::Float(_) => "float",
        Value::Text(_) => "text",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

/// Pass the value through untouched unless any object key in the tree
/// starts with `$`; the first offending key in depth-first order is
/// reported.
pub fn reject_operator_keys(v: Value) -> Result<Value, SanitizeError> {
    match first_operator_key(&v) {
        None => Ok(v),
        Some(key) => Err(SanitizeError::new(SanitizeErrorKind::OperatorKey, key)),
    }
}

fn first_operator_key(v: &Value) -> Option<String> {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if k.starts_with('$') {
                    return Some(k.clone());
                }
                if let Some(found) = first_operator_key(child) {
                    return Some(found);
                }
            }
            None
        }
        Value::Array(items) => items.iter().find_map(first_operator_key),
        _ => None,
    }
}

/// Escape a value for embedding between single quotes in query text:
/// backslashes double, quotes gain a backslash. Together with the relaxed
/// grammar's two escapes this round-trips any text.
pub fn escape_string_literal(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\'', "\\'")
}

/// Exact-match allow-list check; case-sensitive on purpose.
pub fn check_field_allowlist(field: &str, allowed: &[&str]) -> bool {
    allowed.contains(&field)
}

/// True iff the media type (parameters stripped) is `application/json`.
pub fn enforce_json_content_type(content_type_header: Option<&str>) -> bool {
    match content_type_header {
        Some(header) => {
            let media_type = header.split(';').next().unwrap_or("").trim();
            media_type.eq_ignore_ascii_case("application/json")
        }
        None => false,
    }
}

/// Admin dominates user; user reaches only user-level data.
pub fn rbac_check(session_role: Role, required_role: Role) -> bool {
    session_role == Role::Admin || required_role == Role::User
}
