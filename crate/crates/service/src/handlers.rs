//! Route handlers: each vulnerable stack and its hardened twin, the REST
//! insert API, the RBAC read endpoint and the state inspection endpoint.
//!
//! Responses are always JSON. Handlers never panic on arbitrary input;
//! anything malformed maps to a 4xx and script failures map to 500.

use crate::{AppState, RestMode};
use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use nosqlab_core::form::{decode_form, form_to_value, FormTree};
use nosqlab_core::relaxed::{build_concat_login_query, parse_relaxed};
use nosqlab_core::sanitize::{
    cast_scalar_text, check_field_allowlist, enforce_json_content_type, escape_string_literal,
    rbac_check, Role,
};
use nosqlab_core::script::exec_top_level;
use nosqlab_core::value::Value;
use std::sync::Arc;

/// The mapReduce statement template the vulnerable endpoint interpolates
/// the user-supplied field name into, verbatim.
pub const MAP_TEMPLATE_PREFIX: &str =
    "function() {\n  for (var i = 0; i < this.items.length; i++) {\n    emit(this.name, this.items[i].";
pub const MAP_TEMPLATE_SUFFIX: &str = "); } }";
pub const REDUCE_SRC: &str = "function(name, sum) { return Array.sum(sum); }";
pub const OPT_SRC: &str = "{ out: 'totals' }";

pub fn mapreduce_statement(field: &str) -> String {
    format!(
        "db.stores.mapReduce({MAP_TEMPLATE_PREFIX}{field}{MAP_TEMPLATE_SUFFIX}, {REDUCE_SRC}, {OPT_SRC});"
    )
}

fn json_response(status: StatusCode, body: Value) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        body.to_canonical_json(),
    )
        .into_response()
}

fn status_body(status: StatusCode, tag: &str) -> Response {
    json_response(status, Value::object([("status", Value::text(tag))]))
}

fn body_text(body: &Bytes) -> String {
    String::from_utf8_lossy(body).into_owned()
}

/// A form field as raw text: leaves pass through, nested structure is
/// flattened to its canonical JSON text, absence becomes empty text.
fn field_as_text(tree: &FormTree, name: &str) -> String {
    match tree.field(name) {
        Some(FormTree::Leaf(s)) => s.clone(),
        Some(node) => form_to_value(node).to_canonical_json(),
        None => String::new(),
    }
}

fn first_match_username(matches: &[Value]) -> Value {
    matches
        .first()
        .and_then(|doc| doc.get("username"))
        .cloned()
        .unwrap_or(Value::Null)
}

fn login_response(matches: Result<Vec<Value>, nosqlab_core::QueryError>) -> Response {
    match matches {
        Ok(found) if !found.is_empty() => json_response(
            StatusCode::OK,
            Value::object([
                ("status", Value::text("ok")),
                ("user", first_match_username(&found)),
            ]),
        ),
        Ok(_) => status_body(StatusCode::UNAUTHORIZED, "denied"),
        Err(_) => status_body(StatusCode::BAD_REQUEST, "bad_query"),
    }
}

// ── Array-injection stack (bracket decoding straight into the query) ────

pub async fn login_array_vuln(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    login_array(&state, &body, false)
}

pub async fn login_array_safe(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let harden = !state.config().disable_cast_mitigation;
    login_array(&state, &body, harden)
}

fn login_array(state: &AppState, body: &Bytes, harden: bool) -> Response {
    let tree = decode_form(&body_text(body));
    let mut username = tree
        .field("username")
        .map(form_to_value)
        .unwrap_or_else(|| Value::text(""));
    let mut password = tree
        .field("password")
        .map(form_to_value)
        .unwrap_or_else(|| Value::text(""));
    if harden {
        match (cast_scalar_text(&username), cast_scalar_text(&password)) {
            (Ok(u), Ok(p)) => {
                username = u;
                password = p;
            }
            _ => return status_body(StatusCode::BAD_REQUEST, "bad_input"),
        }
    }
    let query = Value::object([("username", username), ("password", password)]);
    let store = state.store().read();
    login_response(store.find("logins", query.as_object().expect("built as object")))
}

// ── OR-injection stack (string-concatenated query text) ─────────────────

pub async fn login_concat_vuln(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    login_concat(&state, &body, false)
}

pub async fn login_concat_safe(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    login_concat(&state, &body, true)
}

fn login_concat(state: &AppState, body: &Bytes, harden: bool) -> Response {
    let tree = decode_form(&body_text(body));
    let mut username = field_as_text(&tree, "username");
    let mut password = field_as_text(&tree, "password");
    if harden {
        username = escape_string_literal(&username);
        password = escape_string_literal(&password);
    }
    let query_text = build_concat_login_query(&username, &password);
    let query = match parse_relaxed(&query_text) {
        Ok(Value::Object(map)) => map,
        Ok(_) | Err(_) => return status_body(StatusCode::BAD_REQUEST, "bad_query"),
    };
    let store = state.store().read();
    login_response(store.find("logins", &query))
}

// ── Script-injection stack (mapReduce with interpolated field name) ─────

pub async fn mapreduce_vuln(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    mapreduce(&state, &body, false)
}

pub async fn mapreduce_safe(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    mapreduce(&state, &body, true)
}

fn mapreduce(state: &AppState, body: &Bytes, harden: bool) -> Response {
    let tree = decode_form(&body_text(body));
    if tree.field("field").is_none() {
        return status_body(StatusCode::BAD_REQUEST, "missing_field");
    }
    let field = field_as_text(&tree, "field");
    if harden && !check_field_allowlist(&field, &["amount", "price"]) {
        return status_body(StatusCode::BAD_REQUEST, "field_not_allowed");
    }
    let statement = mapreduce_statement(&field);
    let mut store = state.store().write();
    let outcome = exec_top_level(&statement, &mut store);
    drop(store);
    match outcome {
        Ok(outcome) if outcome.completed => json_response(
            StatusCode::OK,
            Value::object([
                ("status", Value::text("ok")),
                ("out", Value::text("totals")),
            ]),
        ),
        Ok(outcome) => script_error_response(outcome.error.map(|e| e.to_string())),
        Err(e) => script_error_response(Some(e.to_string())),
    }
}

fn script_error_response(detail: Option<String>) -> Response {
    json_response(
        StatusCode::INTERNAL_SERVER_ERROR,
        Value::object([
            ("status", Value::text("script_error")),
            ("detail", Value::text(detail.unwrap_or_default())),
        ]),
    )
}

// ── REST insert API (open vs json-only) ─────────────────────────────────

pub async fn rest_insert(
    State(state): State<Arc<AppState>>,
    Path(collection): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let content_type = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok());
    let doc = match state.config().rest_mode {
        RestMode::JsonOnly => {
            if !enforce_json_content_type(content_type) {
                return status_body(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media_type");
            }
            match Value::from_json_str(&body_text(&body)) {
                Ok(v) => v,
                Err(_) => return status_body(StatusCode::BAD_REQUEST, "bad_json"),
            }
        }
        RestMode::Open => {
            // Parse as JSON no matter what the header says; fall back to
            // form decoding for urlencoded bodies. This acceptance of
            // browser form posts is exactly the CSRF exposure.
            match Value::from_json_str(&body_text(&body)) {
                Ok(v) => v,
                Err(_) => {
                    let is_form = content_type
                        .map(|ct| {
                            ct.split(';')
                                .next()
                                .unwrap_or("")
                                .trim()
                                .eq_ignore_ascii_case("application/x-www-form-urlencoded")
                        })
                        .unwrap_or(false);
                    if is_form {
                        form_to_value(&decode_form(&body_text(&body)))
                    } else {
                        return status_body(StatusCode::BAD_REQUEST, "bad_json");
                    }
                }
            }
        }
    };
    let mut store = state.store().write();
    match store.insert(&collection, doc) {
        Ok(id) => json_response(
            StatusCode::CREATED,
            Value::object([("_id", Value::Int(id))]),
        ),
        Err(_) => status_body(StatusCode::BAD_REQUEST, "bad_document"),
    }
}

// ── RBAC read endpoint ──────────────────────────────────────────────────

pub async fn find_rbac(State(state): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    let session_role = match headers.get("x-role") {
        None => Role::User,
        Some(value) => match value.to_str().ok().and_then(Role::parse) {
            Some(role) => role,
            None => return status_body(StatusCode::BAD_REQUEST, "unknown_role"),
        },
    };
    let store = state.store().read();
    let visible: Vec<Value> = store
        .docs("data")
        .iter()
        .filter(|doc| {
            // Untagged or unparseable tags are treated as admin-only.
            let required = doc
                .get("required_role")
                .and_then(Value::as_text)
                .and_then(Role::parse)
                .unwrap_or(Role::Admin);
            rbac_check(session_role, required)
        })
        .cloned()
        .collect();
    json_response(StatusCode::OK, Value::Array(visible))
}

// ── State inspection (test/demo builds only) ────────────────────────────

pub async fn state_dump(
    State(state): State<Arc<AppState>>,
    Path(collection): Path<String>,
) -> Response {
    if !state.config().enable_state_endpoint {
        return status_body(StatusCode::NOT_FOUND, "not_found");
    }
    let store = state.store().read();
    json_response(StatusCode::OK, Value::Array(store.docs(&collection).to_vec()))
}
