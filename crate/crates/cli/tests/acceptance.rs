//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Criteria cover the four attack reproductions, scanner
//! completeness and zero false positives, the decoding/evaluation/escaping
//! oracles, the RBAC property and endpoint robustness.

use nosqlab_core::form::{decode_form, form_to_value};
use nosqlab_core::relaxed::parse_relaxed;
use nosqlab_core::sanitize::escape_string_literal;
use nosqlab_core::script::{exec_top_level, ScriptError};
use nosqlab_core::value::Value;
use nosqlab_core::Store;
use nosqlab_scanner::payloads::{js_breakout, or_injection_fields, urlencode};
use nosqlab_scanner::{AttackClass, Scanner, TargetConfig};
use nosqlab_service::{RestMode, Service, ServiceConfig, ServiceHandle};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::panic::AssertUnwindSafe;

fn criterion<F: FnOnce()>(number: u32, name: &str, body: F) {
    let result = std::panic::catch_unwind(AssertUnwindSafe(body));
    let verdict = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {number:02} {name}: {verdict}");
    if let Err(e) = result {
        std::panic::resume_unwind(e);
    }
}

fn rt() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("runtime builds")
}

const FORM: &str = "application/x-www-form-urlencoded";

fn form_body(pairs: &[(&str, &str)]) -> String {
    pairs
        .iter()
        .map(|(k, v)| format!("{}={}", urlencode(k), urlencode(v)))
        .collect::<Vec<_>>()
        .join("&")
}

async fn lab(rest_mode: RestMode) -> ServiceHandle {
    Service::seeded(ServiceConfig {
        rest_mode,
        enable_state_endpoint: true,
        ..ServiceConfig::default()
    })
    .spawn_ephemeral()
    .await
    .expect("ephemeral bind")
}

async fn post_form(url: &str, body: String) -> (u16, Value) {
    let resp = reqwest::Client::new()
        .post(url)
        .header("content-type", FORM)
        .body(body)
        .send()
        .await
        .expect("request succeeds");
    let status = resp.status().as_u16();
    let body = resp.text().await.expect("body reads");
    (status, Value::from_json_str(&body).expect("json response"))
}

async fn get_json(url: &str) -> Value {
    let resp = reqwest::Client::new().get(url).send().await.expect("request succeeds");
    let body = resp.text().await.expect("body reads");
    Value::from_json_str(&body).expect("json response")
}

// ── 1. Array injection reproduction ─────────────────────────────────────

#[test]
fn criterion_01_array_injection_reproduction() {
    criterion(1, "array injection bypasses /vuln/login-array and not /safe/", || {
        rt().block_on(async {
            let lab = lab(RestMode::Open).await;
            let payload = "username%5B%24ne%5D=1&password%5B%24ne%5D=1";

            let (status, json) =
                post_form(&format!("{}/vuln/login-array", lab.base_url()), payload.into()).await;
            assert_eq!(status, 200, "vulnerable endpoint must authenticate the payload");
            assert_eq!(json.get("status"), Some(&Value::text("ok")));

            // The underlying query matches every seeded user.
            let query = Value::object([
                ("username", Value::object([("$ne", Value::text("1"))])),
                ("password", Value::object([("$ne", Value::text("1"))])),
            ]);
            let state = lab.state();
            let matched = state
                .store()
                .read()
                .find("logins", query.as_object().unwrap())
                .unwrap();
            assert_eq!(matched.len(), 5, "operator query must return all seeded users");

            let (status, json) =
                post_form(&format!("{}/safe/login-array", lab.base_url()), payload.into()).await;
            assert_eq!(status, 400, "hardened twin must reject the payload");
            assert_eq!(json.get("status"), Some(&Value::text("bad_input")));
        });
    });
}

// ── 2. OR injection reproduction ────────────────────────────────────────

#[test]
fn criterion_02_or_injection_reproduction() {
    criterion(2, "OR injection logs in via /vuln/login-concat and not /safe/", || {
        rt().block_on(async {
            let lab = lab(RestMode::Open).await;
            let (username, password) = or_injection_fields("tolkien");
            let body = form_body(&[("username", &username), ("password", &password)]);

            let (status, json) =
                post_form(&format!("{}/vuln/login-concat", lab.base_url()), body.clone()).await;
            assert_eq!(status, 200, "correct username alone must log in");
            assert_eq!(json.get("user"), Some(&Value::text("tolkien")));

            let (status, _) =
                post_form(&format!("{}/safe/login-concat", lab.base_url()), body).await;
            assert_eq!(status, 401, "escaped twin must deny the same payload");
        });
    });
}

// ── 3. Script injection reproduction + benign totals oracle ─────────────

/// Brute-force totals straight from the fixture file, independently of
/// the document store and the script engine.
fn brute_force_totals(field: &str) -> Vec<(String, i64)> {
    let fixtures: serde_json::Value =
        serde_json::from_str(nosqlab_service::fixtures::SEED_JSON).unwrap();
    fixtures["stores"]
        .as_array()
        .unwrap()
        .iter()
        .map(|doc| {
            let name = doc["name"].as_str().unwrap().to_string();
            let total = doc["items"]
                .as_array()
                .unwrap()
                .iter()
                .map(|item| item[field].as_i64().unwrap())
                .sum();
            (name, total)
        })
        .collect()
}

#[test]
fn criterion_03_js_injection_reproduction_and_totals() {
    criterion(3, "mapReduce breakout writes {success:1}; benign totals match brute force", || {
        rt().block_on(async {
            let lab = lab(RestMode::Open).await;
            let breakout = js_breakout("injection");
            let body = form_body(&[("field", &breakout)]);

            let (status, _) =
                post_form(&format!("{}/vuln/mapreduce", lab.base_url()), body.clone()).await;
            assert_eq!(status, 200, "breakout must execute");
            let injected = get_json(&format!("{}/__state/injection", lab.base_url())).await;
            let injected = injected.as_array().unwrap();
            assert_eq!(injected.len(), 1, "exactly one injected document");
            assert_eq!(injected[0].get("success"), Some(&Value::Int(1)));

            let (status, json) =
                post_form(&format!("{}/safe/mapreduce", lab.base_url()), body).await;
            assert_eq!(status, 400, "allow-list twin must reject the breakout");
            assert_eq!(json.get("status"), Some(&Value::text("field_not_allowed")));

            for field in ["amount", "price"] {
                let expected = brute_force_totals(field);
                for path in ["/vuln/mapreduce", "/safe/mapreduce"] {
                    let (status, _) = post_form(
                        &format!("{}{path}", lab.base_url()),
                        form_body(&[("field", field)]),
                    )
                    .await;
                    assert_eq!(status, 200);
                    let totals = get_json(&format!("{}/__state/totals", lab.base_url())).await;
                    let got: Vec<(String, i64)> = totals
                        .as_array()
                        .unwrap()
                        .iter()
                        .map(|doc| {
                            (
                                doc.get("key").unwrap().as_text().unwrap().to_string(),
                                doc.get("value").unwrap().as_int().unwrap(),
                            )
                        })
                        .collect();
                    assert_eq!(got, expected, "{path} totals for {field} diverged");
                }
            }
        });
    });
}

// ── 4. REST content-type enforcement ────────────────────────────────────

#[test]
fn criterion_04_rest_insert_modes() {
    criterion(4, "urlencoded REST insert: 201 in open mode, 415 in json-only", || {
        rt().block_on(async {
            let open = lab(RestMode::Open).await;
            let resp = reqwest::Client::new()
                .post(format!("{}/rest/notes", open.base_url()))
                .header("content-type", FORM)
                .body("a=1")
                .send()
                .await
                .unwrap();
            assert_eq!(resp.status().as_u16(), 201);

            let json_only = lab(RestMode::JsonOnly).await;
            let resp = reqwest::Client::new()
                .post(format!("{}/rest/notes", json_only.base_url()))
                .header("content-type", FORM)
                .body("a=1")
                .send()
                .await
                .unwrap();
            assert_eq!(resp.status().as_u16(), 415);
        });
    });
}

// ── 5. Scanner end-to-end ───────────────────────────────────────────────

#[test]
fn criterion_05_scanner_end_to_end() {
    criterion(5, "scan finds all four classes on vuln lab, zero on hardened", || {
        rt().block_on(async {
            let vulnerable = lab(RestMode::Open).await;
            let report = Scanner::new(TargetConfig::vulnerable_lab(&vulnerable.base_url()))
                .scan()
                .await
                .unwrap();
            assert!(report.findings.len() >= 4);
            let mut classes: Vec<AttackClass> =
                report.findings.iter().map(|f| f.class).collect();
            classes.dedup();
            assert_eq!(classes, AttackClass::ALL, "every class must be represented");
            assert_eq!(report.exit_code(), 1);

            let hardened = lab(RestMode::JsonOnly).await;
            let report = Scanner::new(TargetConfig::hardened_lab(&hardened.base_url()))
                .scan()
                .await
                .unwrap();
            assert_eq!(report.findings.len(), 0, "zero false positives required");
            assert_eq!(report.exit_code(), 0);
        });
    });
}

// ── 6. Form-decoder golden oracle ───────────────────────────────────────

#[test]
fn criterion_06_form_decoder_golden_corpus() {
    criterion(6, "20+ golden parse_str fixtures match byte-for-byte", || {
        let cases: serde_json::Value =
            serde_json::from_str(nosqlab_core::form::PARSE_STR_GOLDEN_JSON).unwrap();
        let cases = cases.as_array().unwrap();
        assert!(cases.len() >= 20, "corpus must hold at least 20 fixtures");
        for case in cases {
            let name = case["name"].as_str().unwrap();
            let body = case["body"].as_str().unwrap();
            let expected: Value = case["expected"].clone().into();
            let decoded = form_to_value(&decode_form(body));
            assert_eq!(
                decoded.to_canonical_json(),
                expected.to_canonical_json(),
                "fixture {name} diverged"
            );
        }
    });
}

// ── 7. Query-evaluator oracle ───────────────────────────────────────────
//
// A second, fresh naive evaluator — independent of both the production
// matcher and the core crate's own test oracle.

fn reference_match(query: &Value, doc: &Value) -> bool {
    let Value::Object(entries) = query else { panic!("query is an object") };
    for (key, operand) in entries {
        let ok = if key == "$comment" {
            true
        } else if key == "$or" || key == "$and" {
            let branches = operand.as_array().expect("generated logical arrays");
            if key == "$or" {
                branches.iter().any(|b| reference_match(b, doc))
            } else {
                branches.iter().all(|b| reference_match(b, doc))
            }
        } else {
            reference_field(operand, doc.get(key))
        };
        if !ok {
            return false;
        }
    }
    true
}

fn reference_field(operand: &Value, actual: Option<&Value>) -> bool {
    let operator_keys = match operand {
        Value::Object(m) => m.keys().any(|k| k.starts_with('$')),
        _ => false,
    };
    if !operator_keys {
        return actual == Some(operand);
    }
    let Value::Object(ops) = operand else { unreachable!() };
    for (op, arg) in ops {
        let holds = match op.as_str() {
            "$ne" => actual != Some(arg),
            "$eq" => actual == Some(arg),
            "$gt" | "$lt" => {
                let ord = match (actual, arg) {
                    (Some(Value::Int(a)), Value::Int(b)) => a.partial_cmp(b),
                    (Some(Value::Text(a)), Value::Text(b)) => a.partial_cmp(b),
                    (Some(Value::Int(a)), Value::Float(b)) => (*a as f64).partial_cmp(b),
                    (Some(Value::Float(a)), Value::Int(b)) => a.partial_cmp(&(*b as f64)),
                    (Some(Value::Float(a)), Value::Float(b)) => a.partial_cmp(b),
                    _ => None,
                };
                matches!(
                    (ord, op.as_str()),
                    (Some(std::cmp::Ordering::Greater), "$gt")
                        | (Some(std::cmp::Ordering::Less), "$lt")
                )
            }
            other => panic!("generator never emits {other}"),
        };
        if !holds {
            return false;
        }
    }
    true
}

fn acceptance_scalar(rng: &mut StdRng) -> Value {
    match rng.random_range(0..6) {
        0 => Value::Int(rng.random_range(-3..5)),
        1 => Value::Float([0.5, 1.0, 2.5][rng.random_range(0..3)]),
        2 => Value::Text(["", "a", "b", "1", "ab"][rng.random_range(0..5)].into()),
        3 => Value::Bool(rng.random()),
        4 => Value::Null,
        _ => Value::Int(1),
    }
}

fn acceptance_doc(rng: &mut StdRng) -> Value {
    let fields = ["a", "b", "c", "d"];
    let n = rng.random_range(0..=4);
    Value::object(
        (0..n)
            .map(|_| (fields[rng.random_range(0..4)], acceptance_scalar(rng)))
            .collect::<Vec<_>>(),
    )
}

fn acceptance_query(rng: &mut StdRng, depth: u32) -> Value {
    let fields = ["a", "b", "c", "d"];
    let n = rng.random_range(0..=3);
    let mut pairs: Vec<(String, Value)> = Vec::new();
    for _ in 0..n {
        match rng.random_range(0..if depth == 0 { 4 } else { 6 }) {
            0 | 1 => pairs.push((
                fields[rng.random_range(0..4)].to_string(),
                acceptance_scalar(rng),
            )),
            2 | 3 => {
                let op = ["$ne", "$eq", "$gt", "$lt"][rng.random_range(0..4)];
                pairs.push((
                    fields[rng.random_range(0..4)].to_string(),
                    Value::object([(op, acceptance_scalar(rng))]),
                ));
            }
            4 => pairs.push(("$comment".to_string(), Value::text("ignored"))),
            _ => {
                let op = if rng.random() { "$or" } else { "$and" };
                let branches =
                    (0..rng.random_range(1..=3)).map(|_| acceptance_query(rng, depth - 1));
                pairs.push((op.to_string(), Value::Array(branches.collect())));
            }
        }
    }
    Value::object(pairs)
}

#[test]
fn criterion_07_query_evaluator_oracle() {
    criterion(7, "1000+ randomized find() calls agree with a naive evaluator", || {
        let mut rng = StdRng::seed_from_u64(0xacce97);
        for trial in 0..1_200 {
            let mut store = Store::new();
            for _ in 0..rng.random_range(0..=6) {
                store.insert("c", acceptance_doc(&mut rng)).unwrap();
            }
            let query = acceptance_query(&mut rng, 3);
            let found = store
                .find("c", query.as_object().unwrap())
                .unwrap_or_else(|e| panic!("trial {trial}: generated query invalid: {e}"));
            let expected: Vec<Value> = store
                .docs("c")
                .iter()
                .filter(|d| reference_match(&query, d))
                .cloned()
                .collect();
            assert_eq!(found, expected, "trial {trial}: {query} diverged");
        }
    });
}

// ── 8. Escaping round-trip ──────────────────────────────────────────────

#[test]
fn criterion_08_escaping_round_trip() {
    criterion(8, "1000+ random texts survive escape-embed-parse round trip", || {
        let mut rng = StdRng::seed_from_u64(0xe5ca9e);
        let metachars: Vec<char> =
            "'\\{}[]$,:&=%+ \"aZ9\u{e9}\u{4e16}\u{1f600}".chars().collect();
        for _ in 0..1_200 {
            let len = rng.random_range(0..40);
            let s: String = (0..len)
                .map(|_| metachars[rng.random_range(0..metachars.len())])
                .collect();
            let wrapped = format!("{{ x: '{}' }}", escape_string_literal(&s));
            let parsed = parse_relaxed(&wrapped)
                .unwrap_or_else(|e| panic!("escaped text failed to parse: {s:?}: {e}"));
            assert_eq!(parsed, Value::object([("x", Value::Text(s))]));
        }
    });
}

// ── 9. RBAC property ────────────────────────────────────────────────────

#[test]
fn criterion_09_rbac_never_leaks_admin_docs() {
    criterion(9, "500+ randomized stores: user role never sees admin docs", || {
        rt().block_on(async {
            let lab = lab(RestMode::Open).await;
            let client = reqwest::Client::new();
            let mut rng = StdRng::seed_from_u64(0x9bac);
            for trial in 0..500 {
                let doc_count = rng.random_range(0..=12);
                let docs: Vec<Value> = (0..doc_count)
                    .map(|i| {
                        let role = match rng.random_range(0..3) {
                            0 => "admin",
                            1 => "user",
                            _ => ["user", "admin", "unknown"][rng.random_range(0..3)],
                        };
                        let mut pairs = vec![
                            ("name".to_string(), Value::Text(format!("doc{trial}_{i}"))),
                        ];
                        // Some docs carry no tag at all; those must stay
                        // hidden from the user role too.
                        if rng.random_range(0..8) != 0 {
                            pairs.push(("required_role".to_string(), Value::text(role)));
                        }
                        Value::object(pairs)
                    })
                    .collect();
                {
                    let state = lab.state();
                    let mut store = state.store().write();
                    store.replace_collection("data", docs).unwrap();
                }
                let response = client
                    .get(format!("{}/safe/data", lab.base_url()))
                    .send()
                    .await
                    .unwrap();
                assert_eq!(response.status().as_u16(), 200);
                let body = response.text().await.unwrap();
                let visible = Value::from_json_str(&body).unwrap();
                for doc in visible.as_array().unwrap() {
                    assert_eq!(
                        doc.get("required_role").and_then(Value::as_text),
                        Some("user"),
                        "trial {trial}: a non-user doc leaked to the user role: {doc}"
                    );
                }
            }
        });
    });
}

// ── 10. Robustness ──────────────────────────────────────────────────────

#[test]
fn criterion_10_robustness_fuzz_and_step_budget() {
    criterion(10, "random-byte bodies never crash or hang any endpoint", || {
        rt().block_on(async {
            let lab = lab(RestMode::Open).await;
            let client = reqwest::Client::builder()
                .timeout(std::time::Duration::from_secs(10))
                .build()
                .unwrap();
            let posts = [
                "/vuln/login-array",
                "/safe/login-array",
                "/vuln/login-concat",
                "/safe/login-concat",
                "/vuln/mapreduce",
                "/safe/mapreduce",
                "/rest/fuzz",
            ];
            let gets = ["/safe/data", "/__state/fuzz"];
            let content_types = [FORM, "application/json", "text/plain"];
            let mut rng = StdRng::seed_from_u64(0xf022);
            for i in 0..1_000u32 {
                let len = match i {
                    0..=4 => rng.random_range(512 * 1024..=1024 * 1024),
                    5..=29 => rng.random_range(1024..64 * 1024),
                    _ => rng.random_range(0..512),
                };
                let body: Vec<u8> = (0..len).map(|_| rng.random()).collect();
                for path in posts {
                    let mut req = client
                        .post(format!("{}{path}", lab.base_url()))
                        .body(body.clone());
                    if i % 4 != 3 {
                        req = req.header("content-type", content_types[(i as usize) % 3]);
                    }
                    let response = req
                        .send()
                        .await
                        .unwrap_or_else(|e| panic!("{path} dropped a fuzz request: {e}"));
                    let status = response.status().as_u16();
                    assert!(
                        (200..600).contains(&status),
                        "{path} returned unexpected status {status}"
                    );
                }
                // Large bodies only exercise the POST surface.
                if i % 10 == 0 {
                    for path in gets {
                        let response = client
                            .get(format!("{}{path}", lab.base_url()))
                            .send()
                            .await
                            .unwrap_or_else(|e| panic!("{path} dropped a request: {e}"));
                        assert!((200..600).contains(&response.status().as_u16()));
                    }
                }
            }
            // The service is still alive and correct after the storm.
            let (status, _) = post_form(
                &format!("{}/vuln/login-array", lab.base_url()),
                form_body(&[("username", "tolkien"), ("password", "hobbit")]),
            )
            .await;
            assert_eq!(status, 200, "service must stay healthy after fuzzing");
        });

        // Runaway scripts raise the budget error rather than hanging.
        let mut store = Store::new();
        let outcome =
            exec_top_level("for (var i = 0; 0 < 1; i++) { var x = 1; }", &mut store).unwrap();
        assert!(!outcome.completed);
        assert_eq!(outcome.error, Some(ScriptError::BudgetExceeded));
    });
}
