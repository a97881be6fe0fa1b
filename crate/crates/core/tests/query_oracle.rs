//! Randomized agreement between the store's query evaluation and a naive
//! reference evaluator written independently of the production matcher.

use nosqlab_core::value::Value;
use nosqlab_core::Store;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// ── Naive reference evaluator ───────────────────────────────────────────
//
// Deliberately plain: walks the query object per the documented contract
// with no shared code beyond the Value type itself.

fn naive_match(query: &Value, doc: &Value) -> bool {
    let (Value::Object(q), Value::Object(_)) = (query, doc) else {
        panic!("naive_match takes two objects");
    };
    q.iter().all(|(key, operand)| match key.as_str() {
        "$comment" => true,
        "$or" => operand
            .as_array()
            .expect("generated $or is an array")
            .iter()
            .any(|branch| naive_match(branch, doc)),
        "$and" => operand
            .as_array()
            .expect("generated $and is an array")
            .iter()
            .all(|branch| naive_match(branch, doc)),
        field => naive_field_match(field, operand, doc),
    })
}

fn naive_field_match(field: &str, operand: &Value, doc: &Value) -> bool {
    let doc_value = doc.get(field);
    let is_operator_object = matches!(operand, Value::Object(m) if m.keys().any(|k| k.starts_with('$')));
    if !is_operator_object {
        return doc_value == Some(operand);
    }
    let Value::Object(ops) = operand else { unreachable!() };
    ops.iter().all(|(op, arg)| match op.as_str() {
        "$ne" => doc_value != Some(arg),
        "$eq" => doc_value == Some(arg),
        "$gt" => naive_compare(doc_value, arg).map(|o| o.is_gt()).unwrap_or(false),
        "$lt" => naive_compare(doc_value, arg).map(|o| o.is_lt()).unwrap_or(false),
        other => panic!("generator produced unknown operator {other}"),
    })
}

fn naive_compare(doc_value: Option<&Value>, arg: &Value) -> Option<std::cmp::Ordering> {
    let v = doc_value?;
    match (v, arg) {
        (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
        (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
        (Value::Int(_) | Value::Float(_), Value::Int(_) | Value::Float(_)) => {
            let to_f = |x: &Value| match x {
                Value::Int(i) => *i as f64,
                Value::Float(f) => *f,
                _ => unreachable!(),
            };
            to_f(v).partial_cmp(&to_f(arg))
        }
        _ => None,
    }
}

// ── Random instance generation ──────────────────────────────────────────

const FIELDS: [&str; 4] = ["a", "b", "c", "d"];

fn random_scalar(rng: &mut StdRng) -> Value {
    match rng.random_range(0..7) {
        0 => Value::Int(rng.random_range(-2..4)),
        1 => Value::Float([0.5, 1.0, 1.5][rng.random_range(0..3)]),
        2 => Value::Text(["", "a", "b", "1", "zz"][rng.random_range(0..5)].to_string()),
        3 => Value::Bool(rng.random()),
        4 => Value::Null,
        5 => Value::Int(1),
        _ => Value::Text("1".to_string()),
    }
}

fn random_doc(rng: &mut StdRng) -> Value {
    let field_count = rng.random_range(0..=4);
    let mut pairs = Vec::new();
    for _ in 0..field_count {
        let field = FIELDS[rng.random_range(0..FIELDS.len())];
        let value = if rng.random_range(0..8) == 0 {
            Value::object([("inner", random_scalar(rng))])
        } else {
            random_scalar(rng)
        };
        pairs.push((field, value));
    }
    Value::object(pairs)
}

fn random_query(rng: &mut StdRng, depth: u32) -> Value {
    let entry_count = rng.random_range(0..=3);
    let mut pairs: Vec<(String, Value)> = Vec::new();
    for _ in 0..entry_count {
        let choice = if depth == 0 { rng.random_range(0..3) } else { rng.random_range(0..5) };
        match choice {
            0 => {
                let field = FIELDS[rng.random_range(0..FIELDS.len())];
                pairs.push((field.to_string(), random_scalar(rng)));
            }
            1 | 2 => {
                let field = FIELDS[rng.random_range(0..FIELDS.len())];
                let op = ["$ne", "$eq", "$gt", "$lt"][rng.random_range(0..4)];
                let mut ops = vec![(op, random_scalar(rng))];
                if rng.random_range(0..4) == 0 {
                    let op2 = ["$ne", "$eq", "$gt", "$lt"][rng.random_range(0..4)];
                    if op2 != op {
                        ops.push((op2, random_scalar(rng)));
                    }
                }
                pairs.push((field.to_string(), Value::object(ops)));
            }
            3 => {
                let op = if rng.random() { "$or" } else { "$and" };
                let branches = (0..rng.random_range(1..=3))
                    .map(|_| random_query(rng, depth - 1))
                    .collect();
                pairs.push((op.to_string(), Value::Array(branches)));
            }
            _ => {
                pairs.push(("$comment".to_string(), Value::text("nothing to see")));
            }
        }
    }
    Value::object(pairs)
}

// ── The agreement test ──────────────────────────────────────────────────

#[test]
fn find_agrees_with_naive_reference_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let trials = 1_500;
    for trial in 0..trials {
        let mut store = Store::new();
        let doc_count = rng.random_range(0..=6);
        let mut raw_docs = Vec::new();
        for _ in 0..doc_count {
            let doc = random_doc(&mut rng);
            store.insert("t", doc.clone()).unwrap();
            raw_docs.push(doc);
        }
        let query = random_query(&mut rng, 3);
        let query_map = query.as_object().unwrap();

        let found = store
            .find("t", query_map)
            .unwrap_or_else(|e| panic!("generated query must be valid: {e} ({query})"));

        let all_docs = store.docs("t");
        let expected: Vec<&Value> = all_docs
            .iter()
            .filter(|d| naive_match(&query, d))
            .collect();

        let found_ids: Vec<&Value> = found.iter().map(|d| d.get("_id").unwrap()).collect();
        let expected_ids: Vec<&Value> =
            expected.iter().map(|d| d.get("_id").unwrap()).collect();
        assert_eq!(
            found_ids, expected_ids,
            "trial {trial}: query {query} over {} docs diverged",
            all_docs.len()
        );

        // Results are a subset of the collection, in insertion order,
        // and each one satisfies the query.
        let mut last_id = 0;
        for doc in &found {
            let id = doc.get("_id").unwrap().as_int().unwrap();
            assert!(id > last_id, "insertion order violated");
            last_id = id;
            assert!(nosqlab_core::match_query(query_map, doc.as_object().unwrap()).unwrap());
        }
    }
}

#[test]
fn or_with_empty_object_branch_matches_everything() {
    let mut rng = StdRng::seed_from_u64(0xb2a7c4);
    for _ in 0..300 {
        let doc = random_doc(&mut rng);
        let arbitrary = random_query(&mut rng, 2);
        let query = Value::object([(
            "$or",
            Value::Array(vec![Value::object::<&str>([]), arbitrary]),
        )]);
        let mut store = Store::new();
        store.insert("t", doc).unwrap();
        let found = store.find("t", query.as_object().unwrap()).unwrap();
        assert_eq!(found.len(), 1, "{{$or:[{{}},X]}} must match any doc");
    }
}

#[test]
fn empty_query_matches_every_generated_doc() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..200 {
        let doc = random_doc(&mut rng);
        let empty = Value::object::<&str>([]);
        assert!(naive_match(&empty, &doc));
        assert!(nosqlab_core::match_query(
            empty.as_object().unwrap(),
            doc.as_object().unwrap()
        )
        .unwrap());
    }
}
