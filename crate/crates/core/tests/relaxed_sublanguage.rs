//! Strict JSON as emitted by the canonical serializer is a sublanguage of
//! the relaxed grammar, and the form decoder is total on arbitrary bytes.

use nosqlab_core::form::{decode_form, form_to_value};
use nosqlab_core::relaxed::{build_concat_login_query, parse_relaxed};
use nosqlab_core::value::Value;
use proptest::prelude::*;

fn value_strategy() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(Value::Int),
        (-1.0e15..1.0e15_f64).prop_map(Value::Float),
        ".{0,12}".prop_map(Value::Text),
    ];
    leaf.prop_recursive(3, 32, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..5).prop_map(Value::Array),
            prop::collection::vec((".{0,8}", inner), 0..5)
                .prop_map(Value::object),
        ]
    })
}

proptest! {
    #[test]
    fn relaxed_parser_accepts_canonical_json(v in value_strategy()) {
        let json = v.to_canonical_json();
        let reparsed = parse_relaxed(&json)
            .unwrap_or_else(|e| panic!("canonical output must parse: {json} ({e})"));
        prop_assert_eq!(reparsed, v);
    }

    #[test]
    fn strict_parser_round_trips_canonical_json(v in value_strategy()) {
        let json = v.to_canonical_json();
        prop_assert_eq!(Value::from_json_str(&json).unwrap(), v);
    }

    #[test]
    fn decode_form_is_total(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        let body = String::from_utf8_lossy(&bytes).into_owned();
        let tree = decode_form(&body);
        // And the lift is structure-preserving on whatever came out.
        prop_assert_eq!(tree.node_count(), form_to_value(&tree).node_count());
    }

    #[test]
    fn parse_errors_carry_in_range_offsets(s in ".{0,40}") {
        if let Err(e) = parse_relaxed(&s) {
            prop_assert!(e.offset <= s.len());
        }
    }

    // Fields free of quotes, backslashes, braces and brackets pass
    // through the concat builder intact.
    #[test]
    fn concat_builder_round_trips_tame_fields(
        u in r#"[^'\\{}\[\]]{0,20}"#,
        p in r#"[^'\\{}\[\]]{0,20}"#,
    ) {
        let parsed = parse_relaxed(&build_concat_login_query(&u, &p)).unwrap();
        prop_assert_eq!(
            parsed,
            Value::object([("username", Value::Text(u)), ("password", Value::Text(p))])
        );
    }
}
