//! Deterministic seed data: five login users, two stores with integer
//! item prices/amounts, and role-tagged documents for the RBAC endpoint.

use nosqlab_core::{Store, Value};

/// The checked-in fixture file, parsed at seed time.
pub const SEED_JSON: &str = include_str!("../fixtures/seed.json");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeedError {
    #[error("store already seeded")]
    AlreadySeeded,
    #[error("fixture file is invalid: {0}")]
    BadFixture(String),
}

/// Populate an empty store from the fixture file. Seeding twice is an
/// error so tests cannot silently double their fixtures.
pub fn seed_fixtures(store: &mut Store) -> Result<(), SeedError> {
    if !store.is_empty() {
        return Err(SeedError::AlreadySeeded);
    }
    let root = Value::from_json_str(SEED_JSON).map_err(|e| SeedError::BadFixture(e.to_string()))?;
    let Value::Object(collections) = root else {
        return Err(SeedError::BadFixture("fixture root must be an object".into()));
    };
    for (collection, docs) in collections {
        let Value::Array(docs) = docs else {
            return Err(SeedError::BadFixture(format!(
                "fixture collection {collection} must be an array"
            )));
        };
        for doc in docs {
            store
                .insert(&collection, doc)
                .map_err(|e| SeedError::BadFixture(e.to_string()))?;
        }
    }
    Ok(())
}
