//! In-memory document store with per-collection monotonically increasing
//! ids. Callers must serialize mutations (many readers xor one writer);
//! the HTTP layer wraps a `Store` in an `RwLock` for exactly that reason.

use crate::query::{match_query, QueryError};
use crate::script::{self, ScriptError};
use crate::value::Value;
use indexmap::IndexMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("document must be an object")]
    NotAnObject,
    #[error("documents may not carry a caller-supplied _id")]
    IdSupplied,
}

#[derive(Debug, Clone)]
pub struct Collection {
    docs: Vec<Value>,
    next_id: i64,
}

impl Default for Collection {
    fn default() -> Self {
        Collection { docs: Vec::new(), next_id: 1 }
    }
}

impl Collection {
    pub fn docs(&self) -> &[Value] {
        &self.docs
    }
}

#[derive(Debug, Default, Clone)]
pub struct Store {
    collections: IndexMap<String, Collection>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn is_empty(&self) -> bool {
        self.collections.is_empty()
    }

    pub fn collection_names(&self) -> impl Iterator<Item = &str> {
        self.collections.keys().map(String::as_str)
    }

    /// Documents of a collection in insertion order; empty for an absent
    /// collection.
    pub fn docs(&self, collection: &str) -> &[Value] {
        self.collections
            .get(collection)
            .map(|c| c.docs())
            .unwrap_or(&[])
    }

    /// Store `doc` under a fresh `_id`, creating the collection on first
    /// use. Returns the assigned id.
    pub fn insert(&mut self, collection: &str, doc: Value) -> Result<i64, StoreError> {
        let Value::Object(mut fields) = doc else {
            return Err(StoreError::NotAnObject);
        };
        if fields.contains_key("_id") {
            return Err(StoreError::IdSupplied);
        }
        let coll = self
            .collections
            .entry(collection.to_string())
            .or_default();
        let id = coll.next_id;
        coll.next_id += 1;
        fields.shift_insert(0, "_id".to_string(), Value::Int(id));
        coll.docs.push(Value::Object(fields));
        Ok(id)
    }

    /// All documents matching `query`, in insertion order. A missing
    /// collection yields an empty result, never an error.
    pub fn find(
        &self,
        collection: &str,
        query: &IndexMap<String, Value>,
    ) -> Result<Vec<Value>, QueryError> {
        let mut out = Vec::new();
        for doc in self.docs(collection) {
            let fields = doc.as_object().expect("stored docs are objects");
            if match_query(query, fields)? {
                out.push(doc.clone());
            }
        }
        Ok(out)
    }

    /// Drop and recreate `collection` from `docs`, assigning fresh ids
    /// starting at 1. Used by mapReduce `out` handling.
    pub fn replace_collection(
        &mut self,
        collection: &str,
        docs: Vec<Value>,
    ) -> Result<(), StoreError> {
        self.collections.shift_remove(collection);
        self.collections
            .insert(collection.to_string(), Collection::default());
        for doc in docs {
            self.insert(collection, doc)?;
        }
        Ok(())
    }

    /// Run map/reduce sources (each a single function literal) over a
    /// collection, replacing the `out` collection named in `options`.
    pub fn map_reduce(
        &mut self,
        collection: &str,
        map_src: &str,
        reduce_src: &str,
        options: &Value,
    ) -> Result<String, ScriptError> {
        script::run_map_reduce(self, collection, map_src, reduce_src, options)
    }
}
