//! Core building blocks of the nosqlab injection laboratory: an in-memory
//! document store with operator queries, the PHP-style form decoder, the
//! relaxed query-text parser, the mapReduce script engine and the
//! sanitizer toolbox the hardened endpoints use.

pub mod form;
pub mod query;
pub mod relaxed;
pub mod sanitize;
pub mod script;
pub mod store;
pub mod value;

pub use query::{match_query, QueryError};
pub use store::{Store, StoreError};
pub use value::Value;
