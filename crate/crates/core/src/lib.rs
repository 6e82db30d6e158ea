pub mod diff;
pub mod fixtures;
pub mod layout;
pub mod predicate;
pub mod query;
pub mod rules;
pub mod transform;
pub mod value;
pub mod vis;
