//! Non-axiomatic term logic: a reasoner whose matching is softened by vector
//! similarity. Terms denote embeddings, unification may merge close symbols,
//! and inference combines judgments with graded confidence.

pub mod config;
pub mod embed;
pub mod kb;
pub mod reason;
pub mod rules;
pub mod syntax;
pub mod term;
pub mod unify;
