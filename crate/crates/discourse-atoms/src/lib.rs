//! Discourse atoms: word-sense induction from linear structure in word
//! embeddings.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod linalg;

pub use error::{Error, Result};
