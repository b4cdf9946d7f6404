//! Helpdesk email triage: keyword labeling, text preprocessing, synonym
//! augmentation, a bag-of-words network and a keyword decision tree,
//! evaluation, and tailored auto-replies.

pub mod app;
pub mod augment;
pub mod autoreply;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod jsonl;
pub mod labeling;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod textprep;

pub use error::{Result, TriageError};
