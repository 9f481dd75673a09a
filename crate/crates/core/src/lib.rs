//! Template-based rewriting of formal task-oriented utterances into
//! informal ones, with edit alignment, slot-preservation scoring and
//! evaluation utilities.

pub mod cli;
pub mod corpus;
pub mod datasetpipe;
pub mod editalign;
pub mod error;
pub mod evalharness;
pub mod jsonl;
pub mod slotmetric;
pub mod template;
pub mod textnorm;

pub use corpus::{tokenize, ParallelPair, Sentence, SlotSet};
pub use editalign::{align, apply_edits, EditAlignment, EditTag};
pub use error::{Error, Result};
pub use slotmetric::{chrf, slot_score, SlotScore};
pub use template::{fill_template, Template};
pub use textnorm::{normalize_tokens, NormTables};
