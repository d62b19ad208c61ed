//! Screenplay quality assessment from text alone.
//!
//! Scripts are parsed into scene headings, action and dialogue, split at
//! nine equally spaced structural points, and represented by tf-idf over the
//! text around those points plus optional domain features (character
//! activity curves, type-token ratio, affect profiles, utterance clusters).
//! A class-weighted linear SVM predicts award nomination.

pub mod classifier;
pub mod cluster;
pub mod features;
pub mod lexicon;
pub mod par;
pub mod parser;
pub mod pipeline;
pub mod segment;
pub mod synth;
pub mod tfidf;

pub use classifier::{EvalReport, SvmModel};
pub use features::{BlockSet, FeatureBlock};
pub use par::Execution;
pub use parser::{parse_screenplay, tokenize, Screenplay};
