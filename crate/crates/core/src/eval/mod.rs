//! Splitting, metrics, comparison runs and the synthetic corpus.

pub mod compare;
pub mod metrics;
pub mod split;
pub mod synth;

pub use compare::{compare_runs, median, CompareConfig, Comparison};
pub use metrics::{confusion, render_confusion, report, ConfusionMatrix, EvalReport, MatrixFormat};
pub use split::{split_labeled, stratified_split};
pub use synth::{generate_corpus, SynthCorpus, SynthSpec};
