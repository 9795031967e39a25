//! Opinion mining for short informal posts: a subjectivity classifier
//! followed by a polarity classifier over bag-of-n-gram features.

pub mod classify;
pub mod corpus;
pub mod features;
pub mod io;
pub mod pipeline;
pub mod preprocess;
pub mod stats;
pub mod synthetic;

pub use corpus::{load_corpus, split_folds, Corpus, FoldPlan, Label, Post};
pub use pipeline::{
    cross_validate, train_two_stage, ClassifierKind, EvaluationReport, PipelineConfig, Resources,
    TwoStageModel,
};
