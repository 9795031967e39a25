//! Binary classifiers over sparse feature vectors.

mod nb;
mod svm;

pub use nb::{predict_nb, train_nb, NbModel};
pub use svm::{primal_objective, subgradient, train_svm, train_svm_traced, SvmModel, SvmParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("no training examples of class {0:?}")]
    MissingClass(String),
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("feature index {index} is outside the vocabulary of size {vocab_size}")]
    IndexOutOfRange { index: usize, vocab_size: usize },
    #[error("naive Bayes needs non-negative features, got {value} at index {index}")]
    NegativeFeature { index: usize, value: f64 },
    #[error("non-finite feature value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid hyperparameter: {0}")]
    BadHyperparameter(&'static str),
}

/// Names of the two classes of a binary task. `positive` is the class
/// predicted for scores above zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryTask {
    pub positive: String,
    pub negative: String,
}

impl BinaryTask {
    pub fn new(positive: impl Into<String>, negative: impl Into<String>) -> Self {
        BinaryTask {
            positive: positive.into(),
            negative: negative.into(),
        }
    }

    /// Class chosen at score zero: the more frequent training class, or the
    /// lexicographically smaller name when the classes are balanced.
    fn tie_break(&self, n_positive: usize, n_negative: usize) -> bool {
        match n_positive.cmp(&n_negative) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.positive < self.negative,
        }
    }

    pub fn name(&self, positive: bool) -> &str {
        if positive {
            &self.positive
        } else {
            &self.negative
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// True for the task's positive class.
    pub positive: bool,
    pub score: f64,
}

impl Prediction {
    fn from_score(score: f64, tie_positive: bool) -> Self {
        let positive = if score > 0.0 {
            true
        } else if score < 0.0 {
            false
        } else {
            tie_positive
        };
        Prediction { positive, score }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BinaryModel {
    Nb(NbModel),
    Svm(SvmModel),
}

impl BinaryModel {
    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        match self {
            BinaryModel::Nb(m) => predict_nb(m, &x.clamp_non_negative()),
            BinaryModel::Svm(m) => m.predict(x),
        }
    }

    pub fn task(&self) -> &BinaryTask {
        match self {
            BinaryModel::Nb(m) => m.task(),
            BinaryModel::Svm(m) => m.task(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        match self {
            BinaryModel::Nb(m) => m.vocab_size(),
            BinaryModel::Svm(m) => m.weights().len(),
        }
    }
}

fn class_counts(labels: &[bool], task: &BinaryTask) -> Result<(usize, usize), ClassifyError> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 {
        return Err(ClassifyError::MissingClass(task.positive.clone()));
    }
    if n_neg == 0 {
        return Err(ClassifyError::MissingClass(task.negative.clone()));
    }
    Ok((n_pos, n_neg))
}

fn check_vectors(vectors: &[FeatureVector], vocab_size: usize) -> Result<(), ClassifyError> {
    for v in vectors {
        for &(index, value) in v.entries() {
            if index >= vocab_size {
                return Err(ClassifyError::IndexOutOfRange { index, vocab_size });
            }
            if !value.is_finite() {
                return Err(ClassifyError::NonFinite { index, value });
            }
        }
    }
    Ok(())
}
