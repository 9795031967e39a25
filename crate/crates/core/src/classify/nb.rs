//! Multinomial naive Bayes with additive smoothing. Feature values are used
//! as (possibly fractional) event counts.

use serde::{Deserialize, Serialize};

use super::{check_vectors, class_counts, BinaryTask, ClassifyError, Prediction};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    task: BinaryTask,
    smoothing: f64,
    vocab_size: usize,
    tie_positive: bool,
    /// `[negative, positive]`
    class_log_prior: [f64; 2],
    /// `[negative, positive]`, each of length `vocab_size`
    feature_log_likelihood: [Vec<f64>; 2],
}

impl NbModel {
    pub fn task(&self) -> &BinaryTask {
        &self.task
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn class_log_prior(&self, positive: bool) -> f64 {
        self.class_log_prior[usize::from(positive)]
    }

    pub fn feature_log_likelihood(&self, positive: bool) -> &[f64] {
        &self.feature_log_likelihood[usize::from(positive)]
    }

    pub fn tie_positive(&self) -> bool {
        self.tie_positive
    }

    fn joint_log(&self, positive: bool, x: &FeatureVector) -> f64 {
        let loglik = self.feature_log_likelihood(positive);
        self.class_log_prior(positive)
            + x.entries()
                .iter()
                .filter(|&&(i, _)| i < self.vocab_size)
                .map(|&(i, v)| v * loglik[i])
                .sum::<f64>()
    }
}

pub fn train_nb(
    vectors: &[FeatureVector],
    labels: &[bool],
    vocab_size: usize,
    smoothing: f64,
    task: BinaryTask,
) -> Result<NbModel, ClassifyError> {
    if vectors.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(ClassifyError::BadHyperparameter(
            "smoothing must be positive",
        ));
    }
    if vocab_size == 0 {
        return Err(ClassifyError::BadHyperparameter("vocabulary is empty"));
    }
    let (n_pos, n_neg) = class_counts(labels, &task)?;
    check_vectors(vectors, vocab_size)?;

    let mut sums = [vec![0.0f64; vocab_size], vec![0.0f64; vocab_size]];
    for (x, &label) in vectors.iter().zip(labels) {
        let row = &mut sums[usize::from(label)];
        for &(index, value) in x.entries() {
            if value < 0.0 {
                return Err(ClassifyError::NegativeFeature { index, value });
            }
            row[index] += value;
        }
    }
    let feature_log_likelihood = sums.map(|row| {
        let denom = (row.iter().sum::<f64>() + smoothing * vocab_size as f64).ln();
        row.into_iter()
            .map(|s| (s + smoothing).ln() - denom)
            .collect()
    });
    let n = labels.len() as f64;
    Ok(NbModel {
        tie_positive: task.tie_break(n_pos, n_neg),
        task,
        smoothing,
        vocab_size,
        class_log_prior: [(n_neg as f64 / n).ln(), (n_pos as f64 / n).ln()],
        feature_log_likelihood,
    })
}

/// Log-posterior margin between the positive and negative class. Indices
/// outside the vocabulary carry no evidence.
pub fn predict_nb(model: &NbModel, x: &FeatureVector) -> Prediction {
    let score = model.joint_log(true, x) - model.joint_log(false, x);
    Prediction::from_score(score, model.tie_positive)
}
