//! Linear soft-margin SVM trained in the primal by stochastic subgradient
//! descent (step `1 / (lambda * t)`) with iterate averaging.
//!
//! The objective is `lambda/2 * |w|^2 + 1/N * sum max(0, 1 - y (w.x + b))`;
//! the bias is not regularized. After each step `w` is projected onto the
//! ball of radius `1 / sqrt(lambda)`, which holds the minimizer. Iterate `t`
//! enters the average with weight `t`.
//!
//! The bias is stepped alongside `w`, but its steps are never shrunk and
//! swing widely early on. It is therefore reset at the start of every epoch,
//! and for the returned model, to the exact minimizer of the objective given
//! the weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_vectors, class_counts, BinaryTask, ClassifyError, Prediction};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-3,
            epochs: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    task: BinaryTask,
    hyperparameters: SvmParams,
    tie_positive: bool,
    bias: f64,
    weights: Vec<f64>,
}

impl SvmModel {
    pub fn from_parts(task: BinaryTask, params: SvmParams, weights: Vec<f64>, bias: f64) -> Self {
        SvmModel {
            tie_positive: task.tie_break(1, 1),
            task,
            hyperparameters: params,
            bias,
            weights,
        }
    }

    pub fn task(&self) -> &BinaryTask {
        &self.task
    }

    pub fn params(&self) -> &SvmParams {
        &self.hyperparameters
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn tie_positive(&self) -> bool {
        self.tie_positive
    }

    /// `w.x + b`; indices outside the weight vector contribute nothing.
    pub fn decision(&self, x: &FeatureVector) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        Prediction::from_score(self.decision(x), self.tie_positive)
    }
}

fn dot(w: &[f64], x: &FeatureVector) -> f64 {
    x.entries()
        .iter()
        .filter_map(|&(i, v)| w.get(i).map(|wi| wi * v))
        .sum()
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

pub fn primal_objective(
    weights: &[f64],
    bias: f64,
    vectors: &[FeatureVector],
    labels: &[bool],
    lambda: f64,
) -> f64 {
    let reg = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let loss: f64 = vectors
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - sign(y) * (dot(weights, x) + bias)).max(0.0))
        .sum();
    reg + loss / vectors.len() as f64
}

/// A subgradient of the primal objective at `(weights, bias)`; the last
/// element is the bias component. Examples exactly on the margin contribute
/// nothing.
pub fn subgradient(
    weights: &[f64],
    bias: f64,
    vectors: &[FeatureVector],
    labels: &[bool],
    lambda: f64,
) -> Vec<f64> {
    let n = vectors.len() as f64;
    let mut g: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    g.push(0.0);
    let m = weights.len();
    for (x, &y) in vectors.iter().zip(labels) {
        let y = sign(y);
        if y * (dot(weights, x) + bias) < 1.0 {
            for &(i, v) in x.entries() {
                g[i] -= y * v / n;
            }
            g[m] -= y / n;
        }
    }
    g
}

/// Weight vector stored as `scale * v` so that the shrink step is O(1), plus
/// the weighted running sum of all iterates stored as `sum_u + sum_c * v`.
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    /// `|v|^2`, kept current so that projection is O(1).
    v_sq: f64,
    sum_u: Vec<f64>,
    sum_c: f64,
    bias: f64,
    bias_sum: f64,
    weight_sum: f64,
    steps: u64,
}

impl ScaledWeights {
    fn new(m: usize) -> Self {
        ScaledWeights {
            v: vec![0.0; m],
            scale: 1.0,
            v_sq: 0.0,
            sum_u: vec![0.0; m],
            sum_c: 0.0,
            bias: 0.0,
            bias_sum: 0.0,
            weight_sum: 0.0,
            steps: 0,
        }
    }

    fn margin(&self, x: &FeatureVector, y: f64) -> f64 {
        y * (self.scale * dot(&self.v, x) + self.bias)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            for (u, v) in self.sum_u.iter_mut().zip(&mut self.v) {
                *u += self.sum_c * *v;
                *v = 0.0;
            }
            self.v_sq = 0.0;
            self.sum_c = 0.0;
            self.scale = 1.0;
        } else {
            self.scale *= factor;
            if self.scale < 1e-9 {
                for (u, v) in self.sum_u.iter_mut().zip(&mut self.v) {
                    *u += self.sum_c * *v;
                    *v *= self.scale;
                }
                self.v_sq *= self.scale * self.scale;
                self.sum_c = 0.0;
                self.scale = 1.0;
            }
        }
    }

    fn add(&mut self, x: &FeatureVector, coef: f64) {
        let step = coef / self.scale;
        for &(i, val) in x.entries() {
            let old = self.v[i];
            self.v[i] += step * val;
            self.v_sq += self.v[i] * self.v[i] - old * old;
            self.sum_u[i] -= self.sum_c * step * val;
        }
    }

    fn norm(&self) -> f64 {
        self.scale * self.v_sq.max(0.0).sqrt()
    }

    /// Scales `w` back onto the ball of radius `radius` if it left it.
    fn project(&mut self, radius: f64) {
        let norm = self.norm();
        if norm > radius {
            self.shrink(radius / norm);
        }
    }

    fn accumulate(&mut self) {
        self.steps += 1;
        let weight = self.steps as f64;
        self.sum_c += weight * self.scale;
        self.bias_sum += weight * self.bias;
        self.weight_sum += weight;
    }

    fn current(&self) -> Vec<f64> {
        self.v.iter().map(|v| self.scale * v).collect()
    }

    fn averaged(&self) -> (Vec<f64>, f64) {
        let t = self.weight_sum.max(1.0);
        let w = self
            .sum_u
            .iter()
            .zip(&self.v)
            .map(|(u, v)| (u + self.sum_c * v) / t)
            .collect();
        (w, self.bias_sum / t)
    }
}

/// Minimizes the hinge term over `b` for fixed decision values `scores`.
///
/// The loss is convex and piecewise linear in `b`; its slope starts at
/// `-n_pos` and rises by one at each kink (`1 - s` for positives, `-1 - s`
/// for negatives), so the minimum is reached at the `n_pos`-th smallest
/// kink and stays flat until the next one. The midpoint of that flat stretch
/// is returned.
fn best_bias(scores: &[f64], labels: &[bool]) -> f64 {
    let mut kinks: Vec<f64> = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| if y { 1.0 - s } else { -1.0 - s })
        .collect();
    kinks.sort_by(f64::total_cmp);
    let n_pos = labels.iter().filter(|&&y| y).count();
    match (n_pos.checked_sub(1).map(|i| kinks[i]), kinks.get(n_pos)) {
        (Some(lo), Some(&hi)) => 0.5 * (lo + hi),
        (Some(lo), None) => lo,
        (None, Some(&hi)) => hi,
        (None, None) => 0.0,
    }
}

fn refit_bias(weights: &[f64], vectors: &[FeatureVector], labels: &[bool]) -> f64 {
    let scores: Vec<f64> = vectors.iter().map(|x| dot(weights, x)).collect();
    best_bias(&scores, labels)
}

pub fn train_svm(
    vectors: &[FeatureVector],
    labels: &[bool],
    vocab_size: usize,
    params: SvmParams,
    task: BinaryTask,
) -> Result<SvmModel, ClassifyError> {
    train_svm_traced(vectors, labels, vocab_size, params, task).map(|(m, _)| m)
}

/// Trains and also returns the primal objective of the averaged iterate
/// after every epoch.
pub fn train_svm_traced(
    vectors: &[FeatureVector],
    labels: &[bool],
    vocab_size: usize,
    params: SvmParams,
    task: BinaryTask,
) -> Result<(SvmModel, Vec<f64>), ClassifyError> {
    if vectors.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch {
            vectors: vectors.len(),
            labels: labels.len(),
        });
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(ClassifyError::BadHyperparameter("lambda must be positive"));
    }
    if params.epochs == 0 {
        return Err(ClassifyError::BadHyperparameter("epochs must be positive"));
    }
    let (n_pos, n_neg) = class_counts(labels, &task)?;
    check_vectors(vectors, vocab_size)?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = ScaledWeights::new(vocab_size);
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut trace = Vec::with_capacity(params.epochs);
    let radius = 1.0 / params.lambda.sqrt();
    for _ in 0..params.epochs {
        state.bias = refit_bias(&state.current(), vectors, labels);
        order.shuffle(&mut rng);
        for &k in &order {
            let t = (state.steps + 1) as f64;
            let eta = 1.0 / (params.lambda * t);
            let (x, y) = (&vectors[k], sign(labels[k]));
            let violated = state.margin(x, y) < 1.0;
            state.shrink(1.0 - eta * params.lambda);
            if violated {
                state.add(x, eta * y);
                state.bias += eta * y;
            }
            state.project(radius);
            state.accumulate();
        }
        let (w, _) = state.averaged();
        let b = refit_bias(&w, vectors, labels);
        trace.push(primal_objective(&w, b, vectors, labels, params.lambda));
    }
    let (weights, _) = state.averaged();
    let bias = refit_bias(&weights, vectors, labels);
    let model = SvmModel {
        tie_positive: task.tie_break(n_pos, n_neg),
        task,
        hyperparameters: params,
        bias,
        weights,
    };
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Metric;

    fn fv(pairs: &[(usize, f64)]) -> FeatureVector {
        FeatureVector::new(Metric::Count, pairs.iter().copied())
    }

    fn task() -> BinaryTask {
        BinaryTask::new("positive", "negative")
    }

    fn params(lambda: f64, epochs: usize) -> SvmParams {
        SvmParams {
            lambda,
            epochs,
            seed: 11,
        }
    }

    #[test]
    fn one_dimensional_separable() {
        let xs = [fv(&[(0, 1.0)]), fv(&[(0, -1.0)])];
        let ys = [true, false];
        let m = train_svm(&xs, &ys, 1, params(0.01, 200), task()).unwrap();
        assert!(m.weights()[0] > 0.0);
        assert!(m.predict(&xs[0]).positive);
        assert!(!m.predict(&xs[1]).positive);
    }

    #[test]
    fn duplicated_data_same_decisions() {
        let xs: Vec<FeatureVector> = (0..20)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                let b = (i as f64 * 0.91).cos();
                fv(&[(0, a), (1, b)])
            })
            .collect();
        let ys: Vec<bool> = xs.iter().map(|x| x.get(0) + 0.5 * x.get(1) > 0.1).collect();
        let p = params(0.05, 400);
        let single = train_svm(&xs, &ys, 2, p, task()).unwrap();
        let xs2: Vec<FeatureVector> = xs.iter().chain(&xs).cloned().collect();
        let ys2: Vec<bool> = ys.iter().chain(&ys).copied().collect();
        let double = train_svm(&xs2, &ys2, 2, p, task()).unwrap();
        for x in &xs {
            let (a, b) = (single.decision(x), double.decision(x));
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_model_and_bias_only() {
        let m = SvmModel::from_parts(task(), SvmParams::default(), vec![0.0; 3], 0.0);
        let p = m.predict(&fv(&[(1, 4.0)]));
        assert_eq!(p.score, 0.0);
        assert_eq!(p.positive, m.tie_positive());
        let m = SvmModel::from_parts(task(), SvmParams::default(), vec![1.0, -2.0, 0.5], 0.25);
        assert_eq!(m.decision(&fv(&[])), 0.25);
    }

    #[test]
    fn linear_in_input_without_bias() {
        let m = SvmModel::from_parts(task(), SvmParams::default(), vec![1.0, -2.0, 0.5], 0.0);
        let x = fv(&[(0, 1.0), (1, 0.25), (2, 3.0)]);
        let s = m.decision(&x);
        let s3 = m.decision(&x.scaled(3.0));
        assert!((s3 - 3.0 * s).abs() < 1e-12);
        assert_eq!(s.signum(), s3.signum());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let xs = [
            fv(&[(0, 1.0), (2, 0.5)]),
            fv(&[(1, 1.0)]),
            fv(&[(0, 0.2), (1, 0.9)]),
        ];
        let ys = [true, false, false];
        let a = train_svm(&xs, &ys, 3, params(0.1, 10), task()).unwrap();
        let b = train_svm(&xs, &ys, 3, params(0.1, 10), task()).unwrap();
        assert_eq!(a, b);
        assert!(a.weights().iter().chain([&a.bias()]).all(|w| w.is_finite()));
    }

    #[test]
    fn scaled_representation_matches_dense_update() {
        // Replays the same update sequence with plain dense vectors.
        let xs = [
            fv(&[(0, 1.0), (2, -0.5)]),
            fv(&[(1, 1.0)]),
            fv(&[(0, -0.3), (1, 0.9)]),
        ];
        let ys = [true, false, true];
        let p = SvmParams {
            lambda: 0.02,
            epochs: 7,
            seed: 3,
        };
        let model = train_svm(&xs, &ys, 3, p, task()).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let radius = 1.0 / p.lambda.sqrt();
        let mut w = vec![0.0; 3];
        let (mut ws, mut total, mut t) = (vec![0.0; 3], 0.0, 0.0);
        for _ in 0..p.epochs {
            let mut b = refit_bias(&w, &xs, &ys);
            order.shuffle(&mut rng);
            for &k in &order {
                t += 1.0;
                let eta = 1.0 / (p.lambda * t);
                let y = sign(ys[k]);
                let viol = y * (dot(&w, &xs[k]) + b) < 1.0;
                for wi in w.iter_mut() {
                    *wi *= 1.0 - eta * p.lambda;
                }
                if viol {
                    for &(i, v) in xs[k].entries() {
                        w[i] += eta * y * v;
                    }
                    b += eta * y;
                }
                let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > radius {
                    w.iter_mut().for_each(|x| *x *= radius / norm);
                }
                for (s, wi) in ws.iter_mut().zip(&w) {
                    *s += t * wi;
                }
                total += t;
            }
        }
        for (got, sum) in model.weights().iter().zip(&ws) {
            assert!((got - sum / total).abs() < 1e-9, "{got} vs {}", sum / total);
        }
        assert_eq!(model.bias(), refit_bias(model.weights(), &xs, &ys));
    }

    fn brute_best_bias_objective(scores: &[f64], labels: &[bool]) -> f64 {
        // Piecewise-linear: the minimum is attained at a kink.
        scores
            .iter()
            .zip(labels)
            .map(|(&s, &y)| if y { 1.0 - s } else { -1.0 - s })
            .map(|b| hinge_sum(scores, labels, b))
            .fold(f64::INFINITY, f64::min)
    }

    fn hinge_sum(scores: &[f64], labels: &[bool], b: f64) -> f64 {
        scores
            .iter()
            .zip(labels)
            .map(|(&s, &y)| (1.0 - sign(y) * (s + b)).max(0.0))
            .sum()
    }

    #[test]
    fn bias_refit_is_optimal() {
        let cases: [(&[f64], &[bool]); 4] = [
            (
                &[0.3, -0.2, 1.5, -2.0, 0.1],
                &[true, false, true, false, false],
            ),
            (&[5.0, 4.0, 3.0], &[false, false, true]),
            (&[0.0, 0.0], &[true, false]),
            (
                &[-1.0, 2.0, 2.5, -0.5, 0.7, 0.7],
                &[true, true, true, false, false, true],
            ),
        ];
        for (scores, labels) in cases {
            let b = best_bias(scores, labels);
            let best = brute_best_bias_objective(scores, labels);
            assert!(
                (hinge_sum(scores, labels, b) - best).abs() < 1e-12,
                "{scores:?}"
            );
        }
        assert_eq!(best_bias(&[0.0, 0.0], &[true, false]), 0.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_params() {
        let xs = [fv(&[(0, f64::NAN)]), fv(&[(0, 1.0)])];
        assert!(matches!(
            train_svm(&xs, &[true, false], 1, params(0.1, 1), task()),
            Err(ClassifyError::NonFinite { index: 0, .. })
        ));
        let xs = [fv(&[(0, 1.0)]), fv(&[(0, -1.0)])];
        assert!(matches!(
            train_svm(&xs, &[true, false], 1, params(0.0, 1), task()),
            Err(ClassifyError::BadHyperparameter(_))
        ));
    }
}
