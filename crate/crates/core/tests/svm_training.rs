use polarity_core::classify::{primal_objective, train_svm_traced, BinaryTask, SvmParams};
use polarity_core::features::{
    build_dictionary, extract_counts, vectorize, FeatureVector, Metric, NgramMode, RuleMode,
};
use polarity_core::preprocess::tokenize;
use polarity_core::synthetic::{self, SyntheticSpec};
use polarity_core::Label;

fn subjectivity_task(metric: Metric) -> (Vec<FeatureVector>, Vec<bool>, usize) {
    let corpus = synthetic::generate(&SyntheticSpec::default());
    let tokens: Vec<_> = corpus.posts().iter().map(|p| tokenize(&p.text)).collect();
    let dict = build_dictionary(&tokens, NgramMode::Unigrams, 5).unwrap();
    let xs = tokens
        .iter()
        .map(|t| {
            let counts = extract_counts(t, &dict, None, RuleMode::Off).unwrap();
            vectorize(&counts, metric, &dict).unwrap()
        })
        .collect();
    let ys = corpus
        .posts()
        .iter()
        .map(|p| p.label != Label::Objective)
        .collect();
    (xs, ys, dict.len())
}

#[test]
fn averaged_weights_stay_in_projection_ball() {
    for metric in [Metric::Presence, Metric::Count] {
        let (xs, ys, m) = subjectivity_task(metric);
        let params = SvmParams::default();
        let (model, _) = train_svm_traced(&xs, &ys, m, params, BinaryTask::new("s", "o")).unwrap();
        let norm = model.weights().iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(
            norm <= (1.0 + 1e-9) / params.lambda.sqrt(),
            "{metric:?}: |w| = {norm}"
        );
    }
}

#[test]
fn objective_trace_is_non_increasing_on_text() {
    for metric in Metric::ALL {
        let (xs, ys, m) = subjectivity_task(metric);
        for seed in 0..3 {
            let params = SvmParams {
                seed,
                ..SvmParams::default()
            };
            let (model, trace) =
                train_svm_traced(&xs, &ys, m, params, BinaryTask::new("s", "o")).unwrap();
            for (e, pair) in trace.windows(2).enumerate() {
                assert!(
                    pair[1] <= pair[0] + 1e-3,
                    "{metric:?} seed {seed} epoch {}: {pair:?}",
                    e + 1
                );
            }
            let last = *trace.last().unwrap();
            let obj = primal_objective(model.weights(), model.bias(), &xs, &ys, params.lambda);
            assert_eq!(obj, last);
            assert!(obj <= 1.0);
        }
    }
}
