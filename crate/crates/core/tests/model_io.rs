use polarity_core::features::{Metric, NgramMode, RuleMode};
use polarity_core::synthetic::{self, SyntheticSpec};
use polarity_core::{train_two_stage, ClassifierKind, PipelineConfig, Resources, TwoStageModel};

#[test]
fn serialized_models_reload_exactly() {
    let corpus = synthetic::generate(&SyntheticSpec {
        posts_per_class: 30,
        ..SyntheticSpec::default()
    });
    let resources = Resources {
        stop_list: Some(synthetic::stop_list()),
        rules: Some(synthetic::rule_lexicons()),
    };
    for (classifier, metric) in [
        (ClassifierKind::Svm, Metric::IFrequency),
        (ClassifierKind::Nb, Metric::Frequency),
    ] {
        let config = PipelineConfig {
            classifier,
            metric,
            ngram: NgramMode::UnigramsBigrams,
            rule_mode: RuleMode::SignedCount,
            stop_words: true,
            stemming: true,
            min_count: 2,
            ..PipelineConfig::default()
        };
        let model = train_two_stage(&corpus, &config, &resources).unwrap();
        let back = TwoStageModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        for post in corpus.posts() {
            assert_eq!(back.classify(&post.text), model.classify(&post.text));
        }
    }
}
