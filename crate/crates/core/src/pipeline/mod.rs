//! Two-stage classification (subjective vs objective, then positive vs
//! negative) and its cross-validated evaluation.

mod grid;

pub use grid::{grid_cells, run_grid, GridCell, GridCellReport, GridReport, GridTable};

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{
    train_nb, train_svm, BinaryModel, BinaryTask, ClassifyError, Prediction, SvmParams,
};
use crate::corpus::{split_folds, Corpus, CorpusError, Label, Post};
use crate::features::{
    build_dictionary, extract_counts, rule_view, vectorize, FeatureDictionary, FeatureError,
    FeatureVector, Metric, NgramMode, RuleLexicons, RuleMode,
};
use crate::preprocess::{normalize, tokenize, PreprocessError, Stemmer, StopList, TokenSeq};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("training data has no {0} posts")]
    MissingClass(Label),
    #[error("fold {fold}: training split has no {class} posts")]
    FoldMissingClass { fold: usize, class: Label },
    #[error("stop-word removal is enabled but no stop list was supplied")]
    MissingStopList,
    #[error("{stage} stage: {source}")]
    Features {
        stage: &'static str,
        #[source]
        source: FeatureError,
    },
    #[error("{stage} stage: {source}")]
    Classifier {
        stage: &'static str,
        #[source]
        source: ClassifyError,
    },
    #[error("{stage} stage: {source}")]
    Stemming {
        stage: &'static str,
        #[source]
        source: PreprocessError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("accuracy needs equally long, non-empty label lists (got {predicted} and {gold})")]
    AccuracyInput { predicted: usize, gold: usize },
    #[error("malformed model: {0}")]
    ModelFormat(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    ModelVersion(u32),
    #[error("{stage} stage: dictionary fingerprint {found} does not match recorded {expected}")]
    FingerprintMismatch {
        stage: String,
        expected: String,
        found: String,
    },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Nb,
    Svm,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Nb => "NB",
            ClassifierKind::Svm => "SVM",
        }
    }
}

/// Which rule lexicons are active when `rule_mode` is not `off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleScope {
    Negation,
    Emphasis,
    Both,
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nb" => Ok(ClassifierKind::Nb),
            "svm" => Ok(ClassifierKind::Svm),
            _ => Err(format!("invalid classifier {s:?}")),
        }
    }
}

impl std::str::FromStr for RuleScope {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negation" => Ok(RuleScope::Negation),
            "emphasis" => Ok(RuleScope::Emphasis),
            "both" => Ok(RuleScope::Both),
            _ => Err(format!("invalid rule scope {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub metric: Metric,
    pub classifier: ClassifierKind,
    pub ngram: NgramMode,
    pub rule_mode: RuleMode,
    pub rule_scope: RuleScope,
    pub stop_words: bool,
    pub stemming: bool,
    pub min_count: usize,
    pub nb_smoothing: f64,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let svm = SvmParams::default();
        PipelineConfig {
            metric: Metric::IFrequency,
            classifier: ClassifierKind::Svm,
            ngram: NgramMode::Unigrams,
            rule_mode: RuleMode::Off,
            rule_scope: RuleScope::Both,
            stop_words: false,
            stemming: false,
            min_count: 5,
            nb_smoothing: 1.0,
            svm_lambda: svm.lambda,
            svm_epochs: svm.epochs,
            seed: 0,
            stratified: true,
        }
    }
}

/// Word lists a run depends on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    pub stop_list: Option<StopList>,
    pub rules: Option<RuleLexicons>,
}

impl Resources {
    /// The lexicons actually used under `config`'s rule mode and scope.
    fn active_rules(&self, config: &PipelineConfig) -> Result<Option<RuleLexicons>, PipelineError> {
        if config.rule_mode == RuleMode::Off {
            return Ok(None);
        }
        let rules = self.rules.as_ref().ok_or(PipelineError::Features {
            stage: "setup",
            source: FeatureError::MissingLexicons(config.rule_mode),
        })?;
        Ok(Some(match config.rule_scope {
            RuleScope::Negation => rules.only_negations(),
            RuleScope::Emphasis => rules.only_emphasis(),
            RuleScope::Both => rules.clone(),
        }))
    }

    fn active_stop_list(&self, config: &PipelineConfig) -> Result<Option<StopList>, PipelineError> {
        if !config.stop_words {
            return Ok(None);
        }
        self.stop_list
            .clone()
            .map(Some)
            .ok_or(PipelineError::MissingStopList)
    }
}

/// Preprocessing and feature state shared by both stages of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Preprocessing {
    stop_list: Option<StopList>,
    rules: Option<RuleLexicons>,
}

impl Preprocessing {
    fn protected(&self) -> HashSet<String> {
        self.rules.iter().flat_map(|r| r.words().cloned()).collect()
    }
}

/// One trained binary stage: its stemmer, dictionary and classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageModel {
    stemmer: Option<Stemmer>,
    dictionary_fingerprint: String,
    dictionary: FeatureDictionary,
    classifier: BinaryModel,
}

impl StageModel {
    pub fn dictionary(&self) -> &FeatureDictionary {
        &self.dictionary
    }

    pub fn stemmer(&self) -> Option<&Stemmer> {
        self.stemmer.as_ref()
    }

    pub fn classifier(&self) -> &BinaryModel {
        &self.classifier
    }
}

struct StageContext<'a> {
    name: &'static str,
    config: &'a PipelineConfig,
    prep: &'a Preprocessing,
    protected: &'a HashSet<String>,
}

impl StageContext<'_> {
    fn features_err(&self, source: FeatureError) -> PipelineError {
        PipelineError::Features {
            stage: self.name,
            source,
        }
    }

    fn normalized(&self, tokens: &TokenSeq, stemmer: Option<&Stemmer>) -> TokenSeq {
        normalize(
            tokens,
            self.prep.stop_list.as_ref(),
            stemmer,
            self.protected,
        )
    }

    fn vector(
        &self,
        id: &str,
        tokens: &TokenSeq,
        dictionary: &FeatureDictionary,
    ) -> Result<FeatureVector, PipelineError> {
        let counts = extract_counts(
            tokens,
            dictionary,
            self.prep.rules.as_ref(),
            self.config.rule_mode,
        )
        .map_err(|e| self.features_err(e))?;
        match vectorize(&counts, self.config.metric, dictionary) {
            Ok(v) => Ok(v),
            Err(FeatureError::NonPositiveTotal { total }) => {
                if !counts.is_empty() {
                    log::warn!(
                        "{} stage: post {id:?} has in-dictionary total {total}; using an empty vector",
                        self.name
                    );
                }
                Ok(FeatureVector::empty(self.config.metric))
            }
            Err(e) => Err(self.features_err(e)),
        }
    }

    fn train(
        &self,
        posts: &[(&str, TokenSeq)],
        labels: &[bool],
        task: BinaryTask,
    ) -> Result<StageModel, PipelineError> {
        let stemmer = if self.config.stemming {
            let vocabulary: std::collections::BTreeSet<&str> = posts
                .iter()
                .flat_map(|(_, t)| t.iter())
                .filter(|w| !self.protected.contains(*w))
                .filter(|w| !self.prep.stop_list.as_ref().is_some_and(|s| s.contains(w)))
                .collect();
            Some(Stemmer::from_vocabulary(vocabulary).map_err(|source| {
                PipelineError::Stemming {
                    stage: self.name,
                    source,
                }
            })?)
        } else {
            None
        };
        let normalized: Vec<TokenSeq> = posts
            .iter()
            .map(|(_, t)| self.normalized(t, stemmer.as_ref()))
            .collect();
        let views = normalized
            .iter()
            .map(|t| rule_view(t, self.prep.rules.as_ref(), self.config.rule_mode))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.features_err(e))?;
        let dictionary = build_dictionary(&views, self.config.ngram, self.config.min_count)
            .map_err(|e| self.features_err(e))?;
        let vectors = posts
            .iter()
            .zip(&normalized)
            .map(|((id, _), t)| self.vector(id, t, &dictionary))
            .collect::<Result<Vec<_>, _>>()?;

        let classifier_err = |source| PipelineError::Classifier {
            stage: self.name,
            source,
        };
        let m = dictionary.len();
        let classifier = match self.config.classifier {
            ClassifierKind::Nb => {
                let clamped: Vec<FeatureVector> = vectors
                    .iter()
                    .map(FeatureVector::clamp_non_negative)
                    .collect();
                BinaryModel::Nb(
                    train_nb(&clamped, labels, m, self.config.nb_smoothing, task)
                        .map_err(classifier_err)?,
                )
            }
            ClassifierKind::Svm => {
                let params = SvmParams {
                    lambda: self.config.svm_lambda,
                    epochs: self.config.svm_epochs,
                    seed: self.config.seed,
                };
                BinaryModel::Svm(
                    train_svm(&vectors, labels, m, params, task).map_err(classifier_err)?,
                )
            }
        };
        Ok(StageModel {
            stemmer,
            dictionary_fingerprint: dictionary.fingerprint(),
            dictionary,
            classifier,
        })
    }

    fn predict(&self, stage: &StageModel, tokens: &TokenSeq) -> Prediction {
        let normalized = self.normalized(tokens, stage.stemmer.as_ref());
        // Lexicon presence was checked at training time, so extraction cannot fail here.
        let x = self
            .vector("<input>", &normalized, &stage.dictionary)
            .unwrap_or_else(|_| FeatureVector::empty(self.config.metric));
        stage.classifier.predict(&x)
    }
}

const SUBJECTIVITY: &str = "subjectivity";
const POLARITY: &str = "polarity";

/// Result of classifying one text.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub label: Label,
    pub subjectivity: Prediction,
    /// Absent when the first stage called the text objective.
    pub polarity: Option<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageModel {
    format_version: u32,
    config: PipelineConfig,
    preprocessing: Preprocessing,
    subjectivity: StageModel,
    polarity: StageModel,
}

impl TwoStageModel {
    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn subjectivity(&self) -> &StageModel {
        &self.subjectivity
    }

    pub fn polarity(&self) -> &StageModel {
        &self.polarity
    }

    fn context<'a>(
        &'a self,
        name: &'static str,
        protected: &'a HashSet<String>,
    ) -> StageContext<'a> {
        StageContext {
            name,
            config: &self.config,
            prep: &self.preprocessing,
            protected,
        }
    }

    pub fn classify(&self, text: &str) -> Classification {
        let tokens = tokenize(text);
        let protected = self.preprocessing.protected();
        let subjectivity = self
            .context(SUBJECTIVITY, &protected)
            .predict(&self.subjectivity, &tokens);
        if !subjectivity.positive {
            return Classification {
                label: Label::Objective,
                subjectivity,
                polarity: None,
            };
        }
        let polarity = self
            .context(POLARITY, &protected)
            .predict(&self.polarity, &tokens);
        Classification {
            label: if polarity.positive {
                Label::Positive
            } else {
                Label::Negative
            },
            subjectivity,
            polarity: Some(polarity),
        }
    }

    /// Runs only the polarity stage, as if the text were known to be subjective.
    pub fn polarity_of(&self, text: &str) -> Prediction {
        let protected = self.preprocessing.protected();
        self.context(POLARITY, &protected)
            .predict(&self.polarity, &tokenize(text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Parses a serialized model and checks each stage's dictionary against
    /// its recorded fingerprint.
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let model: TwoStageModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(PipelineError::ModelVersion(model.format_version));
        }
        for (name, stage) in [
            (SUBJECTIVITY, &model.subjectivity),
            (POLARITY, &model.polarity),
        ] {
            let found = stage.dictionary.fingerprint();
            if found != stage.dictionary_fingerprint {
                return Err(PipelineError::FingerprintMismatch {
                    stage: name.to_string(),
                    expected: stage.dictionary_fingerprint.clone(),
                    found,
                });
            }
            if stage.classifier.vocab_size() != stage.dictionary.len() {
                return Err(PipelineError::Config(format!(
                    "{name} stage: classifier expects {} features, dictionary has {}",
                    stage.classifier.vocab_size(),
                    stage.dictionary.len()
                )));
            }
        }
        Ok(model)
    }
}

/// Trains both stages on the labeled posts of `corpus`.
pub fn train_two_stage(
    corpus: &Corpus,
    config: &PipelineConfig,
    resources: &Resources,
) -> Result<TwoStageModel, PipelineError> {
    let labeled: Vec<&Post> = corpus.labeled().collect();
    train_on(&labeled, config, resources)
}

fn train_on(
    posts: &[&Post],
    config: &PipelineConfig,
    resources: &Resources,
) -> Result<TwoStageModel, PipelineError> {
    for class in Label::CLASSES {
        if !posts.iter().any(|p| p.label == class) {
            return Err(PipelineError::MissingClass(class));
        }
    }
    let preprocessing = Preprocessing {
        stop_list: resources.active_stop_list(config)?,
        rules: resources.active_rules(config)?,
    };
    let protected = preprocessing.protected();
    let tokens: Vec<(&str, TokenSeq)> = posts
        .iter()
        .map(|p| (p.id.as_str(), tokenize(&p.text)))
        .collect();

    let ctx = |name| StageContext {
        name,
        config,
        prep: &preprocessing,
        protected: &protected,
    };
    let subj_labels: Vec<bool> = posts.iter().map(|p| p.label.is_subjective()).collect();
    let subjectivity = ctx(SUBJECTIVITY).train(
        &tokens,
        &subj_labels,
        BinaryTask::new("subjective", "objective"),
    )?;

    let (pol_tokens, pol_labels): (Vec<(&str, TokenSeq)>, Vec<bool>) = tokens
        .iter()
        .zip(posts)
        .filter(|(_, p)| p.label.is_subjective())
        .map(|(t, p)| (t.clone(), p.label == Label::Positive))
        .unzip();
    let polarity = ctx(POLARITY).train(
        &pol_tokens,
        &pol_labels,
        BinaryTask::new("positive", "negative"),
    )?;

    Ok(TwoStageModel {
        format_version: MODEL_FORMAT_VERSION,
        config: *config,
        preprocessing,
        subjectivity,
        polarity,
    })
}

pub fn accuracy(predicted: &[Label], gold: &[Label]) -> Result<f64, PipelineError> {
    if predicted.len() != gold.len() || gold.is_empty() {
        return Err(PipelineError::AccuracyInput {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Counts over gold (rows) and predicted (columns) labels, both ordered
/// objective, positive, negative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
}

impl ConfusionMatrix {
    fn slot(label: Label) -> usize {
        Label::CLASSES
            .iter()
            .position(|&l| l == label)
            .expect("labeled class")
    }

    pub fn record(&mut self, gold: Label, predicted: Label) {
        self.counts[Self::slot(gold)][Self::slot(predicted)] += 1;
    }

    pub fn get(&self, gold: Label, predicted: Label) -> usize {
        self.counts[Self::slot(gold)][Self::slot(predicted)]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_total(&self, gold: Label) -> usize {
        self.counts[Self::slot(gold)].iter().sum()
    }

    fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub subjectivity_accuracy: f64,
    /// Over gold-subjective test posts; absent when the fold has none.
    pub polarity_accuracy: Option<f64>,
    pub end_to_end_accuracy: f64,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub config: PipelineConfig,
    pub k: usize,
    pub folds: Vec<FoldResult>,
    pub mean_subjectivity_accuracy: f64,
    pub mean_polarity_accuracy: f64,
    pub mean_end_to_end_accuracy: f64,
    /// Confusion-matrix trace over all held-out posts.
    pub pooled_end_to_end_accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Scores a trained model on held-out posts.
pub fn evaluate_fold(
    model: &TwoStageModel,
    fold: usize,
    test: &[&Post],
) -> Result<FoldResult, PipelineError> {
    let mut confusion = ConfusionMatrix::default();
    let (mut subj_hits, mut pol_hits, mut pol_total) = (0usize, 0usize, 0usize);
    let mut predicted = Vec::with_capacity(test.len());
    for post in test {
        let out = model.classify(&post.text);
        if out.subjectivity.positive == post.label.is_subjective() {
            subj_hits += 1;
        }
        if post.label.is_subjective() {
            pol_total += 1;
            let polarity = match out.polarity {
                Some(p) => p,
                None => model.polarity_of(&post.text),
            };
            if polarity.positive == (post.label == Label::Positive) {
                pol_hits += 1;
            }
        }
        confusion.record(post.label, out.label);
        predicted.push(out.label);
    }
    let gold: Vec<Label> = test.iter().map(|p| p.label).collect();
    Ok(FoldResult {
        fold,
        n_test: test.len(),
        subjectivity_accuracy: subj_hits as f64 / test.len() as f64,
        polarity_accuracy: (pol_total > 0).then(|| pol_hits as f64 / pol_total as f64),
        end_to_end_accuracy: accuracy(&predicted, &gold)?,
        confusion,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// k-fold cross-validation of the two-stage pipeline. Every fold rebuilds
/// stemmers, dictionaries and models from its training split alone.
pub fn cross_validate(
    corpus: &Corpus,
    config: &PipelineConfig,
    resources: &Resources,
    k: usize,
) -> Result<EvaluationReport, PipelineError> {
    let plan = split_folds(corpus, k, config.seed, config.stratified)?;
    let labeled: Vec<&Post> = corpus.labeled().collect();
    let folds = (0..k)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<&Post>, Vec<&Post>) = labeled
                .iter()
                .partition(|p| plan.fold_of(&p.id) == Some(fold));
            for class in Label::CLASSES {
                if !train.iter().any(|p| p.label == class) {
                    return Err(PipelineError::FoldMissingClass { fold, class });
                }
            }
            let model = train_on(&train, config, resources)?;
            evaluate_fold(&model, fold, &test)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(*config, k, folds))
}

pub(crate) fn summarize(
    config: PipelineConfig,
    k: usize,
    folds: Vec<FoldResult>,
) -> EvaluationReport {
    let mut confusion = ConfusionMatrix::default();
    for f in &folds {
        confusion.merge(&f.confusion);
    }
    EvaluationReport {
        config,
        k,
        mean_subjectivity_accuracy: mean(folds.iter().map(|f| f.subjectivity_accuracy)),
        mean_polarity_accuracy: mean(folds.iter().filter_map(|f| f.polarity_accuracy)),
        mean_end_to_end_accuracy: mean(folds.iter().map(|f| f.end_to_end_accuracy)),
        pooled_end_to_end_accuracy: confusion.trace() as f64 / confusion.total() as f64,
        confusion,
        folds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, text: &str, label: Label) -> Post {
        Post::new(id, text, label)
    }

    fn tiny() -> Corpus {
        Corpus::new(vec![
            post("o", "the train leaves at noon", Label::Objective),
            post("p", "lovely great food", Label::Positive),
            post("n", "awful terrible service", Label::Negative),
        ])
        .unwrap()
    }

    fn cfg(classifier: ClassifierKind) -> PipelineConfig {
        PipelineConfig {
            classifier,
            metric: Metric::Count,
            min_count: 1,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn trains_on_one_post_per_class() {
        for kind in [ClassifierKind::Nb, ClassifierKind::Svm] {
            let m = train_two_stage(&tiny(), &cfg(kind), &Resources::default()).unwrap();
            assert_eq!(m.polarity().dictionary().n_docs(), 2);
            assert_eq!(m.subjectivity().dictionary().n_docs(), 3);
            assert_eq!(m.classify("lovely food").label, Label::Positive);
            assert_eq!(m.classify("terrible").label, Label::Negative);
            assert_eq!(m.classify("the train at noon").label, Label::Objective);
        }
    }

    #[test]
    fn missing_class_is_named() {
        let c = tiny().filter(|p| p.label != Label::Objective);
        let err =
            train_two_stage(&c, &cfg(ClassifierKind::Svm), &Resources::default()).unwrap_err();
        assert!(err.to_string().contains("objective"));
    }

    #[test]
    fn objective_short_circuits() {
        let m = train_two_stage(&tiny(), &cfg(ClassifierKind::Nb), &Resources::default()).unwrap();
        let out = m.classify("train leaves");
        assert_eq!(out.label, Label::Objective);
        assert!(out.polarity.is_none());
    }

    #[test]
    fn empty_text_is_deterministic() {
        let m = train_two_stage(&tiny(), &cfg(ClassifierKind::Svm), &Resources::default()).unwrap();
        assert_eq!(m.classify(""), m.classify(""));
        assert_eq!(m.classify("").label, m.classify("zzz unknown").label);
    }

    #[test]
    fn same_seed_same_serialized_model() {
        let a = train_two_stage(&tiny(), &cfg(ClassifierKind::Svm), &Resources::default()).unwrap();
        let b = train_two_stage(&tiny(), &cfg(ClassifierKind::Svm), &Resources::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let back = TwoStageModel::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn tampered_dictionary_fails_fingerprint() {
        let m = train_two_stage(&tiny(), &cfg(ClassifierKind::Nb), &Resources::default()).unwrap();
        let json = m.to_json().replacen("\"lovely\"", "\"lovelx\"", 1);
        assert!(matches!(
            TwoStageModel::from_json(&json),
            Err(PipelineError::FingerprintMismatch { .. })
        ));
        assert!(matches!(
            TwoStageModel::from_json("{not json"),
            Err(PipelineError::ModelFormat(_))
        ));
    }

    #[test]
    fn stop_list_required_when_enabled() {
        let config = PipelineConfig {
            stop_words: true,
            ..cfg(ClassifierKind::Nb)
        };
        assert!(matches!(
            train_two_stage(&tiny(), &config, &Resources::default()),
            Err(PipelineError::MissingStopList)
        ));
    }

    #[test]
    fn rule_words_survive_stop_list_and_stemming() {
        let resources = Resources {
            stop_list: Some(StopList::new(["not", "the"])),
            rules: Some(RuleLexicons::new(["not"], ["very"]).unwrap()),
        };
        let config = PipelineConfig {
            stop_words: true,
            stemming: true,
            rule_mode: RuleMode::Tag,
            ..cfg(ClassifierKind::Nb)
        };
        let corpus = Corpus::new(vec![
            post("o", "the train leaves", Label::Objective),
            post("p", "very good", Label::Positive),
            post("n", "not good", Label::Negative),
        ])
        .unwrap();
        let m = train_two_stage(&corpus, &config, &resources).unwrap();
        let d = m.polarity().dictionary();
        assert!(d.index_of("NEG_good").is_some());
        assert!(d.index_of("EMP_good").is_some());
        assert_eq!(m.classify("not good").label, Label::Negative);
    }

    #[test]
    fn accuracy_examples() {
        use Label::*;
        assert_eq!(
            accuracy(&[Positive, Negative], &[Positive, Negative]).unwrap(),
            1.0
        );
        assert_eq!(
            accuracy(&[Positive, Negative], &[Negative, Objective]).unwrap(),
            0.0
        );
        assert_eq!(
            accuracy(
                &[Positive, Negative, Objective, Objective],
                &[Positive, Negative, Objective, Positive]
            )
            .unwrap(),
            0.75
        );
        assert!(accuracy(&[Positive], &[Positive, Negative]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn fold_without_training_class_is_reported() {
        // Two objective posts and k=2: each training split still has one.
        // With one objective post, its fold's training split has none.
        let mut posts = vec![post("o1", "plain fact", Label::Objective)];
        for i in 0..3 {
            posts.push(post(&format!("p{i}"), "good nice", Label::Positive));
            posts.push(post(&format!("n{i}"), "bad awful", Label::Negative));
        }
        let c = Corpus::new(posts).unwrap();
        let err =
            cross_validate(&c, &cfg(ClassifierKind::Nb), &Resources::default(), 2).unwrap_err();
        assert!(matches!(
            err,
            PipelineError::FoldMissingClass {
                class: Label::Objective,
                ..
            }
        ));
    }
}
