//! N-gram dictionaries, raw (optionally rule-modified) counts, and the four
//! per-post feature metrics: presence, count, frequency and
//! frequency-inverse document frequency.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::preprocess::TokenSeq;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Invalid(#[from] FeatureError),
}

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("no training posts to build a dictionary from")]
    NoPosts,
    #[error("dictionary is empty after pruning n-grams with fewer than {min_count} occurrences")]
    EmptyDictionary { min_count: usize },
    #[error("rule mode {0} needs negatory/emphasizer lexicons")]
    MissingLexicons(RuleMode),
    #[error("{word:?} is listed as both a negatory and an emphasizer word")]
    OverlappingLexicons { word: String },
    #[error("total count {total} is not positive; frequency is undefined")]
    NonPositiveTotal { total: i64 },
}

/// Prefix of merged tokens produced by a preceding negatory word.
pub const NEG_TAG: &str = "NEG_";
/// Prefix of merged tokens produced by a preceding emphasizer.
pub const EMP_TAG: &str = "EMP_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NgramMode {
    Unigrams,
    Bigrams,
    #[serde(rename = "both")]
    UnigramsBigrams,
}

impl NgramMode {
    fn unigrams(self) -> bool {
        matches!(self, NgramMode::Unigrams | NgramMode::UnigramsBigrams)
    }

    fn bigrams(self) -> bool {
        matches!(self, NgramMode::Bigrams | NgramMode::UnigramsBigrams)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleMode {
    Off,
    Tag,
    SignedCount,
}

impl fmt::Display for RuleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleMode::Off => "off",
            RuleMode::Tag => "tag",
            RuleMode::SignedCount => "signed-count",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Presence,
    Count,
    Frequency,
    #[serde(rename = "ifrequency")]
    IFrequency,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Presence,
        Metric::Count,
        Metric::Frequency,
        Metric::IFrequency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Presence => "Presence",
            Metric::Count => "Count",
            Metric::Frequency => "Frequency",
            Metric::IFrequency => "IFrequency",
        }
    }
}

macro_rules! kebab_from_str {
    ($($ty:ty),*) => {$(
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                serde_json::from_value(serde_json::Value::String(s.to_string()))
                    .map_err(|_| format!("invalid value {s:?}"))
            }
        }
    )*};
}
kebab_from_str!(NgramMode, RuleMode, Metric);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Negation,
    Emphasis,
}

/// Negatory and emphasizer word sets. A word may belong to at most one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleLexicons {
    negatory: BTreeSet<String>,
    emphasizer: BTreeSet<String>,
}

impl RuleLexicons {
    pub fn new<I, J, S, T>(negatory: I, emphasizer: J) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let fold = |w: &str| crate::preprocess::case_fold(w);
        let negatory: BTreeSet<String> = negatory.into_iter().map(|w| fold(w.as_ref())).collect();
        let emphasizer: BTreeSet<String> =
            emphasizer.into_iter().map(|w| fold(w.as_ref())).collect();
        if let Some(word) = negatory.intersection(&emphasizer).next() {
            return Err(FeatureError::OverlappingLexicons { word: word.clone() });
        }
        Ok(RuleLexicons {
            negatory,
            emphasizer,
        })
    }

    /// Loads the two lexicon files (one word per line, `#` comments).
    pub fn load(negatory: Option<&Path>, emphasizer: Option<&Path>) -> Result<Self, LexiconError> {
        let read = |p: Option<&Path>| -> std::io::Result<BTreeSet<String>> {
            p.map(crate::io::read_lexicon)
                .transpose()
                .map(Option::unwrap_or_default)
        };
        Ok(RuleLexicons::new(read(negatory)?, read(emphasizer)?)?)
    }

    pub fn negatory(&self) -> &BTreeSet<String> {
        &self.negatory
    }

    pub fn emphasizer(&self) -> &BTreeSet<String> {
        &self.emphasizer
    }

    pub fn only_negations(&self) -> Self {
        RuleLexicons {
            negatory: self.negatory.clone(),
            emphasizer: BTreeSet::new(),
        }
    }

    pub fn only_emphasis(&self) -> Self {
        RuleLexicons {
            negatory: BTreeSet::new(),
            emphasizer: self.emphasizer.clone(),
        }
    }

    pub fn kind_of(&self, word: &str) -> Option<RuleKind> {
        if self.negatory.contains(word) {
            Some(RuleKind::Negation)
        } else if self.emphasizer.contains(word) {
            Some(RuleKind::Emphasis)
        } else {
            None
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.negatory.iter().chain(&self.emphasizer)
    }

    pub fn is_empty(&self) -> bool {
        self.negatory.is_empty() && self.emphasizer.is_empty()
    }
}

/// One token after the rule transform, with the amount it contributes to the
/// count of its unigram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedToken {
    pub text: String,
    pub weight: i64,
}

/// Applies rule bigrams to a token stream.
///
/// A rule word binds to the next non-rule token and is consumed. With
/// several rule words in a row the nearest one binds and the others are
/// dropped. A rule word at the very end has nothing to bind to and is kept
/// as an ordinary token.
pub fn apply_rules(
    tokens: &TokenSeq,
    rules: Option<&RuleLexicons>,
    mode: RuleMode,
) -> Result<Vec<WeightedToken>, FeatureError> {
    let plain = |t: &str| WeightedToken {
        text: t.to_string(),
        weight: 1,
    };
    if mode == RuleMode::Off {
        return Ok(tokens.iter().map(plain).collect());
    }
    let rules = rules.ok_or(FeatureError::MissingLexicons(mode))?;
    let mut out = Vec::with_capacity(tokens.len());
    let mut pending: Option<(RuleKind, &str)> = None;
    for t in tokens.iter() {
        if let Some(kind) = rules.kind_of(t) {
            pending = Some((kind, t));
            continue;
        }
        let token = match (pending.take(), mode) {
            (None, _) => plain(t),
            (Some((RuleKind::Negation, _)), RuleMode::Tag) => WeightedToken {
                text: format!("{NEG_TAG}{t}"),
                weight: 1,
            },
            (Some((RuleKind::Emphasis, _)), RuleMode::Tag) => WeightedToken {
                text: format!("{EMP_TAG}{t}"),
                weight: 1,
            },
            (Some((RuleKind::Negation, _)), _) => WeightedToken {
                text: t.to_string(),
                weight: -1,
            },
            (Some((RuleKind::Emphasis, _)), _) => WeightedToken {
                text: t.to_string(),
                weight: 2,
            },
        };
        out.push(token);
    }
    if let Some((_, word)) = pending {
        out.push(plain(word));
    }
    Ok(out)
}

/// Token text sequence after the rule transform; this is what dictionaries
/// are built from.
pub fn rule_view(
    tokens: &TokenSeq,
    rules: Option<&RuleLexicons>,
    mode: RuleMode,
) -> Result<TokenSeq, FeatureError> {
    Ok(apply_rules(tokens, rules, mode)?
        .into_iter()
        .map(|t| t.text)
        .collect())
}

/// Every n-gram occurrence in `terms` with its weight. Unigrams carry the
/// token weight; bigrams always count once. N-gram keys join tokens with a
/// single space, which never occurs inside a token.
fn ngram_occurrences(terms: &[WeightedToken], mode: NgramMode) -> Vec<(String, i64)> {
    let mut out = Vec::new();
    if mode.unigrams() {
        out.extend(terms.iter().map(|t| (t.text.clone(), t.weight)));
    }
    if mode.bigrams() {
        out.extend(
            terms
                .windows(2)
                .map(|w| (format!("{} {}", w[0].text, w[1].text), 1)),
        );
    }
    out
}

/// Ordered n-gram vocabulary with document frequencies from the posts it was
/// built on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DictionaryRepr", into = "DictionaryRepr")]
pub struct FeatureDictionary {
    ngram: NgramMode,
    entries: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct DictionaryRepr {
    ngram: NgramMode,
    n_docs: usize,
    entries: Vec<String>,
    doc_freq: Vec<u32>,
}

impl TryFrom<DictionaryRepr> for FeatureDictionary {
    type Error = String;

    fn try_from(r: DictionaryRepr) -> Result<Self, Self::Error> {
        if r.entries.len() != r.doc_freq.len() {
            return Err("dictionary entries and doc_freq differ in length".into());
        }
        if r.doc_freq.iter().any(|&d| d == 0 || d as usize > r.n_docs) {
            return Err("dictionary doc_freq out of range".into());
        }
        let index: HashMap<String, usize> = r
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        if index.len() != r.entries.len() {
            return Err("dictionary has duplicate entries".into());
        }
        Ok(FeatureDictionary {
            ngram: r.ngram,
            entries: r.entries,
            doc_freq: r.doc_freq,
            n_docs: r.n_docs,
            index,
        })
    }
}

impl From<FeatureDictionary> for DictionaryRepr {
    fn from(d: FeatureDictionary) -> Self {
        DictionaryRepr {
            ngram: d.ngram,
            n_docs: d.n_docs,
            entries: d.entries,
            doc_freq: d.doc_freq,
        }
    }
}

impl FeatureDictionary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ngram_mode(&self) -> NgramMode {
        self.ngram
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, ngram: &str) -> Option<usize> {
        self.index.get(ngram).copied()
    }

    pub fn entry(&self, index: usize) -> &str {
        &self.entries[index]
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn doc_freq(&self, index: usize) -> u32 {
        self.doc_freq[index]
    }

    /// `ln(n_docs / doc_freq)` for one entry.
    pub fn idf(&self, index: usize) -> f64 {
        (self.n_docs as f64 / f64::from(self.doc_freq[index])).ln()
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let repr = DictionaryRepr::from(self.clone());
        let bytes = serde_json::to_vec(&repr).expect("dictionary serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Builds the dictionary of every n-gram with at least `min_count` total
/// occurrences across `posts`. Entries are sorted, so indices depend only on
/// the retained n-gram set.
pub fn build_dictionary(
    posts: &[TokenSeq],
    ngram: NgramMode,
    min_count: usize,
) -> Result<FeatureDictionary, FeatureError> {
    if posts.is_empty() {
        return Err(FeatureError::NoPosts);
    }
    let mut stats: BTreeMap<String, (usize, u32)> = BTreeMap::new();
    for post in posts {
        let terms: Vec<WeightedToken> = post
            .iter()
            .map(|t| WeightedToken {
                text: t.to_string(),
                weight: 1,
            })
            .collect();
        let mut seen = BTreeSet::new();
        for (gram, _) in ngram_occurrences(&terms, ngram) {
            let entry = stats.entry(gram.clone()).or_default();
            entry.0 += 1;
            if seen.insert(gram) {
                entry.1 += 1;
            }
        }
    }
    let (entries, doc_freq): (Vec<String>, Vec<u32>) = stats
        .into_iter()
        .filter(|(_, (total, _))| *total >= min_count)
        .map(|(gram, (_, df))| (gram, df))
        .unzip();
    if entries.is_empty() {
        return Err(FeatureError::EmptyDictionary { min_count });
    }
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();
    Ok(FeatureDictionary {
        ngram,
        entries,
        doc_freq,
        n_docs: posts.len(),
        index,
    })
}

/// Sparse signed occurrence counts of dictionary n-grams in one post.
/// Sorted by index; zero counts are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawCounts(Vec<(usize, i64)>);

impl RawCounts {
    /// Builds from arbitrary `(index, count)` pairs, summing duplicates and
    /// dropping zeros.
    pub fn from_pairs<I: IntoIterator<Item = (usize, i64)>>(pairs: I) -> Self {
        let mut acc: BTreeMap<usize, i64> = BTreeMap::new();
        for (i, c) in pairs {
            *acc.entry(i).or_default() += c;
        }
        RawCounts(acc.into_iter().filter(|&(_, c)| c != 0).collect())
    }

    pub fn entries(&self) -> &[(usize, i64)] {
        &self.0
    }

    pub fn get(&self, index: usize) -> i64 {
        self.0
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0, |pos| self.0[pos].1)
    }

    pub fn total(&self) -> i64 {
        self.0.iter().map(|&(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Counts dictionary n-grams in `tokens` under the given rule mode.
/// N-grams outside the dictionary are skipped.
pub fn extract_counts(
    tokens: &TokenSeq,
    dict: &FeatureDictionary,
    rules: Option<&RuleLexicons>,
    mode: RuleMode,
) -> Result<RawCounts, FeatureError> {
    let terms = apply_rules(tokens, rules, mode)?;
    Ok(RawCounts::from_pairs(
        ngram_occurrences(&terms, dict.ngram)
            .into_iter()
            .filter_map(|(gram, w)| dict.index_of(&gram).map(|i| (i, w))),
    ))
}

/// Sparse real-valued representation of one post under one metric. Sorted by
/// index with no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    metric: Metric,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn new(metric: Metric, entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut entries: Vec<(usize, f64)> =
            entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        entries.sort_by_key(|&(i, _)| i);
        FeatureVector { metric, entries }
    }

    pub fn empty(metric: Metric) -> Self {
        FeatureVector {
            metric,
            entries: Vec::new(),
        }
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Drops negative entries. Used to feed signed counts to models whose
    /// event model has no negative occurrences.
    pub fn clamp_non_negative(&self) -> Self {
        FeatureVector {
            metric: self.metric,
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(_, v)| v > 0.0)
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FeatureVector::new(
            self.metric,
            self.entries.iter().map(|&(i, v)| (i, v * factor)),
        )
    }
}

pub fn metric_presence(counts: &RawCounts) -> FeatureVector {
    FeatureVector::new(
        Metric::Presence,
        counts.entries().iter().map(|&(i, _)| (i, 1.0)),
    )
}

pub fn metric_count(counts: &RawCounts) -> FeatureVector {
    FeatureVector::new(
        Metric::Count,
        counts.entries().iter().map(|&(i, c)| (i, c as f64)),
    )
}

/// Each count divided by the post's total in-dictionary count. A total of
/// zero or below is rejected.
pub fn metric_frequency(counts: &RawCounts) -> Result<FeatureVector, FeatureError> {
    let total = counts.total();
    if total <= 0 {
        return Err(FeatureError::NonPositiveTotal { total });
    }
    let total = total as f64;
    Ok(FeatureVector::new(
        Metric::Frequency,
        counts.entries().iter().map(|&(i, c)| (i, c as f64 / total)),
    ))
}

pub fn metric_ifrequency(
    counts: &RawCounts,
    dict: &FeatureDictionary,
) -> Result<FeatureVector, FeatureError> {
    let freq = metric_frequency(counts)?;
    Ok(FeatureVector::new(
        Metric::IFrequency,
        freq.entries().iter().map(|&(i, f)| (i, f * dict.idf(i))),
    ))
}

pub fn vectorize(
    counts: &RawCounts,
    metric: Metric,
    dict: &FeatureDictionary,
) -> Result<FeatureVector, FeatureError> {
    match metric {
        Metric::Presence => Ok(metric_presence(counts)),
        Metric::Count => Ok(metric_count(counts)),
        Metric::Frequency => metric_frequency(counts),
        Metric::IFrequency => metric_ifrequency(counts, dict),
    }
}
