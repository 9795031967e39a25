//! Labeled post collections, the JSON-Lines corpus format, and fold assignment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed JSON record: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate post id {id:?} on lines {first} and {second}")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },
    #[error("line {line}: unknown label {value:?}")]
    UnknownLabel { line: usize, value: String },
    #[error("line {line}: invalid timestamp {value:?}: {reason}")]
    BadTimestamp {
        line: usize,
        value: String,
        reason: String,
    },
    #[error("line {line}: post text is empty")]
    EmptyText { line: usize },
    #[error("need at least {k} labeled posts for {k} folds, found {found}")]
    TooFewPosts { k: usize, found: usize },
    #[error("fold count must be positive")]
    ZeroFolds,
}

/// Gold (or predicted) annotation of a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Objective,
    Unlabeled,
}

impl Label {
    pub const CLASSES: [Label; 3] = [Label::Objective, Label::Positive, Label::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
            Label::Objective => "objective",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }

    pub fn is_subjective(self) -> bool {
        matches!(self, Label::Positive | Label::Negative)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            "objective" => Ok(Label::Objective),
            "unlabeled" => Ok(Label::Unlabeled),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub topic: Option<String>,
    pub timestamp: Option<DateTime<Utc>>,
    pub label: Label,
}

impl Post {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        Post {
            id: id.into(),
            text: text.into(),
            topic: None,
            timestamp: None,
            label,
        }
    }
}

/// On-disk shape of one corpus line. Label and timestamp are kept as raw
/// strings so that validation errors can name the offending value.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct PostRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl From<&Post> for PostRecord {
    fn from(p: &Post) -> Self {
        PostRecord {
            id: p.id.clone(),
            text: p.text.clone(),
            topic: p.topic.clone(),
            timestamp: p.timestamp.map(format_timestamp),
            label: p.label.is_labeled().then(|| p.label.as_str().to_string()),
        }
    }
}

pub(crate) fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
}

pub(crate) fn parse_timestamp(line: usize, raw: &str) -> Result<DateTime<Utc>, CorpusError> {
    DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| CorpusError::BadTimestamp {
            line,
            value: raw.to_string(),
            reason: e.to_string(),
        })
}

impl PostRecord {
    fn into_post(self, line: usize) -> Result<Post, CorpusError> {
        if self.text.trim().is_empty() {
            return Err(CorpusError::EmptyText { line });
        }
        let label = match self.label.as_deref() {
            None => Label::Unlabeled,
            Some(raw) => raw
                .parse()
                .map_err(|value| CorpusError::UnknownLabel { line, value })?,
        };
        let timestamp = self
            .timestamp
            .as_deref()
            .map(|raw| parse_timestamp(line, raw))
            .transpose()?;
        Ok(Post {
            id: self.id,
            text: self.text,
            topic: self.topic,
            timestamp,
            label,
        })
    }
}

/// Ordered collection of posts with pairwise distinct ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    posts: Vec<Post>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids. Line numbers in errors are
    /// 1-based positions in `posts`.
    pub fn new(posts: Vec<Post>) -> Result<Self, CorpusError> {
        let mut seen: HashMap<&str, usize> = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            if let Some(first) = seen.insert(&p.id, i + 1) {
                return Err(CorpusError::DuplicateId {
                    id: p.id.clone(),
                    first,
                    second: i + 1,
                });
            }
        }
        Ok(Corpus { posts })
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    pub fn labeled(&self) -> impl Iterator<Item = &Post> {
        self.posts.iter().filter(|p| p.label.is_labeled())
    }

    pub fn into_posts(self) -> Vec<Post> {
        self.posts
    }

    /// Sub-corpus of the posts accepted by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&Post) -> bool) -> Corpus {
        Corpus {
            posts: self.posts.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for p in &self.posts {
            serde_json::to_writer(&mut out, &PostRecord::from(p))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        crate::io::write_atomic(path.as_ref(), |w| self.write_jsonl(w))
    }
}

/// Parses a JSON-Lines corpus from any reader. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut posts = Vec::new();
    let mut first_line: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: format!("<line {lineno}>"),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PostRecord =
            serde_json::from_str(&line).map_err(|source| CorpusError::Json {
                line: lineno,
                source,
            })?;
        let post = record.into_post(lineno)?;
        if let Some(&first) = first_line.get(&post.id) {
            return Err(CorpusError::DuplicateId {
                id: post.id,
                first,
                second: lineno,
            });
        }
        first_line.insert(post.id.clone(), lineno);
        posts.push(post);
    }
    Ok(Corpus { posts })
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_corpus(BufReader::new(file))
}

/// Assignment of every labeled post to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    /// Ids in fold `fold`, sorted.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

/// Deals labeled posts into `k` folds.
///
/// With `stratified`, posts are grouped by label, each group is sorted by id
/// and shuffled with the seeded generator, and the groups are dealt
/// round-robin with a counter that carries across groups. Per-fold class
/// counts are then `floor` or `ceil` of `class_size / k`, and fold sizes
/// differ by at most one. Without stratification the labeled posts are
/// sorted by id, shuffled, and dealt the same way.
pub fn split_folds(
    corpus: &Corpus,
    k: usize,
    seed: u64,
    stratified: bool,
) -> Result<FoldPlan, CorpusError> {
    if k == 0 {
        return Err(CorpusError::ZeroFolds);
    }
    let mut labeled: Vec<&Post> = corpus.labeled().collect();
    if labeled.len() < k {
        return Err(CorpusError::TooFewPosts {
            k,
            found: labeled.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<&Post>> = if stratified {
        labeled.sort_by(|a, b| (a.label, &a.id).cmp(&(b.label, &b.id)));
        let mut groups: Vec<Vec<&Post>> = Vec::new();
        for p in labeled {
            match groups.last_mut() {
                Some(g) if g[0].label == p.label => g.push(p),
                _ => groups.push(vec![p]),
            }
        }
        groups
    } else {
        labeled.sort_by(|a, b| a.id.cmp(&b.id));
        vec![labeled]
    };

    let mut assignment = BTreeMap::new();
    let mut next = 0usize;
    for mut group in groups {
        group.shuffle(&mut rng);
        for p in group {
            assignment.insert(p.id.clone(), next % k);
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<Corpus, CorpusError> {
        read_corpus(s.as_bytes())
    }

    #[test]
    fn loads_valid_lines_in_order() {
        let c = parse(concat!(
            r#"{"id":"a","text":"прво","label":"positive"}"#,
            "\n",
            r#"{"id":"b","text":"second","topic":"food","timestamp":"2009-05-01T12:00:00Z"}"#,
            "\n",
            r#"{"id":"c","text":"third","label":"objective"}"#,
            "\n"
        ))
        .unwrap();
        let ids: Vec<_> = c.posts().iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(c.posts()[1].label, Label::Unlabeled);
        assert_eq!(c.posts()[1].topic.as_deref(), Some("food"));
        assert_eq!(
            c.posts()[1].timestamp.unwrap().to_rfc3339(),
            "2009-05-01T12:00:00+00:00"
        );
    }

    #[test]
    fn duplicate_id_cites_both_lines() {
        let text = [
            r#"{"id":"p0","text":"x"}"#,
            r#"{"id":"p1","text":"x"}"#,
            r#"{"id":"p2","text":"x"}"#,
            r#"{"id":"p3","text":"x"}"#,
            r#"{"id":"p1","text":"y"}"#,
        ]
        .join("\n");
        match parse(&text) {
            Err(CorpusError::DuplicateId { id, first, second }) => {
                assert_eq!((id.as_str(), first, second), ("p1", 2, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_named() {
        let err = parse(r#"{"id":"a","text":"x","label":"pozitive"}"#).unwrap_err();
        assert!(
            matches!(&err, CorpusError::UnknownLabel { value, line: 1 } if value == "pozitive")
        );
        assert!(err.to_string().contains("pozitive"));
    }

    #[test]
    fn malformed_json_names_line() {
        let err = parse("{\"id\":\"a\",\"text\":\"x\"}\n{oops\n").unwrap_err();
        assert!(matches!(err, CorpusError::Json { line: 2, .. }));
        assert!(err.to_string().starts_with("line 2"));
    }

    #[test]
    fn whitespace_only_text_rejected() {
        let err = parse("{\"id\":\"a\",\"text\":\" \\u00a0\\t\"}").unwrap_err();
        assert!(matches!(err, CorpusError::EmptyText { line: 1 }));
    }

    fn labeled_corpus(per_class: usize) -> Corpus {
        let mut posts = Vec::new();
        for (ci, label) in Label::CLASSES.iter().enumerate() {
            for j in 0..per_class {
                posts.push(Post::new(format!("p{ci}_{j:03}"), "text", *label));
            }
        }
        Corpus::new(posts).unwrap()
    }

    #[test]
    fn ten_posts_ten_folds_one_each() {
        let posts = (0..10)
            .map(|i| Post::new(format!("p{i}"), "t", Label::Positive))
            .collect();
        let c = Corpus::new(posts).unwrap();
        for stratified in [false, true] {
            let plan = split_folds(&c, 10, 7, stratified).unwrap();
            for f in 0..10 {
                assert_eq!(plan.members(f).len(), 1);
            }
        }
    }

    #[test]
    fn exact_stratification() {
        let c = labeled_corpus(10);
        let plan = split_folds(&c, 10, 42, true).unwrap();
        for f in 0..10 {
            let mut labels: Vec<Label> = c
                .posts()
                .iter()
                .filter(|p| plan.fold_of(&p.id) == Some(f))
                .map(|p| p.label)
                .collect();
            labels.sort();
            assert_eq!(labels, [Label::Positive, Label::Negative, Label::Objective]);
        }
    }

    #[test]
    fn split_is_deterministic_and_seed_sensitive() {
        let c = labeled_corpus(20);
        let a = split_folds(&c, 10, 1, true).unwrap();
        assert_eq!(a, split_folds(&c, 10, 1, true).unwrap());
        assert_ne!(a, split_folds(&c, 10, 2, true).unwrap());
    }

    #[test]
    fn unlabeled_excluded_and_too_few_rejected() {
        let mut posts: Vec<Post> = (0..3)
            .map(|i| Post::new(format!("l{i}"), "t", Label::Negative))
            .collect();
        posts.push(Post::new("u", "t", Label::Unlabeled));
        let c = Corpus::new(posts).unwrap();
        let plan = split_folds(&c, 3, 0, false).unwrap();
        assert_eq!(plan.fold_of("u"), None);
        assert!(matches!(
            split_folds(&c, 4, 0, false),
            Err(CorpusError::TooFewPosts { k: 4, found: 3 })
        ));
    }

    fn arb_post() -> impl Strategy<Value = (String, Option<String>, Option<i64>, u8)> {
        (
            "[a-zA-Zа-я0-9 !,.]{0,20}[a-zа-я]",
            proptest::option::of("[a-z]{1,6}"),
            proptest::option::of(0i64..2_000_000_000),
            0u8..4,
        )
    }

    fn build(records: Vec<(String, Option<String>, Option<i64>, u8)>) -> Corpus {
        let posts = records
            .into_iter()
            .enumerate()
            .map(|(i, (text, topic, ts, l))| Post {
                id: format!("id{i}"),
                text,
                topic,
                timestamp: ts.map(|s| DateTime::from_timestamp(s, 0).unwrap()),
                label: [
                    Label::Positive,
                    Label::Negative,
                    Label::Objective,
                    Label::Unlabeled,
                ][l as usize],
            })
            .collect();
        Corpus::new(posts).unwrap()
    }

    proptest! {
        #[test]
        fn folds_partition_labeled_posts(
            records in proptest::collection::vec(arb_post(), 1..80),
            k in 1usize..12,
            seed in any::<u64>(),
            stratified in any::<bool>(),
        ) {
            let c = build(records);
            let n_labeled = c.labeled().count();
            prop_assume!(n_labeled >= k);
            let plan = split_folds(&c, k, seed, stratified).unwrap();
            prop_assert_eq!(plan.assignment().len(), n_labeled);
            for p in c.posts() {
                prop_assert_eq!(plan.fold_of(&p.id).is_some(), p.label.is_labeled());
            }
            prop_assert!(plan.assignment().values().all(|&f| f < k));
            if stratified {
                for label in Label::CLASSES {
                    let total = c.labeled().filter(|p| p.label == label).count() as f64;
                    for f in 0..k {
                        let in_fold = c.labeled()
                            .filter(|p| p.label == label && plan.fold_of(&p.id) == Some(f))
                            .count() as f64;
                        prop_assert!((in_fold - total / k as f64).abs() < 1.0);
                    }
                }
            }
        }

        #[test]
        fn jsonl_round_trip(records in proptest::collection::vec(arb_post(), 0..30)) {
            let c = build(records);
            let mut buf = Vec::new();
            c.write_jsonl(&mut buf).unwrap();
            prop_assert_eq!(read_corpus(buf.as_slice()).unwrap(), c);
        }
    }
}
