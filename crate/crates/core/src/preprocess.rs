//! Tokenization, case folding, stop-word filtering and successor-variety
//! (peak-and-plateau) stemming over a prefix trie.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PreprocessError {
    #[error("cannot build a stemming trie from an empty vocabulary")]
    EmptyVocabulary,
    #[error("prefix {prefix:?} does not occur in the trie")]
    PrefixAbsent { prefix: String },
    #[error("position {pos} is past the end of {word:?}")]
    PositionOutOfRange { word: String, pos: usize },
}

/// Lowercase letters whose simple case folding maps to a different lowercase
/// letter. `char::to_lowercase` leaves these alone.
const FOLD_EXCEPTIONS: &[(char, char)] = &[
    ('\u{00b5}', '\u{03bc}'), // micro sign
    ('\u{017f}', 's'),        // long s
    ('\u{0345}', '\u{03b9}'),
    ('\u{03c2}', '\u{03c3}'), // final sigma
    ('\u{03d0}', '\u{03b2}'),
    ('\u{03d1}', '\u{03b8}'),
    ('\u{03d5}', '\u{03c6}'),
    ('\u{03d6}', '\u{03c0}'),
    ('\u{03f0}', '\u{03ba}'),
    ('\u{03f1}', '\u{03c1}'),
    ('\u{03f5}', '\u{03b5}'),
    ('\u{1e9b}', '\u{1e61}'),
    ('\u{1fbe}', '\u{03b9}'),
];

/// Simple (one-to-one) case folding of a single character. Characters whose
/// lowercase form expands to several characters are left unchanged.
pub fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    let folded = match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    };
    FOLD_EXCEPTIONS
        .iter()
        .find(|(from, _)| *from == folded)
        .map_or(folded, |&(_, to)| to)
}

pub fn case_fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

/// Case-folded word sequence for one post.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<String>);

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSeq(iter.into_iter().map(Into::into).collect())
    }
}

/// Splits on every character that is neither a letter nor a digit and
/// case-folds the resulting runs.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.push(fold_char(c));
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenSeq(tokens)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StopList {
    words: BTreeSet<String>,
}

impl StopList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopList {
            words: words.into_iter().map(|w| case_fold(w.as_ref())).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(StopList {
            words: crate::io::read_lexicon(path.as_ref())?,
        })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn remove_stop_words(tokens: &TokenSeq, stop: &StopList) -> TokenSeq {
    tokens.iter().filter(|t| !stop.contains(t)).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    terminal: bool,
    count: usize,
}

/// Character trie over a vocabulary. Each node records how many vocabulary
/// words pass through it, so a node's count is the sum of its children's
/// counts plus one if a word ends there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixTrie {
    nodes: Vec<TrieNode>,
    words: usize,
}

impl SuffixTrie {
    const ROOT: usize = 0;

    pub fn build<I, S>(vocabulary: I) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut trie = SuffixTrie {
            nodes: vec![TrieNode::default()],
            words: 0,
        };
        let unique: BTreeSet<String> = vocabulary
            .into_iter()
            .map(|w| w.as_ref().to_string())
            .collect();
        for word in &unique {
            trie.insert(word);
        }
        if trie.words == 0 {
            return Err(PreprocessError::EmptyVocabulary);
        }
        Ok(trie)
    }

    fn insert(&mut self, word: &str) {
        let mut node = Self::ROOT;
        self.nodes[node].count += 1;
        for c in word.chars() {
            node = match self.nodes[node].children.get(&c) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(c, next);
                    next
                }
            };
            self.nodes[node].count += 1;
        }
        self.nodes[node].terminal = true;
        self.words += 1;
    }

    fn find<I: IntoIterator<Item = char>>(&self, prefix: I) -> Option<usize> {
        prefix.into_iter().try_fold(Self::ROOT, |node, c| {
            self.nodes[node].children.get(&c).copied()
        })
    }

    /// Number of vocabulary words (duplicates collapsed).
    pub fn word_count(&self) -> usize {
        self.words
    }

    /// Pass-through count of the node for `prefix`, if present.
    pub fn prefix_count(&self, prefix: &str) -> Option<usize> {
        self.find(prefix.chars()).map(|n| self.nodes[n].count)
    }

    pub fn is_word(&self, word: &str) -> bool {
        self.find(word.chars())
            .is_some_and(|n| self.nodes[n].terminal)
    }

    /// Distinct characters following `prefix` in the vocabulary.
    pub fn children_of(&self, prefix: &str) -> Option<Vec<char>> {
        self.find(prefix.chars())
            .map(|n| self.nodes[n].children.keys().copied().collect())
    }

    /// Successor variety of the first `pos` characters of `word`.
    pub fn successor_variety(&self, word: &str, pos: usize) -> Result<usize, PreprocessError> {
        let len = word.chars().count();
        if pos > len {
            return Err(PreprocessError::PositionOutOfRange {
                word: word.to_string(),
                pos,
            });
        }
        self.find(word.chars().take(pos))
            .map(|n| self.nodes[n].children.len())
            .ok_or_else(|| PreprocessError::PrefixAbsent {
                prefix: word.chars().take(pos).collect(),
            })
    }

    /// Successor variety for every prefix length `0..=len(word)`. Prefixes that
    /// leave the trie have variety 0.
    pub fn variety_profile(&self, word: &str) -> Vec<usize> {
        let mut out = Vec::with_capacity(word.len() + 1);
        let mut node = Some(Self::ROOT);
        let mut chars = word.chars();
        loop {
            out.push(node.map_or(0, |n| self.nodes[n].children.len()));
            match chars.next() {
                Some(c) => node = node.and_then(|n| self.nodes[n].children.get(&c).copied()),
                None => break,
            }
        }
        out
    }

    fn vocabulary(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.words);
        let mut stack = vec![(Self::ROOT, String::new())];
        while let Some((node, prefix)) = stack.pop() {
            if self.nodes[node].terminal {
                out.push(prefix.clone());
            }
            for (&c, &child) in self.nodes[node].children.iter().rev() {
                let mut next = prefix.clone();
                next.push(c);
                stack.push((child, next));
            }
        }
        out
    }
}

pub const DEFAULT_MIN_STEM_LEN: usize = 2;

/// Peak-and-plateau stemmer. Cuts a word at the first position
/// `b >= min_stem_len` (and `b < len`) where the successor-variety profile
/// `v` has a peak, `v[b] > v[b-1] && v[b] >= v[b+1]`, or a plateau onset,
/// `v[b] == v[b-1] && v[b] > 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StemmerRepr", into = "StemmerRepr")]
pub struct Stemmer {
    trie: SuffixTrie,
    min_stem_len: usize,
}

#[derive(Serialize, Deserialize)]
struct StemmerRepr {
    min_stem_len: usize,
    vocabulary: Vec<String>,
}

impl TryFrom<StemmerRepr> for Stemmer {
    type Error = PreprocessError;

    fn try_from(r: StemmerRepr) -> Result<Self, Self::Error> {
        Ok(Stemmer {
            trie: SuffixTrie::build(r.vocabulary)?,
            min_stem_len: r.min_stem_len,
        })
    }
}

impl From<Stemmer> for StemmerRepr {
    fn from(s: Stemmer) -> Self {
        StemmerRepr {
            min_stem_len: s.min_stem_len,
            vocabulary: s.trie.vocabulary(),
        }
    }
}

impl Stemmer {
    pub fn new(trie: SuffixTrie, min_stem_len: usize) -> Self {
        Stemmer { trie, min_stem_len }
    }

    pub fn from_vocabulary<I, S>(vocabulary: I) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Ok(Stemmer::new(
            SuffixTrie::build(vocabulary)?,
            DEFAULT_MIN_STEM_LEN,
        ))
    }

    pub fn trie(&self) -> &SuffixTrie {
        &self.trie
    }

    pub fn min_stem_len(&self) -> usize {
        self.min_stem_len
    }

    pub fn stem<'a>(&self, word: &'a str) -> &'a str {
        cut_word(&self.trie, self.min_stem_len, word)
    }
}

fn cut_word<'a>(trie: &SuffixTrie, min_stem_len: usize, word: &'a str) -> &'a str {
    let len = word.chars().count();
    if len <= min_stem_len {
        return word;
    }
    let v = trie.variety_profile(word);
    let cut = (min_stem_len.max(1)..len).find(|&b| {
        let peak = v[b] > v[b - 1] && v[b] >= v[b + 1];
        let plateau = v[b] == v[b - 1] && v[b] > 1;
        peak || plateau
    });
    match cut {
        Some(b) => {
            let end = word.char_indices().nth(b).map_or(word.len(), |(i, _)| i);
            &word[..end]
        }
        None => word,
    }
}

/// `Stemmer::stem` over a bare trie with the default minimum stem length.
pub fn stem<'a>(trie: &SuffixTrie, word: &'a str) -> &'a str {
    cut_word(trie, DEFAULT_MIN_STEM_LEN, word)
}

/// Stop-word removal followed by stemming. Words in `protected` bypass both
/// steps.
pub fn normalize(
    tokens: &TokenSeq,
    stop: Option<&StopList>,
    stemmer: Option<&Stemmer>,
    protected: &HashSet<String>,
) -> TokenSeq {
    tokens
        .iter()
        .filter(|t| protected.contains(*t) || !stop.is_some_and(|s| s.contains(t)))
        .map(|t| match stemmer {
            Some(s) if !protected.contains(t) => s.stem(t),
            _ => t,
        })
        .collect()
}
