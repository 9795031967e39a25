//! Seeded generator for labeled toy corpora: each class draws most of its
//! words from its own vocabulary and the rest from a shared pool.

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Label, Post};
use crate::features::RuleLexicons;
use crate::preprocess::StopList;

pub const NEGATORY: [&str; 2] = ["не", "нема"];
pub const EMPHASIZERS: [&str; 2] = ["многу", "најмногу"];
pub const STOP_WORDS: [&str; 6] = ["и", "на", "во", "да", "се", "е"];
const TOPICS: [&str; 5] = ["храна", "мода", "економија", "спорт", "политика"];
const SYLLABLES: [&str; 24] = [
    "ба", "ве", "ги", "до", "жу", "зо", "ка", "ле", "ми", "но", "па", "ре", "си", "ту", "фа", "хо",
    "ца", "че", "шу", "ља", "ње", "ѓо", "ќи", "џа",
];

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub posts_per_class: usize,
    pub class_vocab: usize,
    pub shared_vocab: usize,
    /// Probability that a token comes from the shared pool.
    pub shared_fraction: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability of inserting a rule word before a class word.
    pub rule_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            posts_per_class: 100,
            class_vocab: 40,
            shared_vocab: 30,
            shared_fraction: 0.2,
            min_len: 8,
            max_len: 20,
            rule_rate: 0.05,
            seed: 2014,
        }
    }
}

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=4);
        let word: String = (0..syllables)
            .map(|_| *SYLLABLES.choose(rng).expect("non-empty"))
            .collect();
        if taken.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

pub fn generate(spec: &SyntheticSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut taken: BTreeSet<String> = NEGATORY
        .iter()
        .chain(&EMPHASIZERS)
        .chain(&STOP_WORDS)
        .map(|w| w.to_string())
        .collect();
    let mut shared: Vec<String> = STOP_WORDS.iter().map(|w| w.to_string()).collect();
    shared.extend(pseudo_words(
        &mut rng,
        spec.shared_vocab.saturating_sub(STOP_WORDS.len()),
        &mut taken,
    ));
    let vocabularies: Vec<Vec<String>> = Label::CLASSES
        .iter()
        .map(|_| pseudo_words(&mut rng, spec.class_vocab, &mut taken))
        .collect();
    let rule_words: Vec<&str> = NEGATORY.iter().chain(&EMPHASIZERS).copied().collect();
    let start = DateTime::<Utc>::from_timestamp(1_230_768_000, 0).expect("valid"); // 2009-01-01
    let mut posts = Vec::with_capacity(spec.posts_per_class * 3);
    for i in 0..spec.posts_per_class {
        for (class, vocab) in Label::CLASSES.iter().zip(&vocabularies) {
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let mut words: Vec<&str> = Vec::with_capacity(len + 4);
            for _ in 0..len {
                if rng.random_bool(spec.shared_fraction) {
                    words.push(shared.choose(&mut rng).expect("shared pool"));
                } else {
                    if rng.random_bool(spec.rule_rate) {
                        words.push(rule_words.choose(&mut rng).expect("rule words"));
                    }
                    words.push(vocab.choose(&mut rng).expect("class vocabulary"));
                }
            }
            let mut text = words.join(" ");
            if let Some(first) = text.chars().next() {
                let upper: String = first.to_uppercase().collect();
                text.replace_range(..first.len_utf8(), &upper);
            }
            text.push('.');
            let mut post = Post::new(format!("{}-{i:04}", class.as_str()), text, *class);
            post.topic = Some(TOPICS.choose(&mut rng).expect("topics").to_string());
            let offset = rng.random_range(0..4 * 365 * 86_400);
            post.timestamp = Some(start + chrono::Duration::seconds(offset));
            posts.push(post);
        }
    }
    Corpus::new(posts).expect("generated ids are unique")
}

pub fn rule_lexicons() -> RuleLexicons {
    RuleLexicons::new(NEGATORY, EMPHASIZERS).expect("disjoint")
}

pub fn stop_list() -> StopList {
    StopList::new(STOP_WORDS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_deterministic() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec);
        assert_eq!(a.len(), 300);
        for class in Label::CLASSES {
            assert_eq!(a.labeled().filter(|p| p.label == class).count(), 100);
        }
        assert_eq!(a, generate(&spec));
        assert_ne!(a, generate(&SyntheticSpec { seed: 1, ..spec }));
    }
}
