//! Coarse syntactic tagging used for the linguistic activity signal.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Noun,
    Verb,
    Adj,
    Func,
    Other,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::Noun, Tag::Verb, Tag::Adj, Tag::Func, Tag::Other];
}

pub trait Tagger: Send + Sync {
    fn tag(&self, token: &str) -> Tag;

    /// Tag histogram of an utterance, normalised; uniform when empty.
    fn distribution(&self, tokens: &[String]) -> Vec<f64> {
        let mut hist = vec![0.0; Tag::ALL.len()];
        if tokens.is_empty() {
            hist.iter_mut().for_each(|h| *h = 1.0 / Tag::ALL.len() as f64);
            return hist;
        }
        for t in tokens {
            hist[self.tag(t) as usize] += 1.0;
        }
        let n = tokens.len() as f64;
        hist.iter_mut().for_each(|h| *h /= n);
        hist
    }
}

const FUNCTION_WORDS: &[&str] = &[
    "a", "about", "after", "all", "am", "an", "and", "any", "are", "as", "at", "be", "been", "before", "being", "both",
    "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "here", "him",
    "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me", "my", "no", "not", "of", "off", "on", "or",
    "our", "out", "over", "she", "should", "so", "some", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "through", "to", "too", "under", "up", "us", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "why", "will", "with", "would", "you", "your",
];

const VERB_SUFFIXES: &[&str] = &["ing", "ed", "ize", "ise", "ate", "ify", "en"];
const ADJ_SUFFIXES: &[&str] = &["ly", "ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish", "est"];
const NOUN_SUFFIXES: &[&str] = &["tion", "sion", "ment", "ness", "ity", "ship", "ism", "ist", "er", "or"];

/// Function-word list plus suffix heuristics. Unknown alphabetic words are
/// tagged as nouns; anything containing a digit is `Other`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoarseTagger;

impl Tagger for CoarseTagger {
    fn tag(&self, token: &str) -> Tag {
        if token.is_empty() || token.chars().any(|c| c.is_numeric()) {
            return Tag::Other;
        }
        if FUNCTION_WORDS.binary_search(&token).is_ok() {
            return Tag::Func;
        }
        let long_enough = |s: &&str| token.len() > s.len() + 2 && token.ends_with(*s);
        if NOUN_SUFFIXES.iter().any(long_enough) {
            Tag::Noun
        } else if VERB_SUFFIXES.iter().any(long_enough) {
            Tag::Verb
        } else if ADJ_SUFFIXES.iter().any(long_enough) {
            Tag::Adj
        } else {
            Tag::Noun
        }
    }
}
