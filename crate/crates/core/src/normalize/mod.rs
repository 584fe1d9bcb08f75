//! Token normalization: stopword removal followed by stemming or
//! lemmatization.

mod lemma;
mod porter;

pub use lemma::{lemmatize, LemmaLexicon, LexiconError, PartOfSpeech};
pub use porter::porter_stem;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::par;
use crate::textprep::{is_punctuation_token, TokenCorpus};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    /// One word per line; blank lines and `#` comments ignored. Entries are
    /// lowercased and trimmed.
    pub fn from_lines(text: &str) -> Self {
        StopwordSet {
            words: text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }

    pub fn empty() -> Self {
        StopwordSet { words: HashSet::new() }
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopwordSet {
    fn default() -> Self {
        StopwordSet::from_lines(BUNDLED_STOPWORDS)
    }
}

pub fn remove_stopwords<S: AsRef<str>>(tokens: &[S], stops: &StopwordSet) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !stops.contains(t))
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NormalizeMode {
    Stem,
    #[default]
    Lemma,
    None,
}

impl FromStr for NormalizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stem" => Ok(NormalizeMode::Stem),
            "lemma" => Ok(NormalizeMode::Lemma),
            "none" => Ok(NormalizeMode::None),
            other => Err(format!("unknown normalization mode {other:?} (expected stem|lemma|none)")),
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizeMode::Stem => "stem",
            NormalizeMode::Lemma => "lemma",
            NormalizeMode::None => "none",
        })
    }
}

/// Applies `mode` to a single token; punctuation tokens are left alone.
pub fn normalize_token(token: &str, mode: NormalizeMode, lexicon: &LemmaLexicon) -> String {
    if is_punctuation_token(token) {
        return token.to_string();
    }
    match mode {
        NormalizeMode::Stem => porter_stem(token),
        NormalizeMode::Lemma => lemmatize(token, PartOfSpeech::Noun, lexicon),
        NormalizeMode::None => token.to_string(),
    }
}

/// Per sentence: drop stopwords, then normalize each surviving token.
/// Sentences left empty are dropped.
pub fn normalize_corpus(
    corpus: &TokenCorpus,
    mode: NormalizeMode,
    stops: &StopwordSet,
    lexicon: &LemmaLexicon,
) -> TokenCorpus {
    let sentences = par::filter_map(corpus.sentences(), |sentence| {
        let kept: Vec<String> = sentence
            .iter()
            .filter(|t| !stops.contains(t))
            .map(|t| normalize_token(t, mode, lexicon))
            .filter(|t| !t.is_empty())
            .collect();
        (!kept.is_empty()).then_some(kept)
    });
    TokenCorpus::from_vec_unchecked(sentences)
}
