//! Cleaning, sentence splitting and word tokenization.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use crate::ingest::SectionText;
use crate::par;

const BUNDLED_ABBREVIATIONS: &str = include_str!("../data/abbreviations.txt");

const APOSTROPHES: [char; 2] = ['\'', '\u{2019}'];
const TERMINATORS: [char; 3] = ['.', '!', '?'];
/// Closing marks allowed between a terminator and the following space.
const CLOSERS: [char; 5] = ['"', ')', ']', '\u{201D}', '}'];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ApostrophePolicy {
    /// "translator's" -> "translators"
    #[default]
    Delete,
    /// "translator's" -> "translator s"
    Space,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CleanOptions {
    pub apostrophe: ApostrophePolicy,
    /// Also delete semicolons.
    pub strip_semicolons: bool,
}

/// Lowercase, single-spaced text with commas, apostrophes and tabs removed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CleanCorpus {
    text: String,
}

impl CleanCorpus {
    /// Re-cleans previously cleaned text (e.g. read back from disk).
    /// Cleaning is idempotent, so this is the identity on clean input.
    pub fn from_text(text: &str, options: CleanOptions) -> Self {
        CleanCorpus { text: clean_str(text, options) }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn clean_text(sections: &[SectionText], options: CleanOptions) -> CleanCorpus {
    let joined = sections.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
    CleanCorpus { text: clean_str(&joined, options) }
}

fn clean_str(input: &str, options: CleanOptions) -> String {
    let mut out = String::with_capacity(input.len());
    let mut pending_space = false;
    let push = |out: &mut String, c: char, pending: &mut bool| {
        if *pending && !out.is_empty() {
            out.push(' ');
        }
        *pending = false;
        out.push(c);
    };
    for c in input.chars().flat_map(char::to_lowercase) {
        match c {
            ',' => {}
            ';' if options.strip_semicolons => {}
            c if APOSTROPHES.contains(&c) => {
                if options.apostrophe == ApostrophePolicy::Space {
                    pending_space = true;
                }
            }
            c if c.is_whitespace() => pending_space = true,
            c => push(&mut out, c, &mut pending_space),
        }
    }
    out
}

/// Words after which a '.' does not end a sentence.
#[derive(Debug, Clone)]
pub struct Abbreviations(HashSet<String>);

impl Abbreviations {
    /// One entry per line; blank lines and `#` comments ignored. Entries are
    /// stored lowercase without a trailing period.
    pub fn from_lines(text: &str) -> Self {
        Abbreviations(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.trim_end_matches('.').to_lowercase())
                .collect(),
        )
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for Abbreviations {
    fn default() -> Self {
        Abbreviations::from_lines(BUNDLED_ABBREVIATIONS)
    }
}

fn ends_sentence(chunk: &str, abbreviations: &Abbreviations) -> bool {
    let body = chunk.trim_end_matches(CLOSERS);
    let Some(last) = body.chars().last() else {
        return false;
    };
    if !TERMINATORS.contains(&last) {
        return false;
    }
    if last != '.' {
        return true;
    }
    let word = body
        .trim_end_matches(TERMINATORS)
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    let mut chars = word.chars();
    let single_letter = matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic());
    !(single_letter || abbreviations.contains(word))
}

/// Splits at '.', '!' or '?' followed by a space or the end of text. The
/// terminator stays with its sentence.
pub fn split_sentences(corpus: &CleanCorpus, abbreviations: &Abbreviations) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start: Option<usize> = None;
    let text = corpus.as_str();
    let mut offset = 0;
    for chunk in text.split(' ') {
        let chunk_start = offset;
        offset += chunk.len() + 1;
        if chunk.is_empty() {
            continue;
        }
        let begin = *start.get_or_insert(chunk_start);
        if ends_sentence(chunk, abbreviations) {
            sentences.push(text[begin..chunk_start + chunk.len()].to_string());
            start = None;
        }
    }
    if let Some(begin) = start {
        let tail = text[begin..].trim_end();
        if !tail.is_empty() {
            sentences.push(tail.to_string());
        }
    }
    sentences
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Whitespace split, with leading and trailing punctuation peeled off each
/// chunk as single-character tokens.
pub fn tokenize_words(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in sentence.split_whitespace() {
        let core_start = chunk.find(|c: char| !is_punct(c));
        let Some(core_start) = core_start else {
            tokens.extend(chunk.chars().map(String::from));
            continue;
        };
        let core_end = chunk
            .char_indices()
            .rev()
            .find(|&(_, c)| !is_punct(c))
            .map(|(i, c)| i + c.len_utf8())
            .unwrap_or(chunk.len());
        tokens.extend(chunk[..core_start].chars().map(String::from));
        tokens.push(chunk[core_start..core_end].to_string());
        tokens.extend(chunk[core_end..].chars().map(String::from));
    }
    tokens
}

/// True when every character is punctuation (not a letter or digit).
pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punct)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TokenCorpusError {
    #[error("sentence {sentence}: empty sentence")]
    EmptySentence { sentence: usize },
    #[error("sentence {sentence}: invalid token {token:?}")]
    InvalidToken { sentence: usize, token: String },
}

/// Ordered sentences of non-empty, whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenCorpus {
    sentences: Vec<Vec<String>>,
}

impl TokenCorpus {
    pub fn new(sentences: Vec<Vec<String>>) -> Result<Self, TokenCorpusError> {
        for (i, sentence) in sentences.iter().enumerate() {
            if sentence.is_empty() {
                return Err(TokenCorpusError::EmptySentence { sentence: i });
            }
            if let Some(bad) = sentence.iter().find(|t| t.is_empty() || t.contains(char::is_whitespace)) {
                return Err(TokenCorpusError::InvalidToken { sentence: i, token: bad.clone() });
            }
        }
        Ok(TokenCorpus { sentences })
    }

    /// Builds a corpus from `&str` slices; mainly for tests and examples.
    pub fn from_strs<S: AsRef<str>>(sentences: &[&[S]]) -> Result<Self, TokenCorpusError> {
        TokenCorpus::new(
            sentences
                .iter()
                .map(|s| s.iter().map(|t| t.as_ref().to_string()).collect())
                .collect(),
        )
    }

    /// Splits and tokenizes a cleaned corpus.
    pub fn from_clean(corpus: &CleanCorpus, abbreviations: &Abbreviations) -> Self {
        let sentences = split_sentences(corpus, abbreviations);
        let sentences = par::filter_map(&sentences, |s| {
            let tokens = tokenize_words(s);
            (!tokens.is_empty()).then_some(tokens)
        });
        TokenCorpus { sentences }
    }

    pub(crate) fn from_vec_unchecked(sentences: Vec<Vec<String>>) -> Self {
        debug_assert!(TokenCorpus::new(sentences.clone()).is_ok());
        TokenCorpus { sentences }
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<Vec<String>> {
        self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Cache format: one sentence per line, tokens joined by single spaces.
    pub fn write_cache<W: Write>(&self, mut out: W) -> io::Result<()> {
        for sentence in &self.sentences {
            writeln!(out, "{}", sentence.join(" "))?;
        }
        out.flush()
    }

    /// Reads the cache format; blank lines are skipped.
    pub fn read_cache<R: BufRead>(input: R) -> io::Result<Self> {
        let mut sentences = Vec::new();
        for line in input.lines() {
            let line = line?;
            let tokens: Vec<String> = line.split_whitespace().map(String::from).collect();
            if !tokens.is_empty() {
                sentences.push(tokens);
            }
        }
        Ok(TokenCorpus { sentences })
    }
}

/// Tokens per sentence, in order.
pub fn sentence_lengths(corpus: &TokenCorpus) -> Vec<usize> {
    corpus.sentences.iter().map(Vec::len).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clean(s: &str) -> String {
        clean_text(&[SectionText::new(s, "x")], CleanOptions::default()).into_string()
    }

    fn split(s: &str) -> Vec<String> {
        split_sentences(&CleanCorpus::from_text(s, CleanOptions::default()), &Abbreviations::default())
    }

    #[test]
    fn cleaning_rules() {
        assert_eq!(clean("Translator's Preface"), "translators preface");
        assert_eq!(clean("A, B; C."), "a b; c.");
        assert_eq!(clean("Vaka-Vadha Parva"), "vaka-vadha parva");
        assert_eq!(clean("\n\n Adi Parva\n\n\n Section 1\u{c}\tSection 2 "), "adi parva section 1 section 2");
        assert_eq!(clean("author\u{2019}s ideas"), "authors ideas");
    }

    #[test]
    fn cleaning_options() {
        let opts = CleanOptions { apostrophe: ApostrophePolicy::Space, strip_semicolons: true };
        let out = clean_text(&[SectionText::new("his author's ideas; so.", "x")], opts);
        assert_eq!(out.as_str(), "his author s ideas so.");
    }

    #[test]
    fn sections_joined_with_space() {
        let sections = [SectionText::new("end.", "a"), SectionText::new("Begin", "b")];
        assert_eq!(clean_text(&sections, CleanOptions::default()).as_str(), "end. begin");
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(split("he won. she lost."), ["he won.", "she lost."]);
        assert!(split("").is_empty());
        assert_eq!(split("is it? yes! fine"), ["is it?", "yes!", "fine"]);
        assert_eq!(split("mr. bhima came. he left."), ["mr. bhima came.", "he left."]);
        assert_eq!(split("the letter a. is first"), ["the letter a. is first"]);
        assert_eq!(split("he said \"go.\" then"), ["he said \"go.\"", "then"]);
        assert_eq!(split("3.14 is pi. ok"), ["3.14 is pi.", "ok"]);
        assert_eq!(split("what?! really"), ["what?!", "really"]);
    }

    #[test]
    fn tokenization() {
        assert_eq!(
            tokenize_words("exile of the defeated yudhishtira."),
            ["exile", "of", "the", "defeated", "yudhishtira", "."]
        );
        assert_eq!(tokenize_words("vaka-vadha parva"), ["vaka-vadha", "parva"]);
        assert_eq!(tokenize_words("fortunate on thee !"), ["fortunate", "on", "thee", "!"]);
        assert_eq!(tokenize_words("game; (and) \"so\"..."), ["game", ";", "(", "and", ")", "\"", "so", "\"", ".", ".", "."]);
        assert_eq!(tokenize_words("-- section 1"), ["-", "-", "section", "1"]);
    }

    #[test]
    fn lengths() {
        let corpus = TokenCorpus::from_strs(&[&["a", "b"], &["c"]]).unwrap();
        assert_eq!(sentence_lengths(&corpus), [2, 1]);
        assert!(sentence_lengths(&TokenCorpus::default()).is_empty());
    }

    #[test]
    fn token_corpus_validation() {
        assert_eq!(
            TokenCorpus::from_strs::<&str>(&[&[]]).unwrap_err(),
            TokenCorpusError::EmptySentence { sentence: 0 }
        );
        assert!(matches!(
            TokenCorpus::from_strs(&[&["a b"]]),
            Err(TokenCorpusError::InvalidToken { .. })
        ));
        assert!(TokenCorpus::from_strs(&[&[""]]).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let corpus = TokenCorpus::from_strs(&[&["one", "day", "."], &["thee", "!"]]).unwrap();
        let mut buf = Vec::new();
        corpus.write_cache(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "one day .\nthee !\n");
        assert_eq!(TokenCorpus::read_cache(&buf[..]).unwrap(), corpus);
    }

    #[test]
    fn bundled_abbreviations() {
        let abbr = Abbreviations::default();
        assert!(abbr.contains("mr") && abbr.contains("i.e") && abbr.contains("viz"));
        assert!(!abbr.contains("no"));
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "[A-Za-z0-9 ,.;:!?'\u{2019}\t\n\u{c}-]{0,80}") {
            let once = clean(&s);
            prop_assert_eq!(clean(&once), once.clone());
            let forbidden = [',', '\'', '\u{2019}', '\t', '\n'];
            prop_assert!(!once.contains(forbidden), "{:?}", once);
        }

        #[test]
        fn split_is_lossless(s in "[a-z .!?\"-]{0,120}") {
            let corpus = CleanCorpus::from_text(&s, CleanOptions::default());
            let sentences = split_sentences(&corpus, &Abbreviations::default());
            prop_assert!(sentences.iter().all(|s| !s.is_empty()));
            let rejoined = CleanCorpus::from_text(&sentences.join(" "), CleanOptions::default());
            prop_assert_eq!(rejoined, corpus);
        }

        #[test]
        fn tokens_are_substrings(s in "[a-z0-9 .!?;:()\"-]{1,80}") {
            for token in tokenize_words(&s) {
                prop_assert!(!token.is_empty());
                prop_assert!(!token.contains(char::is_whitespace));
                prop_assert!(s.contains(&token));
            }
        }
    }
}
