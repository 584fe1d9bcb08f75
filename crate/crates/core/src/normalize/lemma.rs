//! Dictionary-free lemmatization: an exception table plus suffix
//! detachment rules, in the style of WordNet's morphy.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

const BUNDLED_EXCEPTIONS: &str = include_str!("../../data/lemma_exceptions.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PartOfSpeech {
    #[default]
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl PartOfSpeech {
    pub const ALL: [PartOfSpeech; 4] =
        [PartOfSpeech::Noun, PartOfSpeech::Verb, PartOfSpeech::Adjective, PartOfSpeech::Adverb];

    fn slot(self) -> usize {
        self as usize
    }
}

impl FromStr for PartOfSpeech {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "noun" | "n" => Ok(PartOfSpeech::Noun),
            "verb" | "v" => Ok(PartOfSpeech::Verb),
            "adj" | "a" | "adjective" => Ok(PartOfSpeech::Adjective),
            "adv" | "r" | "adverb" => Ok(PartOfSpeech::Adverb),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

impl fmt::Display for PartOfSpeech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartOfSpeech::Noun => "noun",
            PartOfSpeech::Verb => "verb",
            PartOfSpeech::Adjective => "adj",
            PartOfSpeech::Adverb => "adv",
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("line {line}: {reason}")]
pub struct LexiconError {
    pub line: usize,
    pub reason: String,
}

/// Surface forms that are never treated as inflected nouns.
const NOUN_GUARDS: [&str; 3] = ["ss", "us", "is"];

#[derive(Debug, Clone)]
pub struct LemmaLexicon {
    exceptions: HashMap<(PartOfSpeech, String), String>,
    rules: [Vec<(String, String)>; 4],
}

fn default_rules(pos: PartOfSpeech) -> Vec<(&'static str, &'static str)> {
    match pos {
        PartOfSpeech::Noun => vec![
            ("ses", "s"),
            ("xes", "x"),
            ("zes", "z"),
            ("ches", "ch"),
            ("shes", "sh"),
            ("ies", "y"),
            ("s", ""),
        ],
        PartOfSpeech::Verb => vec![
            ("ies", "y"),
            ("ied", "y"),
            ("ing", ""),
            ("es", ""),
            ("ed", ""),
            ("s", ""),
        ],
        PartOfSpeech::Adjective => vec![("est", ""), ("er", "")],
        PartOfSpeech::Adverb => vec![],
    }
}

impl LemmaLexicon {
    /// Default detachment rules and no exceptions.
    pub fn empty() -> Self {
        let mut lexicon = LemmaLexicon { exceptions: HashMap::new(), rules: Default::default() };
        for pos in PartOfSpeech::ALL {
            lexicon.set_rules(pos, default_rules(pos));
        }
        lexicon
    }

    /// Default rules plus exceptions parsed from `surface<TAB>lemma<TAB>pos`
    /// lines. Blank lines and `#` comments are ignored.
    pub fn from_exceptions(text: &str) -> Result<Self, LexiconError> {
        let mut lexicon = LemmaLexicon::empty();
        lexicon.load_exceptions(text)?;
        Ok(lexicon)
    }

    pub fn load_exceptions(&mut self, text: &str) -> Result<(), LexiconError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [surface, lemma, pos] = fields[..] else {
                return Err(LexiconError { line: i + 1, reason: "expected 3 tab-separated fields".into() });
            };
            let pos = pos
                .trim()
                .parse::<PartOfSpeech>()
                .map_err(|reason| LexiconError { line: i + 1, reason })?;
            if surface.is_empty() || lemma.is_empty() {
                return Err(LexiconError { line: i + 1, reason: "empty surface or lemma".into() });
            }
            self.exceptions.insert((pos, surface.to_lowercase()), lemma.to_lowercase());
        }
        Ok(())
    }

    /// Replaces the detachment rules for `pos`. They are kept ordered
    /// longest-suffix-first; equal lengths keep the given order.
    pub fn set_rules<S: Into<String>>(&mut self, pos: PartOfSpeech, rules: Vec<(S, S)>) {
        let mut rules: Vec<(String, String)> =
            rules.into_iter().map(|(s, r)| (s.into(), r.into())).collect();
        rules.sort_by_key(|(suffix, _)| std::cmp::Reverse(suffix.chars().count()));
        self.rules[pos.slot()] = rules;
    }

    pub fn rules(&self, pos: PartOfSpeech) -> &[(String, String)] {
        &self.rules[pos.slot()]
    }

    pub fn exception(&self, word: &str, pos: PartOfSpeech) -> Option<&str> {
        self.exceptions.get(&(pos, word.to_string())).map(String::as_str)
    }

    pub fn exception_count(&self) -> usize {
        self.exceptions.len()
    }
}

impl Default for LemmaLexicon {
    /// Default rules plus the bundled exception table.
    fn default() -> Self {
        LemmaLexicon::from_exceptions(BUNDLED_EXCEPTIONS).expect("bundled lemma exceptions are valid")
    }
}

pub fn lemmatize(word: &str, pos: PartOfSpeech, lexicon: &LemmaLexicon) -> String {
    if let Some(lemma) = lexicon.exception(word, pos) {
        return lemma.to_string();
    }
    if word.chars().count() <= 2 || !word.chars().any(char::is_alphabetic) {
        return word.to_string();
    }
    if pos == PartOfSpeech::Noun && NOUN_GUARDS.iter().any(|g| word.ends_with(g)) {
        return word.to_string();
    }
    for (suffix, replacement) in lexicon.rules(pos) {
        if let Some(stem) = word.strip_suffix(suffix.as_str()) {
            if !stem.is_empty() {
                return format!("{stem}{replacement}");
            }
        }
    }
    word.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noun(word: &str) -> String {
        lemmatize(word, PartOfSpeech::Noun, &LemmaLexicon::default())
    }

    #[test]
    fn epic_examples() {
        assert_eq!(noun("brothers"), "brother");
        assert_eq!(noun("defeated"), "defeated");
        assert_eq!(noun("endeavours"), "endeavour");
        assert_eq!(noun("vows"), "vow");
        assert_eq!(noun("told"), "told");
    }

    #[test]
    fn noun_rules() {
        assert_eq!(noun("classes"), "class");
        assert_eq!(noun("boxes"), "box");
        assert_eq!(noun("churches"), "church");
        assert_eq!(noun("wishes"), "wish");
        assert_eq!(noun("ladies"), "lady");
        assert_eq!(noun("waltzes"), "waltz");
        assert_eq!(noun("glass"), "glass");
        assert_eq!(noun("virtuous"), "virtuous");
        assert_eq!(noun("dharmas"), "dharma");
        assert_eq!(noun("as"), "as");
        assert_eq!(noun("!"), "!");
    }

    #[test]
    fn exceptions_win() {
        assert_eq!(noun("women"), "woman");
        assert_eq!(noun("horses"), "horse");
        assert_eq!(noun("wives"), "wife");
        let lex = LemmaLexicon::default();
        assert_eq!(lemmatize("slew", PartOfSpeech::Verb, &lex), "slay");
        assert_eq!(lemmatize("slew", PartOfSpeech::Noun, &lex), "slew");
        assert_eq!(lemmatize("fighting", PartOfSpeech::Verb, &lex), "fight");
        assert_eq!(lemmatize("mightiest", PartOfSpeech::Adjective, &lex), "mighti");
        assert_eq!(lemmatize("quickly", PartOfSpeech::Adverb, &lex), "quickly");
    }

    #[test]
    fn rules_sorted_longest_first() {
        let mut lex = LemmaLexicon::empty();
        lex.set_rules(PartOfSpeech::Noun, vec![("s", ""), ("ies", "y"), ("es", "e")]);
        let suffixes: Vec<_> = lex.rules(PartOfSpeech::Noun).iter().map(|(s, _)| s.as_str()).collect();
        assert_eq!(suffixes, ["ies", "es", "s"]);
        for pos in PartOfSpeech::ALL {
            let lens: Vec<_> = LemmaLexicon::default().rules(pos).iter().map(|(s, _)| s.len()).collect();
            assert!(lens.windows(2).all(|w| w[0] >= w[1]), "{pos}");
        }
    }

    #[test]
    fn exception_file_parsing() {
        let lex = LemmaLexicon::from_exceptions("# c\ngeese\tgoose\tnoun\n\nran\trun\tv\n").unwrap();
        assert_eq!(lex.exception_count(), 2);
        assert_eq!(lex.exception("ran", PartOfSpeech::Verb), Some("run"));
        let err = LemmaLexicon::from_exceptions("a\tb\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = LemmaLexicon::from_exceptions("x\ty\tz\n").unwrap_err();
        assert!(err.reason.contains("part of speech"));
        assert!(LemmaLexicon::default().exception_count() >= 50);
    }
}
