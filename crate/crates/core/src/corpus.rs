//! Vocabulary construction and corpus statistics.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use indexmap::IndexMap;

use crate::par;
use crate::textprep::{is_punctuation_token, TokenCorpus};

/// Sentences per work unit when counting in parallel.
const COUNT_CHUNK: usize = 2048;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("vocabulary file line {line}: {reason}")]
    VocabFormat { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Which pure-punctuation tokens enter the vocabulary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PunctPolicy {
    #[default]
    DropAll,
    /// Drop '.' only; other punctuation (e.g. '!') is indexed.
    PaperCompat,
    KeepAll,
}

impl FromStr for PunctPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop_all" | "drop-all" => Ok(PunctPolicy::DropAll),
            "paper_compat" | "paper-compat" => Ok(PunctPolicy::PaperCompat),
            "keep_all" | "keep-all" => Ok(PunctPolicy::KeepAll),
            other => Err(format!("unknown punctuation policy {other:?}")),
        }
    }
}

impl fmt::Display for PunctPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PunctPolicy::DropAll => "drop_all",
            PunctPolicy::PaperCompat => "paper_compat",
            PunctPolicy::KeepAll => "keep_all",
        })
    }
}

impl PunctPolicy {
    fn admits(self, token: &str) -> bool {
        match self {
            PunctPolicy::KeepAll => true,
            PunctPolicy::DropAll => !is_punctuation_token(token),
            PunctPolicy::PaperCompat => token != ".",
        }
    }
}

/// Dense word <-> index map with occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from `(word, count)` entries in index order. Duplicate words are
    /// rejected.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self, CorpusError> {
        let mut vocab = Vocabulary::default();
        for (line, (word, count)) in entries.into_iter().enumerate() {
            if vocab.index.insert(word.clone(), vocab.words.len()).is_some() {
                return Err(CorpusError::VocabFormat { line: line + 1, reason: format!("duplicate word {word:?}") });
            }
            vocab.words.push(word);
            vocab.counts.push(count);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn count(&self, index: usize) -> Option<u64> {
        self.counts.get(index).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(index, word, count)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &str, u64)> + '_ {
        self.words.iter().zip(&self.counts).enumerate().map(|(i, (w, &c))| (i, w.as_str(), c))
    }

    /// `word<TAB>count<TAB>index` per line, index-sorted.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, word, count) in self.iter() {
            writeln!(out, "{word}\t{count}\t{i}")?;
        }
        out.flush()
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, CorpusError> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| CorpusError::VocabFormat { line: lineno, reason: reason.to_string() };
            let fields: Vec<&str> = line.split('\t').collect();
            let [word, count, index] = fields[..] else {
                return Err(bad("expected word<TAB>count<TAB>index"));
            };
            let count: u64 = count.parse().map_err(|_| bad("count is not an integer"))?;
            let index: usize = index.parse().map_err(|_| bad("index is not an integer"))?;
            if index != entries.len() {
                return Err(bad("indices must be dense and sorted"));
            }
            if word.is_empty() || word.contains(char::is_whitespace) {
                return Err(bad("word is empty or contains whitespace"));
            }
            entries.push((word.to_string(), count));
        }
        Vocabulary::from_entries(entries)
    }
}

/// Token counts in first-occurrence order.
fn count_tokens(corpus: &TokenCorpus) -> IndexMap<String, u64> {
    par::fold_chunks(
        corpus.sentences(),
        COUNT_CHUNK,
        |_, chunk| {
            let mut counts: IndexMap<String, u64> = IndexMap::new();
            for token in chunk.iter().flatten() {
                match counts.get_mut(token.as_str()) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(token.clone(), 1);
                    }
                }
            }
            counts
        },
        |mut left, right| {
            for (word, count) in right {
                *left.entry(word).or_insert(0) += count;
            }
            left
        },
    )
    .unwrap_or_default()
}

pub fn build_vocabulary(
    corpus: &TokenCorpus,
    min_count: u64,
    punct: PunctPolicy,
) -> Result<Vocabulary, CorpusError> {
    let entries: Vec<(String, u64)> = count_tokens(corpus)
        .into_iter()
        .filter(|(word, count)| *count >= min_count && punct.admits(word))
        .collect();
    if entries.is_empty() {
        return Err(CorpusError::EmptyVocabulary);
    }
    Vocabulary::from_entries(entries)
}

/// At most `k` most frequent tokens, ties broken by first occurrence.
pub fn top_frequencies(corpus: &TokenCorpus, k: usize) -> Vec<(String, u64)> {
    let mut counts: Vec<(String, u64)> = count_tokens(corpus).into_iter().collect();
    counts.sort_by_key(|e| std::cmp::Reverse(e.1));
    counts.truncate(k);
    counts
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum CooccurrenceMode {
    /// Each unordered pair counted at most once per sentence.
    #[default]
    Presence,
    /// Every pair of positions holding two distinct words counts.
    Multiplicity,
}

/// Unordered word pairs `(a, b)` with `a < b` that share a sentence, ranked
/// by count descending and then lexicographically.
pub fn cooccurrence_pairs(
    corpus: &TokenCorpus,
    k: usize,
    mode: CooccurrenceMode,
) -> Vec<((String, String), u64)> {
    let words: Vec<String> = count_tokens(corpus).into_keys().collect();
    let mut sorted: Vec<usize> = (0..words.len()).collect();
    sorted.sort_by(|&a, &b| words[a].cmp(&words[b]));
    // rank[i] = lexicographic position of word i
    let mut rank = vec![0u32; words.len()];
    for (r, &i) in sorted.iter().enumerate() {
        rank[i] = r as u32;
    }
    let rank_of: HashMap<&str, u32> = words.iter().enumerate().map(|(i, w)| (w.as_str(), rank[i])).collect();

    let counts = par::fold_chunks(
        corpus.sentences(),
        COUNT_CHUNK,
        |_, chunk| {
            let mut pairs: HashMap<(u32, u32), u64> = HashMap::new();
            let mut ids: Vec<u32> = Vec::new();
            for sentence in chunk {
                ids.clear();
                ids.extend(sentence.iter().map(|t| rank_of[t.as_str()]));
                ids.sort_unstable();
                let mut distinct: Vec<(u32, u64)> = Vec::new();
                for &id in &ids {
                    match distinct.last_mut() {
                        Some((last, n)) if *last == id => *n += 1,
                        _ => distinct.push((id, 1)),
                    }
                }
                for (i, &(a, na)) in distinct.iter().enumerate() {
                    for &(b, nb) in &distinct[i + 1..] {
                        let weight = match mode {
                            CooccurrenceMode::Presence => 1,
                            CooccurrenceMode::Multiplicity => na * nb,
                        };
                        *pairs.entry((a, b)).or_insert(0) += weight;
                    }
                }
            }
            pairs
        },
        |mut left, right| {
            for (pair, n) in right {
                *left.entry(pair).or_insert(0) += n;
            }
            left
        },
    )
    .unwrap_or_default();

    let mut ranked: Vec<((u32, u32), u64)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
        .into_iter()
        .map(|((a, b), n)| ((words[sorted[a as usize]].clone(), words[sorted[b as usize]].clone()), n))
        .collect()
}

/// Descriptive statistics of sentence lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthDistribution {
    pub bin_width: usize,
    /// `(bin lower bound, count)` for non-empty bins, ascending.
    pub histogram: Vec<(usize, usize)>,
    pub sentences: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<usize>,
    /// Index of the first longest sentence.
    pub argmax_sentence: Option<usize>,
    /// Population skewness (third standardized moment); absent when the
    /// variance is zero.
    pub skewness: Option<f64>,
}

impl LengthDistribution {
    /// Lower bound of the most populated bin (first on ties).
    pub fn modal_bin(&self) -> Option<usize> {
        self.histogram
            .iter()
            .fold(None, |best: Option<(usize, usize)>, &(lo, n)| match best {
                Some((_, bn)) if bn >= n => best,
                _ => Some((lo, n)),
            })
            .map(|(lo, _)| lo)
    }

    /// Fraction of sentences whose length lies in `lo..=hi`, computed from
    /// whole bins that fall inside the range.
    pub fn mass_between(&self, lo: usize, hi: usize) -> f64 {
        if self.sentences == 0 {
            return 0.0;
        }
        let inside: usize = self
            .histogram
            .iter()
            .filter(|&&(b, _)| b >= lo && b + self.bin_width - 1 <= hi)
            .map(|&(_, n)| n)
            .sum();
        inside as f64 / self.sentences as f64
    }

    /// CSV with header `bin_lower,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_lower,count")?;
        for (lo, n) in &self.histogram {
            writeln!(out, "{lo},{n}")?;
        }
        out.flush()
    }
}

/// # Panics
/// If `bin_width` is zero.
pub fn length_distribution(lengths: &[usize], bin_width: usize) -> LengthDistribution {
    assert!(bin_width >= 1, "bin_width must be at least 1");
    let mut bins: std::collections::BTreeMap<usize, usize> = Default::default();
    for &len in lengths {
        *bins.entry(len / bin_width * bin_width).or_insert(0) += 1;
    }
    let n = lengths.len();
    let (mean, median, max, argmax, skewness) = if n == 0 {
        (None, None, None, None, None)
    } else {
        let mean = lengths.iter().map(|&l| l as f64).sum::<f64>() / n as f64;
        let mut sorted = lengths.to_vec();
        sorted.sort_unstable();
        let median = if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
        };
        let (argmax, &max) = lengths
            .iter()
            .enumerate()
            .fold((0, &lengths[0]), |best, (i, l)| if l > best.1 { (i, l) } else { best });
        let m2 = lengths.iter().map(|&l| (l as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        let m3 = lengths.iter().map(|&l| (l as f64 - mean).powi(3)).sum::<f64>() / n as f64;
        let skew = (m2 > 0.0).then(|| m3 / m2.powf(1.5));
        (Some(mean), Some(median), Some(max), Some(argmax), skew)
    };
    LengthDistribution {
        bin_width,
        histogram: bins.into_iter().collect(),
        sentences: n,
        mean,
        median,
        max,
        argmax_sentence: argmax,
        skewness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn corpus(sentences: &[&[&str]]) -> TokenCorpus {
        TokenCorpus::from_strs(sentences).unwrap()
    }

    #[test]
    fn vocabulary_first_occurrence() {
        let c = corpus(&[&["a", "b", "a"]]);
        let v = build_vocabulary(&c, 1, PunctPolicy::DropAll).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!(v.counts(), [2, 1]);
        let v = build_vocabulary(&c, 2, PunctPolicy::DropAll).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert!(matches!(build_vocabulary(&c, 3, PunctPolicy::DropAll), Err(CorpusError::EmptyVocabulary)));
        assert!(matches!(
            build_vocabulary(&TokenCorpus::default(), 1, PunctPolicy::KeepAll),
            Err(CorpusError::EmptyVocabulary)
        ));
    }

    #[test]
    fn punctuation_policies() {
        let c = corpus(&[&["thee", "!", "."], &["one", ".", ";"]]);
        let words = |p| build_vocabulary(&c, 1, p).unwrap().words().to_vec();
        assert_eq!(words(PunctPolicy::DropAll), ["thee", "one"]);
        assert_eq!(words(PunctPolicy::PaperCompat), ["thee", "!", "one", ";"]);
        assert_eq!(words(PunctPolicy::KeepAll), ["thee", "!", ".", "one", ";"]);
    }

    #[test]
    fn vocab_tsv_round_trip_and_errors() {
        let v = build_vocabulary(&corpus(&[&["x", "y", "x"]]), 1, PunctPolicy::KeepAll).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(std::str::from_utf8(&buf).unwrap(), "x\t2\t0\ny\t1\t1\n");
        assert_eq!(Vocabulary::read_tsv(&buf[..]).unwrap(), v);
        assert!(Vocabulary::read_tsv(&b"x\t2\t1\n"[..]).is_err());
        assert!(Vocabulary::read_tsv(&b"x\ttwo\t0\n"[..]).is_err());
        assert!(Vocabulary::read_tsv(&b"x\t1\t0\nx\t1\t1\n"[..]).is_err());
    }

    #[test]
    fn top_frequency_examples() {
        let c = corpus(&[&["a", "b", "a"]]);
        assert_eq!(top_frequencies(&c, 1), [("a".to_string(), 2)]);
        assert_eq!(top_frequencies(&c, 5), [("a".to_string(), 2), ("b".to_string(), 1)]);
        assert!(top_frequencies(&TokenCorpus::default(), 3).is_empty());
    }

    #[test]
    fn cooccurrence_examples() {
        let pairs = |s: &[&[&str]], k| cooccurrence_pairs(&corpus(s), k, CooccurrenceMode::Presence);
        let ab = ("a".to_string(), "b".to_string());
        assert_eq!(pairs(&[&["a", "b"], &["a", "b"], &["a", "c"]], 1), [(ab.clone(), 2)]);
        assert!(pairs(&[&["a"]], 5).is_empty());
        assert_eq!(pairs(&[&["a", "b", "a"]], 5), [(ab.clone(), 1)]);
        assert_eq!(pairs(&[&["b", "a"]], 5), [(ab.clone(), 1)]);
        let multi = cooccurrence_pairs(&corpus(&[&["a", "b", "a"]]), 5, CooccurrenceMode::Multiplicity);
        assert_eq!(multi, [(ab, 2)]);
    }

    #[test]
    fn length_distribution_examples() {
        let d = length_distribution(&[2, 1, 2], 1);
        assert_eq!(d.histogram, [(1, 1), (2, 2)]);
        assert!((d.mean.unwrap() - 5.0 / 3.0).abs() < 1e-12);
        assert_eq!(d.median, Some(2.0));
        assert_eq!(d.max, Some(2));
        assert_eq!(d.argmax_sentence, Some(0));
        assert_eq!(d.modal_bin(), Some(2));

        let empty = length_distribution(&[], 10);
        assert!(empty.histogram.is_empty());
        assert_eq!((empty.mean, empty.median, empty.max, empty.skewness), (None, None, None, None));

        let d = length_distribution(&[5, 12, 25, 27, 3, 40], 10);
        assert_eq!(d.histogram, [(0, 2), (10, 1), (20, 2), (40, 1)]);
        assert_eq!(d.median, Some(18.5));
        assert_eq!(d.argmax_sentence, Some(5));
        assert!((d.mass_between(20, 39) - 2.0 / 6.0).abs() < 1e-12);
        let mut csv = Vec::new();
        d.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), "bin_lower,count\n0,2\n10,1\n20,2\n40,1\n");
    }

    #[test]
    fn skewness_sign() {
        assert!(length_distribution(&[1, 1, 1, 1, 10], 1).skewness.unwrap() > 0.0);
        assert!(length_distribution(&[3, 3], 1).skewness.is_none());
    }

    fn brute_force_pairs(c: &TokenCorpus) -> BTreeMap<(String, String), u64> {
        let mut out = BTreeMap::new();
        for s in c.sentences() {
            let mut seen = BTreeSet::new();
            for i in 0..s.len() {
                for j in 0..s.len() {
                    if s[i] < s[j] {
                        seen.insert((s[i].clone(), s[j].clone()));
                    }
                }
            }
            for p in seen {
                *out.entry(p).or_insert(0) += 1;
            }
        }
        out
    }

    fn small_corpus() -> impl Strategy<Value = TokenCorpus> {
        proptest::collection::vec(proptest::collection::vec("[a-e]", 1..8), 0..10)
            .prop_map(|s| TokenCorpus::new(s).unwrap())
    }

    proptest! {
        #[test]
        fn cooccurrence_matches_brute_force(c in small_corpus()) {
            let oracle = brute_force_pairs(&c);
            let mut expected: Vec<_> = oracle.into_iter().collect();
            expected.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            prop_assert_eq!(cooccurrence_pairs(&c, usize::MAX, CooccurrenceMode::Presence), expected);
        }

        #[test]
        fn vocabulary_invariants(c in small_corpus()) {
            prop_assume!(!c.is_empty());
            let v = build_vocabulary(&c, 1, PunctPolicy::KeepAll).unwrap();
            for i in 0..v.len() {
                prop_assert_eq!(v.index_of(v.word(i).unwrap()), Some(i));
            }
            prop_assert_eq!(v.total_count() as usize, c.token_count());

            let top = top_frequencies(&c, v.len());
            prop_assert_eq!(top.len(), v.len());
            prop_assert!(top.windows(2).all(|w| w[0].1 >= w[1].1));
            let mut words: Vec<_> = top.iter().map(|(w, _)| w.clone()).collect();
            words.sort();
            let mut vocab_words = v.words().to_vec();
            vocab_words.sort();
            prop_assert_eq!(words, vocab_words);
        }

        #[test]
        fn histogram_sums_to_sentence_count(lengths in proptest::collection::vec(0usize..200, 0..50), width in 1usize..30) {
            let d = length_distribution(&lengths, width);
            prop_assert_eq!(d.histogram.iter().map(|&(_, n)| n).sum::<usize>(), lengths.len());
        }
    }
}
