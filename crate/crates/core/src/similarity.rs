//! Cosine-similarity queries over trained input vectors.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};

use serde::Serialize;

use crate::embed::{EmbeddingModel, Real};
use crate::par;

const MAX_SUGGESTIONS: usize = 5;
const SUGGESTION_DISTANCE: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimilarityError {
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error("vectors have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("unknown word {word:?}{}", Hint(.suggestions))]
    UnknownWord { word: String, suggestions: Vec<String> },
    #[error("neighbor count must be at least 1")]
    InvalidCount,
}

struct Hint<'a>(&'a [String]);

impl fmt::Display for Hint<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            Ok(())
        } else {
            write!(f, " (did you mean: {}?)", self.0.join(", "))
        }
    }
}

fn norm_sq<T: Real>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN).powi(2)).sum()
}

/// `dot(u, v) / (|u| |v|)`, evaluated in `f64` and clamped to `[-1, 1]`.
pub fn cosine<T: Real>(u: &[T], v: &[T]) -> Result<f64, SimilarityError> {
    if u.len() != v.len() {
        return Err(SimilarityError::DimensionMismatch { left: u.len(), right: v.len() });
    }
    let (nu, nv) = (norm_sq(u), norm_sq(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    let dot: f64 = u
        .iter()
        .zip(v)
        .map(|(a, b)| a.to_f64().unwrap_or(f64::NAN) * b.to_f64().unwrap_or(f64::NAN))
        .sum();
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub word: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityResult {
    pub target: String,
    pub neighbors: Vec<Neighbor>,
}

impl SimilarityResult {
    /// `rank<TAB>word<TAB>score` lines, ranks from 1, six-decimal scores.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (rank, n) in self.neighbors.iter().enumerate() {
            writeln!(out, "{}\t{}\t{:.6}", rank + 1, n.word, n.score)?;
        }
        Ok(())
    }
}

fn lookup<T: Real>(model: &EmbeddingModel<T>, word: &str) -> Result<usize, SimilarityError> {
    model.vocab().index_of(word).ok_or_else(|| SimilarityError::UnknownWord {
        word: word.to_string(),
        suggestions: suggestions(model, word),
    })
}

/// Vocabulary words within edit distance 2 of `word`, closest first.
fn suggestions<T: Real>(model: &EmbeddingModel<T>, word: &str) -> Vec<String> {
    let mut close: Vec<(usize, usize)> = model
        .vocab()
        .words()
        .iter()
        .enumerate()
        .filter_map(|(i, w)| {
            let d = strsim::levenshtein(word, w);
            (d <= SUGGESTION_DISTANCE).then_some((d, i))
        })
        .collect();
    close.sort_unstable();
    close
        .into_iter()
        .take(MAX_SUGGESTIONS)
        .filter_map(|(_, i)| model.vocab().word(i).map(String::from))
        .collect()
}

/// The `n` words whose input vectors are most cosine-similar to `word`'s,
/// best first, ties broken by vocabulary index. `n` is clamped to V - 1 and
/// rows with zero norm are skipped.
pub fn most_similar<T: Real>(model: &EmbeddingModel<T>, word: &str, n: usize) -> Result<SimilarityResult, SimilarityError> {
    if n == 0 {
        return Err(SimilarityError::InvalidCount);
    }
    let target = lookup(model, word)?;
    let query = model.input_vector(target);
    if norm_sq(query) == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    let indices: Vec<usize> = (0..model.vocab_size()).filter(|&j| j != target).collect();
    let mut scored: Vec<(usize, f64)> =
        par::filter_map(&indices, |&j| cosine(query, model.input_vector(j)).ok().map(|s| (j, s)));
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    scored.truncate(n.min(model.vocab_size() - 1));
    let neighbors = scored
        .into_iter()
        .map(|(j, score)| Neighbor { word: model.vocab().word(j).unwrap_or_default().to_string(), score })
        .collect();
    Ok(SimilarityResult { target: word.to_string(), neighbors })
}

/// A copy of `word`'s input vector.
pub fn get_vector<T: Real>(model: &EmbeddingModel<T>, word: &str) -> Result<Vec<T>, SimilarityError> {
    lookup(model, word).map(|i| model.input_vector(i).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::embed::init_model;
    use proptest::prelude::*;

    fn model_from_rows(rows: &[Vec<f64>]) -> EmbeddingModel<f64> {
        let vocab =
            Vocabulary::from_entries((0..rows.len()).map(|i| (format!("w{i}"), 1)).collect()).unwrap();
        let dim = rows[0].len();
        let wi = rows.concat();
        EmbeddingModel::from_matrices(vocab, dim, wi, vec![0.0; rows.len() * dim]).unwrap()
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0f64, 1.0], &[1.0, 0.0]).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((cosine(&[0.3f32, -2.0, 7.5], &[0.3, -2.0, 7.5]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[0.0f64, 0.0], &[1.0, 0.0]), Err(SimilarityError::ZeroVector));
        assert_eq!(
            cosine(&[1.0f64], &[1.0, 0.0]),
            Err(SimilarityError::DimensionMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn scaled_row_is_nearest() {
        let m = model_from_rows(&[vec![1.0, 2.0, -1.0], vec![2.0, 4.0, -2.0], vec![-1.0, 0.5, 3.0]]);
        let r = most_similar(&m, "w0", 1).unwrap();
        assert_eq!(r.neighbors.len(), 1);
        assert_eq!(r.neighbors[0].word, "w1");
        assert!((r.neighbors[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_by_index_and_clamping() {
        let m = model_from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 0.0]]);
        let r = most_similar(&m, "w0", 10).unwrap();
        let words: Vec<_> = r.neighbors.iter().map(|n| n.word.as_str()).collect();
        assert_eq!(words, ["w1", "w2"]);
        assert_eq!(most_similar(&m, "w3", 1), Err(SimilarityError::ZeroVector));
        assert_eq!(most_similar(&m, "w0", 0), Err(SimilarityError::InvalidCount));
    }

    #[test]
    fn unknown_word_hints() {
        let vocab = Vocabulary::from_entries(
            ["arjuna", "karna", "krishna", "partha"].iter().map(|w| (w.to_string(), 1)).collect(),
        )
        .unwrap();
        let m: EmbeddingModel<f32> = init_model(vocab, 4, 1).unwrap();
        match most_similar(&m, "arjun", 5) {
            Err(SimilarityError::UnknownWord { word, suggestions }) => {
                assert_eq!(word, "arjun");
                assert_eq!(suggestions, ["arjuna"]);
            }
            other => panic!("{other:?}"),
        }
        let err = get_vector(&m, "xyzzy").unwrap_err();
        assert!(matches!(&err, SimilarityError::UnknownWord { suggestions, .. } if suggestions.is_empty()));
        assert_eq!(err.to_string(), "unknown word \"xyzzy\"");
        let err = get_vector(&m, "krsna").unwrap_err();
        assert!(err.to_string().ends_with("(did you mean: karna, krishna?)"), "{err}");
        assert_eq!(get_vector(&m, "karna").unwrap(), m.input_vector(1));
    }

    #[test]
    fn tsv_and_json_output() {
        let r = SimilarityResult {
            target: "arjuna".into(),
            neighbors: vec![Neighbor { word: "partha".into(), score: 0.8605594038963318 }],
        };
        let mut buf = Vec::new();
        r.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1\tpartha\t0.860559\n");
    }

    fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..30, 1usize..6).prop_flat_map(|(v, n)| {
            proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, n), v)
        })
    }

    proptest! {
        #[test]
        fn cosine_symmetric(pair in (1usize..20).prop_flat_map(|n| (
            proptest::collection::vec(-10.0f64..10.0, n),
            proptest::collection::vec(-10.0f64..10.0, n),
        ))) {
            let (u, v) = pair;
            if let (Ok(a), Ok(b)) = (cosine(&u, &v), cosine(&v, &u)) {
                prop_assert!((a - b).abs() < 1e-12);
                prop_assert!((-1.0..=1.0).contains(&a));
            }
        }

        #[test]
        fn uniform_scaling_keeps_ranking(rows in rows_strategy(), c in 0.01f64..100.0) {
            let m = model_from_rows(&rows);
            let scaled = model_from_rows(&rows.iter().map(|r| r.iter().map(|x| x * c).collect()).collect::<Vec<_>>());
            let a = most_similar(&m, "w0", rows.len());
            let b = most_similar(&scaled, "w0", rows.len());
            if let (Ok(a), Ok(b)) = (a, b) {
                let wa: Vec<_> = a.neighbors.iter().map(|n| &n.word).collect();
                let wb: Vec<_> = b.neighbors.iter().map(|n| &n.word).collect();
                // Scores may move by rounding; compare rankings only where scores are distinct.
                for (x, y) in a.neighbors.iter().zip(&b.neighbors) {
                    prop_assert!((x.score - y.score).abs() < 1e-9);
                }
                let distinct = a.neighbors.windows(2).all(|w| (w[0].score - w[1].score).abs() > 1e-9);
                if distinct {
                    prop_assert_eq!(wa, wb);
                }
            }
        }

        #[test]
        fn result_invariants(rows in rows_strategy(), n in 1usize..40) {
            let m = model_from_rows(&rows);
            if let Ok(r) = most_similar(&m, "w1", n) {
                prop_assert!(r.neighbors.len() <= n.min(rows.len() - 1));
                prop_assert!(r.neighbors.iter().all(|x| x.word != "w1"));
                prop_assert!(r.neighbors.windows(2).all(|w| w[0].score >= w[1].score));
            }
        }
    }
}
