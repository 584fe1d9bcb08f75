use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmbedError, Mode};
use crate::corpus::Vocabulary;

/// Scalar type for model weights.
pub trait Real: Float + FromPrimitive + Default + Debug + Send + Sync + 'static {
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Two-layer word2vec network.
///
/// `WI` is V x N (one input vector per word). `WO` is N x V; it is stored
/// transposed, one contiguous output vector per word, so that sampled
/// columns are cache-friendly. [`EmbeddingModel::wo`] gives the N x V view.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<T: Real = f32> {
    vocab: Vocabulary,
    dim: usize,
    wi: Vec<T>,
    wo_t: Vec<T>,
}

impl<T: Real> EmbeddingModel<T> {
    /// Builds a model from `WI` (V x N row-major) and `WO` (N x V row-major).
    pub fn from_matrices(vocab: Vocabulary, dim: usize, wi: Vec<T>, wo: Vec<T>) -> Result<Self, EmbedError> {
        let v = vocab.len();
        if dim == 0 {
            return Err(EmbedError::InvalidConfig("dim must be at least 1".into()));
        }
        if wi.len() != v * dim || wo.len() != v * dim {
            return Err(EmbedError::Shape { expected: v * dim, wi: wi.len(), wo: wo.len() });
        }
        let mut wo_t = vec![T::zero(); v * dim];
        for k in 0..dim {
            for j in 0..v {
                wo_t[j * dim + k] = wo[k * v + j];
            }
        }
        Ok(EmbeddingModel { vocab, dim, wi, wo_t })
    }

    #[cfg(feature = "parallel")]
    pub(crate) fn from_parts_transposed(vocab: Vocabulary, dim: usize, wi: Vec<T>, wo_t: Vec<T>) -> Self {
        debug_assert_eq!(wi.len(), vocab.len() * dim);
        debug_assert_eq!(wo_t.len(), vocab.len() * dim);
        EmbeddingModel { vocab, dim, wi, wo_t }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// N, the embedding dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// V, the vocabulary size.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// `WI`, V x N row-major.
    pub fn wi(&self) -> &[T] {
        &self.wi
    }

    pub fn wi_mut(&mut self) -> &mut [T] {
        &mut self.wi
    }

    /// Row `i` of `WI`.
    pub fn input_vector(&self, i: usize) -> &[T] {
        &self.wi[i * self.dim..(i + 1) * self.dim]
    }

    /// Column `j` of `WO`.
    pub fn output_vector(&self, j: usize) -> &[T] {
        &self.wo_t[j * self.dim..(j + 1) * self.dim]
    }

    /// `WO[k][j]`.
    pub fn wo_at(&self, k: usize, j: usize) -> T {
        self.wo_t[j * self.dim + k]
    }

    pub fn set_wo_at(&mut self, k: usize, j: usize, value: T) {
        self.wo_t[j * self.dim + k] = value;
    }

    /// `WO`, N x V row-major (copied out of the transposed storage).
    pub fn wo(&self) -> Vec<T> {
        let v = self.vocab_size();
        let mut out = vec![T::zero(); v * self.dim];
        for j in 0..v {
            for k in 0..self.dim {
                out[k * v + j] = self.wo_t[j * self.dim + k];
            }
        }
        out
    }

    pub(crate) fn weights_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.wi, &mut self.wo_t)
    }

    #[cfg(feature = "parallel")]
    pub(crate) fn into_parts(self) -> (Vocabulary, usize, Vec<T>, Vec<T>) {
        (self.vocab, self.dim, self.wi, self.wo_t)
    }

    pub fn is_finite(&self) -> bool {
        self.wi.iter().chain(&self.wo_t).all(|x| x.is_finite())
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<(), EmbedError> {
        if index < self.vocab_size() {
            Ok(())
        } else {
            Err(EmbedError::IndexOutOfVocab { index, vocab_size: self.vocab_size() })
        }
    }

    /// Converts the weights to another scalar type.
    pub fn cast<U: Real>(&self) -> EmbeddingModel<U> {
        let conv = |x: &T| U::of(x.to_f64().unwrap_or(0.0));
        EmbeddingModel {
            vocab: self.vocab.clone(),
            dim: self.dim,
            wi: self.wi.iter().map(conv).collect(),
            wo_t: self.wo_t.iter().map(conv).collect(),
        }
    }
}

/// `WI` uniform in `[-0.5/dim, 0.5/dim]`, `WO` zero. Deterministic in `seed`.
pub fn init_model<T: Real>(vocab: Vocabulary, dim: usize, seed: u64) -> Result<EmbeddingModel<T>, EmbedError> {
    if vocab.len() < 2 {
        return Err(EmbedError::VocabTooSmall { size: vocab.len() });
    }
    if dim == 0 {
        return Err(EmbedError::InvalidConfig("dim must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    let n = vocab.len() * dim;
    let wi = (0..n).map(|_| T::of(rng.gen_range(-half..=half))).collect();
    let wo_t = vec![T::zero(); n];
    Ok(EmbeddingModel { vocab, dim, wi, wo_t })
}

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax<T: Real>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult<T> {
    pub hidden: Vec<T>,
    pub probabilities: Vec<T>,
}

/// Hidden layer for `inputs`: the single input row (skip-gram) or the mean
/// of the input rows (CBOW).
pub(crate) fn hidden_layer<T: Real>(model: &EmbeddingModel<T>, inputs: &[usize]) -> Vec<T> {
    let mut hidden = vec![T::zero(); model.dim];
    for &i in inputs {
        for (h, &w) in hidden.iter_mut().zip(model.input_vector(i)) {
            *h = *h + w;
        }
    }
    let scale = T::one() / T::of(inputs.len() as f64);
    hidden.iter_mut().for_each(|h| *h = *h * scale);
    hidden
}

pub(crate) fn check_context<T: Real>(model: &EmbeddingModel<T>, context: &[usize], mode: Mode) -> Result<(), EmbedError> {
    match mode {
        Mode::SkipGram if context.len() != 1 => {
            return Err(EmbedError::ContextArity { mode, got: context.len() })
        }
        Mode::Cbow if context.is_empty() => return Err(EmbedError::ContextArity { mode, got: 0 }),
        _ => {}
    }
    context.iter().try_for_each(|&i| model.check_index(i))
}

/// Output distribution over the vocabulary for the given input word(s).
pub fn forward<T: Real>(model: &EmbeddingModel<T>, context: &[usize], mode: Mode) -> Result<ForwardResult<T>, EmbedError> {
    check_context(model, context, mode)?;
    let hidden = hidden_layer(model, context);
    let scores: Vec<T> = (0..model.vocab_size())
        .map(|j| dot(&hidden, model.output_vector(j)))
        .collect();
    Ok(ForwardResult { probabilities: softmax(&scores), hidden })
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_entries((0..n).map(|i| (format!("w{i}"), (n - i) as u64)).collect()).unwrap()
    }

    #[test]
    fn init_shapes_and_ranges() {
        let m: EmbeddingModel<f32> = init_model(vocab(33), 100, 7).unwrap();
        assert_eq!(m.wi().len(), 33 * 100);
        assert_eq!(m.wo().len(), 100 * 33);
        assert!(m.wi().iter().all(|&x| x.abs() <= 0.005));
        assert!(m.wo().iter().all(|&x| x == 0.0));
        let again: EmbeddingModel<f32> = init_model(vocab(33), 100, 7).unwrap();
        assert_eq!(m, again);
        let other: EmbeddingModel<f32> = init_model(vocab(33), 100, 8).unwrap();
        assert_ne!(m.wi(), other.wi());
    }

    #[test]
    fn init_rejects_tiny_vocab() {
        assert!(matches!(
            init_model::<f32>(vocab(1), 4, 0),
            Err(EmbedError::VocabTooSmall { size: 1 })
        ));
    }

    #[test]
    fn forward_two_word_example() {
        let m = EmbeddingModel::<f64>::from_matrices(vocab(2), 2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, 0.0])
            .unwrap();
        let r = forward(&m, &[0], Mode::SkipGram).unwrap();
        let e = std::f64::consts::E;
        assert_eq!(r.hidden, [1.0, 0.0]);
        assert!((r.probabilities[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((r.probabilities[1] - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((r.probabilities[0] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn cbow_of_repeated_word_matches_skipgram() {
        let m: EmbeddingModel<f64> = init_model(vocab(6), 5, 3).unwrap();
        let a = forward(&m, &[4], Mode::SkipGram).unwrap();
        let b = forward(&m, &[4, 4], Mode::Cbow).unwrap();
        for (x, y) in a.hidden.iter().zip(&b.hidden) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_errors() {
        let m: EmbeddingModel<f32> = init_model(vocab(3), 2, 0).unwrap();
        assert!(matches!(forward(&m, &[3], Mode::SkipGram), Err(EmbedError::IndexOutOfVocab { index: 3, .. })));
        assert!(matches!(forward(&m, &[0, 1], Mode::SkipGram), Err(EmbedError::ContextArity { .. })));
        assert!(matches!(forward(&m, &[], Mode::Cbow), Err(EmbedError::ContextArity { .. })));
    }

    #[test]
    fn wo_layout_round_trip() {
        let wo: Vec<f64> = (0..6).map(f64::from).collect();
        let m = EmbeddingModel::from_matrices(vocab(3), 2, vec![0.0; 6], wo.clone()).unwrap();
        assert_eq!(m.wo(), wo);
        assert_eq!(m.wo_at(1, 0), 3.0);
        assert_eq!(m.output_vector(2), [2.0, 5.0]);
        assert!(EmbeddingModel::<f64>::from_matrices(vocab(3), 2, vec![0.0; 5], wo).is_err());
    }

    #[test]
    fn softmax_extreme_scores() {
        let p = softmax(&[1000.0f32, 0.0, -1000.0]);
        assert!(p.iter().all(|x| x.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-6);
    }
}
