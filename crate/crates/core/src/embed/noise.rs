use rand::Rng;

use crate::corpus::Vocabulary;

const NOISE_POWER: f64 = 0.75;

/// Unigram distribution raised to the 3/4 power, normalized to sum 1.
/// A vocabulary whose counts are all zero yields the uniform distribution.
pub fn noise_distribution(vocab: &Vocabulary) -> Vec<f64> {
    let weights: Vec<f64> = vocab.counts().iter().map(|&c| (c as f64).powf(NOISE_POWER)).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.into_iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / vocab.len().max(1) as f64; vocab.len()]
    }
}

/// Draws word indices from a discrete distribution by binary search over
/// its cumulative sums.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSampler {
    cdf: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(probabilities: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        NoiseSampler { cdf }
    }

    pub fn from_vocab(vocab: &Vocabulary) -> Self {
        NoiseSampler::new(&noise_distribution(vocab))
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cdf.last().copied().unwrap_or(0.0);
        let u = rng.gen::<f64>() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    /// Up to `k` draws, discarding any that hit `target`.
    pub fn negatives<R: Rng + ?Sized>(&self, target: usize, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        for _ in 0..k {
            let n = self.sample(rng);
            if n != target {
                out.push(n);
            }
        }
    }
}
