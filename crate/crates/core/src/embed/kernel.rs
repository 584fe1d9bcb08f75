//! The per-example update shared by the sequential trainer (over `Cell`s)
//! and the lock-free parallel trainer (over relaxed atomics).

use std::cell::Cell;
#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicU32, Ordering};

use super::model::Real;
use super::Objective;

pub(crate) trait Slot<T> {
    fn get(&self) -> T;
    fn set(&self, value: T);
}

impl<T: Copy> Slot<T> for Cell<T> {
    #[inline]
    fn get(&self) -> T {
        Cell::get(self)
    }

    #[inline]
    fn set(&self, value: T) {
        Cell::set(self, value)
    }
}

/// An `f32` shared between Hogwild workers. Loads and stores are relaxed;
/// concurrent read-modify-write sequences may lose updates.
#[cfg(feature = "parallel")]
#[derive(Debug, Default)]
pub(crate) struct AtomicF32(AtomicU32);

#[cfg(feature = "parallel")]
impl AtomicF32 {
    pub(crate) fn new(value: f32) -> Self {
        AtomicF32(AtomicU32::new(value.to_bits()))
    }

    pub(crate) fn into_inner(self) -> f32 {
        f32::from_bits(self.0.into_inner())
    }
}

#[cfg(feature = "parallel")]
impl Slot<f32> for AtomicF32 {
    #[inline]
    fn get(&self) -> f32 {
        f32::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, value: f32) {
        self.0.store(value.to_bits(), Ordering::Relaxed)
    }
}

/// Weight views: `wi` is V x N, `wo` holds one output vector per word (V x N).
pub(crate) struct Weights<'a, S> {
    pub wi: &'a [S],
    pub wo: &'a [S],
    pub dim: usize,
    pub vocab_size: usize,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Scratch<T> {
    hidden: Vec<T>,
    grad_hidden: Vec<T>,
    scores: Vec<T>,
}

impl<T: Real> Scratch<T> {
    fn reset(&mut self, dim: usize) {
        self.hidden.clear();
        self.hidden.resize(dim, T::zero());
        self.grad_hidden.clear();
        self.grad_hidden.resize(dim, T::zero());
        self.scores.clear();
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn row<S>(m: &[S], i: usize, dim: usize) -> &[S] {
    &m[i * dim..(i + 1) * dim]
}

/// One gradient step predicting `target` from the mean of the `inputs` rows.
///
/// All gradients are taken at the pre-update weights, then applied, so a
/// repeated negative sample contributes its gradient once per draw. Returns
/// the loss at the pre-update weights.
pub(crate) fn step<T: Real, S: Slot<T>>(
    w: &Weights<'_, S>,
    inputs: &[usize],
    target: usize,
    objective: Objective,
    negatives: &[usize],
    lr: T,
    scratch: &mut Scratch<T>,
) -> T {
    let dim = w.dim;
    scratch.reset(dim);
    for &i in inputs {
        for (h, s) in scratch.hidden.iter_mut().zip(row(w.wi, i, dim)) {
            *h = *h + s.get();
        }
    }
    let inv = T::one() / T::of(inputs.len() as f64);
    scratch.hidden.iter_mut().for_each(|h| *h = *h * inv);

    let score = |j: usize, hidden: &[T]| {
        row(w.wo, j, dim).iter().zip(hidden).fold(T::zero(), |acc, (s, &h)| acc + s.get() * h)
    };

    let loss = match objective {
        Objective::Softmax => {
            for j in 0..w.vocab_size {
                let u = score(j, &scratch.hidden);
                scratch.scores.push(u);
            }
            let max = scratch.scores.iter().copied().fold(T::neg_infinity(), T::max);
            let target_score = scratch.scores[target];
            let mut sum = T::zero();
            for u in scratch.scores.iter_mut() {
                *u = (*u - max).exp();
                sum = sum + *u;
            }
            let loss = sum.ln() + max - target_score;
            // scores now hold e_j = p_j - [j == target]
            for (j, u) in scratch.scores.iter_mut().enumerate() {
                *u = *u / sum - if j == target { T::one() } else { T::zero() };
            }
            for j in 0..w.vocab_size {
                let e = scratch.scores[j];
                for ((g, s), &h) in scratch.grad_hidden.iter_mut().zip(row(w.wo, j, dim)).zip(&scratch.hidden) {
                    let old = s.get();
                    *g = *g + e * old;
                    s.set(old - lr * e * h);
                }
            }
            loss
        }
        Objective::NegativeSampling => {
            let mut loss = T::zero();
            let samples = std::iter::once((target, true)).chain(negatives.iter().map(|&n| (n, false)));
            for (j, positive) in samples.clone() {
                let u = score(j, &scratch.hidden);
                let (l, g) = if positive {
                    (softplus(-u), sigmoid(u) - T::one())
                } else {
                    (softplus(u), sigmoid(u))
                };
                loss = loss + l;
                scratch.scores.push(g);
                for (gh, s) in scratch.grad_hidden.iter_mut().zip(row(w.wo, j, dim)) {
                    *gh = *gh + g * s.get();
                }
            }
            for ((j, _), &g) in samples.zip(scratch.scores.iter()) {
                for (s, &h) in row(w.wo, j, dim).iter().zip(&scratch.hidden) {
                    s.set(s.get() - lr * g * h);
                }
            }
            loss
        }
    };

    for &i in inputs {
        for (s, &g) in row(w.wi, i, dim).iter().zip(&scratch.grad_hidden) {
            s.set(s.get() - lr * g * inv);
        }
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_scalar_functions() {
        assert!((softplus(0.0f64) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(1000.0f32) - 1000.0).abs() < 1e-3);
        assert_eq!(softplus(-1000.0f32), 0.0);
        assert!((sigmoid(0.0f64) - 0.5).abs() < 1e-15);
        assert!(sigmoid(-1000.0f32).is_finite());
        assert!((sigmoid(3.0f64) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rate_leaves_weights() {
        let wi: Vec<Cell<f64>> = [0.1, -0.2, 0.3, 0.4, 0.0, 0.2].into_iter().map(Cell::new).collect();
        let wo: Vec<Cell<f64>> = [0.5, 0.1, -0.3, 0.2, 0.7, 0.0].into_iter().map(Cell::new).collect();
        let before: Vec<f64> = wi.iter().chain(&wo).map(Cell::get).collect();
        let w = Weights { wi: &wi, wo: &wo, dim: 2, vocab_size: 3 };
        let mut scratch = Scratch::default();
        for objective in [Objective::Softmax, Objective::NegativeSampling] {
            let loss = step(&w, &[0, 2], 1, objective, &[2, 0], 0.0, &mut scratch);
            assert!(loss > 0.0);
        }
        let after: Vec<f64> = wi.iter().chain(&wo).map(Cell::get).collect();
        assert_eq!(before, after);
    }
}
