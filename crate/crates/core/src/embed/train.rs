use std::cell::Cell;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::{self, Scratch, Slot, Weights};
use super::model::{check_context, init_model, EmbeddingModel, Real};
use super::noise::NoiseSampler;
use super::{EmbedError, Mode, Objective};
use crate::corpus::Vocabulary;
use crate::textprep::TokenCorpus;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub objective: Objective,
    /// Context words taken on each side of the center, clipped at sentence
    /// bounds.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
    pub dim: usize,
    /// Worker count; 1 is sequential and bitwise reproducible, 0 means one
    /// worker per available core.
    pub threads: usize,
    /// Frequent-word subsampling threshold (e.g. `1e-3`); off when `None`.
    pub subsample: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::SkipGram,
            objective: Objective::NegativeSampling,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 1,
            dim: 100,
            threads: 1,
            subsample: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let bad = |msg: &str| Err(EmbedError::InvalidConfig(msg.to_string()));
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.lr_end > 0.0 && self.lr_end <= self.lr_start && self.lr_start.is_finite()) {
            return bad("learning rates must satisfy 0 < lr_end <= lr_start");
        }
        if self.objective == Objective::NegativeSampling && self.negatives < 1 {
            return bad("negative sampling needs at least 1 negative");
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0 && t < 1.0) {
                return bad("subsample threshold must lie in (0, 1)");
            }
        }
        Ok(())
    }

    fn worker_count(&self) -> usize {
        match self.threads {
            0 => crate::par::current_threads(),
            n => n,
        }
    }
}

/// Per-worker state for [`train_step`]: the noise sampler, the random
/// stream it draws from, and reusable buffers.
#[derive(Debug, Clone)]
pub struct StepState<T: Real = f32> {
    noise: Option<NoiseSampler>,
    rng: ChaCha8Rng,
    negatives: Vec<usize>,
    scratch: Scratch<T>,
}

impl<T: Real> StepState<T> {
    /// State seeded from `config.seed`.
    pub fn new(vocab: &Vocabulary, config: &TrainConfig) -> Self {
        Self::with_stream(vocab, config, 0)
    }

    /// State on an independent random stream, one per parallel worker.
    pub fn with_stream(vocab: &Vocabulary, config: &TrainConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let noise = (config.objective == Objective::NegativeSampling).then(|| NoiseSampler::from_vocab(vocab));
        StepState { noise, rng, negatives: Vec::new(), scratch: Scratch::default() }
    }

    /// The negatives the next negative-sampling step for `target` will use.
    pub fn draw_negatives(&mut self, target: usize, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(noise) = &self.noise {
            noise.negatives(target, k, &mut self.rng, &mut out);
        }
        out
    }

    fn prepare_negatives(&mut self, target: usize, config: &TrainConfig) {
        match &self.noise {
            Some(noise) if config.objective == Objective::NegativeSampling => {
                noise.negatives(target, config.negatives, &mut self.rng, &mut self.negatives)
            }
            _ => self.negatives.clear(),
        }
    }
}

fn as_cells<T>(slice: &mut [T]) -> &[Cell<T>] {
    Cell::from_mut(slice).as_slice_of_cells()
}

/// One update predicting `center` from `contexts` (the single input word for
/// skip-gram, the averaged window for CBOW). The model is updated in place;
/// the returned loss is measured before the update. `lr = 0` evaluates
/// without changing anything.
pub fn train_step<T: Real>(
    model: &mut EmbeddingModel<T>,
    center: usize,
    contexts: &[usize],
    lr: T,
    config: &TrainConfig,
    state: &mut StepState<T>,
) -> Result<T, EmbedError> {
    check_context(model, contexts, config.mode)?;
    model.check_index(center)?;
    if !(lr.is_finite() && lr >= T::zero()) {
        return Err(EmbedError::InvalidConfig("learning rate must be finite and non-negative".into()));
    }
    if config.objective == Objective::NegativeSampling && state.noise.is_none() {
        state.noise = Some(NoiseSampler::from_vocab(model.vocab()));
    }
    state.prepare_negatives(center, config);
    let (dim, vocab_size) = (model.dim(), model.vocab_size());
    let (wi, wo) = model.weights_mut();
    let weights = Weights { wi: as_cells(wi), wo: as_cells(wo), dim, vocab_size };
    Ok(kernel::step(&weights, contexts, center, config.objective, &state.negatives, lr, &mut state.scratch))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-example loss of each epoch, measured as training proceeds.
    pub epoch_losses: Vec<f64>,
    pub examples: u64,
}

fn index_corpus(corpus: &TokenCorpus, vocab: &Vocabulary) -> Vec<Vec<usize>> {
    crate::par::filter_map(corpus.sentences(), |sentence| {
        let ids: Vec<usize> = sentence.iter().filter_map(|t| vocab.index_of(t)).collect();
        (ids.len() >= 2).then_some(ids)
    })
}

/// Calls `f(center, contexts)` for every training example of a sentence.
fn for_each_example(sentence: &[usize], window: usize, mode: Mode, buf: &mut Vec<usize>, mut f: impl FnMut(usize, &[usize])) {
    for (i, &center) in sentence.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(sentence.len());
        match mode {
            Mode::SkipGram => {
                for (j, &ctx) in sentence[lo..hi].iter().enumerate() {
                    if lo + j != i {
                        f(center, std::slice::from_ref(&ctx));
                    }
                }
            }
            Mode::Cbow => {
                buf.clear();
                buf.extend(sentence[lo..i].iter().chain(&sentence[i + 1..hi]));
                if !buf.is_empty() {
                    f(center, buf);
                }
            }
        }
    }
}

struct Schedule {
    lr_start: f64,
    lr_end: f64,
    total: f64,
}

impl Schedule {
    fn rate(&self, done: u64) -> f64 {
        let frac = (done as f64 / self.total).min(1.0);
        (self.lr_start - (self.lr_start - self.lr_end) * frac).max(self.lr_end)
    }
}

/// Keep-probabilities for subsampling, one per vocabulary index.
fn keep_probabilities(vocab: &Vocabulary, threshold: f64) -> Vec<f64> {
    let total = vocab.total_count().max(1) as f64;
    vocab
        .counts()
        .iter()
        .map(|&c| {
            let f = c as f64 / total;
            if f <= 0.0 {
                1.0
            } else {
                ((f / threshold).sqrt() + 1.0) * threshold / f
            }
        })
        .collect()
}

/// Runs every epoch over one partition of sentences. Returns per-epoch
/// `(loss sum, example count)`.
#[allow(clippy::too_many_arguments)]
fn run_partition<S: Slot<f32>>(
    weights: &Weights<'_, S>,
    sentences: &[Vec<usize>],
    config: &TrainConfig,
    keep: Option<&[f64]>,
    state: &mut StepState<f32>,
    schedule: &Schedule,
    progress: &AtomicU64,
) -> Vec<(f64, u64)> {
    let mut per_epoch = Vec::with_capacity(config.epochs);
    let mut sampled = Vec::new();
    let mut ctx_buf = Vec::new();
    for _ in 0..config.epochs {
        let (mut sum, mut count) = (0.0f64, 0u64);
        for sentence in sentences {
            let lr = schedule.rate(progress.fetch_add(sentence.len() as u64, Ordering::Relaxed)) as f32;
            let sentence: &[usize] = match keep {
                Some(keep) => {
                    sampled.clear();
                    sampled.extend(sentence.iter().copied().filter(|&w| state.rng.gen::<f64>() < keep[w]));
                    &sampled
                }
                None => sentence,
            };
            let StepState { noise, rng, negatives, scratch } = state;
            for_each_example(sentence, config.window, config.mode, &mut ctx_buf, |center, contexts| {
                match noise {
                    Some(noise) => noise.negatives(center, config.negatives, rng, negatives),
                    None => negatives.clear(),
                }
                let loss = kernel::step(weights, contexts, center, config.objective, negatives, lr, scratch);
                sum += f64::from(loss);
                count += 1;
            });
        }
        per_epoch.push((sum, count));
    }
    per_epoch
}

fn prepare(corpus: &TokenCorpus, model: &EmbeddingModel<f32>, config: &TrainConfig) -> Result<Vec<Vec<usize>>, EmbedError> {
    config.validate()?;
    if model.dim() != config.dim {
        return Err(EmbedError::InvalidConfig(format!(
            "model has dim {} but config asks for {}",
            model.dim(),
            config.dim
        )));
    }
    let sentences = index_corpus(corpus, model.vocab());
    if sentences.is_empty() {
        return Err(EmbedError::EmptyTrainingData);
    }
    Ok(sentences)
}

/// Trains a freshly initialized model (seeded from `config.seed`).
pub fn train(corpus: &TokenCorpus, vocab: &Vocabulary, config: &TrainConfig) -> Result<EmbeddingModel<f32>, EmbedError> {
    train_with_report(corpus, vocab, config).map(|(model, _)| model)
}

pub fn train_with_report(
    corpus: &TokenCorpus,
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<(EmbeddingModel<f32>, TrainReport), EmbedError> {
    config.validate()?;
    let model = init_model(vocab.clone(), config.dim, config.seed)?;
    train_from(model, corpus, config)
}

/// Continues training an existing model. Out-of-vocabulary tokens are
/// skipped before windows are formed.
pub fn train_from(
    mut model: EmbeddingModel<f32>,
    corpus: &TokenCorpus,
    config: &TrainConfig,
) -> Result<(EmbeddingModel<f32>, TrainReport), EmbedError> {
    let sentences = prepare(corpus, &model, config)?;
    let positions: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let schedule = Schedule {
        lr_start: config.lr_start,
        lr_end: config.lr_end,
        total: (positions * config.epochs as u64) as f64,
    };
    let keep = config.subsample.map(|t| keep_probabilities(model.vocab(), t));
    let progress = AtomicU64::new(0);
    let workers = config.worker_count().min(sentences.len()).max(1);

    let partials = if workers == 1 || cfg!(not(feature = "parallel")) {
        let mut state = StepState::new(model.vocab(), config);
        let (dim, vocab_size) = (model.dim(), model.vocab_size());
        let (wi, wo) = model.weights_mut();
        let weights = Weights { wi: as_cells(wi), wo: as_cells(wo), dim, vocab_size };
        vec![run_partition(&weights, &sentences, config, keep.as_deref(), &mut state, &schedule, &progress)]
    } else {
        #[cfg(feature = "parallel")]
        {
            let (out, trained) = hogwild(model, &sentences, config, keep.as_deref(), &schedule, &progress, workers);
            model = trained;
            out
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!()
    };

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut examples = 0;
    for e in 0..config.epochs {
        let (sum, count) = partials.iter().fold((0.0, 0), |(s, c), p| (s + p[e].0, c + p[e].1));
        examples += count;
        epoch_losses.push(if count == 0 { f64::NAN } else { sum / count as f64 });
    }
    if examples == 0 {
        return Err(EmbedError::EmptyTrainingData);
    }
    Ok((model, TrainReport { epoch_losses, examples }))
}

/// Lock-free parallel training: contiguous sentence partitions, one per
/// worker, all updating the same weights through relaxed atomics.
#[cfg(feature = "parallel")]
fn hogwild(
    model: EmbeddingModel<f32>,
    sentences: &[Vec<usize>],
    config: &TrainConfig,
    keep: Option<&[f64]>,
    schedule: &Schedule,
    progress: &AtomicU64,
    workers: usize,
) -> (Vec<Vec<(f64, u64)>>, EmbeddingModel<f32>) {
    use super::kernel::AtomicF32;

    let (vocab, dim, wi, wo) = model.into_parts();
    let wi: Vec<AtomicF32> = wi.into_iter().map(AtomicF32::new).collect();
    let wo: Vec<AtomicF32> = wo.into_iter().map(AtomicF32::new).collect();
    let weights = Weights { wi: &wi, wo: &wo, dim, vocab_size: vocab.len() };
    let chunk = sentences.len().div_ceil(workers);
    let parts: Vec<(u64, &[Vec<usize>])> =
        sentences.chunks(chunk).enumerate().map(|(i, p)| (i as u64, p)).collect();
    let partials = crate::par::with_threads(workers, || {
        crate::par::map(&parts, |&(stream, part)| {
            let mut state = StepState::with_stream(&vocab, config, stream);
            run_partition(&weights, part, config, keep, &mut state, schedule, progress)
        })
    });
    let wi = wi.into_iter().map(AtomicF32::into_inner).collect();
    let wo = wo.into_iter().map(AtomicF32::into_inner).collect();
    (partials, EmbeddingModel::from_parts_transposed(vocab, dim, wi, wo))
}

/// Mean per-example loss of `model` over `corpus`, without updating it.
/// Negative-sampling losses use noise drawn from `config.seed`.
pub fn evaluate_loss<T: Real>(model: &EmbeddingModel<T>, corpus: &TokenCorpus, config: &TrainConfig) -> Result<f64, EmbedError> {
    let sentences = index_corpus(corpus, model.vocab());
    let mut probe = model.clone();
    let mut state = StepState::new(model.vocab(), config);
    let (mut sum, mut count) = (0.0f64, 0u64);
    let mut ctx_buf = Vec::new();
    let mut failure = None;
    for sentence in &sentences {
        for_each_example(sentence, config.window, config.mode, &mut ctx_buf, |center, contexts| {
            match train_step(&mut probe, center, contexts, T::zero(), config, &mut state) {
                Ok(loss) => {
                    sum += loss.to_f64().unwrap_or(f64::NAN);
                    count += 1;
                }
                Err(e) => failure = failure.take().or(Some(e)),
            }
        });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    if count == 0 {
        return Err(EmbedError::EmptyTrainingData);
    }
    Ok(sum / count as f64)
}
