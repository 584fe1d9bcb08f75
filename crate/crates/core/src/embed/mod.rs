//! word2vec training: CBOW and skip-gram over full softmax or negative
//! sampling, plus model persistence.

mod io;
mod kernel;
mod model;
mod noise;
mod train;

pub use io::{load_model, read_binary, read_text, save_model, vocab_path_for, write_binary, write_text, TextVectors};
pub use model::{forward, init_model, softmax, EmbeddingModel, ForwardResult, Real};
pub use noise::{noise_distribution, NoiseSampler};
pub use train::{evaluate_loss, train, train_from, train_step, train_with_report, StepState, TrainConfig, TrainReport};

use std::fmt;
use std::str::FromStr;

use crate::corpus::CorpusError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mode {
    Cbow,
    #[default]
    SkipGram,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbow" => Ok(Mode::Cbow),
            "skipgram" | "skip-gram" | "sg" => Ok(Mode::SkipGram),
            other => Err(format!("unknown mode {other:?} (expected cbow|skipgram)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbow => "cbow",
            Mode::SkipGram => "skipgram",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Objective {
    Softmax,
    #[default]
    NegativeSampling,
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "softmax" => Ok(Objective::Softmax),
            "negative_sampling" | "negative-sampling" | "ns" => Ok(Objective::NegativeSampling),
            other => Err(format!("unknown objective {other:?} (expected softmax|negative_sampling)")),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Softmax => "softmax",
            Objective::NegativeSampling => "negative_sampling",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("vocabulary has {size} entries, at least 2 are needed")]
    VocabTooSmall { size: usize },
    #[error("index {index} is outside the vocabulary (size {vocab_size})")]
    IndexOutOfVocab { index: usize, vocab_size: usize },
    #[error("{mode} step got {got} context indices")]
    ContextArity { mode: Mode, got: usize },
    #[error("corpus has no trainable (center, context) pair")]
    EmptyTrainingData,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("weight matrices have {wi} and {wo} entries, expected {expected}")]
    Shape { expected: usize, wi: usize, wo: usize },
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Vocabulary(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
