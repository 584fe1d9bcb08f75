use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use epic_embed::corpus::{CooccurrenceMode, PunctPolicy};
use epic_embed::embed::{Mode, Objective, TrainConfig};
use epic_embed::normalize::NormalizeMode;
use epic_embed::textprep::{ApostrophePolicy, CleanOptions};

#[derive(Debug, Parser)]
#[command(name = "epic-embed", version, about = "Turn an EPUB or text file into word embeddings and query them")]
pub struct Cli {
    /// Directory for intermediate artifacts and outputs.
    #[arg(long, global = true, env = "EPIC_EMBED_WORKDIR", default_value = "epic-embed-work")]
    pub workdir: PathBuf,

    /// Worker threads for data-parallel stages and training (0 = all cores).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// key=value file; each key is the long name of a flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Compatibility settings: keep semicolons, drop only "." from the
    /// vocabulary, min count 1.
    #[arg(long, global = true)]
    pub paper_compat: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the text of each spine document (or a whole .txt file).
    Ingest {
        input: PathBuf,
        /// Output directory [default: <workdir>/sections]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Join, lowercase and normalize punctuation and whitespace.
    Clean {
        /// Sections directory [default: <workdir>/sections]
        #[arg(long)]
        input: Option<PathBuf>,
        /// [default: <workdir>/clean.txt]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        clean: CleanArgs,
    },
    /// Split into sentences and tokens (one sentence per output line).
    Tokenize {
        /// [default: <workdir>/clean.txt]
        #[arg(long)]
        input: Option<PathBuf>,
        /// [default: <workdir>/tokens.txt]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Remove stopwords and stem or lemmatize.
    Normalize {
        /// [default: <workdir>/tokens.txt]
        #[arg(long)]
        input: Option<PathBuf>,
        /// [default: <workdir>/normalized.txt]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Sentence-length histogram, top words and top co-occurring pairs.
    Stats {
        /// [default: <workdir>/normalized.txt]
        #[arg(long)]
        input: Option<PathBuf>,
        /// Pre-normalization tokens for the raw counts [default: <workdir>/tokens.txt if present]
        #[arg(long)]
        raw: Option<PathBuf>,
        /// [default: <workdir>/stats]
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        stats: StatsArgs,
    },
    /// Build the indexed vocabulary.
    Vocab {
        /// [default: <workdir>/normalized.txt]
        #[arg(long)]
        input: Option<PathBuf>,
        /// [default: <workdir>/vocab.tsv]
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        vocab: VocabArgs,
    },
    /// Train word2vec embeddings.
    Train {
        /// [default: <workdir>/normalized.txt]
        #[arg(long)]
        input: Option<PathBuf>,
        /// [default: <workdir>/vocab.tsv]
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// [default: <workdir>/model.bin]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Text export [default: <workdir>/vectors.txt]
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Most similar words by cosine of input vectors.
    Similar {
        word: String,
        /// [default: <workdir>/model.bin]
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(short = 'n', long = "top", default_value_t = 5)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Print a word's vector.
    Vector {
        word: String,
        /// [default: <workdir>/model.bin]
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run every stage, skipping those whose inputs are unchanged.
    Pipeline {
        input: PathBuf,
        #[command(flatten)]
        clean: CleanArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        stats: StatsArgs,
        #[command(flatten)]
        vocab: VocabArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Apostrophe {
    Delete,
    Space,
}

#[derive(Debug, Clone, Args)]
pub struct CleanArgs {
    #[arg(long, value_enum, default_value = "delete")]
    pub apostrophe: Apostrophe,
    /// Also delete semicolons (ignored under --paper-compat).
    #[arg(long)]
    pub strict_clean: bool,
}

impl CleanArgs {
    pub fn options(&self, paper_compat: bool) -> CleanOptions {
        CleanOptions {
            apostrophe: match self.apostrophe {
                Apostrophe::Delete => ApostrophePolicy::Delete,
                Apostrophe::Space => ApostrophePolicy::Space,
            },
            strip_semicolons: self.strict_clean && !paper_compat,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    /// Abbreviation list, one per line [default: bundled]
    #[arg(long, value_name = "FILE")]
    pub abbreviations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Norm {
    Stem,
    Lemma,
    None,
}

impl From<Norm> for NormalizeMode {
    fn from(n: Norm) -> Self {
        match n {
            Norm::Stem => NormalizeMode::Stem,
            Norm::Lemma => NormalizeMode::Lemma,
            Norm::None => NormalizeMode::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NormArgs {
    #[arg(long, value_enum, default_value = "lemma")]
    pub norm: Norm,
    /// Stopword list, one per line [default: bundled]
    #[arg(long, value_name = "FILE")]
    pub stopwords: Option<PathBuf>,
    /// Lemma exceptions, `surface<TAB>lemma<TAB>pos` [default: bundled]
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Cooccurrence {
    Presence,
    Multiplicity,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub bin_width: u64,
    #[arg(long, value_enum, default_value = "presence")]
    pub cooccurrence: Cooccurrence,
}

impl StatsArgs {
    pub fn mode(&self) -> CooccurrenceMode {
        match self.cooccurrence {
            Cooccurrence::Presence => CooccurrenceMode::Presence,
            Cooccurrence::Multiplicity => CooccurrenceMode::Multiplicity,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Punct {
    DropAll,
    PaperCompat,
    KeepAll,
}

#[derive(Debug, Clone, Args)]
pub struct VocabArgs {
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long, value_enum, default_value = "drop-all")]
    pub punct: Punct,
}

impl VocabArgs {
    pub fn resolve(&self, paper_compat: bool) -> (u64, PunctPolicy) {
        if paper_compat {
            return (1, PunctPolicy::PaperCompat);
        }
        let punct = match self.punct {
            Punct::DropAll => PunctPolicy::DropAll,
            Punct::PaperCompat => PunctPolicy::PaperCompat,
            Punct::KeepAll => PunctPolicy::KeepAll,
        };
        (self.min_count.max(1), punct)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Arch {
    Skipgram,
    Cbow,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Loss {
    Softmax,
    NegativeSampling,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value = "skipgram")]
    pub arch: Arch,
    #[arg(long, value_enum, default_value = "negative-sampling")]
    pub objective: Loss,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr_start: f64,
    #[arg(long, default_value_t = 0.0001)]
    pub lr_end: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Frequent-word subsampling threshold, e.g. 1e-3 (off by default).
    #[arg(long)]
    pub subsample: Option<f64>,
}

impl TrainArgs {
    pub fn config(&self, threads: usize) -> TrainConfig {
        TrainConfig {
            mode: match self.arch {
                Arch::Skipgram => Mode::SkipGram,
                Arch::Cbow => Mode::Cbow,
            },
            objective: match self.objective {
                Loss::Softmax => Objective::Softmax,
                Loss::NegativeSampling => Objective::NegativeSampling,
            },
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            lr_start: self.lr_start,
            lr_end: self.lr_end,
            seed: self.seed,
            dim: self.dim,
            threads,
            subsample: self.subsample,
        }
    }
}
