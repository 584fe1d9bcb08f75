use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use epic_embed::corpus::{
    build_vocabulary, cooccurrence_pairs, length_distribution, top_frequencies, CooccurrenceMode, PunctPolicy,
    Vocabulary,
};
use epic_embed::embed::{save_model, train_with_report, write_text, TrainConfig, TrainReport};
use epic_embed::ingest::{load_sections, read_sections, write_sections, MANIFEST_FILE};
use epic_embed::normalize::{normalize_corpus, LemmaLexicon, NormalizeMode, StopwordSet};
use epic_embed::textprep::{clean_text, sentence_lengths, Abbreviations, CleanOptions, TokenCorpus};

/// Default artifact locations inside the work directory.
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout { root: root.to_path_buf() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sections(&self) -> PathBuf {
        self.root.join("sections")
    }

    pub fn clean(&self) -> PathBuf {
        self.root.join("clean.txt")
    }

    pub fn tokens(&self) -> PathBuf {
        self.root.join("tokens.txt")
    }

    pub fn normalized(&self) -> PathBuf {
        self.root.join("normalized.txt")
    }

    pub fn stats(&self) -> PathBuf {
        self.root.join("stats")
    }

    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.tsv")
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("model.bin")
    }

    pub fn vectors(&self) -> PathBuf {
        self.root.join("vectors.txt")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_corpus(path: &Path) -> Result<TokenCorpus> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    TokenCorpus::read_cache(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_corpus(corpus: &TokenCorpus, path: &Path) -> Result<()> {
    corpus.write_cache(create(path)?).with_context(|| format!("writing {}", path.display()))
}

pub fn load_abbreviations(path: Option<&Path>) -> Result<Abbreviations> {
    Ok(match path {
        Some(p) => Abbreviations::from_lines(&read_text(p)?),
        None => Abbreviations::default(),
    })
}

pub fn load_stopwords(path: Option<&Path>) -> Result<StopwordSet> {
    Ok(match path {
        Some(p) => StopwordSet::from_lines(&read_text(p)?),
        None => StopwordSet::default(),
    })
}

pub fn load_lexicon(path: Option<&Path>) -> Result<LemmaLexicon> {
    Ok(match path {
        Some(p) => LemmaLexicon::from_exceptions(&read_text(p)?).with_context(|| format!("in {}", p.display()))?,
        None => LemmaLexicon::default(),
    })
}

/// Returns the number of sections written.
pub fn ingest(input: &Path, out_dir: &Path) -> Result<usize> {
    let sections = load_sections(input)?;
    if out_dir.is_dir() {
        for entry in fs::read_dir(out_dir)? {
            let path = entry?.path();
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            if name == MANIFEST_FILE || (name.starts_with("section_") && name.ends_with(".txt")) {
                fs::remove_file(&path)?;
            }
        }
    }
    write_sections(out_dir, &sections).with_context(|| format!("writing sections to {}", out_dir.display()))?;
    Ok(sections.len())
}

/// Returns the cleaned length in bytes.
pub fn clean(sections_dir: &Path, out: &Path, options: CleanOptions) -> Result<usize> {
    let sections = read_sections(sections_dir).with_context(|| format!("reading sections from {}", sections_dir.display()))?;
    let cleaned = clean_text(&sections, options);
    let mut w = create(out)?;
    w.write_all(cleaned.as_str().as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(cleaned.as_str().len())
}

pub fn tokenize(clean_file: &Path, out: &Path, abbreviations: &Abbreviations) -> Result<TokenCorpus> {
    let text = read_text(clean_file)?;
    let cleaned = epic_embed::textprep::CleanCorpus::from_text(&text, CleanOptions::default());
    let corpus = TokenCorpus::from_clean(&cleaned, abbreviations);
    write_corpus(&corpus, out)?;
    Ok(corpus)
}

pub fn normalize(
    tokens: &Path,
    out: &Path,
    mode: NormalizeMode,
    stops: &StopwordSet,
    lexicon: &LemmaLexicon,
) -> Result<TokenCorpus> {
    let corpus = read_corpus(tokens)?;
    let normalized = normalize_corpus(&corpus, mode, stops, lexicon);
    write_corpus(&normalized, out)?;
    Ok(normalized)
}

pub struct StatsSpec {
    pub top_k: usize,
    pub bin_width: usize,
    pub mode: CooccurrenceMode,
}

/// Writes `report.tsv`, `histogram.csv`, `top_words.tsv` and `top_pairs.tsv`.
pub fn stats(input: &Path, raw: Option<&Path>, out_dir: &Path, spec: &StatsSpec) -> Result<()> {
    let corpus = read_corpus(input)?;
    let raw_corpus = raw.map(read_corpus).transpose()?;
    let counted = raw_corpus.as_ref().unwrap_or(&corpus);
    let lengths = sentence_lengths(counted);
    let dist = length_distribution(&lengths, spec.bin_width);

    let mut report = create(&out_dir.join("report.tsv"))?;
    writeln!(report, "sentences\t{}", counted.len())?;
    writeln!(report, "tokens\t{}", counted.token_count())?;
    writeln!(report, "normalized_sentences\t{}", corpus.len())?;
    writeln!(report, "normalized_tokens\t{}", corpus.token_count())?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "NA".into());
    writeln!(report, "mean_length\t{}", opt(dist.mean))?;
    writeln!(report, "median_length\t{}", opt(dist.median))?;
    writeln!(report, "max_length\t{}", dist.max.map_or("NA".into(), |m| m.to_string()))?;
    writeln!(report, "longest_sentence\t{}", dist.argmax_sentence.map_or("NA".into(), |m| m.to_string()))?;
    writeln!(report, "modal_bin\t{}", dist.modal_bin().map_or("NA".into(), |m| m.to_string()))?;
    writeln!(report, "skewness\t{}", opt(dist.skewness))?;
    report.flush()?;

    dist.write_csv(create(&out_dir.join("histogram.csv"))?)?;

    let mut words = create(&out_dir.join("top_words.tsv"))?;
    for (rank, (word, count)) in top_frequencies(&corpus, spec.top_k).iter().enumerate() {
        writeln!(words, "{}\t{word}\t{count}", rank + 1)?;
    }
    words.flush()?;

    let mut pairs = create(&out_dir.join("top_pairs.tsv"))?;
    for (rank, ((a, b), count)) in cooccurrence_pairs(&corpus, spec.top_k, spec.mode).iter().enumerate() {
        writeln!(pairs, "{}\t{a}\t{b}\t{count}", rank + 1)?;
    }
    pairs.flush()?;
    Ok(())
}

pub fn vocab(input: &Path, out: &Path, min_count: u64, punct: PunctPolicy) -> Result<Vocabulary> {
    let corpus = read_corpus(input)?;
    let vocab = build_vocabulary(&corpus, min_count, punct)?;
    let mut w = create(out)?;
    vocab.write_tsv(&mut w)?;
    w.flush()?;
    Ok(vocab)
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Vocabulary::read_tsv(BufReader::new(file)).with_context(|| format!("in {}", path.display()))
}

pub fn train(input: &Path, vocab: &Path, model_out: &Path, vectors_out: &Path, config: &TrainConfig) -> Result<TrainReport> {
    let corpus = read_corpus(input)?;
    let vocab = read_vocab(vocab)?;
    let (model, report) = train_with_report(&corpus, &vocab, config)?;
    if let Some(parent) = model_out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_model(&model, model_out).with_context(|| format!("writing {}", model_out.display()))?;
    write_text(&model, create(vectors_out)?).with_context(|| format!("writing {}", vectors_out.display()))?;
    Ok(report)
}
