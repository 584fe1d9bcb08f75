//! Text-to-embeddings toolkit: EPUB ingestion, cleaning, tokenization,
//! normalization, corpus statistics, word2vec training and similarity queries.

pub mod corpus;
pub mod embed;
pub mod ingest;
pub mod normalize;
pub mod par;
pub mod similarity;
pub mod textprep;

/// Three already-lemmatized sample sentences, one per line.
pub const SAMPLE_CORPUS: &str = include_str!("../data/mini_corpus.txt");
