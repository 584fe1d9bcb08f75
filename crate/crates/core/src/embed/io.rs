use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::model::EmbeddingModel;
use super::EmbedError;
use crate::corpus::Vocabulary;

const MAGIC: &[u8; 4] = b"W2VM";
const FORMAT_VERSION: u32 = 1;

/// Writes the binary model: magic, version, V, N, then `WI` and `WO`
/// row-major as little-endian `f32`.
pub fn write_binary<W: Write>(model: &EmbeddingModel<f32>, mut out: W) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(model.vocab_size() as u64).to_le_bytes())?;
    out.write_all(&(model.dim() as u64).to_le_bytes())?;
    for x in model.wi() {
        out.write_all(&x.to_le_bytes())?;
    }
    for x in model.wo() {
        out.write_all(&x.to_le_bytes())?;
    }
    out.flush()
}

fn read_array<const K: usize, R: Read>(input: &mut R, what: &str) -> Result<[u8; K], EmbedError> {
    let mut buf = [0u8; K];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => EmbedError::Format(format!("truncated while reading {what}")),
        _ => EmbedError::Io(e),
    })?;
    Ok(buf)
}

fn read_matrix<R: Read>(input: &mut R, len: usize, what: &str) -> Result<Vec<f32>, EmbedError> {
    let mut bytes = Vec::new();
    let wanted = len as u64 * 4;
    input.take(wanted).read_to_end(&mut bytes)?;
    if bytes.len() as u64 != wanted {
        return Err(EmbedError::Format(format!("truncated while reading {what}")));
    }
    let values: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(EmbedError::Format(format!("{what} contains non-finite values")));
    }
    Ok(values)
}

/// Reads a binary model whose rows are labelled by `vocab`.
pub fn read_binary<R: Read>(mut input: R, vocab: Vocabulary) -> Result<EmbeddingModel<f32>, EmbedError> {
    if &read_array::<4, _>(&mut input, "magic")? != MAGIC {
        return Err(EmbedError::Format("bad magic, not a model file".into()));
    }
    let version = u32::from_le_bytes(read_array(&mut input, "version")?);
    if version != FORMAT_VERSION {
        return Err(EmbedError::Format(format!("unsupported format version {version}")));
    }
    let v = u64::from_le_bytes(read_array(&mut input, "header")?);
    let n = u64::from_le_bytes(read_array(&mut input, "header")?);
    if v != vocab.len() as u64 {
        return Err(EmbedError::Format(format!("model has {v} rows but vocabulary has {} words", vocab.len())));
    }
    let len = v
        .checked_mul(n)
        .and_then(|x| usize::try_from(x).ok())
        .filter(|_| n > 0)
        .ok_or_else(|| EmbedError::Format(format!("implausible shape {v} x {n}")))?;
    let wi = read_matrix(&mut input, len, "WI")?;
    let wo = read_matrix(&mut input, len, "WO")?;
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(EmbedError::Format("trailing bytes after WO".into()));
    }
    EmbeddingModel::from_matrices(vocab, n as usize, wi, wo)
}

/// The vocabulary file stored next to a model file: `model.bin` ->
/// `model.bin.vocab`.
pub fn vocab_path_for(model_path: &Path) -> PathBuf {
    let mut name = model_path.as_os_str().to_owned();
    name.push(".vocab");
    PathBuf::from(name)
}

/// Writes `path` and its vocabulary file.
pub fn save_model(model: &EmbeddingModel<f32>, path: &Path) -> Result<(), EmbedError> {
    write_binary(model, BufWriter::new(File::create(path)?))?;
    let mut vocab_out = BufWriter::new(File::create(vocab_path_for(path))?);
    model.vocab().write_tsv(&mut vocab_out)?;
    vocab_out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel<f32>, EmbedError> {
    let vocab = Vocabulary::read_tsv(BufReader::new(File::open(vocab_path_for(path))?))?;
    read_binary(BufReader::new(File::open(path)?), vocab)
}

/// Text export: a `V N` header, then `word v1 ... vN` per word (input
/// vectors, six decimals).
pub fn write_text<W: Write>(model: &EmbeddingModel<f32>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", model.vocab_size(), model.dim())?;
    for (i, word, _) in model.vocab().iter() {
        out.write_all(word.as_bytes())?;
        for x in model.input_vector(i) {
            write!(out, " {x:.6}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextVectors {
    pub dim: usize,
    pub words: Vec<String>,
    pub vectors: Vec<Vec<f32>>,
}

pub fn read_text<R: BufRead>(input: R) -> Result<TextVectors, EmbedError> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| EmbedError::Format("empty vector file".into()))??;
    let bad_header = || EmbedError::Format(format!("bad header {header:?}"));
    let mut fields = header.split_whitespace().map(str::parse::<usize>);
    let (v, dim) = match (fields.next(), fields.next(), fields.next()) {
        (Some(Ok(v)), Some(Ok(n)), None) => (v, n),
        _ => return Err(bad_header()),
    };
    let mut words = Vec::with_capacity(v);
    let mut vectors = Vec::with_capacity(v);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let word = parts.next().unwrap_or_default().to_string();
        let vector = parts
            .map(str::parse::<f32>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbedError::Format(format!("line {}: {e}", lineno + 2)))?;
        if vector.len() != dim {
            return Err(EmbedError::Format(format!("line {}: {} values, expected {dim}", lineno + 2, vector.len())));
        }
        words.push(word);
        vectors.push(vector);
    }
    if words.len() != v {
        return Err(EmbedError::Format(format!("header promises {v} words, found {}", words.len())));
    }
    Ok(TextVectors { dim, words, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::init_model;

    fn model() -> EmbeddingModel<f32> {
        let vocab = Vocabulary::from_entries(vec![("a".into(), 3), ("b".into(), 2), ("c".into(), 1)]).unwrap();
        let mut m: EmbeddingModel<f32> = init_model(vocab, 4, 11).unwrap();
        m.set_wo_at(2, 1, 0.75);
        m
    }

    #[test]
    fn binary_round_trip() {
        let m = model();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"W2VM");
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 2 * 3 * 4 * 4);
        // WO starts after WI; WO[2][1] sits at row 2, column 1.
        let off = 24 + 48 + (2 * 3 + 1) * 4;
        assert_eq!(f32::from_le_bytes(buf[off..off + 4].try_into().unwrap()), 0.75);
        let back = read_binary(&buf[..], m.vocab().clone()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn binary_rejects_corruption() {
        let m = model();
        let mut buf = Vec::new();
        write_binary(&m, &mut buf).unwrap();
        let vocab = m.vocab().clone();
        assert!(matches!(read_binary(&buf[..buf.len() - 1], vocab.clone()), Err(EmbedError::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(&bad[..], vocab.clone()), Err(EmbedError::Format(_))));
        let mut extra = buf.clone();
        extra.push(0);
        assert!(read_binary(&extra[..], vocab).is_err());
        let small = Vocabulary::from_entries(vec![("a".into(), 1), ("b".into(), 1)]).unwrap();
        assert!(read_binary(&buf[..], small).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        let m = model();
        save_model(&m, &path).unwrap();
        assert!(dir.path().join("model.bin.vocab").exists());
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn text_round_trip() {
        let m = model();
        let mut buf = Vec::new();
        write_text(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 4\na "));
        let parsed = read_text(&buf[..]).unwrap();
        assert_eq!(parsed.words, ["a", "b", "c"]);
        for (i, v) in parsed.vectors.iter().enumerate() {
            for (x, y) in v.iter().zip(m.input_vector(i)) {
                assert!((x - y).abs() <= 5e-7 + f32::EPSILON);
            }
        }
        assert!(read_text("2 4\na 1 2 3 4\n".as_bytes()).is_err());
        assert!(read_text("1 2\na 1\n".as_bytes()).is_err());
    }
}
