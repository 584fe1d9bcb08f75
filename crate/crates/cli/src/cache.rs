//! Content-hash staleness checks for pipeline stages. A stage is skipped
//! when the hash of its inputs and parameters matches the stamp left by the
//! previous run and its outputs still hash to what that run produced.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Cached,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Ran => "done",
            Outcome::Cached => "cached",
        }
    }
}

fn hash_into(hasher: &mut Sha256, path: &Path) -> io::Result<()> {
    let meta = fs::metadata(path)?;
    if meta.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for entry in entries {
            hasher.update(entry.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
            hasher.update([0]);
            hash_into(hasher, &entry)?;
        }
    } else {
        hasher.update(meta.len().to_le_bytes());
        hasher.update(fs::read(path)?);
    }
    Ok(())
}

fn digest(parts: &[&Path], extra: &str) -> io::Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(extra.as_bytes());
    for p in parts {
        hasher.update([0xff]);
        hash_into(&mut hasher, p)?;
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub struct Stamps {
    dir: PathBuf,
}

impl Stamps {
    pub fn new(workdir: &Path) -> Self {
        Stamps { dir: workdir.join(".stamps") }
    }

    /// Runs `work` unless a stamp shows identical inputs, parameters and
    /// untouched outputs.
    pub fn run(
        &self,
        stage: &str,
        inputs: &[&Path],
        params: &str,
        outputs: &[&Path],
        work: impl FnOnce() -> anyhow::Result<()>,
    ) -> anyhow::Result<Outcome> {
        let key = digest(inputs, &format!("{stage}\n{params}"))?;
        let stamp_path = self.dir.join(stage);
        if let Ok(stamp) = fs::read_to_string(&stamp_path) {
            let mut lines = stamp.lines();
            if lines.next() == Some(key.as_str()) && outputs.iter().all(|p| p.exists()) {
                if let (Some(recorded), Ok(current)) = (lines.next(), digest(outputs, "")) {
                    if recorded == current {
                        return Ok(Outcome::Cached);
                    }
                }
            }
        }
        let _ = fs::remove_file(&stamp_path);
        work()?;
        fs::create_dir_all(&self.dir)?;
        fs::write(&stamp_path, format!("{key}\n{}\n", digest(outputs, "")?))?;
        Ok(Outcome::Ran)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn reruns_only_on_change() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        let output = dir.path().join("out.txt");
        fs::write(&input, "a").unwrap();
        let stamps = Stamps::new(dir.path());
        let runs = Cell::new(0);
        let stage = |params: &str| {
            stamps
                .run("copy", &[&input], params, &[&output], || {
                    runs.set(runs.get() + 1);
                    fs::copy(&input, &output)?;
                    Ok(())
                })
                .unwrap()
        };
        assert_eq!(stage("p"), Outcome::Ran);
        assert_eq!(stage("p"), Outcome::Cached);
        assert_eq!(stage("q"), Outcome::Ran);
        fs::write(&input, "b").unwrap();
        assert_eq!(stage("q"), Outcome::Ran);
        fs::write(&output, "tampered").unwrap();
        assert_eq!(stage("q"), Outcome::Ran);
        fs::remove_file(&output).unwrap();
        assert_eq!(stage("q"), Outcome::Ran);
        assert_eq!(stage("q"), Outcome::Cached);
        assert_eq!(runs.get(), 5);
    }
}
