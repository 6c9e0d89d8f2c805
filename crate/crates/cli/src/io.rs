use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use concord::corpus::Stopwords;
use concord::sparse::FeatureMatrix;
use serde::Serialize;

use crate::args::Format;

/// Invalid combination of arguments; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub const STOPWORDS_ENV: &str = "CONCORD_STOPWORDS";

pub fn reader(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Flag, then `$CONCORD_STOPWORDS`, then the built-in list.
pub fn stopwords(flag: Option<&Path>) -> Result<Stopwords> {
    let path = match flag {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(STOPWORDS_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
    };
    match path {
        Some(p) => {
            let text = fs::read_to_string(&p).with_context(|| format!("cannot read stopwords {}", p.display()))?;
            Ok(Stopwords::from_text(&text))
        }
        None => Ok(Stopwords::embedded()),
    }
}

pub fn docs_path(matrix: &Path, docs: Option<&Path>) -> PathBuf {
    docs.map(Path::to_path_buf).unwrap_or_else(|| matrix.with_file_name("docs.txt"))
}

pub fn read_docs(path: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for line in reader(path)?.lines() {
        let line = line?;
        let id = line.trim();
        if !id.is_empty() {
            ids.push(id.to_string());
        }
    }
    Ok(ids)
}

/// Matrix plus its row ids; the two must agree in length.
pub fn read_matrix(matrix: &Path, docs: Option<&Path>) -> Result<(FeatureMatrix, Vec<String>)> {
    let m = FeatureMatrix::read_triplets(reader(matrix)?).with_context(|| format!("reading {}", matrix.display()))?;
    let dp = docs_path(matrix, docs);
    let ids = read_docs(&dp)?;
    if ids.len() != m.rows() {
        anyhow::bail!("{} lists {} documents but the matrix has {} rows", dp.display(), ids.len(), m.rows());
    }
    Ok((m, ids))
}

pub fn index_fn(ids: &[String]) -> impl Fn(&str) -> Option<usize> + '_ {
    let map: std::collections::HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    move |id| map.get(id).copied()
}

/// JSON prints the value on one line; TSV prints one `key<TAB>value` line
/// per top-level field.
pub fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(match (format, &v) {
        (Format::Tsv, serde_json::Value::Object(map)) => {
            let mut s = String::new();
            for (k, v) in map {
                match v {
                    serde_json::Value::String(x) => s.push_str(&format!("{k}\t{x}\n")),
                    other => s.push_str(&format!("{k}\t{other}\n")),
                }
            }
            s
        }
        _ => format!("{v}\n"),
    })
}

pub fn emit<T: Serialize>(value: &T, format: Format) -> Result<()> {
    let s = render(value, format)?;
    let mut out = std::io::stdout().lock();
    out.write_all(s.as_bytes())?;
    out.flush()?;
    Ok(())
}
