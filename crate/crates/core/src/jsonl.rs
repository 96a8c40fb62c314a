//! JSON Lines helpers shared by every file format in the crate.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, RecordError, Result};

/// A parsed record with its 1-based line number.
pub type Numbered<T> = (usize, T);

/// Read every non-blank line of `reader` as a `T`. I/O errors abort; parse
/// errors are returned per line so callers can choose skip or strict mode.
pub fn read_records<T: DeserializeOwned, R: BufRead>(
    reader: R,
) -> std::io::Result<Vec<std::result::Result<Numbered<T>, RecordError>>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<T>(&line)
            .map(|v| (i + 1, v))
            .map_err(|e| RecordError {
                line: i + 1,
                message: e.to_string(),
            });
        out.push(parsed);
    }
    Ok(out)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Read a file where every record must parse.
pub fn read_strict<T: DeserializeOwned>(path: &Path) -> Result<Vec<Numbered<T>>> {
    let records = read_records(open(path)?).map_err(|e| Error::io(path, e))?;
    records
        .into_iter()
        .map(|r| {
            r.map_err(|source| Error::Record {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

pub fn write<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(&r).map_err(|e| Error::Invalid(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Invalid(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Record {
        path: path.to_path_buf(),
        source: RecordError {
            line: e.line(),
            message: e.to_string(),
        },
    })
}
