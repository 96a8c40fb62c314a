use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, RecordError, Result};
use crate::jsonl;

use super::{TripleRecord, TripleStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IngestMode {
    /// Skip malformed records and report them.
    #[default]
    Skip,
    /// Abort on the first malformed record.
    Strict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub ingested: usize,
    /// Records whose (subject, raw predicate, object) was already stored.
    pub duplicates: usize,
    pub errors: Vec<RecordError>,
}

impl IngestReport {
    /// Duplicates plus malformed records.
    pub fn skipped(&self) -> usize {
        self.duplicates + self.errors.len()
    }
}

/// Load a JSON Lines triple file into a fresh store.
pub fn ingest_kb(path: &Path, mode: IngestMode) -> Result<(TripleStore, IngestReport)> {
    ingest_kb_reader(jsonl::open(path)?, mode).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        Error::Record { source, .. } => Error::Record {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn ingest_kb_reader<R: BufRead>(
    reader: R,
    mode: IngestMode,
) -> Result<(TripleStore, IngestReport)> {
    let mut store = TripleStore::new();
    let mut report = IngestReport::default();
    let records = jsonl::read_records::<TripleRecord, _>(reader).map_err(|e| Error::io("", e))?;
    for record in records {
        let parsed = record.and_then(|(line, rec)| {
            rec.to_triple().map_err(|e| RecordError {
                line,
                message: e.to_string(),
            })
        });
        match parsed {
            Ok(triple) => {
                if store.insert(triple) {
                    report.ingested += 1;
                } else {
                    report.duplicates += 1;
                }
            }
            Err(err) if mode == IngestMode::Strict => {
                return Err(Error::Record {
                    path: Default::default(),
                    source: err,
                })
            }
            Err(err) => report.errors.push(err),
        }
    }
    Ok((store, report))
}
