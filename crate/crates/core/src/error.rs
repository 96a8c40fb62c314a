use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A problem with one line of a line-oriented input file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    /// 1-based line number in the source file.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Record {
        path: PathBuf,
        #[source]
        source: RecordError,
    },

    #[error("invalid annotation for image {image_id}: {message}")]
    Annotation { image_id: String, message: String },

    #[error("no {kind} concept in image {image_id}")]
    NoConceptOfKind { image_id: String, kind: String },

    #[error("image {0} has no boxed objects")]
    NoBoxedObjects(String),

    #[error("unknown image id {0}")]
    UnknownImage(String),

    #[error("lookup pattern binds no position")]
    UnboundPattern,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {0} is not in the registry")]
    UnknownLabel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("taxonomy: {0}")]
    Taxonomy(String),

    #[error("empty evaluation set")]
    EmptyEvaluation,

    #[error("prediction count {predictions} does not match ground-truth count {truths}")]
    LengthMismatch { predictions: usize, truths: usize },

    #[error("missing outputs for {} question(s): {}", .0.len(), format_ids(.0))]
    MissingOutputs(Vec<String>),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("feature vector for image {image_id} has dimension {found}, expected {expected}")]
    FeatureDimension {
        image_id: String,
        expected: usize,
        found: usize,
    },

    #[error("synthetic spec: {0}")]
    Synth(String),

    #[error("{0}")]
    Invalid(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

fn format_ids(ids: &[String]) -> String {
    const SHOWN: usize = 20;
    let mut out = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(", ...");
    }
    out
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a pipeline stage name to an error.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for problems with user-supplied data (as opposed to internal failures).
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Invariant(_) => false,
            Error::Stage { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
