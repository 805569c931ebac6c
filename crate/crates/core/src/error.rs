use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed records in {path}:\n{}", format_record_errors(.problems))]
    MalformedRecords {
        path: PathBuf,
        problems: Vec<(usize, String)>,
    },

    #[error("duplicate doc_id {doc_id:?} in corpus")]
    DuplicateDocId { doc_id: String },

    #[error("invalid document {doc_id:?}: {reason}")]
    InvalidDocument { doc_id: String, reason: String },

    #[error("label {label:?} not covered by the {axis} taxonomy")]
    UnknownLabel { axis: &'static str, label: String },

    #[error("publication has no affiliation countries; cannot be attributed")]
    EmptyAffiliations,

    #[error("document {doc_id:?} has no AI text")]
    MissingAiText { doc_id: String },

    #[error("vocabulary is empty after thresholding; benchmark unusable")]
    EmptyVocabulary,

    #[error("vocabulary word {word:?} has zero weighted count")]
    ZeroCountWord { word: String },

    #[error("{name} = {value} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },

    #[error("{what} must be nonempty")]
    EmptyInput { what: &'static str },

    #[error("optimizer failed to converge within {iterations} iterations (best iterate {best})")]
    NoConvergence { best: f64, iterations: usize },

    #[error("only {converged} bootstrap replicates converged; need at least 2")]
    TooFewReplicates { converged: usize },

    #[error("invalid argument for {what}: {reason}")]
    Domain { what: &'static str, reason: String },

    #[error("no variation to decompose (total sum of squares is zero)")]
    NoVariation,

    #[error("benchmark for group {group} not available")]
    MissingBenchmark { group: String },

    #[error("provider configuration error: {reason}")]
    ProviderConfig { reason: String },

    #[error("provider request failed after {attempts} attempts: {reason}")]
    ProviderRequest { attempts: u32, reason: String },

    #[error("provider response has no expansion section; raw payload:\n{payload}")]
    MissingExpansion { payload: String },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("unsupported benchmark file version {found} (expected {expected})")]
    BenchmarkVersion { found: u32, expected: u32 },
}

fn format_record_errors(problems: &[(usize, String)]) -> String {
    problems
        .iter()
        .map(|(line, reason)| format!("  line {line}: {reason}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
