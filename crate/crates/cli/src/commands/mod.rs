pub mod analyze;
pub mod build_bench;
pub mod estimate;
pub mod rephrase;
pub mod simulate;
pub mod synth;
pub mod word_stats;

use std::path::Path;

use aimix_core::corpus::{CorpusFormat, Document, load_corpus};

use crate::CliError;

/// Resolve `--format auto|jsonl|csv` (auto sniffs the extension).
pub fn corpus_format(path: &Path, format: &str) -> Result<CorpusFormat, CliError> {
    match format {
        "jsonl" => Ok(CorpusFormat::Jsonl),
        "csv" => Ok(CorpusFormat::Csv),
        "auto" => Ok(
            match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
                "csv" => CorpusFormat::Csv,
                _ => CorpusFormat::Jsonl,
            },
        ),
        other => Err(CliError::Usage(format!(
            "unknown corpus format {other:?} (expected auto|jsonl|csv)"
        ))),
    }
}

pub fn load_docs(path: &Path, format: &str) -> Result<Vec<Document>, CliError> {
    let fmt = corpus_format(path, format)?;
    Ok(load_corpus(path, fmt)?)
}

pub fn format_label(fmt: CorpusFormat) -> &'static str {
    match fmt {
        CorpusFormat::Jsonl => "jsonl",
        CorpusFormat::Csv => "csv",
    }
}
