use std::path::PathBuf;

use aimix_core::simulation::all_group_logodds;
use aimix_core::stats::{top_ai_like_words, word_stats_rows, word_stats_to_csv};
use serde_json::json;

use crate::commands::{corpus_format, format_label, load_docs};
use crate::config::{defaults, resolve};
use crate::manifest::Manifest;
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Paired corpus
    #[arg(long)]
    corpus: PathBuf,

    /// Corpus format: auto|jsonl|csv
    #[arg(long, default_value = "auto")]
    format: String,

    /// Tracked-words file, one per line (default: most AI-leaning)
    #[arg(long)]
    words: Option<PathBuf>,

    /// How many auto-selected words
    #[arg(long)]
    top_words: Option<usize>,

    /// Minimum group coverage for auto-selected words
    #[arg(long)]
    min_groups: Option<usize>,

    /// Vocabulary threshold for group benchmarks
    #[arg(long)]
    min_weight_group: Option<f64>,

    /// Output CSV
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let mwg = resolve(
        args.min_weight_group,
        ctx.file.min_weight_group,
        defaults::MIN_WEIGHT_GROUP,
    );
    let top_words = resolve(args.top_words, ctx.file.top_words, defaults::TOP_WORDS);
    let min_groups = resolve(
        args.min_groups,
        ctx.file.min_groups_per_word,
        defaults::MIN_GROUPS_PER_WORD,
    );
    let fmt = corpus_format(&args.corpus, &args.format)?;
    let docs = load_docs(&args.corpus, &args.format)?;

    let actual = all_group_logodds(&docs, mwg)?;
    let words: Vec<String> = match &args.words {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(anyhow::anyhow!("reading {}: {e}", path.display())))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        None => top_ai_like_words(&actual, min_groups, Some(top_words)),
    };
    if words.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no tracked words (coverage threshold {min_groups} too high for this corpus?)"
        )));
    }
    let rows = word_stats_rows(&words, &actual, &[]);

    let mut outputs = OutputSet::new();
    outputs.add(&args.out, word_stats_to_csv(&rows));

    let mut replay = vec![
        "word-stats".to_string(),
        "--corpus".into(),
        args.corpus.display().to_string(),
        "--format".into(),
        format_label(fmt).to_string(),
        "--min-weight-group".into(),
        mwg.to_string(),
        "--out".into(),
        args.out.display().to_string(),
    ];
    if let Some(words_path) = &args.words {
        replay.push("--words".into());
        replay.push(words_path.display().to_string());
    } else {
        replay.push("--top-words".into());
        replay.push(top_words.to_string());
        replay.push("--min-groups".into());
        replay.push(min_groups.to_string());
    }
    let mut manifest = Manifest::new(
        "word-stats",
        replay,
        json!({
            "corpus": args.corpus.display().to_string(),
            "min_weight_group": mwg,
            "tracked_words": words,
        }),
    );
    manifest.record_input(&args.corpus)?;
    if let Some(words_path) = &args.words {
        manifest.record_input(words_path)?;
    }
    manifest.record_output(&args.out);
    let manifest_path = args.out.with_file_name(format!(
        "{}.manifest.json",
        args.out
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("out")
    ));
    outputs.add(manifest_path, manifest.to_json());
    outputs.commit()?;
    Ok(())
}
