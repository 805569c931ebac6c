use std::path::PathBuf;

use aimix_core::corpus::corpus_to_jsonl;
use aimix_core::rephrase::{
    HttpProvider, MockProvider, Provider, ProviderConfig, RephraseCache, rephrase_corpus,
};
use serde_json::json;

use crate::commands::{corpus_format, format_label, load_docs};
use crate::config::{defaults, resolve};
use crate::manifest::Manifest;
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Corpus whose documents need AI twins
    #[arg(long)]
    corpus: PathBuf,

    /// Corpus format: auto|jsonl|csv
    #[arg(long, default_value = "auto")]
    format: String,

    /// Output corpus with text_ai filled (JSON Lines)
    #[arg(long)]
    out: PathBuf,

    /// Provider: mock|live
    #[arg(long, default_value = "mock")]
    provider: String,

    /// Mock substitution rate
    #[arg(long)]
    rate: Option<f64>,

    /// Cache directory mapping doc_id to rewritten text
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Concurrent provider calls
    #[arg(long)]
    parallelism: Option<usize>,

    /// Rephrase even documents that already carry text_ai
    #[arg(long)]
    force: bool,

    /// Chat-completion endpoint (live provider)
    #[arg(long)]
    endpoint: Option<String>,

    /// Model name (live provider)
    #[arg(long)]
    model: Option<String>,

    /// Environment variable holding the bearer token (live provider)
    #[arg(long)]
    auth_env: Option<String>,

    /// Request timeout in seconds (live provider)
    #[arg(long)]
    timeout_secs: Option<u64>,

    /// Retry attempts on transient failures (live provider)
    #[arg(long)]
    max_retries: Option<u32>,
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let rate = resolve(args.rate, ctx.file.rephrase_rate, defaults::REPHRASE_RATE);
    let parallelism = resolve(
        args.parallelism,
        ctx.file.parallelism,
        defaults::PARALLELISM,
    );
    let fmt = corpus_format(&args.corpus, &args.format)?;
    let mut docs = load_docs(&args.corpus, &args.format)?;

    let provider: Box<dyn Provider> = match args.provider.as_str() {
        "mock" => Box::new(MockProvider::new(ctx.seed, rate)),
        "live" => {
            let base = ProviderConfig::default();
            let config = ProviderConfig {
                endpoint: args.endpoint.clone().unwrap_or(base.endpoint),
                model_name: args.model.clone().unwrap_or(base.model_name),
                auth_token_env: args.auth_env.clone().unwrap_or(base.auth_token_env),
                timeout_secs: args.timeout_secs.unwrap_or(base.timeout_secs),
                max_retries: args.max_retries.unwrap_or(base.max_retries),
                backoff_base_ms: base.backoff_base_ms,
            };
            Box::new(HttpProvider::new(config)?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown provider {other:?} (expected mock|live)"
            )));
        }
    };

    let cache = match &args.cache_dir {
        Some(dir) => Some(RephraseCache::new(dir)?),
        None => None,
    };
    let calls = rephrase_corpus(
        &mut docs,
        provider.as_ref(),
        cache.as_ref(),
        parallelism,
        args.force,
    )?;
    log::info!("made {calls} provider calls for {} documents", docs.len());

    let mut outputs = OutputSet::new();
    outputs.add(&args.out, corpus_to_jsonl(&docs));

    let mut replay = vec![
        "rephrase".to_string(),
        "--corpus".into(),
        args.corpus.display().to_string(),
        "--format".into(),
        format_label(fmt).to_string(),
        "--out".into(),
        args.out.display().to_string(),
        "--provider".into(),
        args.provider.clone(),
        "--rate".into(),
        rate.to_string(),
        "--parallelism".into(),
        parallelism.to_string(),
        "--seed".into(),
        ctx.seed.to_string(),
    ];
    if let Some(dir) = &args.cache_dir {
        replay.push("--cache-dir".into());
        replay.push(dir.display().to_string());
    }
    if args.force {
        replay.push("--force".into());
    }
    let mut manifest = Manifest::new(
        "rephrase",
        replay,
        json!({
            "corpus": args.corpus.display().to_string(),
            "provider": args.provider,
            "rate": rate,
            "parallelism": parallelism,
            "force": args.force,
            "seed": ctx.seed,
            "provider_calls": calls,
        }),
    );
    manifest.record_input(&args.corpus)?;
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
