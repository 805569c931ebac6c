use std::path::{Path, PathBuf};

use aimix_core::benchmark::Benchmark;
use aimix_core::corpus::Document;
use aimix_core::estimator::{
    AlphaEstimate, EstimateConfig, PeriodGranularity, estimate_group_period, estimates_to_csv,
};
use serde_json::json;

use crate::commands::{corpus_format, format_label, load_docs};
use crate::config::{defaults, resolve, resolve_with};
use crate::manifest::Manifest;
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Corpus to estimate on (human text is used)
    #[arg(long)]
    corpus: PathBuf,

    /// Corpus format: auto|jsonl|csv
    #[arg(long, default_value = "auto")]
    format: String,

    /// One benchmark file (pooled or a single group)
    #[arg(long)]
    benchmark: Option<PathBuf>,

    /// Directory of benchmark files; each group is estimated under its
    /// own benchmark
    #[arg(long)]
    benchmark_dir: Option<PathBuf>,

    /// Output CSV
    #[arg(long)]
    out: PathBuf,

    /// Bucket granularity: quarter|month
    #[arg(long)]
    period: Option<String>,

    /// Bootstrap replicates per bucket
    #[arg(long)]
    bootstrap: Option<usize>,
}

pub fn benchmark_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("reading {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()) == Some("json")
                && p.file_name().and_then(|n| n.to_str()) != Some(crate::manifest::MANIFEST_NAME)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no benchmark .json files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

/// Estimate `docs` under one benchmark, filtering to the benchmark's
/// group when it is group-scoped.
pub fn estimate_under(
    docs: &[Document],
    bench: &Benchmark,
    granularity: PeriodGranularity,
    cfg: &EstimateConfig,
) -> Result<Vec<AlphaEstimate>, CliError> {
    let subset: Vec<Document> = match bench.scope().group_key() {
        None => docs.to_vec(),
        Some(key) => docs
            .iter()
            .filter(|d| d.country_group == key.country && d.field_group == key.field)
            .cloned()
            .collect(),
    };
    if subset.is_empty() {
        if let Some(key) = bench.scope().group_key() {
            log::warn!("no documents for group {key}; skipped");
        }
        return Ok(Vec::new());
    }
    Ok(estimate_group_period(&subset, bench, granularity, cfg)?)
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let bench_paths = match (&args.benchmark, &args.benchmark_dir) {
        (Some(p), None) => vec![p.clone()],
        (None, Some(dir)) => benchmark_files(dir)?,
        _ => {
            return Err(CliError::Usage(
                "pass exactly one of --benchmark or --benchmark-dir".into(),
            ));
        }
    };
    let period_str = resolve_with(
        args.period.clone(),
        ctx.file.period.clone(),
        defaults::PERIOD.to_string(),
    );
    let granularity: PeriodGranularity = period_str.parse()?;
    let bootstrap = resolve(args.bootstrap, ctx.file.bootstrap, defaults::BOOTSTRAP);
    let fmt = corpus_format(&args.corpus, &args.format)?;

    let docs = load_docs(&args.corpus, &args.format)?;
    let cfg = EstimateConfig {
        bootstrap_replicates: bootstrap,
        seed: ctx.seed,
    };

    let mut rows: Vec<AlphaEstimate> = Vec::new();
    for path in &bench_paths {
        let bench = Benchmark::load(path)?;
        rows.extend(estimate_under(&docs, &bench, granularity, &cfg)?);
    }
    rows.sort_by(|a, b| {
        (&a.group, a.period, a.benchmark_scope).cmp(&(&b.group, b.period, b.benchmark_scope))
    });
    log::info!("estimated {} buckets", rows.len());

    let mut outputs = OutputSet::new();
    outputs.add(&args.out, estimates_to_csv(&rows));

    let mut replay = vec![
        "estimate".to_string(),
        "--corpus".into(),
        args.corpus.display().to_string(),
        "--format".into(),
        format_label(fmt).to_string(),
    ];
    match (&args.benchmark, &args.benchmark_dir) {
        (Some(p), _) => {
            replay.push("--benchmark".into());
            replay.push(p.display().to_string());
        }
        (_, Some(d)) => {
            replay.push("--benchmark-dir".into());
            replay.push(d.display().to_string());
        }
        _ => unreachable!(),
    }
    replay.extend([
        "--out".to_string(),
        args.out.display().to_string(),
        "--period".into(),
        period_str.clone(),
        "--bootstrap".into(),
        bootstrap.to_string(),
        "--seed".into(),
        ctx.seed.to_string(),
    ]);

    let mut manifest = Manifest::new(
        "estimate",
        replay,
        json!({
            "corpus": args.corpus.display().to_string(),
            "benchmarks": bench_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "period": period_str,
            "bootstrap": bootstrap,
            "seed": ctx.seed,
        }),
    );
    manifest.record_input(&args.corpus)?;
    for path in &bench_paths {
        manifest.record_input(path)?;
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
