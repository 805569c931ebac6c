use std::collections::BTreeMap;
use std::path::PathBuf;

use aimix_core::analysis::{histogram, histogram_to_csv};
use aimix_core::benchmark::Benchmark;
use aimix_core::corpus::{GroupKey, group_documents};
use aimix_core::simulation::all_group_logodds;
use aimix_core::simulation::{run_alpha_null, run_logodds_null};
use aimix_core::stats::{mean_variance, top_ai_like_words, word_stats_rows, word_stats_to_csv};
use serde_json::json;

use crate::commands::estimate::benchmark_files;
use crate::commands::{corpus_format, format_label, load_docs};
use crate::config::{defaults, resolve};
use crate::manifest::{MANIFEST_NAME, Manifest};
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Null design: labels (log-odds) or alpha (group membership)
    #[arg(long)]
    design: String,

    /// Paired corpus to permute
    #[arg(long)]
    corpus: PathBuf,

    /// Corpus format: auto|jsonl|csv
    #[arg(long, default_value = "auto")]
    format: String,

    /// Permutation rounds (default 50 for labels, 300 for alpha)
    #[arg(long)]
    rounds: Option<usize>,

    /// Directory receiving the report and summary tables
    #[arg(long)]
    out_dir: PathBuf,

    /// Tracked-words file, one word per line (labels design; default:
    /// most AI-leaning words by group coverage)
    #[arg(long)]
    words: Option<PathBuf>,

    /// How many auto-selected tracked words (labels design)
    #[arg(long)]
    top_words: Option<usize>,

    /// Minimum group coverage for auto-selected words (labels design)
    #[arg(long)]
    min_groups: Option<usize>,

    /// Vocabulary threshold for group benchmarks
    #[arg(long)]
    min_weight_group: Option<f64>,

    /// One benchmark applied to every synthetic group (alpha design)
    #[arg(long)]
    benchmark: Option<PathBuf>,

    /// Per-group benchmark directory (alpha design)
    #[arg(long)]
    benchmark_dir: Option<PathBuf>,

    /// Histogram bin width for round means (alpha design)
    #[arg(long)]
    bin_width: Option<f64>,
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    match args.design.as_str() {
        "labels" => run_labels(args, ctx),
        "alpha" => run_alpha(args, ctx),
        other => Err(CliError::Usage(format!(
            "unknown design {other:?} (expected labels|alpha)"
        ))),
    }
}

fn run_labels(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let rounds = resolve(args.rounds, ctx.file.rounds_labels, defaults::ROUNDS_LABELS);
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
    log::info!("tracking {} words over {rounds} rounds", words.len());

    let report = run_logodds_null(&docs, rounds, &words, mwg, ctx.seed)?;
    let rows = word_stats_rows(&words, &actual, &report.round_value_maps());

    let mut outputs = OutputSet::new();
    outputs.add(
        args.out_dir.join("simulation_report.json"),
        report.to_json(),
    );
    outputs.add(
        args.out_dir.join("word_stats.csv"),
        word_stats_to_csv(&rows),
    );

    let mut replay = vec![
        "simulate".to_string(),
        "--design".into(),
        "labels".into(),
        "--corpus".into(),
        args.corpus.display().to_string(),
        "--format".into(),
        format_label(fmt).to_string(),
        "--rounds".into(),
        rounds.to_string(),
        "--out-dir".into(),
        args.out_dir.display().to_string(),
        "--min-weight-group".into(),
        mwg.to_string(),
        "--seed".into(),
        ctx.seed.to_string(),
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
        "simulate",
        replay,
        json!({
            "design": "labels",
            "corpus": args.corpus.display().to_string(),
            "rounds": rounds,
            "min_weight_group": mwg,
            "tracked_words": words,
            "seed": ctx.seed,
        }),
    );
    manifest.record_input(&args.corpus)?;
    if let Some(words_path) = &args.words {
        manifest.record_input(words_path)?;
    }
    for path in outputs.paths() {
        manifest.record_output(path);
    }
    outputs.add(args.out_dir.join(MANIFEST_NAME), manifest.to_json());
    outputs.commit()?;
    Ok(())
}

fn run_alpha(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let rounds = resolve(args.rounds, ctx.file.rounds_alpha, defaults::ROUNDS_ALPHA);
    let bin_width = resolve(
        args.bin_width,
        ctx.file.bin_width_sim,
        defaults::BIN_WIDTH_SIM,
    );
    let fmt = corpus_format(&args.corpus, &args.format)?;
    let docs = load_docs(&args.corpus, &args.format)?;
    let groups: Vec<GroupKey> = group_documents(&docs).into_keys().collect();

    // Either one pooled benchmark standing in for every group, or one
    // file per group from a directory.
    let mut loaded: Vec<Benchmark> = Vec::new();
    let mut bench_paths: Vec<PathBuf> = Vec::new();
    let by_group: BTreeMap<GroupKey, &Benchmark>;
    match (&args.benchmark, &args.benchmark_dir) {
        (Some(path), None) => {
            bench_paths.push(path.clone());
            loaded.push(Benchmark::load(path)?);
            let bench = &loaded[0];
            by_group = groups.iter().map(|k| (k.clone(), bench)).collect();
        }
        (None, Some(dir)) => {
            bench_paths = benchmark_files(dir)?;
            for path in &bench_paths {
                loaded.push(Benchmark::load(path)?);
            }
            let mut map: BTreeMap<GroupKey, &Benchmark> = BTreeMap::new();
            for bench in &loaded {
                if let Some(key) = bench.scope().group_key() {
                    map.insert(key.clone(), bench);
                }
            }
            by_group = map;
        }
        _ => {
            return Err(CliError::Usage(
                "pass exactly one of --benchmark or --benchmark-dir".into(),
            ));
        }
    }

    let report = run_alpha_null(&docs, &by_group, rounds, ctx.seed)?;
    let round_means = report.round_means();
    let observed = report.observed_values();
    let (mean_rounds, var_rounds) = mean_variance(&round_means);
    let (mean_observed, var_observed) = mean_variance(&observed);

    let bins = histogram(&round_means, bin_width);
    let mut summary = String::from("stat,value\n");
    summary.push_str(&format!("rounds,{}\n", report.rounds.len()));
    summary.push_str(&format!("round_mean_avg,{mean_rounds}\n"));
    summary.push_str(&format!("round_mean_sd,{}\n", var_rounds.sqrt()));
    summary.push_str(&format!("observed_group_avg,{mean_observed}\n"));
    summary.push_str(&format!("observed_group_sd,{}\n", var_observed.sqrt()));

    let mut outputs = OutputSet::new();
    outputs.add(
        args.out_dir.join("simulation_report.json"),
        report.to_json(),
    );
    outputs.add(
        args.out_dir.join("round_means_histogram.csv"),
        histogram_to_csv(&bins),
    );
    outputs.add(args.out_dir.join("alpha_null_summary.csv"), summary);

    let mut replay = vec![
        "simulate".to_string(),
        "--design".into(),
        "alpha".into(),
        "--corpus".into(),
        args.corpus.display().to_string(),
        "--format".into(),
        format_label(fmt).to_string(),
        "--rounds".into(),
        rounds.to_string(),
        "--out-dir".into(),
        args.out_dir.display().to_string(),
        "--bin-width".into(),
        bin_width.to_string(),
        "--seed".into(),
        ctx.seed.to_string(),
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
    let mut manifest = Manifest::new(
        "simulate",
        replay,
        json!({
            "design": "alpha",
            "corpus": args.corpus.display().to_string(),
            "rounds": rounds,
            "bin_width": bin_width,
            "benchmarks": bench_paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "seed": ctx.seed,
        }),
    );
    manifest.record_input(&args.corpus)?;
    for path in &bench_paths {
        manifest.record_input(path)?;
    }
    for path in outputs.paths() {
        manifest.record_output(path);
    }
    outputs.add(args.out_dir.join(MANIFEST_NAME), manifest.to_json());
    outputs.commit()?;
    Ok(())
}
