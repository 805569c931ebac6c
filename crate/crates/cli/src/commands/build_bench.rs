use std::path::PathBuf;

use aimix_core::benchmark::{Scope, build_benchmark_with};
use aimix_core::corpus::{TaxonomyConfig, group_documents, sample_training};
use aimix_core::{Error, Result as CoreResult};
use serde_json::json;

use crate::commands::{corpus_format, format_label, load_docs};
use crate::config::{defaults, resolve};
use crate::manifest::{MANIFEST_NAME, Manifest};
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Paired corpus (every document needs text_ai)
    #[arg(long)]
    corpus: PathBuf,

    /// Corpus format: auto|jsonl|csv
    #[arg(long, default_value = "auto")]
    format: String,

    /// Which benchmarks to build: pooled|group|both
    #[arg(long, default_value = "both")]
    scope: String,

    /// Directory receiving pooled.json / <country>__<field>.json
    #[arg(long)]
    out_dir: PathBuf,

    /// Per-group training sample cap (0 disables sampling)
    #[arg(long)]
    cap: Option<usize>,

    /// Vocabulary threshold for the pooled benchmark
    #[arg(long)]
    min_weight_pooled: Option<f64>,

    /// Vocabulary threshold for group benchmarks
    #[arg(long)]
    min_weight_group: Option<f64>,

    /// Taxonomy file validating group labels ("default" = bundled)
    #[arg(long)]
    taxonomy: Option<String>,
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let (build_pooled, build_groups) = match args.scope.as_str() {
        "pooled" => (true, false),
        "group" => (false, true),
        "both" => (true, true),
        other => {
            return Err(CliError::Usage(format!(
                "unknown scope {other:?} (expected pooled|group|both)"
            )));
        }
    };
    let cap = resolve(args.cap, ctx.file.training_cap, defaults::TRAINING_CAP);
    let mwp = resolve(
        args.min_weight_pooled,
        ctx.file.min_weight_pooled,
        defaults::MIN_WEIGHT_POOLED,
    );
    let mwg = resolve(
        args.min_weight_group,
        ctx.file.min_weight_group,
        defaults::MIN_WEIGHT_GROUP,
    );
    let fmt = corpus_format(&args.corpus, &args.format)?;

    let docs = load_docs(&args.corpus, &args.format)?;
    if let Some(tax_arg) = &args.taxonomy {
        let taxonomy = if tax_arg == "default" {
            TaxonomyConfig::bundled_default()
        } else {
            TaxonomyConfig::load(std::path::Path::new(tax_arg))?
        };
        taxonomy.validate_documents(&docs)?;
    }

    let training = if cap > 0 {
        sample_training(&docs, cap, ctx.seed)
    } else {
        docs.clone()
    };
    log::info!(
        "training on {} of {} documents (cap {cap})",
        training.len(),
        docs.len()
    );

    let mut outputs = OutputSet::new();
    let mut built = 0usize;

    if build_pooled {
        let refs: Vec<_> = training.iter().collect();
        let bench = build_benchmark_with(&refs, Scope::Pooled, mwp, Some(ctx.seed))?;
        log::info!("pooled benchmark: {} vocabulary words", bench.len());
        outputs.add(
            args.out_dir
                .join(format!("{}.json", bench.scope().file_stem())),
            bench.to_json(),
        );
        built += 1;
    }
    if build_groups {
        for (key, members) in group_documents(&training) {
            let scope = Scope::group(key.clone());
            let result: CoreResult<_> = build_benchmark_with(&members, scope, mwg, Some(ctx.seed));
            match result {
                Ok(bench) => {
                    log::info!("group {key}: {} vocabulary words", bench.len());
                    outputs.add(
                        args.out_dir
                            .join(format!("{}.json", bench.scope().file_stem())),
                        bench.to_json(),
                    );
                    built += 1;
                }
                Err(Error::EmptyVocabulary) => {
                    log::warn!("group {key}: empty vocabulary at threshold {mwg}; skipped");
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if built == 0 {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no benchmark could be built (all vocabularies empty)"
        )));
    }

    let replay = vec![
        "build-bench".to_string(),
        "--corpus".into(),
        args.corpus.display().to_string(),
        "--format".into(),
        format_label(fmt).to_string(),
        "--scope".into(),
        args.scope.clone(),
        "--out-dir".into(),
        args.out_dir.display().to_string(),
        "--cap".into(),
        cap.to_string(),
        "--min-weight-pooled".into(),
        mwp.to_string(),
        "--min-weight-group".into(),
        mwg.to_string(),
        "--seed".into(),
        ctx.seed.to_string(),
    ];
    let mut manifest = Manifest::new(
        "build-bench",
        replay,
        json!({
            "corpus": args.corpus.display().to_string(),
            "scope": args.scope,
            "cap": cap,
            "min_weight_pooled": mwp,
            "min_weight_group": mwg,
            "seed": ctx.seed,
            "taxonomy": args.taxonomy,
        }),
    );
    manifest.record_input(&args.corpus)?;
    for path in outputs.paths() {
        manifest.record_output(path);
    }
    outputs.add(args.out_dir.join(MANIFEST_NAME), manifest.to_json());
    outputs.commit()?;
    Ok(())
}
