use std::path::PathBuf;

use aimix_core::corpus::corpus_to_jsonl;
use aimix_core::simulation::synth::{SynthConfig, synth_corpus};
use serde_json::json;

use crate::manifest::Manifest;
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Synthesizer TOML config (omit for the built-in toy layout)
    #[arg(long)]
    config_file: Option<PathBuf>,

    /// Output corpus (JSON Lines)
    #[arg(long)]
    out: PathBuf,

    /// Override the corpus year
    #[arg(long)]
    year: Option<i32>,

    /// Override the AI-sentence share planted in human text
    #[arg(long)]
    alpha: Option<f64>,
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let mut cfg: SynthConfig = match &args.config_file {
        Some(path) => {
            let raw = std::fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read synth config {}: {e}", path.display()))
            })?;
            toml::from_str(&raw)
                .map_err(|e| CliError::Usage(format!("bad synth config {}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    cfg.seed = ctx.seed;
    if let Some(year) = args.year {
        cfg.year = year;
    }
    if let Some(alpha) = args.alpha {
        cfg.alpha = alpha;
    }

    let docs = synth_corpus(&cfg)?;
    log::info!(
        "synthesized {} documents over {} groups",
        docs.len(),
        cfg.countries.len() * cfg.fields.len()
    );

    let mut outputs = OutputSet::new();
    outputs.add(&args.out, corpus_to_jsonl(&docs));

    let mut replay = vec!["synth".to_string()];
    if let Some(path) = &args.config_file {
        replay.push("--config-file".into());
        replay.push(path.display().to_string());
    }
    replay.extend([
        "--out".to_string(),
        args.out.display().to_string(),
        "--year".into(),
        cfg.year.to_string(),
        "--alpha".into(),
        cfg.alpha.to_string(),
        "--seed".into(),
        cfg.seed.to_string(),
    ]);
    let mut manifest = Manifest::new(
        "synth",
        replay,
        serde_json::to_value(&cfg).unwrap_or(json!({})),
    );
    if let Some(path) = &args.config_file {
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
