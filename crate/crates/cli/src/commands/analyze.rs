use std::path::PathBuf;

use aimix_core::analysis::{
    AggregateDim, aggregate_by, aggregate_to_csv, bias_ratios_to_csv, debias_log_ratio,
    filter_min_sample, group_year_to_csv, histogram, scoped_histograms_to_csv, yearly_average,
};
use aimix_core::estimator::read_estimates_csv;
use serde_json::json;

use crate::config::{defaults, resolve};
use crate::manifest::{MANIFEST_NAME, Manifest};
use crate::outputs::OutputSet;
use crate::{CliError, Ctx};

#[derive(clap::Args)]
pub struct Args {
    /// Estimates CSVs (pooled and group runs may come in separate files)
    #[arg(long, num_args = 1.., required = true)]
    estimates: Vec<PathBuf>,

    /// Year to aggregate
    #[arg(long)]
    year: i32,

    /// Directory receiving the analysis tables
    #[arg(long)]
    out_dir: PathBuf,

    /// Minimum average per-bucket sentence count (strictly above)
    #[arg(long)]
    cutoff: Option<f64>,

    /// Floor applied to alphas before taking log ratios
    #[arg(long)]
    floor: Option<f64>,

    /// Histogram bin width for the per-group alpha distribution
    #[arg(long)]
    bin_width: Option<f64>,
}

pub fn run(args: Args, ctx: &Ctx) -> Result<(), CliError> {
    let cutoff = resolve(
        args.cutoff,
        ctx.file.sentence_cutoff,
        defaults::SENTENCE_CUTOFF,
    );
    let floor = resolve(args.floor, ctx.file.ratio_floor, defaults::RATIO_FLOOR);
    let bin_width = resolve(
        args.bin_width,
        ctx.file.bin_width_alpha,
        defaults::BIN_WIDTH_ALPHA,
    );

    let mut estimates = Vec::new();
    for path in &args.estimates {
        estimates.extend(read_estimates_csv(path)?);
    }

    let yearly = yearly_average(&estimates, args.year);
    let kept = filter_min_sample(yearly, cutoff);
    if kept.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no group passes the sample-size cutoff {cutoff} in {}; lower --cutoff",
            args.year
        )));
    }
    log::info!("{} groups pass the cutoff", kept.len());

    let ratios = debias_log_ratio(&kept, floor)?;
    let by_country = aggregate_by(&ratios, AggregateDim::Country);
    let by_field = aggregate_by(&ratios, AggregateDim::Field);

    let pool_values: Vec<f64> = kept.iter().map(|r| r.alpha_pool).collect();
    let group_values: Vec<f64> = kept.iter().map(|r| r.alpha_group).collect();
    let hist_csv = scoped_histograms_to_csv(&[
        ("pooled", histogram(&pool_values, bin_width)),
        ("group", histogram(&group_values, bin_width)),
    ]);

    let mut outputs = OutputSet::new();
    outputs.add(
        args.out_dir.join("group_year_estimates.csv"),
        group_year_to_csv(&kept),
    );
    outputs.add(
        args.out_dir.join("bias_ratios.csv"),
        bias_ratios_to_csv(&ratios),
    );
    outputs.add(
        args.out_dir.join("bias_by_country.csv"),
        aggregate_to_csv("country", &by_country),
    );
    outputs.add(
        args.out_dir.join("bias_by_field.csv"),
        aggregate_to_csv("field", &by_field),
    );
    outputs.add(args.out_dir.join("alpha_histogram.csv"), hist_csv);

    let mut replay = vec!["analyze".to_string(), "--estimates".into()];
    replay.extend(args.estimates.iter().map(|p| p.display().to_string()));
    replay.extend([
        "--year".to_string(),
        args.year.to_string(),
        "--out-dir".into(),
        args.out_dir.display().to_string(),
        "--cutoff".into(),
        cutoff.to_string(),
        "--floor".into(),
        floor.to_string(),
        "--bin-width".into(),
        bin_width.to_string(),
    ]);
    let mut manifest = Manifest::new(
        "analyze",
        replay,
        json!({
            "estimates": args.estimates.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            "year": args.year,
            "cutoff": cutoff,
            "floor": floor,
            "bin_width": bin_width,
        }),
    );
    for path in &args.estimates {
        manifest.record_input(path)?;
    }
    for path in outputs.paths() {
        manifest.record_output(path);
    }
    outputs.add(args.out_dir.join(MANIFEST_NAME), manifest.to_json());
    outputs.commit()?;
    Ok(())
}
