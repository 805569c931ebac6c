//! Aggregation of per-bucket alpha estimates into yearly group
//! averages, and the pooled-vs-contextual de-biasing log-ratios.

use std::collections::BTreeMap;
use std::path::Path;

use crate::benchmark::ScopeKind;
use crate::corpus::GroupKey;
use crate::error::{Error, Result};
use crate::estimator::{AlphaEstimate, Period};

pub const DEFAULT_SAMPLE_CUTOFF: f64 = 2000.0;
pub const DEFAULT_RATIO_FLOOR: f64 = 1e-4;

/// Yearly average alphas for one group under both benchmark scopes,
/// averaged over the same period buckets.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupYearEstimate {
    pub group: GroupKey,
    pub year: i32,
    pub alpha_pool: f64,
    pub alpha_group: f64,
    pub avg_n_sentences: f64,
}

/// Average per-period estimates into per-group yearly values.
///
/// Only periods present under both scopes and degenerate under
/// neither contribute; groups with no usable common period (or present
/// under a single scope) are skipped with a warning.
pub fn yearly_average(estimates: &[AlphaEstimate], year: i32) -> Vec<GroupYearEstimate> {
    type PerScope = BTreeMap<Period, (f64, usize)>;
    let mut pooled: BTreeMap<GroupKey, PerScope> = BTreeMap::new();
    let mut grouped: BTreeMap<GroupKey, PerScope> = BTreeMap::new();

    for est in estimates {
        if est.period.year() != year {
            continue;
        }
        let side = match est.benchmark_scope {
            ScopeKind::Pooled => &mut pooled,
            ScopeKind::Group => &mut grouped,
        };
        side.entry(est.group.clone())
            .or_default()
            .insert(est.period, (est.alpha, est.n_sentences));
    }
    if est_degenerate_present(estimates, year) {
        log::info!("degenerate buckets are excluded from yearly averages");
    }

    let mut degenerate: BTreeMap<(GroupKey, Period, ScopeKind), bool> = BTreeMap::new();
    for est in estimates {
        degenerate.insert(
            (est.group.clone(), est.period, est.benchmark_scope),
            est.degenerate,
        );
    }

    let groups: Vec<GroupKey> = pooled.keys().chain(grouped.keys()).cloned().collect();
    let mut out = Vec::new();
    let mut done = std::collections::BTreeSet::new();
    for group in groups {
        if !done.insert(group.clone()) {
            continue;
        }
        let (Some(p), Some(g)) = (pooled.get(&group), grouped.get(&group)) else {
            log::warn!("group {group} has estimates under one scope only; excluded");
            continue;
        };
        let mut alpha_pool_sum = 0.0;
        let mut alpha_group_sum = 0.0;
        let mut n_sum = 0.0;
        let mut used = 0usize;
        for (period, &(ap, n_p)) in p {
            let Some(&(ag, _)) = g.get(period) else {
                continue;
            };
            let degen = degenerate
                .get(&(group.clone(), *period, ScopeKind::Pooled))
                .copied()
                .unwrap_or(false)
                || degenerate
                    .get(&(group.clone(), *period, ScopeKind::Group))
                    .copied()
                    .unwrap_or(false);
            if degen {
                continue;
            }
            alpha_pool_sum += ap;
            alpha_group_sum += ag;
            n_sum += n_p as f64;
            used += 1;
        }
        if used == 0 {
            log::warn!("group {group} has no usable common periods in {year}; excluded");
            continue;
        }
        out.push(GroupYearEstimate {
            group,
            year,
            alpha_pool: alpha_pool_sum / used as f64,
            alpha_group: alpha_group_sum / used as f64,
            avg_n_sentences: n_sum / used as f64,
        });
    }
    out
}

fn est_degenerate_present(estimates: &[AlphaEstimate], year: i32) -> bool {
    estimates
        .iter()
        .any(|e| e.period.year() == year && e.degenerate)
}

/// Keep rows whose average testing sample size is strictly above the
/// cutoff.
pub fn filter_min_sample(rows: Vec<GroupYearEstimate>, cutoff: f64) -> Vec<GroupYearEstimate> {
    rows.into_iter()
        .filter(|r| r.avg_n_sentences > cutoff)
        .collect()
}

/// Demeaned log-ratio of the contextual estimate over the pooled one.
/// Positive means the pooled benchmark underestimates relative to the
/// group's own benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasRatio {
    pub group: GroupKey,
    pub log_ratio_demeaned: f64,
    /// True when either alpha sat below the floor before the log.
    pub floored: bool,
}

pub fn debias_log_ratio(rows: &[GroupYearEstimate], floor: f64) -> Result<Vec<BiasRatio>> {
    if rows.is_empty() {
        return Err(Error::EmptyInput {
            what: "group-year estimates",
        });
    }
    let raw: Vec<(GroupKey, f64, bool)> = rows
        .iter()
        .map(|r| {
            let floored = r.alpha_group < floor || r.alpha_pool < floor;
            let ratio = (r.alpha_group.max(floor) / r.alpha_pool.max(floor)).ln();
            (r.group.clone(), ratio, floored)
        })
        .collect();
    let mean = raw.iter().map(|(_, v, _)| v).sum::<f64>() / raw.len() as f64;
    Ok(raw
        .into_iter()
        .map(|(group, v, floored)| BiasRatio {
            group,
            log_ratio_demeaned: v - mean,
            floored,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggregateDim {
    Country,
    Field,
}

/// Unweighted mean of demeaned log-ratios per country or field.
pub fn aggregate_by(ratios: &[BiasRatio], dim: AggregateDim) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in ratios {
        let label = match dim {
            AggregateDim::Country => r.group.country.clone(),
            AggregateDim::Field => r.group.field.clone(),
        };
        let entry = sums.entry(label).or_insert((0.0, 0));
        entry.0 += r.log_ratio_demeaned;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(label, (sum, n))| (label, sum / n as f64))
        .collect()
}

/// A fixed-width histogram bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

/// Fixed-width histogram aligned to multiples of `bin_width`; a value
/// on a bin boundary counts toward the upper bin.
pub fn histogram(values: &[f64], bin_width: f64) -> Vec<HistogramBin> {
    if values.is_empty() || bin_width <= 0.0 {
        return Vec::new();
    }
    let idx_of = |v: f64| (v / bin_width).floor() as i64;
    let lo = values.iter().copied().map(idx_of).min().unwrap();
    let hi = values.iter().copied().map(idx_of).max().unwrap();
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for &v in values {
        counts[(idx_of(v) - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| {
            let bin = lo + i as i64;
            HistogramBin {
                bin_left: bin as f64 * bin_width,
                bin_right: (bin + 1) as f64 * bin_width,
                count,
            }
        })
        .collect()
}

pub const GROUP_YEAR_CSV_HEADER: &str =
    "group_country,group_field,year,alpha_pool,alpha_group,avg_n_sentences";

pub fn group_year_to_csv(rows: &[GroupYearEstimate]) -> String {
    let mut out = String::from(GROUP_YEAR_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_cell(&r.group.country),
            csv_cell(&r.group.field),
            r.year,
            r.alpha_pool,
            r.alpha_group,
            r.avg_n_sentences
        ));
    }
    out
}

pub const BIAS_RATIOS_CSV_HEADER: &str = "group_country,group_field,log_ratio_demeaned,floored";

pub fn bias_ratios_to_csv(ratios: &[BiasRatio]) -> String {
    let mut out = String::from(BIAS_RATIOS_CSV_HEADER);
    out.push('\n');
    for r in ratios {
        out.push_str(&format!(
            "{},{},{},{}\n",
            csv_cell(&r.group.country),
            csv_cell(&r.group.field),
            r.log_ratio_demeaned,
            r.floored
        ));
    }
    out
}

pub fn aggregate_to_csv(label: &str, values: &BTreeMap<String, f64>) -> String {
    let mut out = format!("{label},avg_log_ratio\n");
    for (key, v) in values {
        out.push_str(&format!("{},{}\n", csv_cell(key), v));
    }
    out
}

/// Histogram CSV without a scope column.
pub fn histogram_to_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for b in bins {
        out.push_str(&format!("{},{},{}\n", b.bin_left, b.bin_right, b.count));
    }
    out
}

/// Histogram CSV with a leading scope column, one section per scope.
pub fn scoped_histograms_to_csv(sections: &[(&str, Vec<HistogramBin>)]) -> String {
    let mut out = String::from("scope,bin_left,bin_right,count\n");
    for (scope, bins) in sections {
        for b in bins {
            out.push_str(&format!(
                "{},{},{},{}\n",
                csv_cell(scope),
                b.bin_left,
                b.bin_right,
                b.count
            ));
        }
    }
    out
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn est(
        country: &str,
        field: &str,
        period: &str,
        scope: ScopeKind,
        alpha: f64,
        n: usize,
        degenerate: bool,
    ) -> AlphaEstimate {
        AlphaEstimate {
            group: GroupKey::new(country, field),
            period: period.parse().unwrap(),
            benchmark_scope: scope,
            alpha,
            ci_half: 0.01,
            n_sentences: n,
            degenerate,
        }
    }

    #[test]
    fn yearly_average_is_arithmetic_mean_over_quarters() {
        let mut rows = Vec::new();
        for (q, alpha) in [(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.4)] {
            rows.push(est(
                "C",
                "F",
                &format!("2021Q{q}"),
                ScopeKind::Pooled,
                alpha,
                100,
                false,
            ));
            rows.push(est(
                "C",
                "F",
                &format!("2021Q{q}"),
                ScopeKind::Group,
                alpha / 2.0,
                100,
                false,
            ));
        }
        let out = yearly_average(&rows, 2021);
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out[0].alpha_pool, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(out[0].alpha_group, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(out[0].avg_n_sentences, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn yearly_average_single_quarter_and_scope_mismatch() {
        let rows = vec![
            est("C", "F", "2021Q2", ScopeKind::Pooled, 0.3, 50, false),
            est("C", "F", "2021Q2", ScopeKind::Group, 0.1, 50, false),
            est("D", "F", "2021Q2", ScopeKind::Pooled, 0.9, 50, false),
        ];
        let out = yearly_average(&rows, 2021);
        assert_eq!(
            out.len(),
            1,
            "group D lacks the group scope and is excluded"
        );
        assert_abs_diff_eq!(out[0].alpha_pool, 0.3);
    }

    #[test]
    fn yearly_average_excludes_degenerate_buckets() {
        let rows = vec![
            est("C", "F", "2021Q1", ScopeKind::Pooled, 0.2, 80, false),
            est("C", "F", "2021Q1", ScopeKind::Group, 0.1, 80, false),
            est("C", "F", "2021Q2", ScopeKind::Pooled, 0.9, 80, true),
            est("C", "F", "2021Q2", ScopeKind::Group, 0.9, 80, false),
        ];
        let out = yearly_average(&rows, 2021);
        assert_eq!(out.len(), 1);
        // Q2 is degenerate under the pooled scope, so both scopes drop it.
        assert_abs_diff_eq!(out[0].alpha_pool, 0.2);
        assert_abs_diff_eq!(out[0].alpha_group, 0.1);
    }

    fn gye(country: &str, field: &str, pool: f64, group: f64, n: f64) -> GroupYearEstimate {
        GroupYearEstimate {
            group: GroupKey::new(country, field),
            year: 2021,
            alpha_pool: pool,
            alpha_group: group,
            avg_n_sentences: n,
        }
    }

    #[test]
    fn filter_cutoff_is_strict() {
        let rows = vec![
            gye("A", "F", 0.1, 0.1, 2000.0),
            gye("B", "F", 0.1, 0.1, 2000.1),
            gye("C", "F", 0.1, 0.1, 1999.9),
        ];
        let kept = filter_min_sample(rows.clone(), 2000.0);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].group.country, "B");

        let all = filter_min_sample(rows, 0.0);
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn debias_identity_and_hand_values() {
        let rows = vec![gye("A", "F", 0.05, 0.05, 1.0), gye("B", "F", 0.2, 0.2, 1.0)];
        for r in debias_log_ratio(&rows, DEFAULT_RATIO_FLOOR).unwrap() {
            assert_abs_diff_eq!(r.log_ratio_demeaned, 0.0, epsilon = 1e-12);
            assert!(!r.floored);
        }

        let rows = vec![
            gye("A", "F", 0.01, 0.02, 1.0),
            gye("B", "F", 0.02, 0.01, 1.0),
        ];
        let ratios = debias_log_ratio(&rows, DEFAULT_RATIO_FLOOR).unwrap();
        assert_abs_diff_eq!(ratios[0].log_ratio_demeaned, 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(ratios[1].log_ratio_demeaned, -(2f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn debias_floors_zero_alphas_and_demeans() {
        let rows = vec![
            gye("A", "F", 0.0, 0.05, 1.0),
            gye("B", "F", 0.05, 0.01, 1.0),
        ];
        let ratios = debias_log_ratio(&rows, 1e-4).unwrap();
        assert!(ratios[0].floored);
        assert!(!ratios[1].floored);
        let mean: f64 =
            ratios.iter().map(|r| r.log_ratio_demeaned).sum::<f64>() / ratios.len() as f64;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-9);
        assert!(debias_log_ratio(&[], 1e-4).is_err());
    }

    #[test]
    fn aggregate_by_country_and_field() {
        let ratios = vec![
            BiasRatio {
                group: GroupKey::new("A", "F1"),
                log_ratio_demeaned: 0.4,
                floored: false,
            },
            BiasRatio {
                group: GroupKey::new("A", "F2"),
                log_ratio_demeaned: 0.2,
                floored: false,
            },
            BiasRatio {
                group: GroupKey::new("B", "F1"),
                log_ratio_demeaned: -0.6,
                floored: false,
            },
        ];
        let by_country = aggregate_by(&ratios, AggregateDim::Country);
        assert_abs_diff_eq!(by_country["A"], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(by_country["B"], -0.6, epsilon = 1e-12);
        let by_field = aggregate_by(&ratios, AggregateDim::Field);
        assert_abs_diff_eq!(by_field["F1"], -0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(by_field["F2"], 0.2, epsilon = 1e-12);
    }

    #[test]
    fn filter_is_monotone_in_cutoff() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let rows: Vec<GroupYearEstimate> = (0..rng.random_range(1..20))
                .map(|i| {
                    gye(
                        &format!("c{i}"),
                        "F",
                        0.1,
                        0.1,
                        rng.random_range(0.0..4000.0),
                    )
                })
                .collect();
            let lo = rng.random_range(0.0..4000.0);
            let hi = lo + rng.random_range(0.0..2000.0);
            let kept_lo = filter_min_sample(rows.clone(), lo);
            let kept_hi = filter_min_sample(rows, hi);
            for row in &kept_hi {
                assert!(kept_lo.contains(row), "raising the cutoff added a row");
            }
        }
    }

    #[test]
    fn demeaned_ratios_are_scale_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let rows: Vec<GroupYearEstimate> = (0..rng.random_range(2..15))
                .map(|i| {
                    gye(
                        &format!("c{i}"),
                        "F",
                        rng.random_range(0.01..0.5),
                        rng.random_range(0.01..0.5),
                        1.0,
                    )
                })
                .collect();
            let scale = rng.random_range(0.1..1.9);
            let scaled: Vec<GroupYearEstimate> = rows
                .iter()
                .map(|r| {
                    let mut s = r.clone();
                    s.alpha_pool *= scale;
                    s.alpha_group *= scale;
                    s
                })
                .collect();
            // All alphas stay above the floor, so the common factor
            // cancels inside every ratio.
            let base = debias_log_ratio(&rows, 1e-4).unwrap();
            let after = debias_log_ratio(&scaled, 1e-4).unwrap();
            for (a, b) in base.iter().zip(&after) {
                assert_abs_diff_eq!(a.log_ratio_demeaned, b.log_ratio_demeaned, epsilon = 1e-9);
                assert_eq!(a.log_ratio_demeaned.signum(), b.log_ratio_demeaned.signum());
            }
        }
    }

    #[test]
    fn histogram_bins_align_to_width() {
        let bins = histogram(&[0.005, 0.011, 0.013, -0.002], 0.01);
        assert_eq!(bins.len(), 3);
        assert_abs_diff_eq!(bins[0].bin_left, -0.01);
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[1].count, 1);
        assert_eq!(bins[2].count, 2);
        assert!(histogram(&[], 0.01).is_empty());
    }
}
