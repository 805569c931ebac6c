//! Variance analytics on per-group log-odds values: one-way ANOVA
//! decomposition over the field factor, one-sided F-tests against
//! permutation nulls, and the special functions they need.

use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::GroupKey;
use crate::error::{Error, Result};

/// Per-word summary of log-odds values across groups.
#[derive(Clone, Debug, PartialEq)]
pub struct WordGroupStats {
    pub word: String,
    pub n_groups: usize,
    pub mean: f64,
    /// Unbiased (n-1) variance; NaN when fewer than two groups.
    pub variance: f64,
}

/// Mean and unbiased variance of a slice.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, ss / (n - 1) as f64)
}

pub fn word_group_stats(word: &str, values: &BTreeMap<GroupKey, f64>) -> WordGroupStats {
    let vals: Vec<f64> = values.values().copied().collect();
    let (mean, variance) = mean_variance(&vals);
    WordGroupStats {
        word: word.to_string(),
        n_groups: values.len(),
        mean,
        variance,
    }
}

/// Between-field / within-field shares of total variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnovaResult {
    pub between_field_share: f64,
    pub within_field_share: f64,
}

/// One-way ANOVA over group values with the field as the factor:
/// between share = SS_between / SS_total, within = 1 - between.
pub fn anova_between_within(values: &BTreeMap<GroupKey, f64>) -> Result<AnovaResult> {
    let mut by_field: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (key, &v) in values {
        by_field.entry(key.field.as_str()).or_default().push(v);
    }
    let n_total = values.len();
    if by_field.len() < 2 || n_total < 2 {
        return Err(Error::Domain {
            what: "anova_between_within",
            reason: format!(
                "need >= 2 fields and >= 2 values, got {} fields / {} values",
                by_field.len(),
                n_total
            ),
        });
    }
    let grand_mean = values.values().sum::<f64>() / n_total as f64;
    let mut ss_between = 0.0;
    let mut ss_total = 0.0;
    for group in by_field.values() {
        let field_mean = group.iter().sum::<f64>() / group.len() as f64;
        ss_between += group.len() as f64 * (field_mean - grand_mean).powi(2);
        ss_total += group.iter().map(|v| (v - grand_mean).powi(2)).sum::<f64>();
    }
    if ss_total == 0.0 {
        return Err(Error::NoVariation);
    }
    let between = ss_between / ss_total;
    Ok(AnovaResult {
        between_field_share: between,
        within_field_share: 1.0 - between,
    })
}

/// One-sided F-test of H1: the simulated sample has smaller variance
/// than the actual sample. Returns p = P(F_{n_a-1, n_s-1} >= va/vs).
pub fn f_test_var_smaller(
    var_actual: f64,
    n_actual: usize,
    var_sim: f64,
    n_sim: usize,
) -> Result<f64> {
    if var_actual < 0.0 || var_sim < 0.0 {
        return Err(Error::Domain {
            what: "f_test_var_smaller",
            reason: "variances must be nonnegative".into(),
        });
    }
    if n_actual < 2 || n_sim < 2 {
        return Err(Error::Domain {
            what: "f_test_var_smaller",
            reason: format!("need n >= 2 on both sides, got {n_actual} and {n_sim}"),
        });
    }
    if var_sim == 0.0 {
        if var_actual == 0.0 {
            return Err(Error::NoVariation);
        }
        return Ok(0.0);
    }
    let f = var_actual / var_sim;
    let d1 = (n_actual - 1) as f64;
    let d2 = (n_sim - 1) as f64;
    // Survival function of the F distribution at f.
    let x = d2 / (d2 + d1 * f);
    regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, x)
}

/// Regularized incomplete beta function I_x(a, b), evaluated by the
/// standard continued fraction (modified Lentz), accurate to well
/// below 1e-10 over the tested parameter range.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64> {
    // NaN and infinities fail these checks too.
    let positive_finite = |v: f64| v.is_finite() && v > 0.0;
    if !positive_finite(a) || !positive_finite(b) {
        return Err(Error::Domain {
            what: "regularized_incomplete_beta",
            reason: format!("a and b must be positive, got a={a}, b={b}"),
        });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            what: "regularized_incomplete_beta",
            reason: format!("x must lie in [0, 1], got {x}"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // Use the continued fraction where it converges fastest and the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) elsewhere.
    let value = if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x)? / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x)? / b
    };
    Ok(value.clamp(0.0, 1.0))
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> Result<f64> {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Domain {
        what: "regularized_incomplete_beta",
        reason: format!("continued fraction did not converge for a={a}, b={b}, x={x}"),
    })
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Words whose log-odds values are defined in at least `min_groups`
/// groups, ranked by ascending mean (most AI-leaning first), truncated
/// to `k` when given.
pub fn top_ai_like_words(
    per_word: &BTreeMap<String, BTreeMap<GroupKey, f64>>,
    min_groups: usize,
    k: Option<usize>,
) -> Vec<String> {
    let mut ranked: Vec<(f64, &String)> = per_word
        .iter()
        .filter(|(_, values)| values.len() >= min_groups)
        .map(|(word, values)| {
            let mean = values.values().sum::<f64>() / values.len() as f64;
            (mean, word)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let take = k.unwrap_or(ranked.len());
    ranked
        .into_iter()
        .take(take)
        .map(|(_, w)| w.clone())
        .collect()
}

/// One row of the word-stats report: actual cross-group statistics,
/// the ANOVA shares, and (when simulation rounds are supplied) the
/// averaged simulated statistics plus the mean one-sided F-test
/// p-value across rounds.
#[derive(Clone, Debug)]
pub struct WordStatsRow {
    pub word: String,
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub cross_field_share: Option<f64>,
    pub within_field_share: Option<f64>,
    pub sim_n: Option<f64>,
    pub sim_mean: Option<f64>,
    pub sim_variance: Option<f64>,
    pub p_value: Option<f64>,
    /// One p-value per usable simulation round, in round order.
    pub round_p_values: Vec<f64>,
}

/// Build word-stats rows from actual per-group log-odds values and,
/// optionally, per-round simulated values. Words are emitted in the
/// order of `words`; rounds where a word is defined in fewer than two
/// groups are skipped for that word.
pub fn word_stats_rows(
    words: &[String],
    actual: &BTreeMap<String, BTreeMap<GroupKey, f64>>,
    sim_rounds: &[BTreeMap<String, BTreeMap<GroupKey, f64>>],
) -> Vec<WordStatsRow> {
    let mut rows = Vec::new();
    for word in words {
        let Some(values) = actual.get(word) else {
            continue;
        };
        let stats = word_group_stats(word, values);
        let anova = anova_between_within(values).ok();

        let mut sim_ns = Vec::new();
        let mut sim_means = Vec::new();
        let mut sim_vars = Vec::new();
        let mut round_ps = Vec::new();
        for round in sim_rounds {
            let Some(sim_values) = round.get(word) else {
                continue;
            };
            if sim_values.len() < 2 {
                continue;
            }
            let sim = word_group_stats(word, sim_values);
            sim_ns.push(sim.n_groups as f64);
            sim_means.push(sim.mean);
            sim_vars.push(sim.variance);
            if stats.n_groups >= 2
                && !stats.variance.is_nan()
                && let Ok(p) =
                    f_test_var_smaller(stats.variance, stats.n_groups, sim.variance, sim.n_groups)
            {
                round_ps.push(p);
            }
        }
        let avg = |v: &[f64]| {
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        };
        rows.push(WordStatsRow {
            word: word.clone(),
            n: stats.n_groups,
            mean: stats.mean,
            variance: stats.variance,
            cross_field_share: anova.map(|a| a.between_field_share),
            within_field_share: anova.map(|a| a.within_field_share),
            sim_n: avg(&sim_ns),
            sim_mean: avg(&sim_means),
            sim_variance: avg(&sim_vars),
            p_value: avg(&round_ps),
            round_p_values: round_ps,
        });
    }
    rows
}

pub const WORD_STATS_CSV_HEADER: &str = "word,n,mean,variance,cross_field_share,\
within_field_share,sim_n,sim_mean,sim_variance,p_value";

fn opt_cell(v: Option<f64>) -> String {
    match v {
        Some(v) if !v.is_nan() => v.to_string(),
        _ => "NA".to_string(),
    }
}

pub fn word_stats_to_csv(rows: &[WordStatsRow]) -> String {
    let mut out = String::from(WORD_STATS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.word,
            r.n,
            opt_cell(Some(r.mean)),
            opt_cell(Some(r.variance)),
            opt_cell(r.cross_field_share),
            opt_cell(r.within_field_share),
            opt_cell(r.sim_n),
            opt_cell(r.sim_mean),
            opt_cell(r.sim_variance),
            opt_cell(r.p_value),
        ));
    }
    out
}

pub fn write_word_stats_csv(path: &Path, rows: &[WordStatsRow]) -> Result<()> {
    std::fs::write(path, word_stats_to_csv(rows)).map_err(|e| Error::io(path, e))
}
