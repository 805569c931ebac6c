//! Sentence-level Bernoulli-mixture estimation of the AI-text share.
//!
//! Under a benchmark with human/AI word probabilities, each sentence
//! contributes a log-likelihood difference delta = log L_A - log L_H.
//! The mixture weight alpha on the AI distribution is fit by bounded
//! one-dimensional maximum likelihood, with bootstrap resampling of
//! sentences for confidence intervals.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{Benchmark, ScopeKind};
use crate::corpus::{Document, GroupKey, prepared_sentences};
use crate::error::{Error, Result};
use crate::opt::brent_min;
use crate::seeding::{derive_seed, fnv1a};

/// Argument tolerance for the alpha optimizer.
pub const ALPHA_TOL: f64 = 1e-6;
const MAX_OPT_ITER: usize = 500;
/// Deltas with magnitude above this take the per-term stabilized path;
/// smaller ones use precomputed exponentials with chunked products.
const BIG_DELTA_CUT: f64 = 30.0;
/// All-deltas-below-this means the likelihood is flat in alpha.
const DEGENERATE_EPS: f64 = 1e-12;

/// Per-sentence log-likelihood difference log L_A - log L_H, the
/// sufficient statistic for alpha, plus the raw token count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceDelta {
    pub delta: f64,
    pub n_tokens: usize,
}

/// Precomputed likelihood tables for one benchmark.
///
/// For each vocabulary word the logit log(pi) - log(1 - pi) is stored
/// per side, along with the constants C = sum log(1 - pi), so a
/// sentence log-likelihood is a sparse sum over its word set:
/// log L = sum_{t in S} logit_t + C.
pub struct DeltaScorer<'a> {
    bench: &'a Benchmark,
    logit_h: Vec<f64>,
    logit_a: Vec<f64>,
    c_h: f64,
    c_a: f64,
}

impl<'a> DeltaScorer<'a> {
    pub fn new(bench: &'a Benchmark) -> Self {
        let logit = |p: f64| p.ln() - (1.0 - p).ln();
        let logit_h: Vec<f64> = bench.p_human().iter().map(|&p| logit(p)).collect();
        let logit_a: Vec<f64> = bench.p_ai().iter().map(|&p| logit(p)).collect();
        let c_h = bench.p_human().iter().map(|&p| (1.0 - p).ln()).sum();
        let c_a = bench.p_ai().iter().map(|&p| (1.0 - p).ln()).sum();
        DeltaScorer {
            bench,
            logit_h,
            logit_a,
            c_h,
            c_a,
        }
    }

    pub fn benchmark(&self) -> &Benchmark {
        self.bench
    }

    /// (C_H, C_A): the all-absent log-likelihoods.
    pub fn constants(&self) -> (f64, f64) {
        (self.c_h, self.c_a)
    }

    /// Log-likelihood of a sentence word set under each side.
    pub fn sentence_logliks(&self, word_set: &[u32]) -> (f64, f64) {
        let mut lh = self.c_h;
        let mut la = self.c_a;
        for &t in word_set {
            lh += self.logit_h[t as usize];
            la += self.logit_a[t as usize];
        }
        (lh, la)
    }

    /// log L_A - log L_H for a sentence word set.
    pub fn delta(&self, word_set: &[u32]) -> f64 {
        let mut d = self.c_a - self.c_h;
        for &t in word_set {
            d += self.logit_a[t as usize] - self.logit_h[t as usize];
        }
        d
    }

    /// Deltas for an abstract: split into sentences, tokenize, drop
    /// sentences with fewer than two raw tokens, reduce each to its
    /// benchmark word set.
    pub fn doc_deltas(&self, text: &str) -> Vec<SentenceDelta> {
        prepared_sentences(text)
            .iter()
            .map(|tokens| {
                let set = sentence_word_set(tokens, self.bench);
                SentenceDelta {
                    delta: self.delta(&set),
                    n_tokens: tokens.len(),
                }
            })
            .collect()
    }

    /// Deltas for pre-tokenized word sets (vocab indices).
    pub fn deltas_for_sets(&self, sets: &[Vec<u32>]) -> Vec<SentenceDelta> {
        sets.iter()
            .map(|set| SentenceDelta {
                delta: self.delta(set),
                n_tokens: set.len(),
            })
            .collect()
    }
}

/// The set of benchmark-vocabulary words appearing among `tokens`, as
/// sorted deduplicated vocab indices. Out-of-vocabulary tokens are
/// dropped; duplicates collapse.
pub fn sentence_word_set(tokens: &[String], bench: &Benchmark) -> Vec<u32> {
    let mut set: Vec<u32> = tokens.iter().filter_map(|t| bench.word_index(t)).collect();
    set.sort_unstable();
    set.dedup();
    set
}

/// The negative normalized mixture log-likelihood as a reusable
/// object: -l(alpha) = -(1/N) sum log[(1-alpha) + alpha * e^delta].
///
/// Small-magnitude deltas keep their precomputed exponentials and are
/// folded through chunked products (one log per chunk); large ones go
/// through a per-term stabilized evaluation that cannot overflow.
pub struct MixtureObjective {
    small_exp: Vec<f64>,
    big_delta: Vec<f64>,
    sum_delta: f64,
    n: usize,
}

impl MixtureObjective {
    fn from_values(values: impl Iterator<Item = f64>) -> Self {
        let mut obj = MixtureObjective {
            small_exp: Vec::new(),
            big_delta: Vec::new(),
            sum_delta: 0.0,
            n: 0,
        };
        for d in values {
            obj.push(d);
        }
        obj
    }

    fn push(&mut self, d: f64) {
        if d.abs() <= BIG_DELTA_CUT {
            self.small_exp.push(d.exp());
        } else {
            self.big_delta.push(d);
        }
        self.sum_delta += d;
        self.n += 1;
    }

    /// Build from deltas in sorted order, so the value is invariant to
    /// permutations of the input.
    pub fn new(deltas: &[SentenceDelta]) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::EmptyInput {
                what: "sentence deltas",
            });
        }
        let mut values: Vec<f64> = deltas.iter().map(|d| d.delta).collect();
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self::from_values(values.into_iter()))
    }

    pub fn n_sentences(&self) -> usize {
        self.n
    }

    fn is_flat(&self) -> bool {
        self.small_exp
            .iter()
            .all(|&e| (e - 1.0).abs() <= DEGENERATE_EPS)
            && self.big_delta.is_empty()
    }

    /// Evaluate -l(alpha).
    pub fn eval(&self, alpha: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&alpha));
        if alpha == 0.0 {
            return 0.0;
        }
        if alpha == 1.0 {
            return -self.sum_delta / self.n as f64;
        }
        let om = 1.0 - alpha;
        let mut log_sum = 0.0;
        for chunk in self.small_exp.chunks(8) {
            let mut prod = 1.0;
            for &e in chunk {
                prod *= om + alpha * e;
            }
            log_sum += prod.ln();
        }
        for &d in &self.big_delta {
            if d > 0.0 {
                log_sum += d + (om * (-d).exp() + alpha).ln();
            } else {
                log_sum += (om + alpha * d.exp()).ln();
            }
        }
        -log_sum / self.n as f64
    }
}

/// -l(alpha) for a list of sentence deltas.
pub fn neg_loglik(alpha: f64, deltas: &[SentenceDelta]) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain {
            what: "neg_loglik",
            reason: format!("alpha {alpha} outside [0, 1]"),
        });
    }
    Ok(MixtureObjective::new(deltas)?.eval(alpha))
}

/// A fitted mixture weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOutcome {
    pub alpha: f64,
    /// True when the likelihood was flat in alpha (all deltas zero);
    /// alpha is reported as 0 in that case.
    pub degenerate: bool,
}

fn fit_objective(obj: &MixtureObjective) -> Result<FitOutcome> {
    if obj.is_flat() {
        return Ok(FitOutcome {
            alpha: 0.0,
            degenerate: true,
        });
    }
    let res = brent_min(|a| obj.eval(a), 0.0, 1.0, 0.5, ALPHA_TOL, MAX_OPT_ITER);
    if !res.converged {
        return Err(Error::NoConvergence {
            best: res.x,
            iterations: res.iterations,
        });
    }
    // The objective is convex, so the only candidates besides the
    // interior iterate are the interval endpoints; snap when one of
    // them is strictly better.
    let mut best = res.x;
    let mut fbest = res.fx;
    let f1 = obj.eval(1.0);
    if f1 < fbest {
        best = 1.0;
        fbest = f1;
    }
    let f0 = obj.eval(0.0);
    if f0 < fbest {
        best = 0.0;
    }
    Ok(FitOutcome {
        alpha: best,
        degenerate: false,
    })
}

/// Maximum-likelihood alpha over [0, 1] (argument tolerance 1e-6,
/// initialized at 0.5). Invariant to permutations of the input.
pub fn fit_alpha(deltas: &[SentenceDelta]) -> Result<FitOutcome> {
    fit_objective(&MixtureObjective::new(deltas)?)
}

/// Precomputed per-sentence values shared across bootstrap replicates:
/// e^delta for small deltas, the raw delta for large ones.
struct DeltaPool {
    vals: Vec<f64>,
    big: Vec<bool>,
    nonzero: Vec<bool>,
}

impl DeltaPool {
    fn new(deltas: &[SentenceDelta]) -> Self {
        let mut values: Vec<f64> = deltas.iter().map(|d| d.delta).collect();
        values.sort_unstable_by(f64::total_cmp);
        let mut pool = DeltaPool {
            vals: Vec::with_capacity(values.len()),
            big: Vec::with_capacity(values.len()),
            nonzero: Vec::with_capacity(values.len()),
        };
        for d in values {
            let big = d.abs() > BIG_DELTA_CUT;
            pool.vals.push(if big { d } else { d.exp() });
            pool.big.push(big);
            pool.nonzero.push(d.abs() > DEGENERATE_EPS);
        }
        pool
    }

    /// Resample with replacement into a new objective. Returns `None`
    /// when the resample carries no information about alpha.
    fn resample(&self, rng: &mut ChaCha8Rng) -> Option<MixtureObjective> {
        let n = self.vals.len();
        let mut obj = MixtureObjective {
            small_exp: Vec::with_capacity(n),
            big_delta: Vec::new(),
            sum_delta: 0.0,
            n,
        };
        let mut any_nonzero = false;
        for _ in 0..n {
            let i = rng.random_range(0..n);
            any_nonzero |= self.nonzero[i];
            if self.big[i] {
                obj.big_delta.push(self.vals[i]);
                obj.sum_delta += self.vals[i];
            } else {
                obj.small_exp.push(self.vals[i]);
                obj.sum_delta += self.vals[i].ln();
            }
        }
        any_nonzero.then_some(obj)
    }
}

/// Linear-interpolation quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// A bootstrap point estimate and interval for one estimation unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapOutcome {
    /// Midpoint of the [2.5%, 97.5%] bootstrap interval.
    pub alpha: f64,
    /// Half the interval width.
    pub ci_half: f64,
    pub n_sentences: usize,
    pub n_converged: usize,
    pub degenerate: bool,
}

/// Resample sentences with replacement `b` times, refit alpha on each
/// replicate, keep converged fits, and report the midpoint and
/// half-width of the central 95% interval. Replicate r draws from a
/// generator seeded with `seed + r`, so runs are reproducible and
/// replicates are independent under any parallel schedule.
pub fn bootstrap_alpha(deltas: &[SentenceDelta], b: usize, seed: u64) -> Result<BootstrapOutcome> {
    if deltas.is_empty() {
        return Err(Error::EmptyInput {
            what: "sentence deltas",
        });
    }
    if b < 2 {
        return Err(Error::Domain {
            what: "bootstrap_alpha",
            reason: format!("need at least 2 replicates, got {b}"),
        });
    }
    if deltas.iter().all(|d| d.delta.abs() <= DEGENERATE_EPS) {
        return Ok(BootstrapOutcome {
            alpha: 0.0,
            ci_half: 0.0,
            n_sentences: deltas.len(),
            n_converged: b,
            degenerate: true,
        });
    }

    let pool = DeltaPool::new(deltas);
    let fits: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            match pool.resample(&mut rng) {
                // A resample with no informative sentences pins alpha
                // to the degenerate convention.
                None => Some(0.0),
                Some(obj) => fit_objective(&obj).ok().map(|f| f.alpha),
            }
        })
        .collect();

    let mut converged: Vec<f64> = fits.into_iter().flatten().collect();
    if converged.len() < 2 {
        return Err(Error::TooFewReplicates {
            converged: converged.len(),
        });
    }
    converged.sort_unstable_by(f64::total_cmp);
    let lo = quantile_sorted(&converged, 0.025);
    let hi = quantile_sorted(&converged, 0.975);
    Ok(BootstrapOutcome {
        alpha: 0.5 * (lo + hi),
        ci_half: 0.5 * (hi - lo),
        n_sentences: deltas.len(),
        n_converged: converged.len(),
        degenerate: false,
    })
}

/// Calendar bucketing for estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodGranularity {
    Quarter,
    Month,
}

impl FromStr for PeriodGranularity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quarter" => Ok(PeriodGranularity::Quarter),
            "month" => Ok(PeriodGranularity::Month),
            other => Err(Error::Domain {
                what: "period granularity",
                reason: format!("expected quarter|month, got {other:?}"),
            }),
        }
    }
}

/// A year-quarter or year-month bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Quarter { year: i32, index: u8 },
    Month { year: i32, index: u8 },
}

impl Period {
    pub fn of(date: NaiveDate, granularity: PeriodGranularity) -> Period {
        match granularity {
            PeriodGranularity::Quarter => Period::Quarter {
                year: date.year(),
                index: ((date.month() - 1) / 3 + 1) as u8,
            },
            PeriodGranularity::Month => Period::Month {
                year: date.year(),
                index: date.month() as u8,
            },
        }
    }

    pub fn year(&self) -> i32 {
        match *self {
            Period::Quarter { year, .. } | Period::Month { year, .. } => year,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Period::Quarter { year, index } => write!(f, "{year}Q{index}"),
            Period::Month { year, index } => write!(f, "{year}-{index:02}"),
        }
    }
}

impl FromStr for Period {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain {
            what: "period",
            reason: format!("cannot parse {s:?} (expected e.g. 2021Q1 or 2021-03)"),
        };
        if let Some((y, q)) = s.split_once('Q') {
            return Ok(Period::Quarter {
                year: y.parse().map_err(|_| bad())?,
                index: q.parse().map_err(|_| bad())?,
            });
        }
        if let Some((y, m)) = s.rsplit_once('-') {
            return Ok(Period::Month {
                year: y.parse().map_err(|_| bad())?,
                index: m.parse().map_err(|_| bad())?,
            });
        }
        Err(bad())
    }
}

/// A fitted mixture weight for one (group, period) bucket.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaEstimate {
    pub group: GroupKey,
    pub period: Period,
    pub benchmark_scope: ScopeKind,
    pub alpha: f64,
    pub ci_half: f64,
    pub n_sentences: usize,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct EstimateConfig {
    pub bootstrap_replicates: usize,
    pub seed: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig {
            bootstrap_replicates: 1000,
            seed: 0,
        }
    }
}

/// Estimate alpha per (group, period) bucket of `docs` under `bench`.
///
/// Sentences come from the human text; sentences with fewer than two
/// raw tokens are excluded. Buckets with no usable sentences are
/// skipped with a warning. Bucket seeds are derived from the group,
/// plus the sorted doc ids of the bucket, so buckets with identical
/// content estimate identically regardless of the period granularity
/// that produced them.
pub fn estimate_group_period(
    docs: &[Document],
    bench: &Benchmark,
    granularity: PeriodGranularity,
    cfg: &EstimateConfig,
) -> Result<Vec<AlphaEstimate>> {
    if let Some(key) = bench.scope().group_key() {
        for doc in docs {
            if doc.country_group != key.country || doc.field_group != key.field {
                return Err(Error::Domain {
                    what: "estimate_group_period",
                    reason: format!(
                        "document {:?} is outside the benchmark group {key}",
                        doc.doc_id
                    ),
                });
            }
        }
    }

    let mut buckets: BTreeMap<(GroupKey, Period), Vec<&Document>> = BTreeMap::new();
    for doc in docs {
        let period = Period::of(doc.date, granularity);
        buckets.entry((doc.group(), period)).or_default().push(doc);
    }

    let scorer = DeltaScorer::new(bench);
    let mut estimates = Vec::new();
    for ((group, period), mut members) in buckets {
        members.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut deltas = Vec::new();
        for doc in &members {
            deltas.extend(scorer.doc_deltas(&doc.text_human));
        }
        if deltas.is_empty() {
            log::warn!("skipping empty bucket {group} {period}: no usable sentences");
            continue;
        }
        let ids: Vec<&str> = members.iter().map(|d| d.doc_id.as_str()).collect();
        let bucket_seed = derive_seed(
            cfg.seed,
            &[
                fnv1a(group.country.as_bytes()),
                fnv1a(group.field.as_bytes()),
                fnv1a(ids.join("\x1f").as_bytes()),
            ],
        );
        let outcome = bootstrap_alpha(&deltas, cfg.bootstrap_replicates, bucket_seed)?;
        estimates.push(AlphaEstimate {
            group,
            period,
            benchmark_scope: bench.scope().kind(),
            alpha: outcome.alpha,
            ci_half: outcome.ci_half,
            n_sentences: outcome.n_sentences,
            degenerate: outcome.degenerate,
        });
    }
    Ok(estimates)
}

pub const ESTIMATES_CSV_HEADER: &str =
    "group_country,group_field,period,benchmark_scope,alpha,ci_half,n_sentences,degenerate";

/// Render estimates in the fixed output column order.
pub fn estimates_to_csv(estimates: &[AlphaEstimate]) -> String {
    let mut out = String::from(ESTIMATES_CSV_HEADER);
    out.push('\n');
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for e in estimates {
        writer
            .write_record([
                e.group.country.as_str(),
                e.group.field.as_str(),
                &e.period.to_string(),
                e.benchmark_scope.label(),
                &e.alpha.to_string(),
                &e.ci_half.to_string(),
                &e.n_sentences.to_string(),
                &e.degenerate.to_string(),
            ])
            .expect("csv record");
    }
    out.push_str(&String::from_utf8(writer.into_inner().expect("csv flush")).expect("utf8"));
    out
}

pub fn write_estimates_csv(path: &Path, estimates: &[AlphaEstimate]) -> Result<()> {
    std::fs::write(path, estimates_to_csv(estimates)).map_err(|e| Error::io(path, e))
}

/// Read estimates back from the CSV emitted by [`write_estimates_csv`].
pub fn read_estimates_csv(path: &Path) -> Result<Vec<AlphaEstimate>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(raw.as_bytes());
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Domain {
            what: "estimates csv",
            reason: format!("row {}: {e}", idx + 2),
        })?;
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| Error::Domain {
                what: "estimates csv",
                reason: format!("row {}: missing column {i}", idx + 2),
            })
        };
        let parse_err = |what: &str, v: &str| Error::Domain {
            what: "estimates csv",
            reason: format!("row {}: bad {what} {v:?}", idx + 2),
        };
        let scope = match field(3)? {
            "pooled" => ScopeKind::Pooled,
            "group" => ScopeKind::Group,
            other => return Err(parse_err("benchmark_scope", other)),
        };
        rows.push(AlphaEstimate {
            group: GroupKey::new(field(0)?, field(1)?),
            period: field(2)?.parse()?,
            benchmark_scope: scope,
            alpha: field(4)?
                .parse()
                .map_err(|_| parse_err("alpha", field(4).unwrap()))?,
            ci_half: field(5)?
                .parse()
                .map_err(|_| parse_err("ci_half", field(5).unwrap()))?,
            n_sentences: field(6)?
                .parse()
                .map_err(|_| parse_err("n_sentences", field(6).unwrap()))?,
            degenerate: field(7)?
                .parse()
                .map_err(|_| parse_err("degenerate", field(7).unwrap()))?,
        });
    }
    Ok(rows)
}
