//! Permutation-null engines and synthetic-data generators.
//!
//! Design 1 (`run_logodds_null`) permutes country-field labels across
//! documents and rebuilds every group benchmark per round, recording
//! tracked words' per-group log-odds. Design 2 (`run_alpha_null`)
//! pools documents within each quarter, partitions them into synthetic
//! groups of the observed sizes, and refits alpha per synthetic group.
//! Both preserve their declared invariants exactly: the label multiset
//! for design 1, the group-size vector for design 2.

pub mod synth;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{Benchmark, Scope, build_benchmark_with};
use crate::corpus::{Document, GroupKey, group_documents, prepared_sentences};
use crate::error::{Error, Result};
use crate::estimator::{DeltaScorer, Period, PeriodGranularity, SentenceDelta, fit_alpha};
use crate::seeding::{derive_seed, fnv1a, rng_for};

/// One (group, value) cell in a simulation payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupValue {
    pub country: String,
    pub field: String,
    pub value: f64,
}

impl GroupValue {
    fn new(key: &GroupKey, value: f64) -> Self {
        GroupValue {
            country: key.country.clone(),
            field: key.field.clone(),
            value,
        }
    }

    pub fn key(&self) -> GroupKey {
        GroupKey::new(self.country.clone(), self.field.clone())
    }
}

/// Reassign the multiset of (country, field) labels uniformly at
/// random across documents, leaving texts, weights, ids and dates
/// untouched.
pub fn permute_labels(docs: &[Document], seed: u64) -> Vec<Document> {
    let mut labels: Vec<(String, String)> = docs
        .iter()
        .map(|d| (d.country_group.clone(), d.field_group.clone()))
        .collect();
    let mut rng = rng_for(seed, &[fnv1a(b"permute_labels")]);
    labels.shuffle(&mut rng);
    docs.iter()
        .zip(labels)
        .map(|(doc, (country, field))| {
            let mut out = doc.clone();
            out.country_group = country;
            out.field_group = field;
            out
        })
        .collect()
}

/// Pool all documents, shuffle them, and partition into synthetic
/// groups with exactly the observed group sizes. Every document is
/// assigned once.
pub fn permute_alpha_groups(docs: &[Document], seed: u64) -> BTreeMap<GroupKey, Vec<Document>> {
    let sizes: BTreeMap<GroupKey, usize> = group_documents(docs)
        .into_iter()
        .map(|(k, members)| (k, members.len()))
        .collect();
    let mut order: Vec<&Document> = docs.iter().collect();
    order.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut rng = rng_for(seed, &[fnv1a(b"permute_alpha")]);
    order.shuffle(&mut rng);

    let mut out = BTreeMap::new();
    let mut cursor = 0usize;
    for (key, size) in sizes {
        let members: Vec<Document> = order[cursor..cursor + size]
            .iter()
            .map(|d| (*d).clone())
            .collect();
        cursor += size;
        out.insert(key, members);
    }
    out
}

/// Tracked words' per-group log-odds for one permutation round.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WordGroupValues {
    pub word: String,
    pub values: Vec<GroupValue>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Design1Round {
    pub round: usize,
    pub words: Vec<WordGroupValues>,
}

/// Output of the label-permutation design.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Design1Report {
    pub design: String,
    pub rounds_requested: usize,
    pub seed: u64,
    pub min_weight: f64,
    pub tracked_words: Vec<String>,
    pub rounds: Vec<Design1Round>,
}

impl Design1Report {
    /// Per-round word -> group -> log-odds maps, the shape consumed by
    /// the word-stats builder.
    pub fn round_value_maps(&self) -> Vec<BTreeMap<String, BTreeMap<GroupKey, f64>>> {
        self.rounds
            .iter()
            .map(|round| {
                round
                    .words
                    .iter()
                    .map(|w| {
                        let values = w.values.iter().map(|gv| (gv.key(), gv.value)).collect();
                        (w.word.clone(), values)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Per-group log-odds of `words` under group-specific benchmarks built
/// from `docs` at `min_weight`. Groups whose benchmark cannot be built
/// (empty vocabulary) contribute nothing.
pub fn group_logodds_for_words(
    docs: &[Document],
    words: &[String],
    min_weight: f64,
) -> Result<BTreeMap<String, BTreeMap<GroupKey, f64>>> {
    let mut out: BTreeMap<String, BTreeMap<GroupKey, f64>> = BTreeMap::new();
    for (key, members) in group_documents(docs) {
        let bench =
            match build_benchmark_with(&members, Scope::group(key.clone()), min_weight, None) {
                Ok(b) => b,
                Err(Error::EmptyVocabulary) => {
                    log::debug!("group {key} has an empty vocabulary; skipped");
                    continue;
                }
                Err(e) => return Err(e),
            };
        for word in words {
            if let Some(lo) = bench.log_odds_of(word) {
                out.entry(word.clone()).or_default().insert(key.clone(), lo);
            }
        }
    }
    Ok(out)
}

/// Every word appearing in any group-specific benchmark vocabulary,
/// with its per-group log-odds. Used to pick tracked words.
pub fn all_group_logodds(
    docs: &[Document],
    min_weight: f64,
) -> Result<BTreeMap<String, BTreeMap<GroupKey, f64>>> {
    let mut out: BTreeMap<String, BTreeMap<GroupKey, f64>> = BTreeMap::new();
    for (key, members) in group_documents(docs) {
        let bench =
            match build_benchmark_with(&members, Scope::group(key.clone()), min_weight, None) {
                Ok(b) => b,
                Err(Error::EmptyVocabulary) => continue,
                Err(e) => return Err(e),
            };
        for (word, &lo) in bench.vocab().iter().zip(bench.log_odds_values()) {
            out.entry(word.clone()).or_default().insert(key.clone(), lo);
        }
    }
    Ok(out)
}

/// Label-permutation null for per-group log-odds (design 1): per
/// round, permute labels, rebuild all group benchmarks, and record
/// each tracked word's per-group log-odds.
pub fn run_logodds_null(
    docs: &[Document],
    rounds: usize,
    words: &[String],
    min_weight: f64,
    seed: u64,
) -> Result<Design1Report> {
    let round_payloads: Vec<Result<Vec<WordGroupValues>>> = (0..rounds)
        .into_par_iter()
        .map(|round| {
            let permuted = permute_labels(docs, derive_seed(seed, &[round as u64]));
            let values = group_logodds_for_words(&permuted, words, min_weight)?;
            let payload = values
                .into_iter()
                .map(|(word, groups)| WordGroupValues {
                    word,
                    values: groups
                        .iter()
                        .map(|(key, &value)| GroupValue::new(key, value))
                        .collect(),
                })
                .collect();
            Ok(payload)
        })
        .collect();

    let mut report_rounds = Vec::with_capacity(rounds);
    for (round, payload) in round_payloads.into_iter().enumerate() {
        report_rounds.push(Design1Round {
            round,
            words: payload?,
        });
    }
    Ok(Design1Report {
        design: "permute_labels".to_string(),
        rounds_requested: rounds,
        seed,
        min_weight,
        tracked_words: words.to_vec(),
        rounds: report_rounds,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Design2Round {
    pub round: usize,
    /// Per synthetic group: alpha averaged across quarters.
    pub group_alphas: Vec<GroupValue>,
    /// Cross-group mean of the above.
    pub mean_alpha: f64,
}

/// Output of the group-membership permutation design.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Design2Report {
    pub design: String,
    pub rounds_requested: usize,
    pub seed: u64,
    /// Non-permuted per-group alphas for contrast (quarter-averaged).
    pub observed: Vec<GroupValue>,
    pub rounds: Vec<Design2Round>,
}

impl Design2Report {
    pub fn round_means(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.mean_alpha).collect()
    }

    pub fn observed_values(&self) -> Vec<f64> {
        self.observed.iter().map(|gv| gv.value).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Per-document deltas under every group's benchmark, precomputed once
/// so permutation rounds only regroup and refit. Groups sharing one
/// benchmark (a pooled map) share one delta table.
struct DeltaCache {
    tables: Vec<Vec<Vec<SentenceDelta>>>,
    table_of_group: BTreeMap<GroupKey, usize>,
}

impl DeltaCache {
    fn new(docs: &[Document], benchmarks: &BTreeMap<GroupKey, &Benchmark>) -> Self {
        let sentences: Vec<Vec<Vec<String>>> = docs
            .par_iter()
            .map(|d| prepared_sentences(&d.text_human))
            .collect();
        let mut tables = Vec::new();
        let mut seen: Vec<*const Benchmark> = Vec::new();
        let mut table_of_group = BTreeMap::new();
        for (key, &bench) in benchmarks {
            let ptr = bench as *const Benchmark;
            let idx = match seen.iter().position(|&p| p == ptr) {
                Some(idx) => idx,
                None => {
                    let scorer = DeltaScorer::new(bench);
                    let per_doc: Vec<Vec<SentenceDelta>> = sentences
                        .par_iter()
                        .map(|doc_sents| {
                            doc_sents
                                .iter()
                                .map(|tokens| {
                                    let set = crate::estimator::sentence_word_set(tokens, bench);
                                    SentenceDelta {
                                        delta: scorer.delta(&set),
                                        n_tokens: tokens.len(),
                                    }
                                })
                                .collect()
                        })
                        .collect();
                    seen.push(ptr);
                    tables.push(per_doc);
                    tables.len() - 1
                }
            };
            table_of_group.insert(key.clone(), idx);
        }
        DeltaCache {
            tables,
            table_of_group,
        }
    }

    fn deltas(&self, group: &GroupKey, doc_indices: &[usize]) -> Vec<SentenceDelta> {
        let per_doc = &self.tables[self.table_of_group[group]];
        doc_indices
            .iter()
            .flat_map(|&i| per_doc[i].iter().copied())
            .collect()
    }
}

fn quarter_of(doc: &Document) -> Period {
    Period::of(doc.date, PeriodGranularity::Quarter)
}

/// Fit alpha for each (group, quarter) given assigned doc indices and
/// average across quarters per group.
fn group_alphas_for_assignment(
    cache: &DeltaCache,
    assignment: &BTreeMap<Period, BTreeMap<GroupKey, Vec<usize>>>,
) -> BTreeMap<GroupKey, f64> {
    let mut sums: BTreeMap<GroupKey, (f64, usize)> = BTreeMap::new();
    for groups in assignment.values() {
        for (key, indices) in groups {
            let deltas = cache.deltas(key, indices);
            if deltas.is_empty() {
                continue;
            }
            // Non-converged fits are dropped, matching the estimation
            // procedure; degenerate fits count as alpha = 0.
            if let Ok(fit) = fit_alpha(&deltas) {
                let entry = sums.entry(key.clone()).or_insert((0.0, 0));
                entry.0 += fit.alpha;
                entry.1 += 1;
            }
        }
    }
    sums.into_iter()
        .map(|(key, (sum, n))| (key, sum / n as f64))
        .collect()
}

/// Membership-permutation null for per-group alpha (design 2).
///
/// Documents are pooled within each quarter, shuffled, and partitioned
/// into synthetic groups with the observed per-quarter group sizes;
/// each synthetic group is refit under that group's benchmark. Every
/// group key present in `docs` must have a benchmark (the map may
/// alias one pooled benchmark for all keys).
pub fn run_alpha_null(
    docs: &[Document],
    benchmarks: &BTreeMap<GroupKey, &Benchmark>,
    rounds: usize,
    seed: u64,
) -> Result<Design2Report> {
    if docs.is_empty() {
        return Err(Error::EmptyInput { what: "documents" });
    }
    for key in group_documents(docs).keys() {
        if !benchmarks.contains_key(key) {
            return Err(Error::MissingBenchmark {
                group: key.to_string(),
            });
        }
    }

    // Deterministic doc ordering, then quarter -> group -> indices.
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.sort_by(|&a, &b| docs[a].doc_id.cmp(&docs[b].doc_id));

    let mut observed: BTreeMap<Period, BTreeMap<GroupKey, Vec<usize>>> = BTreeMap::new();
    for &i in &order {
        observed
            .entry(quarter_of(&docs[i]))
            .or_default()
            .entry(docs[i].group())
            .or_default()
            .push(i);
    }

    let cache = DeltaCache::new(docs, benchmarks);

    let observed_alphas = group_alphas_for_assignment(&cache, &observed);

    let round_results: Vec<Design2Round> = (0..rounds)
        .into_par_iter()
        .map(|round| {
            let mut assignment: BTreeMap<Period, BTreeMap<GroupKey, Vec<usize>>> = BTreeMap::new();
            for (quarter, groups) in &observed {
                let mut pool: Vec<usize> = groups.values().flatten().copied().collect();
                let mut rng = rng_for(seed, &[round as u64, fnv1a(quarter.to_string().as_bytes())]);
                pool.shuffle(&mut rng);
                let mut cursor = 0usize;
                let synthetic = groups
                    .iter()
                    .map(|(key, members)| {
                        let take = pool[cursor..cursor + members.len()].to_vec();
                        cursor += members.len();
                        (key.clone(), take)
                    })
                    .collect();
                assignment.insert(*quarter, synthetic);
            }
            let alphas = group_alphas_for_assignment(&cache, &assignment);
            let mean_alpha = alphas.values().sum::<f64>() / alphas.len().max(1) as f64;
            Design2Round {
                round,
                group_alphas: alphas
                    .iter()
                    .map(|(key, &value)| GroupValue::new(key, value))
                    .collect(),
                mean_alpha,
            }
        })
        .collect();

    Ok(Design2Report {
        design: "permute_alpha".to_string(),
        rounds_requested: rounds,
        seed,
        observed: observed_alphas
            .iter()
            .map(|(key, &value)| GroupValue::new(key, value))
            .collect(),
        rounds: round_results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::build_benchmark;
    use chrono::NaiveDate;
    use std::collections::BTreeSet;

    fn doc(id: &str, country: &str, field: &str, month: u32, human: &str, ai: &str) -> Document {
        Document {
            doc_id: id.to_string(),
            text_human: human.to_string(),
            text_ai: Some(ai.to_string()),
            country_group: country.to_string(),
            field_group: field.to_string(),
            weight: 1.0,
            date: NaiveDate::from_ymd_opt(2021, month, 10).unwrap(),
        }
    }

    fn toy_corpus() -> Vec<Document> {
        let mut docs = Vec::new();
        for (c, f) in [("X", "F1"), ("X", "F2"), ("Y", "F1"), ("Y", "F2")] {
            for i in 0..4 {
                docs.push(doc(
                    &format!("{c}-{f}-{i}"),
                    c,
                    f,
                    1 + (i as u32 % 6),
                    "alpha beta gamma. beta gamma delta. alpha delta beta.",
                    "alpha gamma gamma. delta gamma beta. gamma beta alpha.",
                ));
            }
        }
        docs
    }

    #[test]
    fn permute_labels_preserves_label_multiset_and_texts() {
        let docs = toy_corpus();
        let permuted = permute_labels(&docs, 5);
        let labels = |ds: &[Document]| {
            let mut v: Vec<(String, String)> = ds
                .iter()
                .map(|d| (d.country_group.clone(), d.field_group.clone()))
                .collect();
            v.sort();
            v
        };
        assert_eq!(labels(&docs), labels(&permuted));
        for (a, b) in docs.iter().zip(&permuted) {
            assert_eq!(a.doc_id, b.doc_id);
            assert_eq!(a.text_human, b.text_human);
            assert_eq!(a.text_ai, b.text_ai);
            assert_eq!(a.weight, b.weight);
        }
        assert_eq!(permute_labels(&docs, 5), permuted);
        assert_ne!(
            permute_labels(&docs, 6)
                .iter()
                .map(|d| d.country_group.clone())
                .collect::<Vec<_>>(),
            permuted
                .iter()
                .map(|d| d.country_group.clone())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn permute_alpha_groups_partitions_exactly() {
        let docs = toy_corpus();
        let partition = permute_alpha_groups(&docs, 11);
        let sizes: Vec<usize> = partition.values().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 4, 4, 4]);
        let mut seen = BTreeSet::new();
        for members in partition.values() {
            for d in members {
                assert!(seen.insert(d.doc_id.clone()), "doc assigned twice");
            }
        }
        assert_eq!(seen.len(), docs.len());
        let again = permute_alpha_groups(&docs, 11);
        for (k, members) in &partition {
            let ids: Vec<_> = members.iter().map(|d| &d.doc_id).collect();
            let ids2: Vec<_> = again[k].iter().map(|d| &d.doc_id).collect();
            assert_eq!(ids, ids2);
        }
    }

    #[test]
    fn logodds_null_report_shape_and_determinism() {
        let docs = toy_corpus();
        let words = vec!["alpha".to_string(), "gamma".to_string()];
        let report = run_logodds_null(&docs, 2, &words, 1.0, 3).unwrap();
        assert_eq!(report.rounds.len(), 2);
        assert_eq!(report.tracked_words, words);
        let maps = report.round_value_maps();
        assert!(maps[0].contains_key("gamma"));

        let again = run_logodds_null(&docs, 2, &words, 1.0, 3).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }

    #[test]
    fn alpha_null_single_round_and_determinism() {
        let docs = toy_corpus();
        let pooled = build_benchmark(&docs.iter().collect::<Vec<_>>(), Scope::Pooled).unwrap();
        let benchmarks: BTreeMap<GroupKey, &Benchmark> = group_documents(&docs)
            .keys()
            .map(|k| (k.clone(), &pooled))
            .collect();
        let report = run_alpha_null(&docs, &benchmarks, 1, 7).unwrap();
        assert_eq!(report.rounds.len(), 1);
        assert_eq!(report.observed.len(), 4);
        assert_eq!(report.rounds[0].group_alphas.len(), 4);

        let again = run_alpha_null(&docs, &benchmarks, 1, 7).unwrap();
        assert_eq!(report.to_json(), again.to_json());
    }

    #[test]
    fn alpha_null_requires_benchmarks_for_all_groups() {
        let docs = toy_corpus();
        let benchmarks = BTreeMap::new();
        assert!(matches!(
            run_alpha_null(&docs, &benchmarks, 1, 0),
            Err(Error::MissingBenchmark { .. })
        ));
    }
}
