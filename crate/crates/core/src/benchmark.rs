//! AI-likeness benchmarks: weighted word counts over a paired
//! human/AI corpus, vocabulary selection, occurrence probabilities,
//! and per-word log-odds ratios.
//!
//! A benchmark is either pooled (built on all documents) or scoped to
//! one country-field group (built on that group's documents only).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, GroupKey, Side, tokenize};
use crate::error::{Error, Result};

pub const BENCHMARK_FILE_VERSION: u32 = 1;

/// Vocabulary threshold for pooled benchmarks (weighted occurrences
/// required on both sides).
pub const DEFAULT_POOLED_MIN_WEIGHT: f64 = 5.0;
/// Vocabulary threshold for group-specific benchmarks.
pub const DEFAULT_GROUP_MIN_WEIGHT: f64 = 1.0;

/// Weighted word-occurrence totals for one side of a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedCounts {
    counts: BTreeMap<String, f64>,
    total_weighted_tokens: f64,
}

impl WeightedCounts {
    pub fn count(&self, word: &str) -> f64 {
        self.counts.get(word).copied().unwrap_or(0.0)
    }

    pub fn total_weighted_tokens(&self) -> f64 {
        self.total_weighted_tokens
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    fn add(&mut self, word: &str, weight: f64) {
        match self.counts.get_mut(word) {
            Some(c) => *c += weight,
            None => {
                self.counts.insert(word.to_string(), weight);
            }
        }
        self.total_weighted_tokens += weight;
    }

    /// Fold another partial count into this one. Summing the counts of
    /// a partition of the corpus equals counting the whole corpus (up
    /// to float roundoff), which is what makes counting parallelizable.
    pub fn merge(&mut self, other: &WeightedCounts) {
        for (word, c) in &other.counts {
            match self.counts.get_mut(word) {
                Some(mine) => *mine += c,
                None => {
                    self.counts.insert(word.clone(), *c);
                }
            }
        }
        self.total_weighted_tokens += other.total_weighted_tokens;
    }
}

/// Weighted word counts for one side: count(t) = sum over documents of
/// weight * occurrences of t. Documents are folded in sorted doc_id
/// order so builds are reproducible bit-for-bit.
pub fn accumulate_counts(docs: &[&Document], side: Side) -> Result<WeightedCounts> {
    let mut ordered: Vec<&Document> = docs.to_vec();
    ordered.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    let mut counts = WeightedCounts::default();
    for doc in ordered {
        let text = doc.side_text(side)?;
        for token in tokenize(text) {
            counts.add(&token, doc.weight);
        }
    }
    Ok(counts)
}

/// Words with at least `min_weight` weighted occurrences on both
/// sides, in lexicographic order. The threshold is inclusive.
pub fn build_vocabulary(
    counts_h: &WeightedCounts,
    counts_a: &WeightedCounts,
    min_weight: f64,
) -> Result<Vec<String>> {
    if min_weight <= 0.0 {
        return Err(Error::Domain {
            what: "build_vocabulary",
            reason: format!("min_weight must be positive, got {min_weight}"),
        });
    }
    let vocab: Vec<String> = counts_h
        .counts
        .iter()
        .filter(|(word, ch)| **ch >= min_weight && counts_a.count(word) >= min_weight)
        .map(|(word, _)| word.clone())
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(vocab)
}

/// Normalize counts over the vocabulary: prob(t) = count(t) / sum of
/// counts over vocab words. Excluded words contribute nothing to the
/// denominator. Returned probabilities align with `vocab`.
pub fn estimate_probs(counts: &WeightedCounts, vocab: &[String]) -> Result<Vec<f64>> {
    let mut raw = Vec::with_capacity(vocab.len());
    for word in vocab {
        let c = counts.count(word);
        if c <= 0.0 {
            return Err(Error::ZeroCountWord { word: word.clone() });
        }
        raw.push(c);
    }
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|c| c / total).collect())
}

/// log[(p/(1-p)) / (q/(1-q))], the log-odds ratio of a word occurring
/// under the human versus the AI distribution. Computed as a
/// difference of per-side logits so that swapping the sides negates
/// the value exactly.
pub fn log_odds(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange {
            name: "p",
            value: p,
        });
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::ProbabilityOutOfRange {
            name: "q",
            value: q,
        });
    }
    Ok((p.ln() - (1.0 - p).ln()) - (q.ln() - (1.0 - q).ln()))
}

/// Whether a benchmark was trained on the whole corpus or one group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scope {
    Pooled,
    Group {
        #[serde(flatten)]
        key: GroupKey,
    },
}

/// Scope stripped of its group key, as carried by output tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeKind {
    Pooled,
    Group,
}

impl ScopeKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScopeKind::Pooled => "pooled",
            ScopeKind::Group => "group",
        }
    }
}

impl Scope {
    pub fn group(key: GroupKey) -> Self {
        Scope::Group { key }
    }

    pub fn is_pooled(&self) -> bool {
        matches!(self, Scope::Pooled)
    }

    pub fn group_key(&self) -> Option<&GroupKey> {
        match self {
            Scope::Pooled => None,
            Scope::Group { key } => Some(key),
        }
    }

    pub fn kind(&self) -> ScopeKind {
        match self {
            Scope::Pooled => ScopeKind::Pooled,
            Scope::Group { .. } => ScopeKind::Group,
        }
    }

    /// "pooled" or "group", the value used in output tables.
    pub fn kind_label(&self) -> &'static str {
        self.kind().label()
    }

    /// File stem for the benchmark directory layout.
    pub fn file_stem(&self) -> String {
        match self {
            Scope::Pooled => "pooled".to_string(),
            Scope::Group { key } => key.slug(),
        }
    }

    pub fn default_min_weight(&self) -> f64 {
        match self {
            Scope::Pooled => DEFAULT_POOLED_MIN_WEIGHT,
            Scope::Group { .. } => DEFAULT_GROUP_MIN_WEIGHT,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub doc_count: usize,
    pub min_weight: f64,
}

/// A vocabulary with paired human/AI occurrence probabilities and
/// their log-odds ratios. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Benchmark {
    scope: Scope,
    vocab: Vec<String>,
    p_human: Vec<f64>,
    p_ai: Vec<f64>,
    log_odds: Vec<f64>,
    metadata: BuildMetadata,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct BenchmarkFile {
    version: u32,
    scope: Scope,
    vocab: Vec<String>,
    p_human: Vec<f64>,
    p_ai: Vec<f64>,
    log_odds: Vec<f64>,
    build_metadata: BuildMetadata,
}

impl Benchmark {
    /// Assemble a benchmark from prescribed probabilities, computing
    /// log-odds and checking all type invariants.
    pub fn from_parts(
        scope: Scope,
        vocab: Vec<String>,
        p_human: Vec<f64>,
        p_ai: Vec<f64>,
        metadata: BuildMetadata,
    ) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        if vocab.len() != p_human.len() || vocab.len() != p_ai.len() {
            return Err(Error::Domain {
                what: "benchmark",
                reason: "vocab and probability lengths differ".into(),
            });
        }
        let log_odds = p_human
            .iter()
            .zip(&p_ai)
            .map(|(&p, &q)| log_odds(p, q))
            .collect::<Result<Vec<_>>>()?;
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let bench = Benchmark {
            scope,
            vocab,
            p_human,
            p_ai,
            log_odds,
            metadata,
            index,
        };
        bench.validate()?;
        Ok(bench)
    }

    /// Check the type invariants: probabilities strictly interior and
    /// summing to 1 (within 1e-9) on both sides, log-odds consistent
    /// with the probabilities.
    pub fn validate(&self) -> Result<()> {
        let check_sum = |probs: &[f64], name: &'static str| -> Result<()> {
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Domain {
                    what: "benchmark",
                    reason: format!("{name} sums to {sum}, expected 1"),
                });
            }
            Ok(())
        };
        check_sum(&self.p_human, "p_human")?;
        check_sum(&self.p_ai, "p_ai")?;
        for i in 0..self.vocab.len() {
            let expected = log_odds(self.p_human[i], self.p_ai[i])?;
            if (self.log_odds[i] - expected).abs() > 1e-12 {
                return Err(Error::Domain {
                    what: "benchmark",
                    reason: format!(
                        "log_odds for {:?} is {}, expected {}",
                        self.vocab[i], self.log_odds[i], expected
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn p_human(&self) -> &[f64] {
        &self.p_human
    }

    pub fn p_ai(&self) -> &[f64] {
        &self.p_ai
    }

    pub fn log_odds_values(&self) -> &[f64] {
        &self.log_odds
    }

    pub fn metadata(&self) -> &BuildMetadata {
        &self.metadata
    }

    pub fn word_index(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn log_odds_of(&self, word: &str) -> Option<f64> {
        self.word_index(word).map(|i| self.log_odds[i as usize])
    }

    /// Serialized form, for staging writers that assemble outputs
    /// before touching the filesystem.
    pub fn to_json(&self) -> String {
        let file = BenchmarkFile {
            version: BENCHMARK_FILE_VERSION,
            scope: self.scope.clone(),
            vocab: self.vocab.clone(),
            p_human: self.p_human.clone(),
            p_ai: self.p_ai.clone(),
            log_odds: self.log_odds.clone(),
            build_metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&file).expect("benchmark serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: BenchmarkFile = serde_json::from_str(&raw).map_err(|e| Error::json(path, e))?;
        if file.version != BENCHMARK_FILE_VERSION {
            return Err(Error::BenchmarkVersion {
                found: file.version,
                expected: BENCHMARK_FILE_VERSION,
            });
        }
        let index = file
            .vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        let bench = Benchmark {
            scope: file.scope,
            vocab: file.vocab,
            p_human: file.p_human,
            p_ai: file.p_ai,
            log_odds: file.log_odds,
            metadata: file.build_metadata,
            index,
        };
        bench.validate()?;
        Ok(bench)
    }
}

/// Build a benchmark with the scope's default vocabulary threshold
/// (5 weighted occurrences pooled, 1 within a group).
pub fn build_benchmark(docs: &[&Document], scope: Scope) -> Result<Benchmark> {
    let min_weight = scope.default_min_weight();
    build_benchmark_with(docs, scope, min_weight, None)
}

/// Build a benchmark with an explicit threshold and optional sampling
/// seed recorded in the metadata. For group scope, every document must
/// belong to that group.
pub fn build_benchmark_with(
    docs: &[&Document],
    scope: Scope,
    min_weight: f64,
    seed: Option<u64>,
) -> Result<Benchmark> {
    if let Some(key) = scope.group_key() {
        for doc in docs {
            if doc.country_group != key.country || doc.field_group != key.field {
                return Err(Error::Domain {
                    what: "build_benchmark",
                    reason: format!(
                        "document {:?} belongs to {}/{}, not {}",
                        doc.doc_id, doc.country_group, doc.field_group, key
                    ),
                });
            }
        }
    }
    let counts_h = accumulate_counts(docs, Side::Human)?;
    let counts_a = accumulate_counts(docs, Side::Ai)?;
    let vocab = build_vocabulary(&counts_h, &counts_a, min_weight)?;
    let p_human = estimate_probs(&counts_h, &vocab)?;
    let p_ai = estimate_probs(&counts_a, &vocab)?;
    Benchmark::from_parts(
        scope,
        vocab,
        p_human,
        p_ai,
        BuildMetadata {
            seed,
            doc_count: docs.len(),
            min_weight,
        },
    )
}
