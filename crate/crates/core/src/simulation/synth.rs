//! Synthetic data generators: sentence word-sets drawn from the exact
//! mixture model (the estimator's ground-truth oracle), random
//! benchmarks, and a document-corpus synthesizer with controllable
//! group-level style structure.

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmark::{Benchmark, BuildMetadata, Scope};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::seeding::{fnv1a, rng_for};

/// Inputs for the mixture-model oracle.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticSpec<'a> {
    pub benchmark: &'a Benchmark,
    pub alpha_true: f64,
    pub n_sentences: usize,
    pub seed: u64,
}

/// Draw sentence word-sets from the two-component mixture: each
/// sentence picks the AI side with probability `alpha_true`, then
/// includes every vocabulary word independently with that side's
/// probability. Returns sorted index sets.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Vec<Vec<u32>> {
    generate_word_sets(
        spec.benchmark.p_human(),
        spec.benchmark.p_ai(),
        spec.alpha_true,
        spec.n_sentences,
        spec.seed,
    )
}

/// Lower-level oracle over raw probability vectors (no interiority
/// requirement, so degenerate distributions can be exercised).
pub fn generate_word_sets(
    p_human: &[f64],
    p_ai: &[f64],
    alpha: f64,
    n_sentences: usize,
    seed: u64,
) -> Vec<Vec<u32>> {
    assert_eq!(p_human.len(), p_ai.len());
    let mut rng = rng_for(seed, &[fnv1a(b"generate_word_sets")]);
    let mut sentences = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let probs = if rng.random::<f64>() < alpha {
            p_ai
        } else {
            p_human
        };
        let mut set = Vec::new();
        for (t, &p) in probs.iter().enumerate() {
            if rng.random::<f64>() < p {
                set.push(t as u32);
            }
        }
        sentences.push(set);
    }
    sentences
}

/// Deterministic alphabetic word for a vocabulary index ("aaaa",
/// "aaab", ...). Lexicographic order matches index order.
pub fn synthetic_word(index: usize) -> String {
    let mut chars = ['a'; 4];
    let mut rest = index;
    for slot in chars.iter_mut().rev() {
        *slot = (b'a' + (rest % 26) as u8) as char;
        rest /= 26;
    }
    debug_assert_eq!(rest, 0, "index {index} exceeds 4-letter word space");
    chars.iter().collect()
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 shifted into (0, 1].
    let u1 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn normalize(mut weights: Vec<f64>) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    weights
}

/// A pooled benchmark with randomized word probabilities: the human
/// side is drawn from exponential weights, the AI side multiplies each
/// weight by exp(contrast * z) with standard normal z. `contrast`
/// around 1.0 gives the two sides clearly distinguishable profiles.
pub fn random_benchmark(vocab_size: usize, contrast: f64, seed: u64) -> Result<Benchmark> {
    if vocab_size < 2 {
        return Err(Error::Domain {
            what: "random_benchmark",
            reason: "vocab_size must be at least 2".into(),
        });
    }
    let mut rng = rng_for(seed, &[fnv1a(b"random_benchmark")]);
    let mut h_raw = Vec::with_capacity(vocab_size);
    let mut a_raw = Vec::with_capacity(vocab_size);
    for _ in 0..vocab_size {
        let base = -(1.0 - rng.random::<f64>()).ln();
        h_raw.push(base);
        a_raw.push(base * (contrast * standard_normal(&mut rng)).exp());
    }
    let vocab: Vec<String> = (0..vocab_size).map(synthetic_word).collect();
    Benchmark::from_parts(
        Scope::Pooled,
        vocab,
        normalize(h_raw),
        normalize(a_raw),
        BuildMetadata {
            seed: Some(seed),
            doc_count: 0,
            min_weight: 0.0,
        },
    )
}

/// Configuration for the document-corpus synthesizer.
///
/// Countries listed in `bloc_countries` write with signature-A words
/// boosted; the rest boost signature B. The global AI profile boosts
/// its own signature, a configurable fraction of which overlaps
/// signature A — that overlap is what makes bloc-A text look AI-like
/// under a pooled benchmark.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub countries: Vec<String>,
    pub fields: Vec<String>,
    pub bloc_countries: Vec<String>,
    pub docs_per_group: usize,
    pub sentences_per_doc: [usize; 2],
    pub words_per_sentence: [usize; 2],
    pub vocab_size: usize,
    pub n_style_words: usize,
    pub style_strength: f64,
    pub ai_shift_strength: f64,
    pub ai_overlap: f64,
    /// Share of human-side sentences drawn from the AI profile
    /// (0 = pre-LLM text).
    pub alpha: f64,
    pub year: i32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            countries: vec![
                "Aland".into(),
                "Borland".into(),
                "Corland".into(),
                "Dorland".into(),
            ],
            fields: vec!["Fieldcraft".into(), "Lorecraft".into(), "Mathcraft".into()],
            bloc_countries: vec!["Aland".into(), "Borland".into()],
            docs_per_group: 60,
            sentences_per_doc: [4, 7],
            words_per_sentence: [8, 14],
            vocab_size: 240,
            n_style_words: 24,
            style_strength: 1.2,
            ai_shift_strength: 1.4,
            ai_overlap: 0.5,
            alpha: 0.0,
            year: 2021,
            seed: 17,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::Domain {
            what: "synth config",
            reason,
        };
        if self.countries.is_empty() || self.fields.is_empty() {
            return Err(fail("need at least one country and one field".into()));
        }
        for c in &self.bloc_countries {
            if !self.countries.contains(c) {
                return Err(fail(format!("bloc country {c:?} not in countries")));
            }
        }
        if self.docs_per_group == 0 {
            return Err(fail("docs_per_group must be positive".into()));
        }
        if self.sentences_per_doc[0] == 0 || self.sentences_per_doc[0] > self.sentences_per_doc[1] {
            return Err(fail("sentences_per_doc range is invalid".into()));
        }
        if self.words_per_sentence[0] < 2 || self.words_per_sentence[0] > self.words_per_sentence[1]
        {
            return Err(fail(
                "words_per_sentence must start at 2 or more (shorter sentences are \
                 dropped by the estimation filter)"
                    .into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.ai_overlap) || !(0.0..=1.0).contains(&self.alpha) {
            return Err(fail("ai_overlap and alpha must lie in [0, 1]".into()));
        }
        if self.vocab_size < 3 * self.n_style_words + 16 {
            return Err(fail(format!(
                "vocab_size {} too small for 3 disjoint signatures of {}",
                self.vocab_size, self.n_style_words
            )));
        }
        Ok(())
    }
}

/// The word profiles a synthesizer run draws from. Derived from the
/// config seed only, so corpora generated for different years or alpha
/// levels share identical style structure.
pub struct SynthProfiles {
    pub vocab: Vec<String>,
    pub human_bloc_a: Vec<f64>,
    pub human_bloc_b: Vec<f64>,
    pub ai: Vec<f64>,
    pub signature_a: Vec<String>,
    pub signature_b: Vec<String>,
    pub signature_ai: Vec<String>,
}

pub fn synth_profiles(cfg: &SynthConfig) -> Result<SynthProfiles> {
    cfg.validate()?;
    let v = cfg.vocab_size;
    let mut rng = rng_for(cfg.seed, &[fnv1a(b"synth_profiles")]);

    // Zipf-flavored base frequencies with mild lognormal jitter.
    let mut base = Vec::with_capacity(v);
    for t in 0..v {
        let zipf = 1.0 / (t as f64 + 5.0);
        base.push(zipf * (0.3 * standard_normal(&mut rng)).exp());
    }

    // Disjoint signature blocks drawn from a mid-frequency band, so
    // planted style words carry comparable mass for any seed instead
    // of landing in the Zipf tail.
    let k = cfg.n_style_words;
    let band_lo = 8usize;
    let mut band: Vec<usize> = (band_lo..band_lo + 3 * k + 8).collect();
    use rand::seq::SliceRandom;
    band.shuffle(&mut rng);
    let sig_a: Vec<usize> = band[..k].to_vec();
    let sig_b: Vec<usize> = band[k..2 * k].to_vec();
    let n_shared = (cfg.ai_overlap * k as f64).round() as usize;
    let mut sig_ai: Vec<usize> = sig_a[..n_shared].to_vec();
    sig_ai.extend_from_slice(&band[2 * k..3 * k - n_shared]);

    let boost = |indices: &[usize], strength: f64| {
        let mut profile = base.clone();
        for &i in indices {
            profile[i] *= strength.exp();
        }
        normalize(profile)
    };

    let word = |indices: &[usize]| indices.iter().map(|&i| synthetic_word(i)).collect();
    Ok(SynthProfiles {
        vocab: (0..v).map(synthetic_word).collect(),
        human_bloc_a: boost(&sig_a, cfg.style_strength),
        human_bloc_b: boost(&sig_b, cfg.style_strength),
        ai: boost(&sig_ai, cfg.ai_shift_strength),
        signature_a: word(&sig_a),
        signature_b: word(&sig_b),
        signature_ai: word(&sig_ai),
    })
}

/// Cumulative-weight word sampler.
struct WordSampler {
    cdf: Vec<f64>,
    total: f64,
}

impl WordSampler {
    fn new(probs: &[f64]) -> Self {
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cdf.push(acc);
        }
        WordSampler { cdf, total: acc }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.random::<f64>() * self.total;
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

fn synth_text(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    primary: &WordSampler,
    ai: &WordSampler,
    mix_alpha: f64,
) -> String {
    let n_sentences = rng.random_range(cfg.sentences_per_doc[0]..=cfg.sentences_per_doc[1]);
    let mut sentences = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let sampler = if rng.random::<f64>() < mix_alpha {
            ai
        } else {
            primary
        };
        let n_words = rng.random_range(cfg.words_per_sentence[0]..=cfg.words_per_sentence[1]);
        let words: Vec<String> = (0..n_words)
            .map(|_| synthetic_word(sampler.sample(rng)))
            .collect();
        sentences.push(format!("{}.", words.join(" ")));
    }
    sentences.join(" ")
}

/// Generate a labeled corpus with planted bloc-level style structure.
///
/// Human text for a bloc country draws from that bloc's profile,
/// mixing in AI-profile sentences at rate `alpha`; the AI twin draws
/// purely from the AI profile. Deterministic in the config.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<Vec<Document>> {
    let profiles = synth_profiles(cfg)?;
    let sampler_a = WordSampler::new(&profiles.human_bloc_a);
    let sampler_b = WordSampler::new(&profiles.human_bloc_b);
    let sampler_ai = WordSampler::new(&profiles.ai);

    let days_in_year = NaiveDate::from_ymd_opt(cfg.year, 12, 31)
        .ok_or_else(|| Error::Domain {
            what: "synth config",
            reason: format!("invalid year {}", cfg.year),
        })?
        .ordinal();

    let mut docs = Vec::with_capacity(cfg.countries.len() * cfg.fields.len() * cfg.docs_per_group);
    for country in &cfg.countries {
        let human_sampler = if cfg.bloc_countries.contains(country) {
            &sampler_a
        } else {
            &sampler_b
        };
        for field in &cfg.fields {
            for i in 0..cfg.docs_per_group {
                let mut rng = rng_for(
                    cfg.seed,
                    &[
                        fnv1a(b"synth_doc"),
                        fnv1a(country.as_bytes()),
                        fnv1a(field.as_bytes()),
                        cfg.year as u64,
                        i as u64,
                    ],
                );
                let text_human = synth_text(&mut rng, cfg, human_sampler, &sampler_ai, cfg.alpha);
                let text_ai = synth_text(&mut rng, cfg, &sampler_ai, &sampler_ai, 0.0);
                let day = 1 + rng.random_range(0..days_in_year);
                let weight = if rng.random_range(0..4) == 0 {
                    0.5
                } else {
                    1.0
                };
                docs.push(Document {
                    doc_id: format!("{country}-{field}-{}-{i:04}", cfg.year),
                    text_human,
                    text_ai: Some(text_ai),
                    country_group: country.clone(),
                    field_group: field.clone(),
                    weight,
                    date: NaiveDate::from_yo_opt(cfg.year, day).expect("valid ordinal date"),
                });
            }
        }
    }
    Ok(docs)
}
