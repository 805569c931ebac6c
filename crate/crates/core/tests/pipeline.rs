//! Library-level pipeline tests: mock rephrasing feeding benchmark
//! construction and estimation, end to end.

use aimix_core::benchmark::{Scope, build_benchmark_with};
use aimix_core::corpus::{Document, split_sentences};
use aimix_core::estimator::{
    DeltaScorer, EstimateConfig, PeriodGranularity, estimate_group_period,
};
use aimix_core::rephrase::{MOCK_LEXICON, MockProvider, rephrase_corpus};
use chrono::NaiveDate;

/// A small plain-English corpus. A few mock-lexicon words appear
/// naturally on the human side so substituted words stay inside the
/// benchmark vocabulary.
fn english_docs() -> Vec<Document> {
    let texts = [
        "We measure how writing style varies across groups. The effect is robust to controls. \
         Sampling noise alone cannot explain the gap we see. We discuss what this means for \
         evaluation practice.",
        "This study follows earlier work on corpus comparison. We collect matched pairs of \
         texts and count word use. The counts are weighted by authorship shares. Results are \
         stable across years.",
        "Our method estimates a mixture weight from sentences. Each sentence contributes a \
         likelihood under two profiles. The fitted weight is notably small in early years. \
         Confidence intervals come from resampling.",
        "Benchmarks built on pooled data favor some groups. Group specific baselines remove \
         most of the gap. We report both sets of estimates. The comparison is the crucial \
         contribution of this work.",
        "Word frequency profiles drift between fields. A single standard hides that drift. \
         We quantify the distortion with a simple ratio. The ratio is easy to interpret.",
        "The data cover five years of publications. Each record carries a group label and a \
         weight. We hold out a test year for estimation. All processing steps are seeded and \
         reproducible.",
        "Prior detectors utilize fixed word lists. Such lists age quickly as usage shifts. \
         Our approach learns the contrast from paired texts. It adapts to any group with \
         enough data.",
        "We validate the estimator on simulated mixtures. Recovery is accurate across the \
         whole range. Errors shrink as the sample grows. The code paths are shared with the \
         production pipeline.",
    ];
    texts
        .iter()
        .enumerate()
        .map(|(i, text)| Document {
            doc_id: format!("doc-{i:02}"),
            text_human: text.to_string(),
            text_ai: None,
            country_group: "C".to_string(),
            field_group: "F".to_string(),
            weight: 1.0,
            date: NaiveDate::from_ymd_opt(2021, 1 + (i as u32 % 12), 5).unwrap(),
        })
        .collect()
}

#[test]
fn mock_corpus_yields_ai_leaning_lexicon_words() {
    let mut docs = english_docs();
    let provider = MockProvider::new(11, 0.25);
    rephrase_corpus(&mut docs, &provider, None, 2, false).unwrap();

    let refs: Vec<&Document> = docs.iter().collect();
    // Threshold 1: the corpus is far too small for the full-scale
    // pooled threshold of 5 weighted occurrences.
    let bench = build_benchmark_with(&refs, Scope::Pooled, 1.0, None).unwrap();

    // Lexicon words present in the vocabulary must lean AI (negative
    // log-odds), and clearly so on average.
    let mut lexicon_logodds = Vec::new();
    for word in MOCK_LEXICON {
        if let Some(lo) = bench.log_odds_of(word) {
            lexicon_logodds.push(lo);
        }
    }
    assert!(
        lexicon_logodds.len() >= 2,
        "expected some lexicon words in the vocabulary"
    );
    let mean: f64 = lexicon_logodds.iter().sum::<f64>() / lexicon_logodds.len() as f64;
    assert!(
        mean < -1.0,
        "substituted words should be strongly AI-leaning, mean {mean}"
    );

    // Sentence shapes survive the mock: counts match the originals.
    for (doc, original) in docs.iter().zip(english_docs()) {
        let ai = doc.text_ai.as_ref().unwrap();
        assert_eq!(
            split_sentences(ai).len(),
            split_sentences(&original.text_human).len()
        );
        let n_in = original.text_human.split_whitespace().count() as f64;
        let n_out = ai.split_whitespace().count() as f64;
        assert!((n_out - n_in).abs() / n_in <= 0.2);
    }
}

#[test]
fn estimate_pipeline_runs_on_mock_corpus() {
    let mut docs = english_docs();
    let provider = MockProvider::new(3, 0.2);
    rephrase_corpus(&mut docs, &provider, None, 2, false).unwrap();

    let refs: Vec<&Document> = docs.iter().collect();
    let bench = build_benchmark_with(&refs, Scope::Pooled, 1.0, None).unwrap();
    let cfg = EstimateConfig {
        bootstrap_replicates: 100,
        seed: 5,
    };
    let estimates = estimate_group_period(&docs, &bench, PeriodGranularity::Quarter, &cfg).unwrap();
    assert!(!estimates.is_empty());
    for est in &estimates {
        assert!((0.0..=1.0).contains(&est.alpha));
        assert!(est.ci_half >= 0.0);
        assert!(est.n_sentences >= 1);
    }

    // The human side of the corpus scored against itself leans human:
    // deltas of original sentences are mostly negative under the
    // human-vs-mock benchmark.
    let scorer = DeltaScorer::new(&bench);
    let mut neg = 0usize;
    let mut total = 0usize;
    for doc in &docs {
        for d in scorer.doc_deltas(&doc.text_human) {
            total += 1;
            if d.delta < 0.0 {
                neg += 1;
            }
        }
    }
    assert!(
        neg as f64 >= 0.6 * total as f64,
        "expected mostly human-leaning sentences, got {neg}/{total}"
    );
}
