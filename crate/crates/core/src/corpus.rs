//! Corpus ingestion and text preprocessing.
//!
//! Documents are one (publication, group) assignment each: a human
//! abstract, an optional AI-rephrased twin, country/field group labels,
//! a fractional weight in (0, 1], and a date. Tokenization lowercases
//! and keeps maximal runs of alphabetic characters; everything else
//! separates. Sentences split after `.`, `!`, `?` when followed by
//! whitespace or end of text.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{fnv1a, rng_for};

/// One publication record carrying its group assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text_human: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_ai: Option<String>,
    pub country_group: String,
    pub field_group: String,
    pub weight: f64,
    pub date: NaiveDate,
}

impl Document {
    /// Check the per-record invariants (weight in (0, 1], nonempty id).
    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::InvalidDocument {
                doc_id: self.doc_id.clone(),
                reason: "doc_id is empty".into(),
            });
        }
        if !(self.weight > 0.0 && self.weight <= 1.0) {
            return Err(Error::InvalidDocument {
                doc_id: self.doc_id.clone(),
                reason: format!("weight {} outside (0, 1]", self.weight),
            });
        }
        Ok(())
    }

    pub fn group(&self) -> GroupKey {
        GroupKey {
            country: self.country_group.clone(),
            field: self.field_group.clone(),
        }
    }

    /// The text for one side of a paired corpus. `ai` side errors when
    /// the rephrased twin is missing.
    pub fn side_text(&self, side: Side) -> Result<&str> {
        match side {
            Side::Human => Ok(&self.text_human),
            Side::Ai => self.text_ai.as_deref().ok_or_else(|| Error::MissingAiText {
                doc_id: self.doc_id.clone(),
            }),
        }
    }
}

/// Which half of the human/AI pair to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Human,
    Ai,
}

/// A country-group x field-group cell.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub country: String,
    pub field: String,
}

impl GroupKey {
    pub fn new(country: impl Into<String>, field: impl Into<String>) -> Self {
        GroupKey {
            country: country.into(),
            field: field.into(),
        }
    }

    /// Filesystem-safe form `<country>__<field>` with non-alphanumeric
    /// characters replaced by `_`.
    pub fn slug(&self) -> String {
        fn clean(s: &str) -> String {
            s.chars()
                .map(|c| if c.is_alphanumeric() { c } else { '_' })
                .collect()
        }
        format!("{}__{}", clean(&self.country), clean(&self.field))
    }

    /// Seed parts identifying this group.
    pub fn seed_parts(&self) -> [u64; 2] {
        [fnv1a(self.country.as_bytes()), fnv1a(self.field.as_bytes())]
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.country, self.field)
    }
}

/// Corpus file formats accepted by [`load_corpus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

/// Load and validate a corpus file.
///
/// Malformed or invariant-violating records are collected and reported
/// together with their line numbers; duplicate `doc_id`s are a
/// corpus-level error.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut problems: Vec<(usize, String)> = Vec::new();

    match format {
        CorpusFormat::Jsonl => {
            for (idx, line) in raw.lines().enumerate() {
                let lineno = idx + 1;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<Document>(line) {
                    Ok(doc) => match doc.validate() {
                        Ok(()) => docs.push(doc),
                        Err(e) => problems.push((lineno, e.to_string())),
                    },
                    Err(e) => problems.push((lineno, e.to_string())),
                }
            }
        }
        CorpusFormat::Csv => {
            let mut reader = csv::Reader::from_reader(raw.as_bytes());
            for (idx, row) in reader.deserialize::<Document>().enumerate() {
                let lineno = idx + 2; // header is line 1
                match row {
                    Ok(doc) => match doc.validate() {
                        Ok(()) => docs.push(doc),
                        Err(e) => problems.push((lineno, e.to_string())),
                    },
                    Err(e) => problems.push((lineno, e.to_string())),
                }
            }
        }
    }

    if !problems.is_empty() {
        return Err(Error::MalformedRecords {
            path: path.to_path_buf(),
            problems,
        });
    }

    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.doc_id.as_str()) {
            return Err(Error::DuplicateDocId {
                doc_id: doc.doc_id.clone(),
            });
        }
    }
    Ok(docs)
}

/// Render a corpus as JSON Lines.
pub fn corpus_to_jsonl(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).expect("document serializes"));
        out.push('\n');
    }
    out
}

/// Write a corpus as JSON Lines.
pub fn write_corpus_jsonl(path: &Path, docs: &[Document]) -> Result<()> {
    fs::write(path, corpus_to_jsonl(docs)).map_err(|e| Error::io(path, e))
}

/// Fractional affiliation counting: each country's weight is its author
/// count over the total. Weights sum to 1.
pub fn assign_country_weights<S: AsRef<str>>(
    affiliation_countries: &[S],
) -> Result<BTreeMap<String, f64>> {
    if affiliation_countries.is_empty() {
        return Err(Error::EmptyAffiliations);
    }
    let total = affiliation_countries.len() as f64;
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for c in affiliation_countries {
        *counts.entry(c.as_ref().to_string()).or_insert(0.0) += 1.0;
    }
    for v in counts.values_mut() {
        *v /= total;
    }
    Ok(counts)
}

/// Lowercased maximal runs of alphabetic characters; all other
/// characters (digits, hyphens, apostrophes, ...) separate.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphabetic() {
            // Case folding can expand to multiple characters and some
            // expansions carry combining marks (e.g. U+0130 lowers to
            // "i" + U+0307); tokens keep only the alphabetic part.
            current.extend(ch.to_lowercase().filter(|c| c.is_alphabetic()));
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Byte ranges of trimmed sentences. A sentence ends after `.`, `!` or
/// `?` followed by whitespace or end of text; text between spans is
/// whitespace that was trimmed away, so the spans plus their gaps
/// reconstruct the input exactly.
pub fn sentence_spans(text: &str) -> Vec<Range<usize>> {
    let mut raw_bounds = Vec::new();
    let mut iter = text.char_indices().peekable();
    let mut start = 0usize;
    while let Some((pos, ch)) = iter.next() {
        if matches!(ch, '.' | '!' | '?') {
            let end = pos + ch.len_utf8();
            let at_boundary = match iter.peek() {
                None => true,
                Some(&(_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                raw_bounds.push(start..end);
                start = end;
            }
        }
    }
    if start < text.len() {
        raw_bounds.push(start..text.len());
    }

    let mut spans = Vec::new();
    for r in raw_bounds {
        let seg = &text[r.clone()];
        let trimmed = seg.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = seg.len() - seg.trim_start().len();
        let begin = r.start + lead;
        spans.push(begin..begin + trimmed.len());
    }
    spans
}

/// Trimmed, nonempty sentences of `text`.
pub fn split_sentences(text: &str) -> Vec<&str> {
    sentence_spans(text).into_iter().map(|r| &text[r]).collect()
}

/// Sentences of `text` as token lists, keeping only sentences with at
/// least two raw tokens (the estimation filter).
pub fn prepared_sentences(text: &str) -> Vec<Vec<String>> {
    split_sentences(text)
        .into_iter()
        .map(tokenize)
        .filter(|tokens| tokens.len() >= 2)
        .collect()
}

/// Per group, keep `min(cap, group size)` documents chosen uniformly
/// without replacement. Deterministic in `seed` and independent of the
/// input ordering; output is sorted by group and then `doc_id`.
pub fn sample_training(docs: &[Document], cap: usize, seed: u64) -> Vec<Document> {
    let mut by_group: BTreeMap<GroupKey, Vec<&Document>> = BTreeMap::new();
    for doc in docs {
        by_group.entry(doc.group()).or_default().push(doc);
    }
    let mut picked = Vec::new();
    for (key, mut members) in by_group {
        members.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if members.len() <= cap {
            picked.extend(members.into_iter().cloned());
            continue;
        }
        let mut rng = rng_for(seed, &key.seed_parts());
        let mut chosen = rand::seq::index::sample(&mut rng, members.len(), cap).into_vec();
        chosen.sort_unstable();
        picked.extend(chosen.into_iter().map(|i| members[i].clone()));
    }
    picked
}

/// Raw-label to group-label maps for the country and field axes.
///
/// The group set is the set of map values; documents must carry labels
/// from that set. The bundled default covers every printed example of
/// the 18-country / 13-field layout and is meant to be completed by
/// the user for full coverage.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TaxonomyConfig {
    pub country_map: BTreeMap<String, String>,
    pub field_map: BTreeMap<String, String>,
}

impl TaxonomyConfig {
    /// Parse the key-value config format:
    ///
    /// ```text
    /// [countries]
    /// Mexico = Latin America & Caribbean
    /// [fields]
    /// Psychology = Psychology
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Countries,
            Fields,
        }
        let mut section = Section::None;
        let mut config = TaxonomyConfig::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[countries]" => section = Section::Countries,
                "[fields]" => section = Section::Fields,
                _ => {
                    let (raw, group) = line.split_once('=').ok_or_else(|| Error::Domain {
                        what: "taxonomy config",
                        reason: format!("line {}: expected `raw = group`", idx + 1),
                    })?;
                    let (raw, group) = (raw.trim().to_string(), group.trim().to_string());
                    match section {
                        Section::Countries => {
                            config.country_map.insert(raw, group);
                        }
                        Section::Fields => {
                            config.field_map.insert(raw, group);
                        }
                        Section::None => {
                            return Err(Error::Domain {
                                what: "taxonomy config",
                                reason: format!("line {}: entry before any section", idx + 1),
                            });
                        }
                    }
                }
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The bundled default taxonomy.
    pub fn bundled_default() -> Self {
        Self::parse(include_str!("../assets/default_taxonomy.conf"))
            .expect("bundled taxonomy parses")
    }

    pub fn country_group(&self, raw: &str) -> Option<&str> {
        self.country_map.get(raw).map(String::as_str)
    }

    pub fn field_group(&self, raw: &str) -> Option<&str> {
        self.field_map.get(raw).map(String::as_str)
    }

    pub fn country_groups(&self) -> BTreeSet<&str> {
        self.country_map.values().map(String::as_str).collect()
    }

    pub fn field_groups(&self) -> BTreeSet<&str> {
        self.field_map.values().map(String::as_str).collect()
    }

    /// Check that every document's labels come from the configured
    /// group sets.
    pub fn validate_documents(&self, docs: &[Document]) -> Result<()> {
        let countries = self.country_groups();
        let fields = self.field_groups();
        for doc in docs {
            if !countries.contains(doc.country_group.as_str()) {
                return Err(Error::UnknownLabel {
                    axis: "country",
                    label: doc.country_group.clone(),
                });
            }
            if !fields.contains(doc.field_group.as_str()) {
                return Err(Error::UnknownLabel {
                    axis: "field",
                    label: doc.field_group.clone(),
                });
            }
        }
        Ok(())
    }

    /// Fractional counting rolled up to country groups. Raw labels not
    /// in the map are an error.
    pub fn assign_group_weights<S: AsRef<str>>(
        &self,
        affiliation_countries: &[S],
    ) -> Result<BTreeMap<String, f64>> {
        let per_country = assign_country_weights(affiliation_countries)?;
        let mut per_group: BTreeMap<String, f64> = BTreeMap::new();
        for (raw, w) in per_country {
            let group = self.country_group(&raw).ok_or(Error::UnknownLabel {
                axis: "country",
                label: raw,
            })?;
            *per_group.entry(group.to_string()).or_insert(0.0) += w;
        }
        Ok(per_group)
    }
}

/// Group documents by their group key, preserving input order within
/// each group.
pub fn group_documents(docs: &[Document]) -> BTreeMap<GroupKey, Vec<&Document>> {
    let mut by_group: BTreeMap<GroupKey, Vec<&Document>> = BTreeMap::new();
    for doc in docs {
        by_group.entry(doc.group()).or_default().push(doc);
    }
    by_group
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, country: &str, field: &str) -> Document {
        Document {
            doc_id: id.to_string(),
            text_human: "Some text.".to_string(),
            text_ai: None,
            country_group: country.to_string(),
            field_group: field.to_string(),
            weight: 1.0,
            date: NaiveDate::from_ymd_opt(2020, 6, 1).unwrap(),
        }
    }

    #[test]
    fn tokenize_plain_words() {
        assert_eq!(tokenize("Gene expression"), vec!["gene", "expression"]);
    }

    #[test]
    fn tokenize_separates_on_non_alphabetic() {
        assert_eq!(
            tokenize("The model's AUC-0.9."),
            vec!["the", "model", "s", "auc"]
        );
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_unicode_letters() {
        assert_eq!(tokenize("Über-Äpfel"), vec!["über", "äpfel"]);
        // U+0130 lowercases to "i" plus a combining mark, which is
        // not alphabetic and must not survive into the token.
        assert_eq!(tokenize("İstanbul"), vec!["istanbul"]);
    }

    #[test]
    fn sentences_basic() {
        assert_eq!(split_sentences("A b. C d!"), vec!["A b.", "C d!"]);
        assert_eq!(split_sentences("no terminator"), vec!["no terminator"]);
        assert_eq!(split_sentences("X? Y. Z"), vec!["X?", "Y.", "Z"]);
    }

    #[test]
    fn sentences_do_not_split_inside_numbers() {
        assert_eq!(
            split_sentences("AUC is 0.9 overall."),
            vec!["AUC is 0.9 overall."]
        );
    }

    #[test]
    fn assign_weights_examples() {
        let w = assign_country_weights(&["US", "US", "CN"]).unwrap();
        assert!((w["US"] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w["CN"] - 1.0 / 3.0).abs() < 1e-15);

        let w = assign_country_weights(&["JP"]).unwrap();
        assert_eq!(w["JP"], 1.0);

        let w = assign_country_weights(&["FR", "DE", "BR", "BR"]).unwrap();
        assert_eq!(w["FR"], 0.25);
        assert_eq!(w["DE"], 0.25);
        assert_eq!(w["BR"], 0.5);

        assert!(matches!(
            assign_country_weights::<&str>(&[]),
            Err(Error::EmptyAffiliations)
        ));
    }

    #[test]
    fn load_jsonl_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let lines = [
            r#"{"doc_id":"a","text_human":"One.","country_group":"C","field_group":"F","weight":1.0,"date":"2020-01-02"}"#,
            r#"{"doc_id":"b","text_human":"Two.","text_ai":"Two alt.","country_group":"C","field_group":"F","weight":0.5,"date":"2020-02-03"}"#,
            r#"{"doc_id":"c","text_human":"Three.","country_group":"D","field_group":"F","weight":0.25,"date":"2020-03-04"}"#,
        ];
        fs::write(&path, lines.join("\n")).unwrap();
        let docs = load_corpus(&path, CorpusFormat::Jsonl).unwrap();
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].text_ai, None);
        assert_eq!(docs[1].text_ai.as_deref(), Some("Two alt."));
    }

    #[test]
    fn load_rejects_zero_weight() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        fs::write(
            &path,
            r#"{"doc_id":"a","text_human":"One.","country_group":"C","field_group":"F","weight":0.0,"date":"2020-01-02"}"#,
        )
        .unwrap();
        let err = load_corpus(&path, CorpusFormat::Jsonl).unwrap_err();
        match err {
            Error::MalformedRecords { problems, .. } => {
                assert_eq!(problems.len(), 1);
                assert_eq!(problems[0].0, 1);
                assert!(problems[0].1.contains("weight"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn load_rejects_duplicate_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let line = r#"{"doc_id":"a","text_human":"One.","country_group":"C","field_group":"F","weight":1.0,"date":"2020-01-02"}"#;
        fs::write(&path, format!("{line}\n{line}")).unwrap();
        assert!(matches!(
            load_corpus(&path, CorpusFormat::Jsonl),
            Err(Error::DuplicateDocId { .. })
        ));
    }

    #[test]
    fn load_csv_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.csv");
        fs::write(
            &path,
            "doc_id,text_human,text_ai,country_group,field_group,weight,date\n\
             a,One.,,C,F,1.0,2020-01-02\n\
             b,Two.,Two alt.,C,F,0.5,2020-02-03\n",
        )
        .unwrap();
        let docs = load_corpus(&path, CorpusFormat::Csv).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].text_ai, None);
        assert_eq!(docs[1].text_ai.as_deref(), Some("Two alt."));
    }

    #[test]
    fn sample_training_keeps_small_groups_and_caps_large_ones() {
        let mut docs = Vec::new();
        for i in 0..1500 {
            docs.push(doc(&format!("s{i:05}"), "Small", "F"));
        }
        for i in 0..5000 {
            docs.push(doc(&format!("l{i:05}"), "Large", "F"));
        }
        let sampled = sample_training(&docs, 2000, 42);
        let small = sampled
            .iter()
            .filter(|d| d.country_group == "Small")
            .count();
        let large = sampled
            .iter()
            .filter(|d| d.country_group == "Large")
            .count();
        assert_eq!(small, 1500);
        assert_eq!(large, 2000);

        let again = sample_training(&docs, 2000, 42);
        assert_eq!(sampled, again);
        let other = sample_training(&docs, 2000, 43);
        assert_ne!(sampled, other);
    }

    #[test]
    fn sample_training_uncapped_is_identity_up_to_ordering() {
        let docs = vec![doc("b", "C", "F"), doc("a", "C", "F"), doc("c", "D", "G")];
        let sampled = sample_training(&docs, usize::MAX, 1);
        let mut ids: Vec<_> = sampled.iter().map(|d| d.doc_id.clone()).collect();
        ids.sort();
        assert_eq!(ids, vec!["a", "b", "c"]);
    }

    #[test]
    fn taxonomy_roundtrip_and_grouping() {
        let tax = TaxonomyConfig::bundled_default();
        assert_eq!(
            tax.country_group("Mexico"),
            Some("Latin America & Caribbean")
        );
        assert_eq!(tax.country_group("United States"), Some("United States"));
        assert_eq!(tax.field_group("Psychology"), Some("Psychology"));
        assert_eq!(tax.country_groups().len(), 18);
        assert_eq!(tax.field_groups().len(), 13);

        let w = tax
            .assign_group_weights(&["United States", "United States", "Singapore"])
            .unwrap();
        assert!((w["United States"] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w["Asia Pacific"] - 1.0 / 3.0).abs() < 1e-15);

        assert!(matches!(
            tax.assign_group_weights(&["Atlantis"]),
            Err(Error::UnknownLabel { .. })
        ));
    }

    #[test]
    fn taxonomy_validates_documents() {
        let tax = TaxonomyConfig::bundled_default();
        let good = doc("a", "United States", "Psychology");
        let bad = doc("b", "Nowhere", "Psychology");
        assert!(tax.validate_documents(std::slice::from_ref(&good)).is_ok());
        assert!(tax.validate_documents(&[good, bad]).is_err());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent_on_joined_output(text in "\\PC{0,200}") {
            let tokens = tokenize(&text);
            let rejoined = tokens.join(" ");
            prop_assert_eq!(tokenize(&rejoined), tokens);
        }

        #[test]
        fn country_weights_sum_to_one(labels in proptest::collection::vec("[A-Z]{2}", 1..20)) {
            let w = assign_country_weights(&labels).unwrap();
            let sum: f64 = w.values().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sentence_spans_drop_no_characters(text in "\\PC{0,200}") {
            let spans = sentence_spans(&text);
            let mut rebuilt = String::new();
            let mut cursor = 0usize;
            for span in &spans {
                rebuilt.push_str(&text[cursor..span.start]);
                rebuilt.push_str(&text[span.clone()]);
                cursor = span.end;
            }
            rebuilt.push_str(&text[cursor..]);
            prop_assert_eq!(rebuilt, text);
        }
    }
}
