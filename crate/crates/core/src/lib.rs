//! Corpus forensics for AI-rephrased text: build human-vs-AI word
//! benchmarks (pooled and per country-field group), estimate the share
//! of AI-modified text via a sentence-level Bernoulli-mixture MLE with
//! bootstrap intervals, and quantify how pooled benchmarks distort
//! group comparisons via permutation nulls, ANOVA decomposition, and
//! de-biasing log-ratios.

pub mod analysis;
pub mod benchmark;
pub mod corpus;
pub mod error;
pub mod estimator;
mod opt;
pub mod rephrase;
pub mod seeding;
pub mod simulation;
pub mod stats;

pub use error::{Error, Result};
