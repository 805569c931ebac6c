//! AI rephrasing of human abstracts: prompt rendering, a provider
//! abstraction with a generic chat-completion HTTP client, a
//! deterministic offline mock, and a doc-id keyed cache.

use std::path::PathBuf;
use std::time::Duration;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, fnv1a};

/// System message sent with every rephrasing request.
pub const SYSTEM_MESSAGE: &str =
    "You are a helpful and conversational AI assistant. Respond to the following task.";

/// User-message template. `{word_count}` and `{abstract}` are
/// interpolated by [`render_prompt`].
pub const USER_TEMPLATE: &str = r#"You have experience in academic writing. Your task is to paraphrase a given academic text without altering its meaning, using a structured two-step process in a single response:

        1. **Outline Creation**
        - Reverse-engineer the author's writing process by **taking a piece of text** from a paper and **compressing it into a concise outline**.
        - Begin by briefly identifying the *goal or section type* of the text (e.g., introduction, methods, results, discussion).
        - Then, **produce a short set of bullet points** summarizing the core ideas, arguments, or findings.
        - This should reflect how an author might distill their thoughts into a structured plan.

        2. **Expansion**
        - Your objective is to **expand upon the** concise version **previously crafted**.
        - Use the bullet points to write a **detailed, structured narrative**.
        - The expanded text should be roughly similar in length to the original text (around {word_count} words).

        After completing the outline and expanded narrative, validate briefly that each step in your checklist has been fulfilled and the meaning of the original text is preserved; if not, self-correct minimally.

        Input text to process:
        """{abstract}""""#;

/// A single rephrasing job: the abstract and its whitespace-token
/// count, which the template echoes as the length target.
#[derive(Clone, Debug, PartialEq)]
pub struct RephraseRequest {
    abstract_text: String,
    target_word_count: usize,
}

impl RephraseRequest {
    pub fn new(abstract_text: impl Into<String>) -> Self {
        let abstract_text = abstract_text.into();
        let target_word_count = abstract_text.split_whitespace().count();
        RephraseRequest {
            abstract_text,
            target_word_count,
        }
    }

    pub fn abstract_text(&self) -> &str {
        &self.abstract_text
    }

    pub fn target_word_count(&self) -> usize {
        self.target_word_count
    }
}

/// Instantiate the prompt template. Returns (system, user) messages.
/// Triple-quote runs inside the abstract are backslash-escaped so the
/// enclosing delimiters stay unambiguous.
pub fn render_prompt(req: &RephraseRequest) -> Result<(String, String)> {
    if req.abstract_text.trim().is_empty() {
        return Err(Error::EmptyInput { what: "abstract" });
    }
    let escaped = req.abstract_text.replace("\"\"\"", "\\\"\\\"\\\"");
    let user = USER_TEMPLATE
        .replace("{word_count}", &req.target_word_count.to_string())
        .replace("{abstract}", &escaped);
    Ok((SYSTEM_MESSAGE.to_string(), user))
}

/// Something that can turn an abstract into its rephrased twin.
pub trait Provider: Sync {
    fn rephrase(&self, req: &RephraseRequest) -> Result<String>;
    fn name(&self) -> &'static str;
}

/// Deterministic offline provider: substitutes a seeded fraction of
/// word tokens with entries from a fixed AI-flavored lexicon, leaving
/// punctuation (and therefore sentence structure) in place.
#[derive(Clone, Debug)]
pub struct MockProvider {
    pub seed: u64,
    pub substitution_rate: f64,
}

/// Words the mock substitutes in, chosen for their reputation as
/// LLM-flavored vocabulary.
pub const MOCK_LEXICON: &[&str] = &[
    "moreover",
    "furthermore",
    "notably",
    "comprehensive",
    "pivotal",
    "utilize",
    "leverage",
    "delve",
    "underscore",
    "intricate",
    "robust",
    "nuanced",
    "holistic",
    "foster",
    "elucidate",
    "streamline",
    "meticulous",
    "paradigm",
    "facilitate",
    "crucial",
];

impl Default for MockProvider {
    fn default() -> Self {
        MockProvider {
            seed: 0,
            substitution_rate: 0.15,
        }
    }
}

impl MockProvider {
    pub fn new(seed: u64, substitution_rate: f64) -> Self {
        MockProvider {
            seed,
            substitution_rate,
        }
    }
}

impl Provider for MockProvider {
    fn rephrase(&self, req: &RephraseRequest) -> Result<String> {
        if req.abstract_text.trim().is_empty() {
            return Err(Error::EmptyInput { what: "abstract" });
        }
        // Seeded per abstract, so output is stable regardless of the
        // order documents are processed in.
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            self.seed,
            &[fnv1a(req.abstract_text.as_bytes())],
        ));
        let rewritten: Vec<String> = req
            .abstract_text
            .split_whitespace()
            .map(|token| {
                let core_start = token.find(|c: char| c.is_alphabetic());
                let core_end = token
                    .rfind(|c: char| c.is_alphabetic())
                    .map(|i| i + token[i..].chars().next().unwrap().len_utf8());
                match (core_start, core_end) {
                    (Some(start), Some(end)) if rng.random::<f64>() < self.substitution_rate => {
                        let replacement = MOCK_LEXICON[rng.random_range(0..MOCK_LEXICON.len())];
                        format!("{}{}{}", &token[..start], replacement, &token[end..])
                    }
                    _ => token.to_string(),
                }
            })
            .collect();
        Ok(rewritten.join(" "))
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

/// Connection settings for the chat-completion endpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub endpoint: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_token_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o-mini-2024-07-18".to_string(),
            auth_token_env: "AIMIX_API_TOKEN".to_string(),
            timeout_secs: 120,
            max_retries: 3,
            backoff_base_ms: 1000,
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Generic chat-completion client with bearer auth from the
/// environment and exponential-backoff retries on transient failures.
pub struct HttpProvider {
    config: ProviderConfig,
    token: String,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    /// Fails immediately when the auth environment variable is unset.
    pub fn new(config: ProviderConfig) -> Result<Self> {
        if config.timeout_secs == 0 {
            return Err(Error::ProviderConfig {
                reason: "timeout must be positive".into(),
            });
        }
        let token = std::env::var(&config.auth_token_env).map_err(|_| Error::ProviderConfig {
            reason: format!(
                "environment variable {} is not set; the live provider needs a bearer token",
                config.auth_token_env
            ),
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::ProviderConfig {
                reason: format!("http client: {e}"),
            })?;
        Ok(HttpProvider {
            config,
            token,
            client,
        })
    }

    fn send_once(&self, body: &ChatRequest<'_>) -> std::result::Result<String, (bool, String)> {
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(&self.token)
            .json(body)
            .send()
            .map_err(|e| (true, format!("transport: {e}")))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| (true, format!("reading body: {e}")))?;
        if status.is_success() {
            return Ok(text);
        }
        let retryable = status.as_u16() == 429 || status.is_server_error();
        Err((retryable, format!("http {status}: {text}")))
    }
}

impl Provider for HttpProvider {
    fn rephrase(&self, req: &RephraseRequest) -> Result<String> {
        let (system, user) = render_prompt(req)?;
        let body = ChatRequest {
            model: &self.config.model_name,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: &system,
                },
                ChatMessage {
                    role: "user",
                    content: &user,
                },
            ],
        };

        let attempts = self.config.max_retries + 1;
        let mut last_err = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self
                    .config
                    .backoff_base_ms
                    .saturating_mul(1 << (attempt - 1));
                let jitter = rand::rng().random_range(0..=self.config.backoff_base_ms / 2 + 1);
                std::thread::sleep(Duration::from_millis(backoff + jitter));
            }
            match self.send_once(&body) {
                Ok(raw) => {
                    let parsed: ChatResponse =
                        serde_json::from_str(&raw).map_err(|e| Error::ProviderRequest {
                            attempts: attempt + 1,
                            reason: format!("malformed response: {e}"),
                        })?;
                    let content = parsed
                        .choices
                        .first()
                        .map(|c| c.message.content.as_str())
                        .ok_or_else(|| Error::ProviderRequest {
                            attempts: attempt + 1,
                            reason: "response has no choices".into(),
                        })?;
                    return extract_expansion(content);
                }
                Err((retryable, msg)) => {
                    last_err = msg;
                    if !retryable {
                        break;
                    }
                }
            }
        }
        Err(Error::ProviderRequest {
            attempts,
            reason: last_err,
        })
    }

    fn name(&self) -> &'static str {
        "live"
    }
}

/// Title of a structured section heading, if the line is one:
/// markdown hashes, a bold-only line, or a numbered bold line.
fn heading_title(line: &str) -> Option<String> {
    let mut rest = line.trim();
    if rest.starts_with('#') {
        return Some(rest.trim_start_matches('#').trim().to_string());
    }
    // Optional leading "2." / "2)" enumerator.
    let digits = rest.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 && rest[digits..].starts_with(['.', ')']) {
        rest = rest[digits + 1..].trim_start();
    }
    let body = rest.strip_prefix("**")?;
    let (title, tail) = body.split_once("**")?;
    let tail = tail.trim();
    if tail.is_empty() || tail == ":" {
        return Some(title.trim().trim_end_matches(':').to_string());
    }
    None
}

/// Pull the final expansion section out of a structured outline+expand
/// response: the last heading whose title mentions "expan", up to the
/// next heading (which drops any trailing validation note).
pub fn extract_expansion(content: &str) -> Result<String> {
    let lines: Vec<&str> = content.lines().collect();
    let mut expansion_start: Option<usize> = None;
    for (i, line) in lines.iter().enumerate() {
        if let Some(title) = heading_title(line)
            && title.to_lowercase().contains("expan")
        {
            expansion_start = Some(i + 1);
        }
    }
    let Some(start) = expansion_start else {
        return Err(Error::MissingExpansion {
            payload: content.to_string(),
        });
    };
    let end = lines[start..]
        .iter()
        .position(|l| heading_title(l).is_some())
        .map(|off| start + off)
        .unwrap_or(lines.len());
    let body = lines[start..end].join("\n").trim().to_string();
    if body.is_empty() {
        return Err(Error::MissingExpansion {
            payload: content.to_string(),
        });
    }
    Ok(body)
}

/// Filesystem cache mapping doc_id to rewritten text, so reruns of a
/// rephrasing job are free.
pub struct RephraseCache {
    dir: PathBuf,
}

impl RephraseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(RephraseCache { dir })
    }

    fn path_for(&self, doc_id: &str) -> PathBuf {
        let safe: String = doc_id
            .chars()
            .take(40)
            .map(|c| {
                if c.is_alphanumeric() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.dir
            .join(format!("{safe}_{:016x}.txt", fnv1a(doc_id.as_bytes())))
    }

    pub fn get(&self, doc_id: &str) -> Option<String> {
        std::fs::read_to_string(self.path_for(doc_id)).ok()
    }

    pub fn put(&self, doc_id: &str, text: &str) -> Result<()> {
        let path = self.path_for(doc_id);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Rephrase one document's human abstract.
pub fn rephrase_document(doc: &Document, provider: &dyn Provider) -> Result<String> {
    if doc.text_human.trim().is_empty() {
        return Err(Error::InvalidDocument {
            doc_id: doc.doc_id.clone(),
            reason: "text_human is empty; nothing to rephrase".into(),
        });
    }
    provider.rephrase(&RephraseRequest::new(doc.text_human.clone()))
}

/// Fill `text_ai` for every document that lacks it (all of them when
/// `force`), fanning out over a bounded worker pool. Returns the
/// number of provider calls made.
pub fn rephrase_corpus(
    docs: &mut [Document],
    provider: &dyn Provider,
    cache: Option<&RephraseCache>,
    parallelism: usize,
    force: bool,
) -> Result<usize> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::ProviderConfig {
            reason: format!("worker pool: {e}"),
        })?;

    let results: Vec<Option<Result<(String, bool)>>> = pool.install(|| {
        docs.par_iter()
            .map(|doc| {
                if doc.text_ai.is_some() && !force {
                    return None;
                }
                if let Some(cache) = cache
                    && !force
                    && let Some(hit) = cache.get(&doc.doc_id)
                {
                    return Some(Ok((hit, false)));
                }
                Some(rephrase_document(doc, provider).map(|text| (text, true)))
            })
            .collect()
    });

    let mut calls = 0usize;
    for (doc, result) in docs.iter_mut().zip(results) {
        match result {
            None => {}
            Some(Ok((text, fresh))) => {
                if fresh {
                    calls += 1;
                    if let Some(cache) = cache {
                        cache.put(&doc.doc_id, &text)?;
                    }
                }
                doc.text_ai = Some(text);
            }
            Some(Err(e)) => return Err(e),
        }
    }
    Ok(calls)
}
