//! Composite-definition generation through a chat-completion service.
//!
//! The conversation has at most two turns. The first user message carries
//! the initial prompt and the full numbered corpus and yields one definition.
//! When more than one definition is requested, a continuation prompt asks for
//! the remaining `n - 1`. Sampling itself is left to the service.
//!
//! [`MockChatClient`] answers the same conversation offline from
//! [`mock_generate`], so the pipeline can run without a service.

use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, Definition, DefinitionKind};
use crate::embedding::tokenize;
use crate::error::{Error, Result};
use crate::http::{join_url, JsonClient};

/// Environment variable holding the chat service bearer token.
pub const GEN_TOKEN_ENV: &str = "GEN_API_TOKEN";

pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_N_DEFINITIONS: usize = 20;
pub const DEFAULT_MAX_WORDS: usize = 35;

const ID_PREFIX: &str = "gen";

/// How the corpus text reaches the service.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ContextDelivery {
    /// Prompt and the whole corpus in one user message.
    Single,
    /// Corpus split over several user messages of `per_message` definitions,
    /// followed by the prompt on its own.
    Chunked { per_message: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub endpoint: Option<String>,
    pub model_id: String,
    pub temperature: f64,
    pub n_definitions: usize,
    pub max_words_per_definition: usize,
    /// Mock generator only.
    pub seed: Option<u64>,
    pub timeout: Duration,
    pub context: ContextDelivery,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model_id: "gpt-4".into(),
            temperature: DEFAULT_TEMPERATURE,
            n_definitions: DEFAULT_N_DEFINITIONS,
            max_words_per_definition: DEFAULT_MAX_WORDS,
            seed: None,
            timeout: Duration::from_secs(300),
            context: ContextDelivery::Single,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(Error::InvalidConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.n_definitions == 0 {
            return Err(Error::InvalidConfig(
                "n_definitions must be at least 1".into(),
            ));
        }
        if self.max_words_per_definition == 0 {
            return Err(Error::InvalidConfig(
                "max_words_per_definition must be at least 1".into(),
            ));
        }
        if let ContextDelivery::Chunked { per_message: 0 } = self.context {
            return Err(Error::InvalidConfig(
                "per_message must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub initial_prompt: String,
    pub continuation_prompt: String,
    /// The corpus as a numbered list, one definition per line.
    pub context: String,
}

impl PromptBundle {
    /// Default prompts for `n` definitions of at most `max_words` words.
    /// With `n = 20` and `max_words = 35` these are the original wording.
    pub fn new(corpus: &Corpus, n: usize, max_words: usize) -> Self {
        Self {
            initial_prompt: format!(
                "Produce one complete definition of a smart city using various definitions \
                 mentioned below. Only include technology-related characteristics mentioned in \
                 these definitions. Write in one paragraph, shorten as much as possible. \
                 Limit to {max_words} words."
            ),
            continuation_prompt: format!(
                "Produce another {} different definitions, limit each to {max_words} words.",
                n.saturating_sub(1)
            ),
            context: numbered_context(corpus.definitions()),
        }
    }

    pub fn for_config(corpus: &Corpus, config: &GenerationConfig) -> Self {
        Self::new(
            corpus,
            config.n_definitions,
            config.max_words_per_definition,
        )
    }
}

fn numbered_context(defs: &[Definition]) -> String {
    let mut out = String::new();
    for (i, d) in defs.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, d.text);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

/// Body of `POST {endpoint}/chat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
}

pub trait ChatClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

/// Chat service over HTTP; bearer token from `GEN_API_TOKEN`. Single attempt per turn.
pub struct HttpChatClient {
    url: String,
    client: JsonClient,
}

impl HttpChatClient {
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        Self {
            url: join_url(endpoint, "chat"),
            client: JsonClient::new(
                timeout,
                JsonClient::token_from_env(GEN_TOKEN_ENV),
                0,
                Duration::ZERO,
            ),
        }
    }

    pub fn from_config(config: &GenerationConfig) -> Result<Self> {
        let endpoint = config
            .endpoint
            .as_deref()
            .filter(|e| !e.is_empty())
            .ok_or_else(|| Error::InvalidConfig("generation requires an endpoint".into()))?;
        Ok(Self::new(endpoint, config.timeout))
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let resp: ChatResponse = self.client.post(&self.url, request)?;
        Ok(resp.content)
    }
}

/// Offline stand-in for the chat service. The first turn gets one mock
/// definition, the continuation turn a numbered list of the rest.
pub struct MockChatClient {
    texts: Vec<String>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl MockChatClient {
    pub fn new(corpus: &Corpus, seed: u64, n: usize) -> Result<Self> {
        Ok(Self {
            texts: mock_generate(corpus, seed, n)?,
            requests: Mutex::new(Vec::new()),
        })
    }

    /// Every request received so far.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().expect("mock lock").clone()
    }
}

impl ChatClient for MockChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        self.requests
            .lock()
            .expect("mock lock")
            .push(request.clone());
        let answered = request.messages.iter().any(|m| m.role == Role::Assistant);
        if !answered {
            return Ok(self.texts[0].clone());
        }
        let mut out = String::new();
        for (i, t) in self.texts.iter().skip(1).enumerate() {
            let _ = writeln!(out, "{}. {}", i + 1, t);
        }
        Ok(out)
    }
}

const MOCK_TEMPLATES: &[&str] = &[
    "A smart city uses {0} and {1} to improve {2}, {3}, and {4}.",
    "In a smart city, {0} and {1} support {2} and {3} for its residents.",
    "A smart city is an urban area where {0} and {1} enable {2}, {3}, and {4}.",
    "Such a city integrates {0}, {1}, and {2} to enhance {3} and {4}.",
    "A smart city applies {0} to {1}, aiming at {2} and {3}.",
];

fn mock_vocabulary(corpus: &Corpus) -> Vec<String> {
    let all: std::collections::BTreeSet<String> = corpus
        .iter()
        .flat_map(|d| tokenize(&d.text))
        .filter(|t| t.chars().all(|c| c.is_ascii_alphabetic()))
        .collect();
    let long: Vec<String> = all.iter().filter(|t| t.len() >= 5).cloned().collect();
    if !long.is_empty() {
        long
    } else if !all.is_empty() {
        all.into_iter().collect()
    } else {
        vec!["technology".to_string()]
    }
}

fn mock_rng(corpus: &Corpus, seed: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(corpus.content_hash().as_bytes());
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// `n` template sentences filled with words drawn from the corpus vocabulary.
/// Output depends only on the corpus content hash, `seed` and `n`.
pub fn mock_generate(corpus: &Corpus, seed: u64, n: usize) -> Result<Vec<String>> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be at least 1".into()));
    }
    let vocab = mock_vocabulary(corpus);
    let mut rng = mock_rng(corpus, seed);
    Ok((0..n)
        .map(|_| {
            let template = MOCK_TEMPLATES[rng.random_range(0..MOCK_TEMPLATES.len())];
            let mut text = template.to_string();
            for slot in 0..5 {
                let word = &vocab[rng.random_range(0..vocab.len())];
                text = text.replace(&format!("{{{slot}}}"), word);
            }
            text
        })
        .collect())
}

/// Removes a leading list marker such as `1.`, `2)`, `(3)`, `-`, `*` or `•`.
fn strip_list_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = t.strip_prefix(bullet) {
            return Some(rest);
        }
    }
    let (inner, open) = match t.strip_prefix('(') {
        Some(rest) => (rest, true),
        None => (t, false),
    };
    let digits = inner.chars().take_while(char::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = &inner[digits..];
    let rest = if open {
        rest.strip_prefix(')')?
    } else {
        rest.strip_prefix('.')
            .or_else(|| rest.strip_prefix(')'))
            .or_else(|| rest.strip_prefix(':'))?
    };
    if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        Some(rest)
    } else {
        None
    }
}

fn strip_quotes(s: &str) -> &str {
    for (open, close) in [('"', '"'), ('“', '”')] {
        if let Some(inner) = s.strip_prefix(open).and_then(|r| r.strip_suffix(close)) {
            return inner.trim();
        }
    }
    s
}

fn clean(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    strip_quotes(&collapsed).to_string()
}

/// Splits a response into definitions.
///
/// If any line carries a list marker, each marked line starts a definition,
/// unmarked lines continue the current one and lines before the first marker
/// are dropped. Otherwise every blank-line separated paragraph is one definition.
pub fn split_definitions(response: &str) -> Vec<String> {
    let has_markers = response.lines().any(|l| strip_list_marker(l).is_some());
    let mut items: Vec<String> = Vec::new();
    if has_markers {
        let mut current: Option<String> = None;
        for line in response.lines() {
            if let Some(rest) = strip_list_marker(line) {
                items.extend(current.take());
                current = Some(rest.to_string());
            } else if let Some(cur) = current.as_mut() {
                if line.trim().is_empty() {
                    items.extend(current.take());
                } else {
                    cur.push(' ');
                    cur.push_str(line.trim());
                }
            }
        }
        items.extend(current);
    } else {
        let mut para = String::new();
        for line in response.lines() {
            if line.trim().is_empty() {
                if !para.is_empty() {
                    items.push(std::mem::take(&mut para));
                }
            } else {
                para.push(' ');
                para.push_str(line.trim());
            }
        }
        if !para.is_empty() {
            items.push(para);
        }
    }
    items
        .iter()
        .map(|s| clean(s))
        .filter(|s| !s.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Initial,
    Continuation,
}

/// Where one generated definition came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub id: String,
    pub prompt_kind: PromptKind,
    pub prompt: String,
    pub model_id: String,
    pub temperature: f64,
    pub timestamp: DateTime<Utc>,
    pub seed: Option<u64>,
    pub source_corpus: String,
    pub source_corpus_hash: String,
    pub word_count: usize,
    pub over_word_limit: bool,
}

/// A definition longer than the requested word limit. Kept, not rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverLongDefinition {
    pub id: String,
    pub words: usize,
    pub limit: usize,
}

#[derive(Debug, Clone)]
pub struct Generation {
    pub corpus: Corpus,
    pub provenance: Vec<ProvenanceRecord>,
    pub warnings: Vec<OverLongDefinition>,
}

impl Generation {
    pub fn provenance_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.provenance {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

pub fn parse_provenance(input: &str) -> Result<Vec<ProvenanceRecord>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

fn id_prefix(corpus: &Corpus, n: usize) -> String {
    let collides = |p: &str| (1..=n).any(|i| corpus.contains(&format!("{p}-{i}")));
    if !collides(ID_PREFIX) {
        return ID_PREFIX.to_string();
    }
    (2..)
        .map(|k| format!("{ID_PREFIX}{k}"))
        .find(|p| !collides(p))
        .expect("unbounded search")
}

fn context_messages(
    corpus: &Corpus,
    prompts: &PromptBundle,
    delivery: ContextDelivery,
) -> Vec<ChatMessage> {
    match delivery {
        ContextDelivery::Single => vec![ChatMessage::user(format!(
            "{}\n\n{}",
            prompts.initial_prompt, prompts.context
        ))],
        ContextDelivery::Chunked { per_message } => {
            let chunks: Vec<&[Definition]> = corpus.definitions().chunks(per_message).collect();
            let total = chunks.len();
            let mut msgs: Vec<ChatMessage> = Vec::with_capacity(total + 1);
            let mut offset = 0;
            for (k, chunk) in chunks.into_iter().enumerate() {
                let mut body = format!("Definitions, part {} of {}:\n", k + 1, total);
                for (i, d) in chunk.iter().enumerate() {
                    let _ = writeln!(body, "{}. {}", offset + i + 1, d.text);
                }
                offset += chunk.len();
                msgs.push(ChatMessage::user(body));
            }
            msgs.push(ChatMessage::user(prompts.initial_prompt.clone()));
            msgs
        }
    }
}

/// Runs the generation conversation and returns `config.n_definitions` composite
/// definitions with ids `gen-1..gen-N` (another prefix if those collide with
/// `corpus`), plus one provenance record per definition.
pub fn generate_composites(
    corpus: &Corpus,
    config: &GenerationConfig,
    prompts: &PromptBundle,
    client: &dyn ChatClient,
) -> Result<Generation> {
    config.validate()?;
    let n = config.n_definitions;
    let mut messages = context_messages(corpus, prompts, config.context);
    let mut request = ChatRequest {
        model_id: config.model_id.clone(),
        temperature: config.temperature,
        messages: messages.clone(),
    };

    let first_reply = client.complete(&request)?;
    let first = split_definitions(&first_reply);
    if first.len() != 1 {
        return Err(Error::MalformedResponse(format!(
            "expected one definition in the first reply, found {}",
            first.len()
        )));
    }
    let mut texts: Vec<(String, PromptKind, DateTime<Utc>)> = vec![(
        first.into_iter().next().expect("len 1"),
        PromptKind::Initial,
        Utc::now(),
    )];

    if n > 1 {
        messages.push(ChatMessage {
            role: Role::Assistant,
            content: first_reply,
        });
        messages.push(ChatMessage::user(prompts.continuation_prompt.clone()));
        request.messages = messages;
        let reply = client.complete(&request)?;
        let rest = split_definitions(&reply);
        if rest.len() != n - 1 {
            return Err(Error::MalformedResponse(format!(
                "expected {} definitions in the continuation reply, found {}",
                n - 1,
                rest.len()
            )));
        }
        let at = Utc::now();
        texts.extend(rest.into_iter().map(|t| (t, PromptKind::Continuation, at)));
    }

    let prefix = id_prefix(corpus, n);
    let corpus_hash = corpus.content_hash();
    let mut defs = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for (i, (text, kind, at)) in texts.into_iter().enumerate() {
        let id = format!("{prefix}-{}", i + 1);
        let source = format!(
            "generated by {} at temperature {}",
            config.model_id, config.temperature
        );
        let def = Definition::new(id.clone(), &text, DefinitionKind::Composite, source)?;
        let words = def.word_count();
        let over = words > config.max_words_per_definition;
        if over {
            warn!(
                "{id} has {words} words, over the limit of {}",
                config.max_words_per_definition
            );
            warnings.push(OverLongDefinition {
                id: id.clone(),
                words,
                limit: config.max_words_per_definition,
            });
        }
        provenance.push(ProvenanceRecord {
            id,
            prompt: match kind {
                PromptKind::Initial => prompts.initial_prompt.clone(),
                PromptKind::Continuation => prompts.continuation_prompt.clone(),
            },
            prompt_kind: kind,
            model_id: config.model_id.clone(),
            temperature: config.temperature,
            timestamp: at,
            seed: config.seed,
            source_corpus: corpus.name.clone(),
            source_corpus_hash: corpus_hash.clone(),
            word_count: words,
            over_word_limit: over,
        });
        defs.push(def);
    }

    Ok(Generation {
        corpus: Corpus::new(format!("generated-from-{}", corpus.name), defs)?,
        provenance,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_corpus_str;
    use crate::fixtures;

    struct Scripted(Vec<String>, Mutex<usize>);

    impl ChatClient for Scripted {
        fn complete(&self, _r: &ChatRequest) -> Result<String> {
            let mut i = self.1.lock().unwrap();
            *i += 1;
            Ok(self.0[*i - 1].clone())
        }
    }

    #[test]
    fn default_prompts_are_verbatim() {
        let c = fixtures::individual_60();
        let p = PromptBundle::new(&c, 20, 35);
        assert_eq!(
            p.initial_prompt,
            "Produce one complete definition of a smart city using various definitions mentioned \
             below. Only include technology-related characteristics mentioned in these \
             definitions. Write in one paragraph, shorten as much as possible. Limit to 35 words."
        );
        assert_eq!(
            p.continuation_prompt,
            "Produce another 19 different definitions, limit each to 35 words."
        );
        assert_eq!(p.context.lines().count(), 60);
        assert!(p.context.starts_with("1. A smart city is an urban area"));
    }

    #[test]
    fn config_validation() {
        let mut c = GenerationConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.temperature, 0.7);
        c.temperature = 2.5;
        assert!(c.validate().is_err());
        c = GenerationConfig {
            n_definitions: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c = GenerationConfig {
            context: ContextDelivery::Chunked { per_message: 0 },
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn list_markers() {
        assert_eq!(strip_list_marker("1. abc"), Some(" abc"));
        assert_eq!(strip_list_marker("  12) abc"), Some(" abc"));
        assert_eq!(strip_list_marker("(3) abc"), Some(" abc"));
        assert_eq!(strip_list_marker("- abc"), Some("abc"));
        assert_eq!(strip_list_marker("3.5 million people"), None);
        assert_eq!(strip_list_marker("A smart city"), None);
        assert_eq!(strip_list_marker("2020s were"), None);
    }

    #[test]
    fn splitting_numbered_list_with_preamble() {
        let resp = "Here are the definitions:\n\n1. First one\ncontinues here.\n2) \"Second.\"\n\n3. Third.\n";
        assert_eq!(
            split_definitions(resp),
            vec!["First one continues here.", "Second.", "Third."]
        );
    }

    #[test]
    fn splitting_paragraphs() {
        let resp = "A smart city is one.\n\nAnother city\nwraps lines.\n";
        assert_eq!(
            split_definitions(resp),
            vec!["A smart city is one.", "Another city wraps lines."]
        );
        assert_eq!(
            split_definitions("“Quoted single.”"),
            vec!["Quoted single."]
        );
    }

    #[test]
    fn mock_is_deterministic_and_seed_sensitive() {
        let c = fixtures::individual_60();
        let a = mock_generate(&c, 1, 3).unwrap();
        assert_eq!(a, mock_generate(&c, 1, 3).unwrap());
        assert_ne!(a, mock_generate(&c, 2, 3).unwrap());
        assert_eq!(a.len(), 3);
        for t in &a {
            assert!(t.split_whitespace().count() <= DEFAULT_MAX_WORDS);
        }
        assert!(matches!(
            mock_generate(&c, 1, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn mock_depends_on_content_not_name() {
        let a = parse_corpus_str(
            "one",
            "{\"id\":\"a\",\"text\":\"sensors networks governance\",\"kind\":\"individual\"}",
        )
        .unwrap();
        let b = parse_corpus_str(
            "two",
            "{\"id\":\"a\",\"text\":\"sensors networks governance\",\"kind\":\"individual\"}",
        )
        .unwrap();
        assert_eq!(
            mock_generate(&a, 5, 4).unwrap(),
            mock_generate(&b, 5, 4).unwrap()
        );
    }

    #[test]
    fn single_definition_uses_initial_prompt_only() {
        let c = fixtures::individual_60();
        let config = GenerationConfig {
            n_definitions: 1,
            seed: Some(3),
            ..Default::default()
        };
        let mock = MockChatClient::new(&c, 3, 1).unwrap();
        let g = generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &mock)
            .unwrap();
        assert_eq!(g.corpus.ids(), vec!["gen-1"]);
        let reqs = mock.requests();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].messages.len(), 1);
        assert!(reqs[0].messages[0]
            .content
            .starts_with("Produce one complete definition"));
        assert_eq!(g.provenance[0].prompt_kind, PromptKind::Initial);
    }

    #[test]
    fn twenty_mock_definitions() {
        let c = fixtures::individual_60();
        let config = GenerationConfig {
            seed: Some(7),
            ..Default::default()
        };
        let mock = MockChatClient::new(&c, 7, 20).unwrap();
        let g = generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &mock)
            .unwrap();
        assert_eq!(g.corpus.len(), 20);
        assert_eq!(g.corpus.ids()[19], "gen-20");
        let reqs = mock.requests();
        assert_eq!(reqs.len(), 2);
        assert_eq!(reqs[1].temperature, 0.7);
        assert_eq!(reqs[1].messages[1].role, Role::Assistant);
        assert_eq!(
            reqs[1].messages[2].content,
            "Produce another 19 different definitions, limit each to 35 words."
        );
        let texts: Vec<&str> = g.corpus.iter().map(|d| d.text.as_str()).collect();
        let expected = mock_generate(&c, 7, 20).unwrap();
        assert_eq!(
            texts,
            expected.iter().map(String::as_str).collect::<Vec<_>>()
        );
    }

    #[test]
    fn ids_avoid_collisions() {
        let c = parse_corpus_str(
            "c",
            "{\"id\":\"gen-1\",\"text\":\"smart sensors\",\"kind\":\"composite\"}",
        )
        .unwrap();
        let config = GenerationConfig {
            n_definitions: 2,
            ..Default::default()
        };
        let mock = MockChatClient::new(&c, 0, 2).unwrap();
        let g = generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &mock)
            .unwrap();
        assert_eq!(g.corpus.ids(), vec!["gen2-1", "gen2-2"]);
    }

    #[test]
    fn wrong_item_count_is_malformed() {
        let c = fixtures::baseline();
        let config = GenerationConfig {
            n_definitions: 3,
            ..Default::default()
        };
        let client = Scripted(vec!["Only one.".into(), "1. a\n".into()], Mutex::new(0));
        assert!(matches!(
            generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &client),
            Err(Error::MalformedResponse(_))
        ));
    }

    #[test]
    fn overlong_definitions_are_warnings() {
        let c = fixtures::baseline();
        let config = GenerationConfig {
            n_definitions: 2,
            max_words_per_definition: 3,
            ..Default::default()
        };
        let client = Scripted(
            vec!["One two three four.".into(), "1. Short one.\n".into()],
            Mutex::new(0),
        );
        let g = generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &client)
            .unwrap();
        assert_eq!(g.corpus.len(), 2);
        assert_eq!(
            g.warnings,
            vec![OverLongDefinition {
                id: "gen-1".into(),
                words: 4,
                limit: 3
            }]
        );
        assert!(g.provenance[0].over_word_limit);
        assert!(!g.provenance[1].over_word_limit);
    }

    #[test]
    fn chunked_context_splits_corpus() {
        let c = fixtures::individual_60();
        let config = GenerationConfig {
            n_definitions: 1,
            context: ContextDelivery::Chunked { per_message: 25 },
            ..Default::default()
        };
        let mock = MockChatClient::new(&c, 0, 1).unwrap();
        generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &mock).unwrap();
        let msgs = &mock.requests()[0].messages;
        assert_eq!(msgs.len(), 4);
        assert!(msgs[2]
            .content
            .starts_with("Definitions, part 3 of 3:\n51. "));
        assert!(msgs[3]
            .content
            .starts_with("Produce one complete definition"));
    }

    #[test]
    fn provenance_round_trips() {
        let c = fixtures::individual_60();
        let config = GenerationConfig {
            n_definitions: 4,
            seed: Some(9),
            ..Default::default()
        };
        let mock = MockChatClient::new(&c, 9, 4).unwrap();
        let g = generate_composites(&c, &config, &PromptBundle::for_config(&c, &config), &mock)
            .unwrap();
        let back = parse_provenance(&g.provenance_jsonl().unwrap()).unwrap();
        assert_eq!(back, g.provenance);
        for (rec, def) in back.iter().zip(g.corpus.iter()) {
            assert_eq!(rec.id, def.id);
            assert_eq!(rec.model_id, "gpt-4");
            assert_eq!(rec.source_corpus_hash, c.content_hash());
        }
    }
}
