//! LLM word-association elicitation: prompting, completion parsing,
//! checkpointed corpus generation, and the variability/reliability metrics
//! used to pick a sampling temperature.

mod client;
mod metrics;
mod run;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_io::{normalize_token, MAX_RESPONSES};

pub use client::{BackendError, ChatBackend, ChatMessage, CompletionRequest, HttpBackend, API_KEY_ENV};
pub use metrics::{
    mean_split_half_reliability, response_strengths, spearman_brown, split_half_from_halves,
    split_half_reliability, sweep_temperature, variability, ReliabilitySummary, SplitHalf, SweepOptions, DEFAULT_SPLITS,
    SweepPoint, SweepResult,
};
pub use run::{elicit_corpus, CueError, CueStats, ElicitationOutcome, RunFiles};

pub const DEFAULT_REPEATS: usize = 100;
pub const MAX_TEMPERATURE: f64 = 5.0;

/// Word-association instructions given to the model as its system message.
pub const SYSTEM_PROMPT: &str = "Background: On average, an adult knows about 40,000 words, but what do these words mean to people like you and me? You can help scientists understand how meaning is organized in our mental dictionary by playing the game of word associations. This game is easy: Just give the first three words that come to mind for a given cue word.\n\nOutput Format: Output your response in the following format:\n\nresponse1, response2, response3\n\nDo not provide any additional context or explanations. Just the words as comma-separated values.";

#[derive(Debug, Error)]
pub enum ElicitationError {
    #[error("cue is empty after normalization")]
    EmptyCue,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint {path} was written by a different configuration")]
    CheckpointMismatch { path: String },
    #[error("checkpoint {path} is unreadable: {message}")]
    CheckpointCorrupt { path: String, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("every temperature failed to produce a usable corpus")]
    AllTemperaturesFailed,
    #[error("human reference yields no usable {0}")]
    HumanReference(&'static str),
}

impl ElicitationError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        ElicitationError::Io { path: path.display().to_string(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitationConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub repeats_per_cue: usize,
    pub max_responses: usize,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
    pub max_retries: u32,
    pub max_concurrent: usize,
    /// First retry delay; doubles on every further attempt.
    #[serde(with = "duration_secs")]
    pub retry_backoff: Duration,
}

impl ElicitationConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, temperature: f64) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature,
            repeats_per_cue: DEFAULT_REPEATS,
            max_responses: MAX_RESPONSES,
            timeout: Duration::from_secs(60),
            max_retries: 3,
            max_concurrent: 8,
            retry_backoff: Duration::from_millis(500),
        }
    }

    pub fn validate(&self) -> Result<(), ElicitationError> {
        let bad = |m: String| Err(ElicitationError::InvalidConfig(m));
        if self.repeats_per_cue < 2 {
            return bad(format!("repeats per cue must be at least 2, got {}", self.repeats_per_cue));
        }
        if !(1..=MAX_RESPONSES).contains(&self.max_responses) {
            return bad(format!("max responses must be between 1 and {MAX_RESPONSES}, got {}", self.max_responses));
        }
        if !(self.temperature.is_finite() && (0.0..=MAX_TEMPERATURE).contains(&self.temperature)) {
            return bad(format!("temperature must be within [0, {MAX_TEMPERATURE}], got {}", self.temperature));
        }
        if self.max_concurrent == 0 {
            return bad("max concurrent requests must be at least 1".into());
        }
        if self.model.trim().is_empty() {
            return bad("model name is empty".into());
        }
        Ok(())
    }
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

/// System and user messages for one cue.
pub fn build_prompt(cue: &str) -> Result<Vec<ChatMessage>, ElicitationError> {
    let cue = normalize_token(cue);
    if cue.is_empty() {
        return Err(ElicitationError::EmptyCue);
    }
    Ok(vec![
        ChatMessage { role: "system".into(), content: SYSTEM_PROMPT.into() },
        ChatMessage { role: "user".into(), content: format!("Cue word: {cue}") },
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedCompletion {
    pub tokens: Vec<String>,
    pub malformed: bool,
}

/// Longest response accepted as a word or short phrase.
const MAX_WORDS_PER_RESPONSE: usize = 3;

fn is_word_like(token: &str) -> bool {
    token.chars().any(char::is_alphabetic) && token.split(' ').count() <= MAX_WORDS_PER_RESPONSE
}

/// Splits a completion into at most `max_responses` normalized tokens.
///
/// Anything up to and including the last colon is dropped first (so
/// "Here are three words: a, b, c" parses), then the text is split on
/// commas and each piece is trimmed of surrounding punctuation. Pieces that
/// contain no letter or run longer than three words are discarded; an empty
/// result is flagged as malformed.
pub fn parse_completion(text: &str, max_responses: usize) -> ParsedCompletion {
    let body = match text.rfind(':') {
        Some(i) => &text[i + 1..],
        None => text,
    };
    let tokens: Vec<String> = body
        .split(',')
        .map(|piece| normalize_token(piece.trim_matches(|c: char| !c.is_alphanumeric())))
        .filter(|t| !t.is_empty() && is_word_like(t))
        .take(max_responses)
        .collect();
    let malformed = tokens.is_empty();
    ParsedCompletion { tokens, malformed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prompt_substitutes_normalized_cue() {
        let msgs = build_prompt(" Mother ").unwrap();
        assert_eq!(msgs[0].role, "system");
        assert!(msgs[0].content.starts_with("Background: On average"));
        assert!(msgs[0].content.ends_with("Just the words as comma-separated values."));
        assert_eq!(msgs[1].content, "Cue word: mother");
        assert!(matches!(build_prompt("  "), Err(ElicitationError::EmptyCue)));
    }

    #[test]
    fn plain_and_short_completions() {
        assert_eq!(parse_completion("help, kind, care", 3).tokens, vec!["help", "kind", "care"]);
        assert_eq!(parse_completion("help,kind", 3).tokens, vec!["help", "kind"]);
        assert_eq!(parse_completion("a, b, c, d", 3).tokens.len(), 3);
    }

    #[test]
    fn chatty_prefix_is_stripped() {
        let p = parse_completion("Sure! Here are three words: help, kind, care", 3);
        assert_eq!(p.tokens, vec!["help", "kind", "care"]);
        assert!(!p.malformed);
    }

    #[test]
    fn refusals_are_malformed() {
        let p = parse_completion("I cannot provide associations for that word.", 3);
        assert!(p.malformed && p.tokens.is_empty());
        let q = parse_completion("12345", 3);
        assert!(q.malformed && q.tokens.is_empty());
    }

    #[test]
    fn config_validation() {
        let ok = ElicitationConfig::new("http://localhost/v1/chat/completions", "m", 1.0);
        assert!(ok.validate().is_ok());
        for bad in [
            ElicitationConfig { repeats_per_cue: 1, ..ok.clone() },
            ElicitationConfig { max_responses: 4, ..ok.clone() },
            ElicitationConfig { temperature: -0.1, ..ok.clone() },
            ElicitationConfig { temperature: f64::NAN, ..ok.clone() },
            ElicitationConfig { max_concurrent: 0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn parse_never_exceeds_limit_or_yields_empty_tokens(text in "\\PC{0,80}", max in 1usize..=3) {
            let p = parse_completion(&text, max);
            prop_assert!(p.tokens.len() <= max);
            prop_assert!(p.tokens.iter().all(|t| !t.is_empty()));
            prop_assert_eq!(p.malformed, p.tokens.is_empty());
        }
    }
}
