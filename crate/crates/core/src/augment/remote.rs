//! Chat-completions synonym provider with a persistent response cache.
//!
//! Requests go to an OpenAI-compatible endpoint at temperature 0 and
//! every raw response is cached in one JSON file keyed by the SHA-256
//! of (endpoint, model, rendered prompt), so a warm cache replays
//! augmentation offline and bit-identically. The API key is read from
//! the environment variable named in the config and never written to
//! caches or reports.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AugmentError;
use crate::text;

/// Connection and cache settings for the synonym endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteProviderConfig {
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    pub cache_dir: String,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

/// The fixed, versioned prompt sent for synonym generation.
pub fn render_prompt(k: usize, predicate: &str, sentence: &str) -> String {
    format!(
        "Give {k} synonyms for the verb phrase '{predicate}' that preserve its meaning \
         in the sentence '{sentence}'. Answer with a comma-separated list only."
    )
}

fn cache_key(endpoint: &str, model: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(endpoint.as_bytes());
    hasher.update(b"\n");
    hasher.update(model.as_bytes());
    hasher.update(b"\n");
    hasher.update(prompt.as_bytes());
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// On-disk cache entry: enough to audit what was asked and answered.
#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    endpoint: String,
    model: String,
    prompt: String,
    response: serde_json::Value,
}

pub struct RemoteSynonymProvider {
    config: RemoteProviderConfig,
    agent: ureq::Agent,
}

impl RemoteSynonymProvider {
    pub fn new(config: RemoteProviderConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build();
        RemoteSynonymProvider { config, agent }
    }

    pub fn config(&self) -> &RemoteProviderConfig {
        &self.config
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        Path::new(&self.config.cache_dir).join(format!("{key}.json"))
    }

    /// Up to `k` sanitized synonyms, served from the cache when the
    /// identical request was answered before.
    pub fn synonyms(
        &self,
        predicate: &str,
        sentence: &str,
        k: usize,
    ) -> Result<Vec<String>, AugmentError> {
        let prompt = render_prompt(k, predicate, sentence);
        let key = cache_key(&self.config.endpoint, &self.config.model, &prompt);
        let path = self.cache_path(&key);

        let response = match self.read_cache(&path) {
            Some(entry) => entry.response,
            None => {
                let response = self.fetch(&prompt)?;
                self.write_cache(
                    &path,
                    &CacheEntry {
                        endpoint: self.config.endpoint.clone(),
                        model: self.config.model.clone(),
                        prompt,
                        response: response.clone(),
                    },
                )?;
                response
            }
        };

        let content = response["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| AugmentError::UnparseableResponse {
                cache_path: path.display().to_string(),
            })?;
        let synonyms = parse_synonym_list(content, predicate, k);
        if synonyms.is_empty() {
            return Err(AugmentError::UnparseableResponse {
                cache_path: path.display().to_string(),
            });
        }
        Ok(synonyms)
    }

    fn read_cache(&self, path: &Path) -> Option<CacheEntry> {
        let raw = std::fs::read_to_string(path).ok()?;
        // a corrupt entry counts as a miss and is refetched
        serde_json::from_str(&raw).ok()
    }

    fn write_cache(&self, path: &Path, entry: &CacheEntry) -> Result<(), AugmentError> {
        let dir = path.parent().expect("cache path has a parent");
        let io_err = |e: std::io::Error| AugmentError::CacheIo {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let mut file = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
        use std::io::Write;
        file.write_all(
            serde_json::to_string_pretty(entry)
                .expect("cache entry serializes")
                .as_bytes(),
        )
        .map_err(io_err)?;
        file.persist(path).map_err(|e| AugmentError::CacheIo {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(())
    }

    fn fetch(&self, prompt: &str) -> Result<serde_json::Value, AugmentError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let api_key = self
            .config
            .api_key_env
            .as_deref()
            .and_then(|name| std::env::var(name).ok());
        let attempts = self.config.retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50));
            }
            let mut request = self.agent.post(&self.config.endpoint);
            if let Some(key) = &api_key {
                request = request.set("Authorization", &format!("Bearer {key}"));
            }
            match request.send_json(body.clone()) {
                Ok(response) => {
                    return response.into_json().map_err(|e| AugmentError::BackendUnavailable {
                        attempts: attempt + 1,
                        reason: format!("unreadable response body: {e}"),
                    });
                }
                Err(ureq::Error::Status(code, _)) if code < 500 => {
                    return Err(AugmentError::BackendUnavailable {
                        attempts: attempt + 1,
                        reason: format!("endpoint answered HTTP {code}"),
                    });
                }
                Err(err) => last_error = err.to_string(),
            }
        }
        Err(AugmentError::BackendUnavailable {
            attempts,
            reason: last_error,
        })
    }
}

/// Parse a comma-separated synonym list: trim, strip quotes and one
/// trailing period, case-fold, deduplicate, drop the original
/// predicate and anything that is not a short clean phrase (> 4 words,
/// or punctuation other than internal hyphens).
pub fn parse_synonym_list(content: &str, predicate: &str, k: usize) -> Vec<String> {
    let predicate_key = text::nfc(predicate).to_lowercase();
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for piece in content.split(',') {
        let cleaned = piece
            .trim()
            .trim_matches(|c| c == '"' || c == '\'')
            .trim_end_matches('.')
            .trim();
        if cleaned.is_empty() {
            continue;
        }
        let folded = text::nfc(cleaned).to_lowercase();
        if folded == predicate_key || !is_clean_phrase(&folded) || !seen.insert(folded.clone()) {
            continue;
        }
        out.push(folded);
        if out.len() == k {
            break;
        }
    }
    out
}

fn is_clean_phrase(phrase: &str) -> bool {
    let words: Vec<&str> = phrase.split(' ').collect();
    if words.is_empty() || words.len() > 4 {
        return false;
    }
    words.iter().all(|word| {
        !word.is_empty()
            && !word.starts_with('-')
            && !word.ends_with('-')
            && word.chars().all(|c| c.is_alphanumeric() || c == '-')
    })
}
