use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{format_dass, format_panas, CompletionProvider, DassPrediction, LlmError, PanasScores};
use crate::prompts::{DassSeverity, PromptBundle, PromptKind};

/// Lowercase hex SHA-256 of the prompt text, the key of the fixture table.
pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Offline provider. Prompts found in the fixture table get their canned
/// reply; any other prompt gets a reply derived from its hash, shaped like
/// what the prompt asks for.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    replies: HashMap<String, String>,
}

impl MockProvider {
    pub fn new() -> Self {
        MockProvider::default()
    }

    pub fn with_reply(mut self, prompt: &str, reply: impl Into<String>) -> Self {
        self.replies.insert(sha256_hex(prompt), reply.into());
        self
    }

    /// Loads `prompt_sha256<TAB>reply_path` lines. Reply paths are relative
    /// to the fixture file; blank lines and `#` comments are skipped.
    pub fn from_fixture_file(path: &Path) -> Result<Self, LlmError> {
        let table = fs::read_to_string(path)
            .map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut replies = HashMap::new();
        for (n, line) in table.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (hash, reply_path) = line.split_once('\t').ok_or_else(|| {
                LlmError::Fixture(format!("{} line {}: expected hash<TAB>path", path.display(), n + 1))
            })?;
            let hash = hash.trim().to_ascii_lowercase();
            if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(LlmError::Fixture(format!("{} line {}: bad hash", path.display(), n + 1)));
            }
            let reply_file = base.join(reply_path.trim());
            let reply = fs::read_to_string(&reply_file)
                .map_err(|e| LlmError::Fixture(format!("{}: {e}", reply_file.display())))?;
            replies.insert(hash, reply);
        }
        Ok(MockProvider { replies })
    }

    pub fn len(&self) -> usize {
        self.replies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replies.is_empty()
    }
}

fn synthesize(prompt: &PromptBundle, digest: &[u8]) -> String {
    let tag = hex::encode(&digest[..6]);
    match prompt.kind {
        PromptKind::WeeklyDass => {
            let sev = |b: u8| DassSeverity::ALL[b as usize % 5];
            format_dass(&DassPrediction {
                depression: sev(digest[0]),
                anxiety: sev(digest[1]),
                stress: sev(digest[2]),
            })
        }
        PromptKind::WeeklyPanas => {
            let mut scores = [0u8; 10];
            for (s, b) in scores.iter_mut().zip(digest) {
                *s = b % 5 + 1;
            }
            format_panas(&PanasScores::new(scores).expect("scores are in range"))
        }
        PromptKind::DailySummary => format!(
            "The person spent a routine day with the phone, mixing app use, messages and time at \
             familiar places. (mock summary {tag})\n"
        ),
        PromptKind::DailyQuestion => format!("Mock answer {tag}.\n"),
    }
}

impl CompletionProvider for MockProvider {
    fn complete_once(&self, prompt: &PromptBundle) -> Result<String, LlmError> {
        let digest = Sha256::digest(prompt.text.as_bytes());
        let key = hex::encode(digest);
        if let Some(reply) = self.replies.get(&key) {
            return Ok(reply.clone());
        }
        log::debug!("no fixture for prompt {key}; synthesizing");
        Ok(synthesize(prompt, &digest))
    }
}
