use std::collections::HashSet;
use std::sync::LazyLock;

use async_trait::async_trait;

use super::{ClassifierError, GroundednessClassifier, Scored};

/// Bumped whenever [`STOPWORDS`] changes, since lexical scores depend on it.
pub const STOPWORDS_VERSION: &str = "en-1";

/// English function words ignored by the overlap score. Entries are already
/// lowercased and punctuation-free, matching [`lexical_tokens`].
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any", "are", "as", "at",
    "be", "because", "been", "before", "being", "below", "between", "both", "but", "by", "can", "could",
    "did", "do", "does", "doing", "down", "during", "each", "few", "for", "from", "further", "had", "has",
    "have", "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how", "i", "if",
    "in", "into", "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor",
    "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out",
    "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "to",
    "too", "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves",
];

static STOPWORD_SET: LazyLock<HashSet<&'static str>> = LazyLock::new(|| STOPWORDS.iter().copied().collect());

/// Lowercase, drop punctuation, split on whitespace, remove stopwords.
pub fn lexical_tokens(text: &str) -> HashSet<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned
        .split_whitespace()
        .filter(|t| !STOPWORD_SET.contains(t))
        .map(str::to_string)
        .collect()
}

/// Fraction of distinct query content tokens that also occur in the context.
pub fn lexical_overlap_score(query: &str, context: &str) -> f64 {
    let query_tokens = lexical_tokens(query);
    if query_tokens.is_empty() {
        return 0.0;
    }
    let context_tokens = lexical_tokens(context);
    let shared = query_tokens.intersection(&context_tokens).count();
    shared as f64 / query_tokens.len() as f64
}

/// Stateless token-overlap baseline; costs no model FLOPs.
#[derive(Debug, Clone)]
pub struct LexicalClassifier {
    threshold: f64,
}

impl LexicalClassifier {
    pub fn new(threshold: f64) -> Self {
        LexicalClassifier { threshold }
    }
}

#[async_trait]
impl GroundednessClassifier for LexicalClassifier {
    fn backend_id(&self) -> &str {
        "lexical"
    }

    fn model_version(&self) -> &str {
        STOPWORDS_VERSION
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }

    async fn score(&self, query: &str, context: &str) -> Result<Scored, ClassifierError> {
        Ok(Scored {
            score: lexical_overlap_score(query, context),
            estimated_flops: 0.0,
        })
    }
}
