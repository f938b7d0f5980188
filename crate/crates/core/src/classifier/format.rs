use super::{ClassifierConfig, ClassifierError};

/// Splits text into model tokens and supplies the structural markers.
pub trait Tokenizer {
    type Token: Clone;

    fn tokenize(&self, text: &str) -> Result<Vec<Self::Token>, ClassifierError>;
    fn classification_marker(&self) -> Self::Token;
    fn separator_marker(&self) -> Self::Token;

    /// Closing marker appended after the query, if the model expects one.
    fn end_marker(&self) -> Option<Self::Token> {
        None
    }
}

/// Whitespace tokenizer whose markers are plain strings.
#[derive(Debug, Clone)]
pub struct WhitespaceTokenizer {
    pub classification_marker: String,
    pub separator: String,
}

impl WhitespaceTokenizer {
    pub fn from_config(config: &ClassifierConfig) -> Self {
        WhitespaceTokenizer {
            classification_marker: config.classification_marker.clone(),
            separator: config.separator.clone(),
        }
    }
}

impl Tokenizer for WhitespaceTokenizer {
    type Token = String;

    fn tokenize(&self, text: &str) -> Result<Vec<String>, ClassifierError> {
        Ok(text.split_whitespace().map(str::to_string).collect())
    }

    fn classification_marker(&self) -> String {
        self.classification_marker.clone()
    }

    fn separator_marker(&self) -> String {
        self.separator.clone()
    }
}

/// `[cls] context [sep] query [end?]`, with per-segment bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormattedInput<T> {
    pub tokens: Vec<T>,
    /// Positions `0..first_segment_len` belong to the classification slot,
    /// the context and the separator.
    pub first_segment_len: usize,
    pub context_tokens: usize,
    pub context_truncated: bool,
    pub query_tokens: usize,
}

/// Lays out one classification sequence within `max_sequence_length` tokens.
///
/// The context is truncated from its end when the budget runs out; the query
/// is never cut, so a query that does not fit on its own is an error.
pub fn format_input<T: Tokenizer>(
    query: &str,
    context: &str,
    max_sequence_length: usize,
    tokenizer: &T,
) -> Result<FormattedInput<T::Token>, ClassifierError> {
    if query.trim().is_empty() {
        return Err(ClassifierError::EmptyQuery);
    }
    if context.trim().is_empty() {
        return Err(ClassifierError::EmptyContext);
    }
    let query_tokens = tokenizer.tokenize(query)?;
    let mut context_tokens = tokenizer.tokenize(context)?;
    let end = tokenizer.end_marker();
    let reserved = 2 + usize::from(end.is_some());

    let available = max_sequence_length.saturating_sub(reserved);
    if query_tokens.len() > available {
        return Err(ClassifierError::QueryTooLong {
            query_tokens: query_tokens.len(),
            available,
        });
    }
    let context_budget = available - query_tokens.len();
    let context_truncated = context_tokens.len() > context_budget;
    context_tokens.truncate(context_budget);

    let mut tokens = Vec::with_capacity(reserved + context_tokens.len() + query_tokens.len());
    tokens.push(tokenizer.classification_marker());
    let kept_context = context_tokens.len();
    tokens.extend(context_tokens);
    tokens.push(tokenizer.separator_marker());
    let first_segment_len = tokens.len();
    let query_len = query_tokens.len();
    tokens.extend(query_tokens);
    tokens.extend(end);

    Ok(FormattedInput {
        tokens,
        first_segment_len,
        context_tokens: kept_context,
        context_truncated,
        query_tokens: query_len,
    })
}

/// [`format_input`] with the whitespace tokenizer and markers from `config`.
pub fn format_pair(
    query: &str,
    context: &str,
    config: &ClassifierConfig,
) -> Result<FormattedInput<String>, ClassifierError> {
    format_input(query, context, config.max_sequence_length, &WhitespaceTokenizer::from_config(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn config(max: usize) -> ClassifierConfig {
        let mut c = ClassifierConfig::lexical();
        c.max_sequence_length = max;
        c
    }

    #[test]
    fn short_pair_is_context_sep_query() {
        let f = format_pair("who won", "the home team won", &config(64)).unwrap();
        assert_eq!(f.tokens, ["[CLS]", "the", "home", "team", "won", "[SEP]", "who", "won"]);
        assert!(!f.context_truncated);
        assert_eq!(f.first_segment_len, 6);
    }

    #[test]
    fn long_context_is_cut_query_kept() {
        let context = vec!["tok"; 10_000].join(" ");
        let query = "what is the final score of the match";
        let f = format_pair(query, &context, &config(512)).unwrap();
        assert_eq!(f.tokens.len(), 512);
        assert!(f.context_truncated);
        assert_eq!(f.context_tokens, 512 - 2 - 8);
        assert_eq!(f.tokens[f.tokens.len() - 8..].join(" "), query);
    }

    #[test]
    fn empty_and_oversized_queries_fail() {
        assert!(matches!(format_pair("", "ctx", &config(64)), Err(ClassifierError::EmptyQuery)));
        let long_query = vec!["q"; 15].join(" ");
        assert!(matches!(
            format_pair(&long_query, "ctx", &config(16)),
            Err(ClassifierError::QueryTooLong { query_tokens: 15, available: 14 })
        ));
        // exactly filling the budget leaves an empty context segment
        let q14 = vec!["q"; 14].join(" ");
        let f = format_pair(&q14, "ctx", &config(16)).unwrap();
        assert_eq!(f.context_tokens, 0);
        assert!(f.context_truncated);
    }

    proptest! {
        #[test]
        fn query_tokens_survive_in_order(
            query in proptest::collection::vec("[a-z]{1,6}", 1..12),
            context in proptest::collection::vec("[a-z]{1,6}", 1..200),
            max in 16usize..128,
        ) {
            let q = query.join(" ");
            let c = context.join(" ");
            match format_pair(&q, &c, &config(max)) {
                Ok(f) => {
                    prop_assert!(f.tokens.len() <= max);
                    prop_assert_eq!(&f.tokens[f.first_segment_len..], &query[..]);
                    prop_assert_eq!(&f.tokens[1..1 + f.context_tokens], &context[..f.context_tokens]);
                }
                Err(ClassifierError::QueryTooLong { .. }) => prop_assert!(query.len() + 2 > max),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}
