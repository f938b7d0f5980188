use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::CorpusError;

/// Whether the context supports answering the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Grounded,
    Ungrounded,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Grounded => "grounded",
            Label::Ungrounded => "ungrounded",
        }
    }

    pub fn is_grounded(self) -> bool {
        self == Label::Grounded
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grounded" => Ok(Label::Grounded),
            "ungrounded" => Ok(Label::Ungrounded),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    SquadV2,
    Newsqa,
    TrecCovid,
    Touche,
    Synthetic,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::SquadV2 => "squad_v2",
            Source::Newsqa => "newsqa",
            Source::TrecCovid => "trec_covid",
            Source::Touche => "touche",
            Source::Synthetic => "synthetic",
        }
    }

    /// IR collections are judged with graded qrels and need negative sampling.
    pub fn is_retrieval(self) -> bool {
        matches!(self, Source::TrecCovid | Source::Touche)
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "squad_v2" => Ok(Source::SquadV2),
            "newsqa" => Ok(Source::Newsqa),
            "trec_covid" => Ok(Source::TrecCovid),
            "touche" => Ok(Source::Touche),
            "synthetic" => Ok(Source::Synthetic),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled (query, context) instance.
///
/// Field order is the canonical serialization order of a corpus line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryContextPair {
    pub id: String,
    pub query: String,
    pub context: String,
    pub label: Label,
    pub source: Source,
    pub split: Split,
}

impl QueryContextPair {
    /// Builds a pair from raw dataset text, applying NFC normalization.
    pub fn new(
        id: impl Into<String>,
        query: &str,
        context: &str,
        label: Label,
        source: Source,
        split: Split,
    ) -> Result<Self, CorpusError> {
        let pair = QueryContextPair {
            id: id.into(),
            query: normalize_text(query),
            context: normalize_text(context),
            label,
            source,
            split,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.is_empty() {
            return Err(CorpusError::EmptyId);
        }
        if self.query.trim().is_empty() {
            return Err(CorpusError::EmptyQuery {
                id: self.id.clone(),
            });
        }
        if self.context.trim().is_empty() {
            return Err(CorpusError::EmptyContext {
                id: self.id.clone(),
            });
        }
        Ok(())
    }
}

/// Canonical corpus text normalization: Unicode NFC, newlines and case preserved.
pub fn normalize_text(text: &str) -> String {
    text.nfc().collect()
}
