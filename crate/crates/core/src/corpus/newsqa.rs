use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, Label, QueryContextPair, Source, Split};

#[derive(Deserialize)]
struct NewsQaDocument {
    data: Vec<NewsQaStory>,
}

#[derive(Deserialize)]
struct NewsQaStory {
    #[serde(rename = "storyId")]
    story_id: String,
    text: String,
    #[serde(default)]
    questions: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub reason: String,
}

/// Accounting for questions that could not be labeled.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub questions_read: usize,
    pub pairs_emitted: usize,
    pub skipped: Vec<SkippedRecord>,
}

impl SkipReport {
    pub fn skipped_count(&self) -> usize {
        self.skipped.len()
    }
}

#[derive(Debug, Clone)]
pub struct NewsQaParse {
    pub pairs: Vec<QueryContextPair>,
    pub report: SkipReport,
}

enum Answerability {
    Answerable,
    Unanswerable,
    Unknown(String),
}

/// The crowd consensus decides answerability: a span (`s`/`e`) means
/// answerable; `noAnswer` or `badQuestion` means unanswerable. Anything else is
/// an annotation gap.
fn consensus_answerability(question: &Value) -> Answerability {
    let Some(consensus) = question.get("consensus").and_then(Value::as_object) else {
        return Answerability::Unknown("no consensus annotation".into());
    };
    let flag = |key: &str| consensus.get(key).and_then(Value::as_bool).unwrap_or(false);
    if flag("noAnswer") || flag("badQuestion") {
        return Answerability::Unanswerable;
    }
    let span = consensus.get("s").and_then(Value::as_u64).zip(consensus.get("e").and_then(Value::as_u64));
    match span {
        Some((s, e)) if e > s => Answerability::Answerable,
        Some(_) => Answerability::Unknown("empty consensus span".into()),
        None => Answerability::Unknown("consensus has neither span nor no-answer marker".into()),
    }
}

/// Parses the combined NewsQA JSON release; the context is the full story.
pub fn parse_newsqa(raw: &str, split: Split) -> Result<NewsQaParse, CorpusError> {
    let doc: NewsQaDocument = serde_json::from_str(raw)
        .map_err(|e| CorpusError::MalformedDocument(format!("newsqa layout: {e}")))?;

    let mut pairs = Vec::new();
    let mut report = SkipReport::default();
    for story in &doc.data {
        for (index, question) in story.questions.iter().enumerate() {
            report.questions_read += 1;
            let id = format!("newsqa:{}:{index:03}", story.story_id);
            let mut skip = |reason: String| {
                report.skipped.push(SkippedRecord {
                    id: id.clone(),
                    reason,
                })
            };
            let Some(text) = question.get("q").and_then(Value::as_str) else {
                skip("missing question text".into());
                continue;
            };
            let label = match consensus_answerability(question) {
                Answerability::Answerable => Label::Grounded,
                Answerability::Unanswerable => Label::Ungrounded,
                Answerability::Unknown(reason) => {
                    skip(reason);
                    continue;
                }
            };
            match QueryContextPair::new(id.clone(), text, &story.text, label, Source::Newsqa, split) {
                Ok(pair) => pairs.push(pair),
                Err(e) => skip(e.to_string()),
            }
        }
    }
    report.pairs_emitted = pairs.len();
    Ok(NewsQaParse { pairs, report })
}
