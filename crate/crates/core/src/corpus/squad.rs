use serde::Deserialize;
use serde_json::Value;

use super::{CorpusError, Label, QueryContextPair, Source, Split};

#[derive(Deserialize)]
struct SquadDocument {
    data: Vec<SquadArticle>,
}

#[derive(Deserialize)]
struct SquadArticle {
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<Value>,
}

/// Parses a SQuAD v2 document into one pair per question.
///
/// A question is `Grounded` exactly when its `is_impossible` flag is false. The
/// flag is mandatory: a question without it is rejected rather than defaulted.
pub fn parse_squad_v2(raw: &str, split: Split) -> Result<Vec<QueryContextPair>, CorpusError> {
    let doc: SquadDocument = serde_json::from_str(raw)
        .map_err(|e| CorpusError::MalformedDocument(format!("squad v2 layout: {e}")))?;

    let mut pairs = Vec::new();
    for (a, article) in doc.data.iter().enumerate() {
        for (p, paragraph) in article.paragraphs.iter().enumerate() {
            for (q, qa) in paragraph.qas.iter().enumerate() {
                let question_id = match qa.get("id").and_then(Value::as_str) {
                    Some(id) => id.to_string(),
                    None => {
                        return Err(CorpusError::MalformedQuestion {
                            question_id: format!("data[{a}].paragraphs[{p}].qas[{q}]"),
                            reason: "missing string id".into(),
                        })
                    }
                };
                let question = qa.get("question").and_then(Value::as_str).ok_or_else(|| {
                    CorpusError::MalformedQuestion {
                        question_id: question_id.clone(),
                        reason: "missing question text".into(),
                    }
                })?;
                let impossible = match qa.get("is_impossible") {
                    Some(Value::Bool(flag)) => *flag,
                    Some(other) => {
                        return Err(CorpusError::MalformedQuestion {
                            question_id,
                            reason: format!("is_impossible must be a boolean, got {other}"),
                        })
                    }
                    None => return Err(CorpusError::MissingImpossibleFlag { question_id }),
                };
                let label = if impossible {
                    Label::Ungrounded
                } else {
                    Label::Grounded
                };
                let pair = QueryContextPair::new(
                    format!("squad_v2:{question_id}"),
                    question,
                    &paragraph.context,
                    label,
                    Source::SquadV2,
                    split,
                )
                .map_err(|e| CorpusError::MalformedQuestion {
                    question_id: question_id.clone(),
                    reason: e.to_string(),
                })?;
                pairs.push(pair);
            }
        }
    }
    Ok(pairs)
}
