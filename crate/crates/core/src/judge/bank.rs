use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Extractive question answering: the query is a question.
    Qa,
    /// Retrieval relevance: the query is a search query.
    Ir,
}

impl Domain {
    /// Label introducing the query in a rendered prompt.
    pub fn query_label(self) -> &'static str {
        match self {
            Domain::Qa => "Question:",
            Domain::Ir => "Query:",
        }
    }
}

/// One zero-shot instruction asking the model for a yes/no answerability call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PromptTemplate {
    pub id: &'static str,
    pub domain: Domain,
    pub text: &'static str,
}

static BANK: [PromptTemplate; 40] = [
    PromptTemplate { id: "qa-01", domain: Domain::Qa, text: "Can you answer the question using the given context? Reply with 'yes' or 'no'." },
    PromptTemplate { id: "qa-02", domain: Domain::Qa, text: "Based solely on the provided context, is the question answerable? Respond 'yes' or 'no'." },
    PromptTemplate { id: "qa-03", domain: Domain::Qa, text: "Evaluate the question with the given context. Can the context provide an answer? Reply 'yes' or 'no'." },
    PromptTemplate { id: "qa-04", domain: Domain::Qa, text: "Verify if the question can be answered using the context. Answer with 'yes' or 'no'." },
    PromptTemplate { id: "qa-05", domain: Domain::Qa, text: "Is the question answerable from the context provided? Answer 'yes' or 'no'." },
    PromptTemplate { id: "qa-06", domain: Domain::Qa, text: "Determine if the context provides enough information to answer the question. Respond 'yes' or 'no'." },
    PromptTemplate { id: "qa-07", domain: Domain::Qa, text: "Assess the context and determine if it answers the question. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "qa-08", domain: Domain::Qa, text: "Given the context, decide if the question can be answered. Respond 'yes' or 'no'." },
    PromptTemplate { id: "qa-09", domain: Domain::Qa, text: "Does the context contain sufficient information to answer the question? Reply with 'yes' or 'no'." },
    PromptTemplate { id: "qa-10", domain: Domain::Qa, text: "Based on the context, is it possible to answer the question? Answer 'yes' or 'no'." },
    PromptTemplate { id: "qa-11", domain: Domain::Qa, text: "Examine the context and decide if it answers the question. Respond with 'yes' or 'no'." },
    PromptTemplate { id: "qa-12", domain: Domain::Qa, text: "Evaluate the given context to determine if the question can be answered. Reply 'yes' or 'no'." },
    PromptTemplate { id: "qa-13", domain: Domain::Qa, text: "Analyze the context and determine if it provides an answer to the question. Respond 'yes' or 'no'." },
    PromptTemplate { id: "qa-14", domain: Domain::Qa, text: "Does the context provide an answer to the question? Answer 'yes' or 'no'." },
    PromptTemplate { id: "qa-15", domain: Domain::Qa, text: "Evaluate if the context answers the question. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "qa-16", domain: Domain::Qa, text: "Is there enough information in the context to answer the question? Respond 'yes' or 'no'." },
    PromptTemplate { id: "qa-17", domain: Domain::Qa, text: "Analyze the context and decide if it sufficiently answers the question. Reply 'yes' or 'no'." },
    PromptTemplate { id: "qa-18", domain: Domain::Qa, text: "Based on the context, determine if the question is answerable. Answer 'yes' or 'no'." },
    PromptTemplate { id: "qa-19", domain: Domain::Qa, text: "Verify whether the context answers the question. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "qa-20", domain: Domain::Qa, text: "Using only the context provided, decide if you can answer the question. Respond 'yes' or 'no'." },
    PromptTemplate { id: "ir-01", domain: Domain::Ir, text: "Does the context provide relevant information to answer the query? Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-02", domain: Domain::Ir, text: "Based on the context, is the information provided relevant to answering the query? Answer 'yes' or 'no'." },
    PromptTemplate { id: "ir-03", domain: Domain::Ir, text: "Assess whether the context contains relevant details to answer the query. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "ir-04", domain: Domain::Ir, text: "Evaluate if the context is relevant to the query. Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-05", domain: Domain::Ir, text: "Can the context help in answering the query? Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-06", domain: Domain::Ir, text: "Analyze the relevance of the context and the query. Answer 'yes' or 'no'." },
    PromptTemplate { id: "ir-07", domain: Domain::Ir, text: "Determine if the context contains pertinent information to answer the question. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "ir-08", domain: Domain::Ir, text: "Does the context include relevant information to address the question? Respond 'yes' or 'no'." },
    PromptTemplate { id: "ir-09", domain: Domain::Ir, text: "Evaluate whether the context is closely related to the query. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "ir-10", domain: Domain::Ir, text: "Based on the context, assess if the details are relevant for answering the question. Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-11", domain: Domain::Ir, text: "Determine if the context is sufficient to answer the query. Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-12", domain: Domain::Ir, text: "Assess whether the context directly addresses the query. Answer 'yes' or 'no'." },
    PromptTemplate { id: "ir-13", domain: Domain::Ir, text: "Does the context contain enough information to respond to the query? Reply with 'yes' or 'no'." },
    PromptTemplate { id: "ir-14", domain: Domain::Ir, text: "Analyze the context and decide if it is relevant to the query. Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-15", domain: Domain::Ir, text: "Check if the context provides a direct answer to the query. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "ir-16", domain: Domain::Ir, text: "Evaluate the extent to which the context relates to the query. Respond with 'yes' or 'no'." },
    PromptTemplate { id: "ir-17", domain: Domain::Ir, text: "Determine whether the query can be answered based on the given context. Answer 'yes' or 'no'." },
    PromptTemplate { id: "ir-18", domain: Domain::Ir, text: "Is the context aligned with the information needed to answer the query? Respond 'yes' or 'no'." },
    PromptTemplate { id: "ir-19", domain: Domain::Ir, text: "Judge if the context contains meaningful details to answer the question. Reply with 'yes' or 'no'." },
    PromptTemplate { id: "ir-20", domain: Domain::Ir, text: "Decide whether the context provides necessary information to answer the query. Respond with 'yes' or 'no'." },
];

/// All 40 templates: `qa-01`..`qa-20` then `ir-01`..`ir-20`.
pub fn prompt_bank() -> &'static [PromptTemplate] {
    &BANK
}

pub fn templates_for(domain: Domain) -> impl Iterator<Item = &'static PromptTemplate> {
    BANK.iter().filter(move |t| t.domain == domain)
}

pub fn template(id: &str) -> Option<&'static PromptTemplate> {
    BANK.iter().find(|t| t.id == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_per_domain_with_unique_ids() {
        assert_eq!(templates_for(Domain::Qa).count(), 20);
        assert_eq!(templates_for(Domain::Ir).count(), 20);
        let mut ids: Vec<_> = prompt_bank().iter().map(|t| t.id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 40);
        assert_eq!(template("ir-20").unwrap().domain, Domain::Ir);
        assert!(template("qa-21").is_none());
    }

    #[test]
    fn every_template_demands_yes_or_no() {
        for t in prompt_bank() {
            assert!(t.text.contains("'yes' or 'no'"), "{}", t.id);
        }
    }
}
