use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::{CorpusError, Label, QueryContextPair, Source, Split};

/// Writes the canonical corpus layout: one JSON object per line, fields in
/// record order, lines sorted by id.
pub fn write_pairs_to<W: Write>(pairs: &[QueryContextPair], mut out: W) -> Result<(), CorpusError> {
    let mut sorted: Vec<&QueryContextPair> = pairs.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for w in sorted.windows(2) {
        if w[0].id == w[1].id {
            return Err(CorpusError::DuplicateId { id: w[0].id.clone() });
        }
    }
    for pair in sorted {
        pair.validate()?;
        let line = serde_json::to_string(pair).expect("pair serialization is infallible");
        writeln!(out, "{line}").map_err(|e| CorpusError::io("<writer>", e))?;
    }
    out.flush().map_err(|e| CorpusError::io("<writer>", e))
}

pub fn write_pairs(pairs: &[QueryContextPair], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_pairs_to(pairs, BufWriter::new(file))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    query: String,
    context: String,
    label: String,
    source: String,
    split: String,
}

pub fn read_pairs_from<R: BufRead>(reader: R) -> Result<Vec<QueryContextPair>, CorpusError> {
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| CorpusError::io("<reader>", e))?;
        if line.is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::InvalidRecord {
            line: n,
            reason: e.to_string(),
        })?;
        let label = raw
            .label
            .parse::<Label>()
            .map_err(|token| CorpusError::InvalidLabel { line: n, token })?;
        let source = raw.source.parse::<Source>().map_err(|t| CorpusError::InvalidRecord {
            line: n,
            reason: format!("unknown source {t:?}"),
        })?;
        let split = raw.split.parse::<Split>().map_err(|t| CorpusError::InvalidRecord {
            line: n,
            reason: format!("unknown split {t:?}"),
        })?;
        let pair = QueryContextPair {
            id: raw.id,
            query: raw.query,
            context: raw.context,
            label,
            source,
            split,
        };
        pair.validate().map_err(|e| CorpusError::InvalidRecord {
            line: n,
            reason: e.to_string(),
        })?;
        if !seen.insert(pair.id.clone()) {
            return Err(CorpusError::DuplicateId { id: pair.id });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Vec<QueryContextPair>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_pairs_from(BufReader::new(file))
}
