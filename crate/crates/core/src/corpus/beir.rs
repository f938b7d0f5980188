use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Label, QueryContextPair, Source, Split};

pub const DEFAULT_NEGATIVE_RATIO: f64 = 1.0;
pub const DEFAULT_RELEVANCE_THRESHOLD: i32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeirDocument {
    pub title: String,
    pub text: String,
}

impl BeirDocument {
    fn context(&self) -> String {
        let title = self.title.trim();
        if title.is_empty() {
            self.text.clone()
        } else if self.text.trim().is_empty() {
            title.to_string()
        } else {
            format!("{title}\n{}", self.text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Qrel {
    pub query_id: String,
    pub doc_id: String,
    pub grade: i32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingParams {
    pub source: Source,
    /// Ungrounded pairs sampled per Grounded pair, per query.
    pub negative_ratio: f64,
    /// Minimum qrel grade counted as Grounded.
    pub relevance_threshold: i32,
    pub seed: u64,
}

impl SamplingParams {
    fn validate(&self) -> Result<(), CorpusError> {
        if !self.source.is_retrieval() {
            return Err(CorpusError::InvalidDescriptor(format!(
                "{} is not an IR collection",
                self.source
            )));
        }
        if !(self.negative_ratio.is_finite() && self.negative_ratio > 0.0) {
            return Err(CorpusError::InvalidDescriptor(format!(
                "negative_ratio must be positive, got {}",
                self.negative_ratio
            )));
        }
        Ok(())
    }

    fn negatives_for(&self, grounded: usize) -> usize {
        let raw = self.negative_ratio * grounded as f64;
        // ratio * count is meant as an exact rational; absorb float noise
        // before taking the ceiling.
        let nearest = raw.round();
        if (raw - nearest).abs() < 1e-9 {
            nearest as usize
        } else {
            raw.ceil() as usize
        }
    }
}

/// Everything needed to ingest one BEIR collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub source: Source,
    pub corpus_path: PathBuf,
    pub queries_path: PathBuf,
    pub qrels_path: PathBuf,
    #[serde(default = "default_ratio")]
    pub negative_ratio: f64,
    #[serde(default = "default_threshold")]
    pub relevance_threshold: i32,
    #[serde(default)]
    pub seed: u64,
}

fn default_ratio() -> f64 {
    DEFAULT_NEGATIVE_RATIO
}

fn default_threshold() -> i32 {
    DEFAULT_RELEVANCE_THRESHOLD
}

impl DatasetDescriptor {
    pub fn sampling(&self) -> SamplingParams {
        SamplingParams {
            source: self.source,
            negative_ratio: self.negative_ratio,
            relevance_threshold: self.relevance_threshold,
            seed: self.seed,
        }
    }
}

#[derive(Deserialize)]
struct CorpusLine {
    #[serde(rename = "_id")]
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    text: String,
}

#[derive(Deserialize)]
struct QueryLine {
    #[serde(rename = "_id")]
    id: String,
    text: String,
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CorpusError::io(path, e))
}

fn jsonl_lines<R: BufRead>(
    reader: R,
    what: &str,
) -> impl Iterator<Item = Result<(usize, String), CorpusError>> + use<'_, R> {
    reader.lines().enumerate().filter_map(move |(i, line)| match line {
        Ok(line) if line.trim().is_empty() => None,
        Ok(line) => Some(Ok((i + 1, line))),
        Err(e) => Some(Err(CorpusError::io(what, e))),
    })
}

pub fn load_beir_corpus<R: BufRead>(reader: R) -> Result<BTreeMap<String, BeirDocument>, CorpusError> {
    let mut docs = BTreeMap::new();
    for line in jsonl_lines(reader, "corpus") {
        let (n, line) = line?;
        let rec: CorpusLine = serde_json::from_str(&line).map_err(|e| CorpusError::InvalidRecord {
            line: n,
            reason: format!("corpus record: {e}"),
        })?;
        if docs
            .insert(
                rec.id.clone(),
                BeirDocument {
                    title: rec.title,
                    text: rec.text,
                },
            )
            .is_some()
        {
            return Err(CorpusError::DuplicateId { id: rec.id });
        }
    }
    Ok(docs)
}

pub fn load_beir_queries<R: BufRead>(reader: R) -> Result<BTreeMap<String, String>, CorpusError> {
    let mut queries = BTreeMap::new();
    for line in jsonl_lines(reader, "queries") {
        let (n, line) = line?;
        let rec: QueryLine = serde_json::from_str(&line).map_err(|e| CorpusError::InvalidRecord {
            line: n,
            reason: format!("query record: {e}"),
        })?;
        if queries.insert(rec.id.clone(), rec.text).is_some() {
            return Err(CorpusError::DuplicateId { id: rec.id });
        }
    }
    Ok(queries)
}

/// Reads a `query-id<TAB>corpus-id<TAB>score` table; a header row is optional.
pub fn load_qrels<R: BufRead>(reader: R) -> Result<Vec<Qrel>, CorpusError> {
    let mut qrels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io("qrels", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CorpusError::InvalidRecord {
                line: i + 1,
                reason: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let grade = match fields[2].parse::<i32>() {
            Ok(g) => g,
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(CorpusError::InvalidRecord {
                    line: i + 1,
                    reason: format!("relevance grade {:?} is not an integer", fields[2]),
                })
            }
        };
        qrels.push(Qrel {
            query_id: fields[0].to_string(),
            doc_id: fields[1].to_string(),
            grade,
        });
    }
    Ok(qrels)
}

/// Builds Grounded pairs from qrels at or above the threshold and samples
/// Ungrounded pairs for each query, preferring documents judged below the
/// threshold and falling back to unjudged ones.
pub fn build_ir_pairs(
    corpus: &BTreeMap<String, BeirDocument>,
    queries: &BTreeMap<String, String>,
    qrels: &[Qrel],
    params: &SamplingParams,
    split: Split,
) -> Result<Vec<QueryContextPair>, CorpusError> {
    params.validate()?;

    let mut orphans = BTreeSet::new();
    for q in qrels {
        if !queries.contains_key(&q.query_id) {
            orphans.insert(format!("query:{}", q.query_id));
        }
        if !corpus.contains_key(&q.doc_id) {
            orphans.insert(format!("doc:{}", q.doc_id));
        }
    }
    if !orphans.is_empty() {
        return Err(CorpusError::OrphanQrels {
            orphans: orphans.into_iter().collect(),
        });
    }

    // Repeated judgments of the same pair keep the highest grade.
    let mut judged: BTreeMap<&str, BTreeMap<&str, i32>> = BTreeMap::new();
    for q in qrels {
        let grade = judged
            .entry(q.query_id.as_str())
            .or_default()
            .entry(q.doc_id.as_str())
            .or_insert(q.grade);
        *grade = (*grade).max(q.grade);
    }

    let all_docs: Vec<&str> = corpus.keys().map(String::as_str).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pairs = Vec::new();

    for (query_id, judgments) in &judged {
        let query = &queries[*query_id];
        let (positives, below): (Vec<_>, Vec<_>) = judgments
            .iter()
            .partition(|(_, grade)| **grade >= params.relevance_threshold);

        let mut emit = |doc_id: &str, label: Label| -> Result<(), CorpusError> {
            let id = format!("{}:{}:{}", params.source, query_id, doc_id);
            pairs.push(QueryContextPair::new(
                id,
                query,
                &corpus[doc_id].context(),
                label,
                params.source,
                split,
            )?);
            Ok(())
        };

        for (doc_id, _) in &positives {
            emit(doc_id, Label::Grounded)?;
        }

        let wanted = params.negatives_for(positives.len());
        let mut negatives: Vec<&str> = if below.len() > wanted {
            index::sample(&mut rng, below.len(), wanted)
                .into_iter()
                .map(|i| *below[i].0)
                .collect()
        } else {
            below.iter().map(|(doc, _)| **doc).collect()
        };

        let missing = wanted - negatives.len();
        if missing > 0 {
            let unjudged = all_docs.len() - judgments.len();
            if missing >= unjudged {
                negatives.extend(
                    all_docs
                        .iter()
                        .filter(|doc| !judgments.contains_key(*doc))
                        .copied(),
                );
            } else {
                let mut picked = HashSet::with_capacity(missing);
                while picked.len() < missing {
                    let doc = all_docs[rng.random_range(0..all_docs.len())];
                    if !judgments.contains_key(doc) && picked.insert(doc) {
                        negatives.push(doc);
                    }
                }
            }
        }

        for doc_id in negatives {
            emit(doc_id, Label::Ungrounded)?;
        }
    }

    pairs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(pairs)
}

/// Reads the three BEIR files named by the descriptor and builds the pair set.
pub fn parse_beir(descriptor: &DatasetDescriptor, split: Split) -> Result<Vec<QueryContextPair>, CorpusError> {
    let corpus = load_beir_corpus(open(&descriptor.corpus_path)?)?;
    let queries = load_beir_queries(open(&descriptor.queries_path)?)?;
    let qrels = load_qrels(open(&descriptor.qrels_path)?)?;
    build_ir_pairs(&corpus, &queries, &qrels, &descriptor.sampling(), split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(n: usize) -> BTreeMap<String, BeirDocument> {
        (0..n)
            .map(|i| {
                (
                    format!("d{i:02}"),
                    BeirDocument {
                        title: format!("title {i}"),
                        text: format!("body text {i}"),
                    },
                )
            })
            .collect()
    }

    fn queries() -> BTreeMap<String, String> {
        BTreeMap::from([
            ("q1".to_string(), "first query".to_string()),
            ("q2".to_string(), "second query".to_string()),
        ])
    }

    fn qrel(q: &str, d: &str, grade: i32) -> Qrel {
        Qrel {
            query_id: q.into(),
            doc_id: d.into(),
            grade,
        }
    }

    fn params(seed: u64) -> SamplingParams {
        SamplingParams {
            source: Source::TrecCovid,
            negative_ratio: 1.0,
            relevance_threshold: 1,
            seed,
        }
    }

    #[test]
    fn grade_at_threshold_is_grounded_below_is_negative() {
        let qrels = vec![qrel("q1", "d00", 2), qrel("q1", "d01", 0)];
        let pairs = build_ir_pairs(&docs(5), &queries(), &qrels, &params(0), Split::Test).unwrap();
        assert_eq!(pairs.len(), 2);
        let by_id: BTreeMap<_, _> = pairs.iter().map(|p| (p.id.as_str(), p.label)).collect();
        assert_eq!(by_id["trec_covid:q1:d00"], Label::Grounded);
        assert_eq!(by_id["trec_covid:q1:d01"], Label::Ungrounded);
        assert_eq!(pairs[0].context, "title 0\nbody text 0");
    }

    #[test]
    fn ten_positives_give_ten_negatives_reproducibly() {
        let mut qrels: Vec<_> = (0..10).map(|i| qrel("q1", &format!("d{i:02}"), 1)).collect();
        qrels.extend((10..14).map(|i| qrel("q1", &format!("d{i:02}"), 0)));
        let run = || build_ir_pairs(&docs(40), &queries(), &qrels, &params(3), Split::Test).unwrap();
        let first = run();
        let negatives = first.iter().filter(|p| p.label == Label::Ungrounded).count();
        assert_eq!(negatives, 10);
        assert_eq!(first, run());
        for p in first.iter().filter(|p| p.label == Label::Ungrounded) {
            let doc: usize = p.id.rsplit(":d").next().unwrap().parse().unwrap();
            assert!(doc >= 10, "negative reused a relevant doc: {}", p.id);
        }
    }

    #[test]
    fn fraction_ratio_rounds_up() {
        let qrels: Vec<_> = (0..3)
            .map(|i| qrel("q2", &format!("d{i:02}"), 1))
            .chain((3..9).map(|i| qrel("q2", &format!("d{i:02}"), 0)))
            .collect();
        let p = SamplingParams {
            negative_ratio: 0.5,
            ..params(1)
        };
        let pairs = build_ir_pairs(&docs(9), &queries(), &qrels, &p, Split::Test).unwrap();
        assert_eq!(pairs.iter().filter(|p| p.label == Label::Ungrounded).count(), 2);
        assert_eq!(p.negatives_for(30), 15);
        let tenth = SamplingParams { negative_ratio: 0.1, ..p };
        assert_eq!(tenth.negatives_for(30), 3);
    }

    #[test]
    fn orphan_qrels_are_listed() {
        let qrels = vec![qrel("q9", "d00", 1), qrel("q1", "zz", 1)];
        match build_ir_pairs(&docs(2), &queries(), &qrels, &params(0), Split::Test) {
            Err(CorpusError::OrphanQrels { orphans }) => {
                assert_eq!(orphans, vec!["doc:zz".to_string(), "query:q9".to_string()])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exhausted_candidates_take_everything_available() {
        let qrels: Vec<_> = (0..4).map(|i| qrel("q1", &format!("d{i:02}"), 2)).collect();
        let pairs = build_ir_pairs(&docs(6), &queries(), &qrels, &params(0), Split::Test).unwrap();
        assert_eq!(pairs.iter().filter(|p| p.label == Label::Ungrounded).count(), 2);
    }

    #[test]
    fn qrels_header_is_optional() {
        let with = "query-id\tcorpus-id\tscore\n1\td1\t2\n1\td2\t0\n";
        let without = "1\td1\t2\n1\td2\t0\n";
        assert_eq!(load_qrels(with.as_bytes()).unwrap(), load_qrels(without.as_bytes()).unwrap());
        assert!(load_qrels("1\td1\thigh\n2\td2\tx\n".as_bytes()).is_err());
    }

    #[test]
    fn non_ir_source_rejected() {
        let p = SamplingParams {
            source: Source::SquadV2,
            ..params(0)
        };
        assert!(build_ir_pairs(&docs(1), &queries(), &[], &p, Split::Test).is_err());
        let p = SamplingParams {
            negative_ratio: 0.0,
            ..params(0)
        };
        assert!(build_ir_pairs(&docs(1), &queries(), &[], &p, Split::Test).is_err());
    }
}
