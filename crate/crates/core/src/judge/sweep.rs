use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Mutex;

use super::{parse_verdict, render_prompt, ChatModel, JudgeError, PromptTemplate, Verdict};
use crate::corpus::{Label, QueryContextPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum UnparseablePolicy {
    /// Unparseable replies count as wrong answers.
    CountWrong,
    /// Unparseable replies are left out of the denominator.
    Skip,
    /// Ask again up to `max_retries` times, then count as wrong.
    Retry { max_retries: u32 },
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub policy: UnparseablePolicy,
    /// Maximum in-flight endpoint calls.
    pub concurrency: usize,
    /// Extra attempts after a transport failure before the sweep aborts.
    pub max_transport_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    /// Minimum spacing between consecutive calls.
    pub min_interval: Option<Duration>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            policy: UnparseablePolicy::CountWrong,
            concurrency: 4,
            max_transport_retries: 3,
            initial_backoff: Duration::from_millis(250),
            max_backoff: Duration::from_secs(8),
            min_interval: None,
        }
    }
}

/// One completed endpoint call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub template_id: String,
    pub model_id: String,
    pub pair_id: String,
    pub attempt: u32,
    pub raw: String,
    pub verdict: Verdict,
    pub gold: Label,
    pub latency_us: u64,
}

type Key = (String, String, String);

impl ResponseRecord {
    fn key(&self) -> Key {
        (self.template_id.clone(), self.model_id.clone(), self.pair_id.clone())
    }
}

/// Append-only JSONL log of raw judge responses; also the resume state.
pub struct ResponseLog {
    path: Option<PathBuf>,
    writer: Option<BufWriter<File>>,
    records: Vec<ResponseRecord>,
}

impl ResponseLog {
    pub fn in_memory() -> Self {
        ResponseLog {
            path: None,
            writer: None,
            records: Vec::new(),
        }
    }

    /// Opens (or creates) a log, loading previously recorded calls. A torn
    /// final line left by an interrupted write is discarded.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JudgeError> {
        let path = path.as_ref().to_path_buf();
        let log_err = |message: String| JudgeError::Log {
            path: path.display().to_string(),
            message,
        };
        let existing = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(log_err(e.to_string())),
        };
        let complete_len = existing.rfind('\n').map_or(0, |i| i + 1);
        let mut records = Vec::new();
        for (i, line) in existing[..complete_len].lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let rec: ResponseRecord =
                serde_json::from_str(line).map_err(|e| log_err(format!("line {}: {e}", i + 1)))?;
            records.push(rec);
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| log_err(e.to_string()))?;
        if complete_len < existing.len() {
            file.set_len(complete_len as u64).map_err(|e| log_err(e.to_string()))?;
        }
        Ok(ResponseLog {
            path: Some(path),
            writer: Some(BufWriter::new(file)),
            records,
        })
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    fn append(&mut self, record: ResponseRecord) -> Result<(), JudgeError> {
        if let Some(w) = &mut self.writer {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(w, "{line}").and_then(|_| w.flush()).map_err(|e| JudgeError::Log {
                path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                message: e.to_string(),
            })?;
        }
        self.records.push(record);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub template_id: String,
    pub model_id: String,
    pub accuracy: f64,
    pub n: usize,
    pub correct: usize,
    pub unparseable_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMatrix {
    pub policy: UnparseablePolicy,
    pub cells: Vec<SweepCell>,
}

impl SweepMatrix {
    pub fn cell(&self, template_id: &str, model_id: &str) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.template_id == template_id && c.model_id == model_id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serializes")
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep aborted after {} completed cells: {source}", .partial.cells.len())]
    Aborted {
        partial: SweepMatrix,
        #[source]
        source: JudgeError,
    },
    #[error(transparent)]
    Log(JudgeError),
}

struct Job<'a> {
    template: &'a PromptTemplate,
    model: &'a Arc<dyn ChatModel>,
    pair: &'a QueryContextPair,
    first_attempt: u32,
}

struct JobOutcome {
    records: Vec<ResponseRecord>,
    error: Option<JudgeError>,
}

struct Pacer {
    min_interval: Option<Duration>,
    last: Mutex<Option<Instant>>,
}

impl Pacer {
    async fn wait(&self) {
        let Some(interval) = self.min_interval else { return };
        let mut last = self.last.lock().await;
        if let Some(prev) = *last {
            let ready = prev + interval;
            let now = Instant::now();
            if ready > now {
                tokio::time::sleep(ready - now).await;
            }
        }
        *last = Some(Instant::now());
    }
}

async fn call_with_retries(
    model: &dyn ChatModel,
    request: &super::ChatRequest,
    options: &SweepOptions,
    pacer: &Pacer,
) -> Result<(String, Duration), JudgeError> {
    let mut backoff = options.initial_backoff;
    let mut attempt = 0;
    loop {
        pacer.wait().await;
        let started = Instant::now();
        match model.complete(request).await {
            Ok(raw) => return Ok((raw, started.elapsed())),
            Err(e) if e.is_retriable() && attempt < options.max_transport_retries => {
                attempt += 1;
                tracing::warn!(error = %e, attempt, "judge call failed, backing off");
                tokio::time::sleep(backoff).await;
                backoff = (backoff * 2).min(options.max_backoff);
            }
            Err(e) => return Err(e),
        }
    }
}

fn max_attempt(policy: UnparseablePolicy) -> u32 {
    match policy {
        UnparseablePolicy::Retry { max_retries } => max_retries,
        _ => 0,
    }
}

async fn run_job(job: Job<'_>, options: &SweepOptions, pacer: &Pacer, abort: &AtomicBool) -> JobOutcome {
    let mut out = JobOutcome {
        records: Vec::new(),
        error: None,
    };
    let request = render_prompt(job.template, &job.pair.query, &job.pair.context, job.model.model_id());
    let last = max_attempt(options.policy);
    for attempt in job.first_attempt..=last {
        if abort.load(Ordering::SeqCst) {
            break;
        }
        match call_with_retries(job.model.as_ref(), &request, options, pacer).await {
            Ok((raw, latency)) => {
                let verdict = parse_verdict(&raw);
                out.records.push(ResponseRecord {
                    template_id: job.template.id.to_string(),
                    model_id: job.model.model_id().to_string(),
                    pair_id: job.pair.id.clone(),
                    attempt,
                    raw,
                    verdict,
                    gold: job.pair.label,
                    latency_us: latency.as_micros() as u64,
                });
                if verdict != Verdict::Unparseable {
                    break;
                }
            }
            Err(e) => {
                abort.store(true, Ordering::SeqCst);
                out.error = Some(e);
                break;
            }
        }
    }
    out
}

/// Per-key final record: the highest attempt seen.
fn final_records(records: &[ResponseRecord]) -> HashMap<Key, &ResponseRecord> {
    let mut last: HashMap<Key, &ResponseRecord> = HashMap::new();
    for r in records {
        let slot = last.entry(r.key()).or_insert(r);
        if r.attempt >= slot.attempt {
            *slot = r;
        }
    }
    last
}

fn is_complete(record: &ResponseRecord, policy: UnparseablePolicy) -> bool {
    record.verdict != Verdict::Unparseable || record.attempt >= max_attempt(policy)
}

fn build_matrix(
    templates: &[PromptTemplate],
    models: &[Arc<dyn ChatModel>],
    corpus: &[QueryContextPair],
    policy: UnparseablePolicy,
    records: &[ResponseRecord],
) -> SweepMatrix {
    let finals = final_records(records);
    let mut cells = Vec::new();
    for model in models {
        for template in templates {
            let (mut n, mut correct, mut unparseable) = (0, 0, 0);
            for pair in corpus {
                let key = (template.id.to_string(), model.model_id().to_string(), pair.id.clone());
                let Some(rec) = finals.get(&key) else { continue };
                if !is_complete(rec, policy) {
                    continue;
                }
                match rec.verdict.label() {
                    Some(label) => {
                        n += 1;
                        correct += usize::from(label == pair.label);
                    }
                    None => {
                        unparseable += 1;
                        if policy != UnparseablePolicy::Skip {
                            n += 1;
                        }
                    }
                }
            }
            if n + unparseable == 0 {
                continue;
            }
            cells.push(SweepCell {
                template_id: template.id.to_string(),
                model_id: model.model_id().to_string(),
                accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
                n,
                correct,
                unparseable_count: unparseable,
            });
        }
    }
    SweepMatrix { policy, cells }
}

/// Judges every (template, model, pair) combination and reports accuracy per
/// template and model, with Yes meaning grounded.
///
/// Calls already present in `log` are not repeated, so an interrupted sweep
/// resumes where it stopped. A call that still fails after the transport
/// retries aborts the sweep; in-flight calls are drained and logged first.
pub async fn sweep(
    templates: &[PromptTemplate],
    models: &[Arc<dyn ChatModel>],
    corpus: &[QueryContextPair],
    options: &SweepOptions,
    log: &mut ResponseLog,
) -> Result<SweepMatrix, SweepError> {
    let finals = final_records(log.records());
    let mut jobs = Vec::new();
    let mut scheduled = HashSet::new();
    for model in models {
        for template in templates {
            for pair in corpus {
                let key = (template.id.to_string(), model.model_id().to_string(), pair.id.clone());
                if !scheduled.insert(key.clone()) {
                    continue;
                }
                let first_attempt = match finals.get(&key) {
                    Some(rec) if is_complete(rec, options.policy) => continue,
                    Some(rec) => rec.attempt + 1,
                    None => 0,
                };
                jobs.push(Job {
                    template,
                    model,
                    pair,
                    first_attempt,
                });
            }
        }
    }
    drop(finals);

    let pacer = Pacer {
        min_interval: options.min_interval,
        last: Mutex::new(None),
    };
    let abort = AtomicBool::new(false);
    let mut failure = None;
    let mut outcomes = stream::iter(jobs)
        .map(|job| run_job(job, options, &pacer, &abort))
        .buffered(options.concurrency.max(1));
    while let Some(outcome) = outcomes.next().await {
        for rec in outcome.records {
            log.append(rec).map_err(SweepError::Log)?;
        }
        if let Some(e) = outcome.error {
            failure.get_or_insert(e);
        }
    }
    drop(outcomes);

    let matrix = build_matrix(templates, models, corpus, options.policy, log.records());
    match failure {
        Some(source) => Err(SweepError::Aborted {
            partial: matrix,
            source,
        }),
        None => Ok(matrix),
    }
}
