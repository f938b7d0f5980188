use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use groundgate::classifier::{build_classifier, wire};
use groundgate::corpus::{
    parse_beir, parse_newsqa, parse_squad_v2, read_pairs, stratified_split, synthetic, write_pairs, DatasetDescriptor,
    Source, Split, SplitRatios,
};
use groundgate::cost::{self, breakeven_queries, check_consistency, CostLedger, ModelCostProfile};
use groundgate::eval::{backend_config, evaluate, parse_seeds};
use groundgate::gateway::{self, GatewayConfig};
use groundgate::judge::{self, ChatModel, Domain, OpenAiChatClient, ResponseLog, SweepOptions, UnparseablePolicy};
use groundgate::reference::{ReferenceTable, Setting};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "groundgate", version, about = "Groundedness gating for retrieval-augmented LLM calls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and split canonical corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Serve or probe the /v1/classify contract.
    #[command(subcommand)]
    Classifier(ClassifierCmd),
    /// Zero-shot LLM judging.
    #[command(subcommand)]
    Judge(JudgeCmd),
    /// The abstain-or-forward service.
    #[command(subcommand)]
    Gateway(GatewayCmd),
    /// Seeded accuracy evaluation.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// FLOP estimates and the cost ledger.
    #[command(subcommand)]
    Cost(CostCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    SquadV2,
    Newsqa,
    TrecCovid,
    Touche,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Dev,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Dev => Split::Dev,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Convert a raw dataset into canonical JSONL.
    Ingest(IngestArgs),
    /// Stratified train/dev/test split of a canonical corpus.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "0.8,0.1,0.1")]
        ratios: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a small separable corpus for smoke tests.
    Synthetic {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    source: SourceArg,
    /// Raw JSON file (SQuAD v2, NewsQA).
    #[arg(long)]
    input: Option<PathBuf>,
    /// BEIR corpus.jsonl.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// BEIR queries.jsonl.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// BEIR qrels TSV.
    #[arg(long)]
    qrels: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    negative_ratio: f64,
    #[arg(long, default_value_t = 1)]
    relevance_threshold: i32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the NewsQA skip report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ClassifierCmd {
    /// Serve a backend over the /v1/classify contract.
    Serve {
        /// `lexical`, `endpoint=<url>`, `embedded=<model>,<tokenizer>` or `config=<file>`.
        #[arg(long)]
        backend: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value = "127.0.0.1:9000")]
        listen: SocketAddr,
        #[arg(long)]
        model_id: Option<String>,
        /// Environment variable holding the bearer token clients must send.
        #[arg(long)]
        token_env: Option<String>,
    },
    /// Check a running server against the wire contract.
    Conformance {
        #[arg(long)]
        url: String,
        #[arg(long)]
        token_env: Option<String>,
    },
    /// Classify a single pair.
    Classify {
        #[arg(long)]
        backend: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        query: String,
        #[arg(long)]
        context: String,
    },
}

#[derive(Subcommand)]
enum JudgeCmd {
    /// Run every template against every model over a corpus.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Chat-completion base URL.
    #[arg(long)]
    endpoint: String,
    /// Model name; repeat for several.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[arg(long, default_value = judge::DEFAULT_API_KEY_ENV)]
    api_key_env: String,
    /// Comma-separated template ids; defaults to the bank for the corpus domain.
    #[arg(long)]
    templates: Option<String>,
    /// `count-wrong`, `skip` or `retry:<n>`.
    #[arg(long, default_value = "count-wrong")]
    policy: String,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long)]
    min_interval_ms: Option<u64>,
    #[arg(long, default_value_t = 60_000)]
    timeout_ms: u64,
    /// Append-only response log; reused to resume.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GatewayCmd {
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    Run(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    ZeroShot,
    FineTuned,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Backend spec; `{seed}` is replaced per seed.
    #[arg(long)]
    backend: String,
    #[arg(long, default_value = "0..4")]
    seeds: String,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 8)]
    concurrency: usize,
    #[arg(long)]
    out: PathBuf,
    /// Reference-table model to compare against.
    #[arg(long)]
    reference_model: Option<String>,
    #[arg(long, value_enum, default_value = "fine-tuned")]
    setting: SettingArg,
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
    /// Reference table JSON; defaults to the bundled one.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CostCmd {
    /// FLOPs for a model profile (TOML or JSON).
    Estimate {
        #[arg(long)]
        profile: PathBuf,
    },
    /// Queries needed to pay back fine-tuning.
    Breakeven {
        #[arg(long)]
        ft: f64,
        #[arg(long)]
        enc: f64,
        #[arg(long)]
        llm: f64,
    },
    /// Print the cost ledger, optionally checking ratio consistency.
    Ledger {
        #[arg(long)]
        check: bool,
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value_t = cost::DEFAULT_RATIO_TOLERANCE)]
        tolerance: f64,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_table(path: Option<&Path>) -> Result<ReferenceTable> {
    match path {
        Some(p) => ReferenceTable::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ReferenceTable::bundled()),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a PathBuf> {
    value.as_ref().with_context(|| format!("--{flag} is required for this source"))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let split = Split::from(args.split);
    let pairs = match args.source {
        SourceArg::SquadV2 => {
            let path = required(&args.input, "input")?;
            let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_squad_v2(&raw, split)?
        }
        SourceArg::Newsqa => {
            let path = required(&args.input, "input")?;
            let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let parsed = parse_newsqa(&raw, split)?;
            let report = serde_json::to_string_pretty(&parsed.report)?;
            match &args.report {
                Some(p) => std::fs::write(p, report)?,
                None => eprintln!("{report}"),
            }
            parsed.pairs
        }
        SourceArg::TrecCovid | SourceArg::Touche => {
            let descriptor = DatasetDescriptor {
                source: if matches!(args.source, SourceArg::TrecCovid) {
                    Source::TrecCovid
                } else {
                    Source::Touche
                },
                corpus_path: required(&args.corpus, "corpus")?.clone(),
                queries_path: required(&args.queries, "queries")?.clone(),
                qrels_path: required(&args.qrels, "qrels")?.clone(),
                negative_ratio: args.negative_ratio,
                relevance_threshold: args.relevance_threshold,
                seed: args.seed,
            };
            parse_beir(&descriptor, split)?
        }
    };
    write_pairs(&pairs, &args.out)?;
    eprintln!("wrote {} pairs to {}", pairs.len(), args.out.display());
    Ok(())
}

fn corpus(cmd: CorpusCmd) -> Result<()> {
    match cmd {
        CorpusCmd::Ingest(args) => ingest(args),
        CorpusCmd::Split {
            input,
            ratios,
            seed,
            out_dir,
        } => {
            let r: Vec<f64> = ratios
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .context("--ratios takes three comma-separated numbers")?;
            let [train, dev, test] = r[..] else {
                bail!("--ratios takes three comma-separated numbers");
            };
            let split = stratified_split(read_pairs(&input)?, SplitRatios::new(train, dev, test)?, seed)?;
            std::fs::create_dir_all(&out_dir)?;
            for (name, pairs) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
                write_pairs(pairs, out_dir.join(format!("{name}.jsonl")))?;
                eprintln!("{name}: {} pairs", pairs.len());
            }
            Ok(())
        }
        CorpusCmd::Synthetic { n, seed, out } => {
            write_pairs(&synthetic::separable_corpus(n, seed), &out)?;
            Ok(())
        }
    }
}

async fn classifier(cmd: ClassifierCmd) -> Result<()> {
    match cmd {
        ClassifierCmd::Serve {
            backend,
            threshold,
            listen,
            model_id,
            token_env,
        } => {
            let c = build_classifier(&backend_config(&backend, 0, threshold)?)?;
            let model_id = model_id.unwrap_or_else(|| format!("{}@{}", c.backend_id(), c.model_version()));
            let token = match token_env {
                Some(var) => Some(std::env::var(&var).with_context(|| format!("{var} is not set"))?),
                None => None,
            };
            let listener = tokio::net::TcpListener::bind(listen).await?;
            tracing::info!(%listen, %model_id, "serving {}", wire::CLASSIFY_PATH);
            axum::serve(listener, wire::router(c, model_id, token))
                .with_graceful_shutdown(shutdown())
                .await?;
            Ok(())
        }
        ClassifierCmd::Conformance { url, token_env } => {
            let token = token_env.and_then(|v| std::env::var(v).ok());
            let report = wire::check_conformance(&url, token.as_deref()).await;
            print_json(&report)?;
            if !report.all_passed() {
                bail!("conformance checks failed");
            }
            Ok(())
        }
        ClassifierCmd::Classify {
            backend,
            threshold,
            query,
            context,
        } => {
            let c = build_classifier(&backend_config(&backend, 0, threshold)?)?;
            print_json(&c.classify(&query, &context).await?)
        }
    }
}

fn parse_policy(text: &str) -> Result<UnparseablePolicy> {
    Ok(match text {
        "count-wrong" => UnparseablePolicy::CountWrong,
        "skip" => UnparseablePolicy::Skip,
        other => match other.strip_prefix("retry:") {
            Some(n) => UnparseablePolicy::Retry {
                max_retries: n.parse().context("retry:<n> needs an integer")?,
            },
            None => bail!("unknown policy {other:?}"),
        },
    })
}

async fn judge_sweep(args: SweepArgs) -> Result<()> {
    let pairs = read_pairs(&args.corpus)?;
    let templates: Vec<judge::PromptTemplate> = match &args.templates {
        Some(ids) => ids
            .split(',')
            .map(|id| judge::template(id.trim()).copied().with_context(|| format!("unknown template {id}")))
            .collect::<Result<_>>()?,
        None => {
            let retrieval = pairs.iter().filter(|p| p.source.is_retrieval()).count();
            let domain = match retrieval {
                0 => Domain::Qa,
                n if n == pairs.len() => Domain::Ir,
                _ => bail!("corpus mixes QA and IR pairs; pass --templates explicitly"),
            };
            judge::templates_for(domain).copied().collect()
        }
    };
    let models: Vec<Arc<dyn ChatModel>> = args
        .models
        .iter()
        .map(|m| {
            Arc::new(OpenAiChatClient::from_env(
                &args.endpoint,
                m,
                &args.api_key_env,
                Duration::from_millis(args.timeout_ms),
            )) as Arc<dyn ChatModel>
        })
        .collect();
    let options = SweepOptions {
        policy: parse_policy(&args.policy)?,
        concurrency: args.concurrency,
        max_transport_retries: args.max_retries,
        min_interval: args.min_interval_ms.map(Duration::from_millis),
        ..SweepOptions::default()
    };
    let mut log = ResponseLog::open(&args.log)?;
    let result = judge::sweep(&templates, &models, &pairs, &options, &mut log).await;
    let matrix = match result {
        Ok(m) => m,
        Err(judge::SweepError::Aborted { partial, source }) => {
            std::fs::write(&args.out, partial.to_json())?;
            bail!("sweep aborted ({source}); partial matrix written, rerun with the same --log to resume");
        }
        Err(e) => return Err(e.into()),
    };
    std::fs::write(&args.out, matrix.to_json())?;
    eprintln!("{} cells written to {}", matrix.cells.len(), args.out.display());
    Ok(())
}

async fn eval_run(args: EvalArgs) -> Result<()> {
    let corpus = read_pairs(&args.corpus)?;
    let seeds = parse_seeds(&args.seeds)?;
    let corpus_id = args
        .corpus
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    let backend = args.backend.clone();
    let threshold = args.threshold;
    let mut evaluation = evaluate(
        &corpus_id,
        &corpus,
        &seeds,
        |seed| {
            let config = backend_config(&backend, seed, threshold)
                .map_err(|e| groundgate::classifier::ClassifierError::InvalidConfig(e.to_string()))?;
            build_classifier(&config)
        },
        args.concurrency,
    )
    .await?;
    if let Some(model) = &args.reference_model {
        let setting = match args.setting {
            SettingArg::ZeroShot => Setting::ZeroShot,
            SettingArg::FineTuned => Setting::FineTuned,
        };
        evaluation
            .report
            .compare_with(&load_table(args.table.as_deref())?, model, setting, args.tolerance);
    }
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("report.json"), evaluation.report.to_json())?;
    std::fs::write(args.out.join("summary.md"), evaluation.report.to_markdown())?;
    let mut runs = String::new();
    for run in &evaluation.runs {
        runs.push_str(&serde_json::to_string(run)?);
        runs.push('\n');
    }
    std::fs::write(args.out.join("runs.jsonl"), runs)?;
    print!("{}", evaluation.report.to_markdown());
    Ok(())
}

fn load_profile(path: &Path) -> Result<ModelCostProfile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}

fn cost_cmd(cmd: CostCmd) -> Result<()> {
    match cmd {
        CostCmd::Estimate { profile } => print_json(&cost::estimate(&load_profile(&profile)?)?),
        CostCmd::Breakeven { ft, enc, llm } => {
            let queries = breakeven_queries(ft, enc, llm)?;
            print_json(&serde_json::json!({
                "ft_flops": ft,
                "encoder_inference_flops": enc,
                "llm_inference_flops": llm,
                "breakeven_queries": queries,
            }))
        }
        CostCmd::Ledger { check, table, tolerance } => {
            let ledger = CostLedger::from_reference(&load_table(table.as_deref())?);
            if check {
                print_json(&check_consistency(&ledger, tolerance))
            } else {
                print_json(&ledger)
            }
        }
    }
}

async fn shutdown() {
    let _ = tokio::signal::ctrl_c().await;
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::Corpus(cmd) => corpus(cmd),
        Command::Classifier(cmd) => classifier(cmd).await,
        Command::Judge(JudgeCmd::Sweep(args)) => judge_sweep(args).await,
        Command::Gateway(GatewayCmd::Serve { config }) => {
            let config = GatewayConfig::load(&config).map_err(anyhow::Error::msg)?;
            let gw = config.build().map_err(anyhow::Error::msg)?;
            let listener = tokio::net::TcpListener::bind(config.listen).await?;
            tracing::info!(listen = %config.listen, backend = gw.classifier().backend_id(), "gateway up");
            axum::serve(listener, gateway::router(gw))
                .with_graceful_shutdown(shutdown())
                .await?;
            Ok(())
        }
        Command::Eval(EvalCmd::Run(args)) => eval_run(args).await,
        Command::Cost(cmd) => cost_cmd(cmd),
    }
}
