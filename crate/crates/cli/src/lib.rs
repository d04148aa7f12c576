//! Command-line front end. Every subcommand is a thin composition of
//! `groundspan` operations; `run` returns the process exit code.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use groundspan::bench::{self, NamedGroup, QueryPolicy, QueryRecord, RunRecord, StricterKey, StricterMode};
use groundspan::bm25::{Bm25Params, InvertedIndex, DEFAULT_B, DEFAULT_K1};
use groundspan::corpus::{concat, ingest_jsonl, Corpus, ALPHABET_SIZE};
use groundspan::external::DEFAULT_TIMEOUT;
use groundspan::fmindex::{FmIndex, DEFAULT_SAMPLE_RATE};
use groundspan::genret::{
    retrieve, train_ngram, DecodeConfig, ExternalModel, FirstTokenPolicy, LanguageModel, NgramConfig, UniformModel,
    DEFAULT_ALPHA, DEFAULT_ORDER,
};
use groundspan::traindata::{
    build_ssft_pairs, write_pairs, ElementExtractor, ExternalExtractor, PairConfig, RuleExtractor,
    DEFAULT_MAX_ELEMENT_PAIRS, DEFAULT_MAX_QUERY_PAIRS, DEFAULT_MIN_ELEMENT_LEN,
};
use groundspan::Error;

/// File names inside an index directory.
pub const INDEX_FILE: &str = "fm.idx";
pub const DOCS_FILE: &str = "docs.jsonl";

#[derive(Parser, Debug)]
#[command(name = "groundspan", version, about = "Corpus-grounded generative retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an FM-index over a JSON-lines corpus.
    Index(IndexArgs),
    /// Retrieve documents by generating corpus spans.
    Search(SearchArgs),
    /// BM25 baseline run.
    Bm25(Bm25Args),
    /// Build relevance groups, qrels and a queries file.
    Groups(GroupsArgs),
    /// Score a run file against qrels.
    Eval(EvalArgs),
    /// Emit training pairs.
    Traindata(TraindataArgs),
    /// Uniform model speaking the external protocol on stdin/stdout.
    #[command(hide = true)]
    StubModel,
}

#[derive(Args, Debug)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    sample_rate: usize,
    /// Index the reversed text (needed by `search`).
    #[arg(long)]
    reversed: bool,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    index: PathBuf,
    /// ngram, uniform or external:CMD
    #[arg(long, default_value = "ngram")]
    model: String,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DecodeConfig::default().beam_width)]
    beam: usize,
    #[arg(long, default_value_t = DecodeConfig::default().max_span_len)]
    max_span: usize,
    #[arg(long, default_value_t = DecodeConfig::default().min_span_len)]
    min_span: usize,
    /// all, stoplist or allowlist:FILE
    #[arg(long, default_value = "stoplist")]
    first_token: String,
    #[arg(long, default_value_t = DecodeConfig::default().locate_limit)]
    locate_limit: usize,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Do not count n-grams of the query and generated prefix.
    #[arg(long)]
    no_context_cache: bool,
    /// Seconds to wait for an external model reply.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs())]
    model_timeout: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct Bm25Args {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K1)]
    k1: f64,
    #[arg(long, default_value_t = DEFAULT_B)]
    b: f64,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GroupMode {
    Standard,
    Stricter,
}

#[derive(Args, Debug)]
struct GroupsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    specs: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupMode::Standard)]
    mode: GroupMode,
    /// Qrels output.
    #[arg(long)]
    out: PathBuf,
    /// Queries output; defaults to `<out>.queries.jsonl`.
    #[arg(long)]
    queries_out: Option<PathBuf>,
    /// Keep only the first stricter group per standard group.
    #[arg(long)]
    first_group: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long, default_value_t = bench::DEFAULT_K)]
    k: usize,
    /// Queries file supplying categories and query docs.
    #[arg(long)]
    queries: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraindataArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_QUERY_PAIRS)]
    max_query_pairs: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_ELEMENT_PAIRS)]
    max_element_pairs: usize,
    #[arg(long, default_value = "stoplist")]
    first_token: String,
    #[arg(long, default_value_t = DEFAULT_MIN_ELEMENT_LEN)]
    min_len: usize,
    /// `external:CMD` to delegate extraction.
    #[arg(long)]
    extractor: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs())]
    extractor_timeout: u64,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code: 0 success, 1 input error, 2 internal invariant violation.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<Error>() {
        Some(inner) if inner.is_internal() => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Index(a) => index(a),
        Command::Search(a) => search(a),
        Command::Bm25(a) => bm25(a),
        Command::Groups(a) => groups(a),
        Command::Eval(a) => eval(a),
        Command::Traindata(a) => traindata(a),
        Command::StubModel => stub_model(io::stdin().lock(), io::stdout().lock()),
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn index(a: IndexArgs) -> anyhow::Result<()> {
    let corpus = ingest_jsonl(&a.corpus)?;
    let seq = concat(&corpus)?;
    let idx = FmIndex::build(&seq, a.sample_rate, a.reversed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    idx.save(a.out.join(INDEX_FILE))?;
    let mut docs = create(&a.out.join(DOCS_FILE))?;
    corpus.write_jsonl(&mut docs)?;
    docs.flush()?;
    log::info!("indexed {} documents, {} symbols", corpus.len(), idx.len());
    Ok(())
}

fn load_model(a: &SearchArgs, corpus: &Corpus) -> anyhow::Result<Box<dyn LanguageModel>> {
    Ok(match a.model.as_str() {
        "uniform" => Box::new(UniformModel),
        "ngram" => Box::new(train_ngram(
            corpus,
            NgramConfig {
                order: a.order,
                alpha: a.alpha,
                context_cache: !a.no_context_cache,
            },
        )?),
        other => match other.strip_prefix("external:") {
            Some(cmd) if !cmd.is_empty() => {
                Box::new(ExternalModel::spawn(cmd, Duration::from_secs(a.model_timeout))?)
            }
            _ => return Err(Error::Config(format!("unknown model {other:?}")).into()),
        },
    })
}

fn search(a: SearchArgs) -> anyhow::Result<()> {
    if a.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()).into());
    }
    let cfg = DecodeConfig {
        beam_width: a.beam,
        max_span_len: a.max_span,
        min_span_len: a.min_span,
        first_token: FirstTokenPolicy::parse(&a.first_token)?,
        locate_limit: a.locate_limit,
    };
    cfg.validate()?;
    let idx = FmIndex::load(a.index.join(INDEX_FILE))?;
    let corpus = ingest_jsonl(a.index.join(DOCS_FILE))?;
    let queries = bench::read_queries(&a.queries)?;
    let model = load_model(&a, &corpus)?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let rankings: Vec<Vec<RunRecord>> = pool.install(|| {
        queries
            .par_iter()
            .map(|q| {
                let r = retrieve(&idx, model.as_ref(), &q.text, &cfg, a.k)?;
                if let Some(d) = r.diagnostic {
                    log::warn!("query {:?}: {d}", q.query_id);
                }
                Ok(r.results
                    .into_iter()
                    .enumerate()
                    .map(|(i, res)| RunRecord {
                        query_id: q.query_id.clone(),
                        doc_id: res.doc_id,
                        rank: i + 1,
                        score: res.score,
                    })
                    .collect())
            })
            .collect::<groundspan::Result<_>>()
    })?;
    let records: Vec<RunRecord> = rankings.into_iter().flatten().collect();
    write_run_file(&a.out, &records)
}

fn write_run_file(path: &Path, records: &[RunRecord]) -> anyhow::Result<()> {
    let mut out = create(path)?;
    bench::write_run(records, &mut out)?;
    out.flush()?;
    Ok(())
}

fn bm25(a: Bm25Args) -> anyhow::Result<()> {
    let corpus = ingest_jsonl(&a.corpus)?;
    let queries = bench::read_queries(&a.queries)?;
    let idx = InvertedIndex::build(&corpus);
    let params = Bm25Params { k1: a.k1, b: a.b };
    let records: Vec<RunRecord> = queries
        .iter()
        .flat_map(|q| {
            idx.search(&q.text, a.k, params)
                .into_iter()
                .enumerate()
                .map(|(i, d)| RunRecord {
                    query_id: q.query_id.clone(),
                    doc_id: d.doc_id,
                    rank: i + 1,
                    score: d.score,
                })
        })
        .collect();
    write_run_file(&a.out, &records)
}

fn stricter_groups(corpus: &Corpus, group: &NamedGroup, mode: StricterMode) -> anyhow::Result<Vec<NamedGroup>> {
    let mut cases = Vec::new();
    for id in &group.members {
        let doc = corpus.get(id).expect("mapped doc is in the corpus");
        if let Some(factors) = &doc.factors {
            let key = StricterKey::new(factors.iter().map(|f| (f.name.clone(), f.option)).collect())
                .with_context(|| format!("case {id:?}"))?;
            cases.push((id.clone(), key));
        }
    }
    let found = bench::stricter_grouping(&cases, mode).with_context(|| format!("group {:?}", group.group_id))?;
    Ok(found
        .into_iter()
        .enumerate()
        .map(|(i, members)| NamedGroup {
            group_id: format!("{}#{i}", group.group_id),
            category: group.category.clone(),
            members,
        })
        .collect())
}

fn default_queries_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".queries.jsonl");
    PathBuf::from(s)
}

fn groups(a: GroupsArgs) -> anyhow::Result<()> {
    let corpus = ingest_jsonl(&a.corpus)?;
    let specs = bench::read_group_specs(&a.specs)?;
    let mapping = bench::map_cases_to_standard_groups(&corpus, &specs);
    println!(
        "mapped {}/{} cases ({:.4})",
        mapping.mapped_cases,
        mapping.total_cases,
        mapping.mapped_fraction()
    );
    let standard: Vec<NamedGroup> = specs
        .iter()
        .map(|s| NamedGroup {
            group_id: s.group_id.clone(),
            category: s.category.clone(),
            members: mapping.members[&s.group_id].clone(),
        })
        .collect();
    let named = match a.mode {
        GroupMode::Standard => standard,
        GroupMode::Stricter => {
            let mode = if a.first_group {
                StricterMode::FirstGroup
            } else {
                StricterMode::AllGroups
            };
            let mut out = Vec::new();
            for g in &standard {
                out.extend(stricter_groups(&corpus, g, mode)?);
            }
            out
        }
    };
    let (qrels, specs) = bench::build_qrels(&named, QueryPolicy::default())?;
    let records: Vec<QueryRecord> = specs
        .into_iter()
        .map(|q| QueryRecord {
            text: corpus.get(&q.query_doc).expect("query doc is in the corpus").text.clone(),
            query_id: q.query_id,
            category: Some(q.category),
            query_doc: Some(q.query_doc),
        })
        .collect();

    let mut out = create(&a.out)?;
    qrels.write_tsv(&mut out)?;
    out.flush()?;
    let qpath = a.queries_out.unwrap_or_else(|| default_queries_path(&a.out));
    let mut qout = create(&qpath)?;
    bench::write_queries(&records, &mut qout)?;
    qout.flush()?;
    println!("{} queries", records.len());
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let run = bench::read_run(&a.run)?;
    let mut qrels = bench::Qrels::read_tsv(&a.qrels)?;
    if let Some(path) = &a.queries {
        qrels.attach_queries(&bench::read_queries(path)?)?;
    }
    let report = bench::evaluate(&run, &qrels, a.k)?;
    for q in report.missing() {
        eprintln!("missing from run: {q}");
    }
    print!("{}", report.render());
    Ok(())
}

fn traindata(a: TraindataArgs) -> anyhow::Result<()> {
    let corpus = ingest_jsonl(&a.corpus)?;
    let cfg = PairConfig {
        max_query_pairs: a.max_query_pairs,
        max_element_pairs: a.max_element_pairs,
        policy: FirstTokenPolicy::parse(&a.first_token)?,
    };
    let extractor: Box<dyn ElementExtractor> = match a.extractor.as_deref() {
        None | Some("rules") => Box::new(RuleExtractor { min_len: a.min_len }),
        Some(spec) => match spec.strip_prefix("external:") {
            Some(cmd) if !cmd.is_empty() => Box::new(ExternalExtractor::spawn(
                cmd,
                Duration::from_secs(a.extractor_timeout),
            )?),
            _ => bail!(Error::Config(format!("unknown extractor {spec:?}"))),
        },
    };
    let pairs = build_ssft_pairs(&corpus, extractor.as_ref(), &cfg)?;
    let mut out = create(&a.out)?;
    write_pairs(&pairs, &mut out)?;
    out.flush()?;
    log::info!("{} pairs", pairs.len());
    Ok(())
}

/// Answers the handshake, then gives every candidate log-score 0.
pub fn stub_model<R: BufRead, W: Write>(input: R, mut output: W) -> anyhow::Result<()> {
    let mut lines = input.lines();
    let Some(hello) = lines.next() else {
        return Ok(());
    };
    let hello: Value = serde_json::from_str(&hello?)?;
    if hello["alphabet"] != json!(ALPHABET_SIZE) {
        bail!("unexpected handshake {hello}");
    }
    writeln!(output, "{}", json!({"ready": true}))?;
    output.flush()?;
    for line in lines {
        let req: Value = serde_json::from_str(&line?)?;
        let n = req["candidates"].as_array().map_or(0, Vec::len);
        writeln!(output, "{}", json!({"id": req["id"], "logprobs": vec![0.0; n]}))?;
        output.flush()?;
    }
    Ok(())
}
