//! `alias-qa` command-line front end.
//!
//! Exit status: 0 on success, 1 on invalid input (with a JSON error object on
//! standard error), 2 on I/O failure. Settings resolve as flags, then a
//! `key = value` config file (`--config`), then built-in defaults.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distant::{
    evaluate_predictions, mine_question, EvalReport, MatchScope, MiningConfig, MiningCounts,
    Prediction, Retrieval, TrainingLine,
};
use crate::error::{Error, Result};
use crate::expansion::{Expander, IdSet, QARecord, StatsAccumulator};
use crate::io::{load_tensors, read_jsonl, AtomicFile, JsonlReader, Tensor};
use crate::kb::{self, AliasIndex, FreebaseConfig, IngestReport, SourceTag};
use crate::reader::{self, PassageEncoding, ReaderWeights};

const CHUNK: usize = 2048;

#[derive(Debug, Parser)]
#[command(
    name = "alias-qa",
    version,
    about = "Answer alias expansion, evaluation and distant supervision for open-domain QA"
)]
pub struct Cli {
    /// `key = value` settings file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Human-readable tables instead of JSON on standard output.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an alias index from Freebase triples, Wikipedia tables, or existing indexes.
    BuildIndex(BuildIndexArgs),
    /// Expand every answer set in a dataset.
    Expand(ExpandArgs),
    /// Mine distant-supervision training examples from retrieval results.
    Mine(MineArgs),
    /// Exact-match evaluation under original and expanded answers.
    Evaluate(EvaluateArgs),
    /// Expansion statistics for a dataset.
    Stats(StatsArgs),
    /// Self-check of the reader probability model and its gradient.
    ReaderCheck(ReaderCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Freebase,
    Wikipedia,
    Merged,
}

impl From<SourceArg> for SourceTag {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Freebase => SourceTag::Freebase,
            SourceArg::Wikipedia => SourceTag::Wikipedia,
            SourceArg::Merged => SourceTag::Merged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    #[value(alias = "title_and_text")]
    TitleAndText,
    #[value(alias = "text_only")]
    TextOnly,
}

impl From<ScopeArg> for MatchScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::TitleAndText => MatchScope::TitleAndText,
            ScopeArg::TextOnly => MatchScope::TextOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// freebase: one triple file. wikipedia: titles TSV then redirects TSV.
    /// merged: two or more `.qaai` index files.
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a JSON-lines dump of every entity.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long, default_value = "type.object.name")]
    pub name_predicate: String,
    #[arg(long, default_value = "common.topic.alias")]
    pub alias_predicate: String,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write expansion statistics JSON here.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Alias index; without it only the original answers are used.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub retrievals: PathBuf,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only passages ranked at or above this are used.
    #[arg(long)]
    pub top_k: Option<u32>,
    #[arg(long, value_enum)]
    pub match_scope: Option<ScopeArg>,
    #[arg(long)]
    pub out: PathBuf,
    /// Counts sidecar (default: `<out>.counts.json`).
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub expanded: Option<PathBuf>,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReaderCheckArgs {
    /// Tensor file: encodings `[k, L, h]` followed by weights `[3, h]`.
    #[arg(long)]
    pub tensors: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Passages considered for span selection.
    #[arg(long)]
    pub top_k_eval: Option<usize>,
    #[arg(long)]
    pub max_span_len: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolved settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: usize,
    pub top_k: u32,
    pub top_k_eval: usize,
    pub seed: u64,
    pub alias_source: SourceTag,
    pub match_scope: MatchScope,
    pub threads: usize,
    pub trials: usize,
    pub max_span_len: usize,
    pub pretty: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 24,
            top_k: 100,
            top_k_eval: 10,
            seed: 0,
            alias_source: SourceTag::Freebase,
            match_scope: MatchScope::TitleAndText,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            trials: 50,
            max_span_len: reader::DEFAULT_MAX_SPAN_LEN,
            pretty: false,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidInput(format!("config: bad value {value:?} for {key}")))
}

impl RunConfig {
    /// Apply `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("config line {}: expected key = value", n + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "m" => self.m = parse_value(key, value)?,
                "top_k" => self.top_k = parse_value(key, value)?,
                "top_k_eval" => self.top_k_eval = parse_value(key, value)?,
                "seed" => self.seed = parse_value(key, value)?,
                "threads" => self.threads = parse_value(key, value)?,
                "trials" => self.trials = parse_value(key, value)?,
                "max_span_len" => self.max_span_len = parse_value(key, value)?,
                "pretty" => self.pretty = parse_value(key, value)?,
                "alias_source" => {
                    self.alias_source = SourceArg::from_str(value, true)
                        .map_err(|_| {
                            Error::InvalidInput(format!("config: unknown alias_source {value:?}"))
                        })?
                        .into()
                }
                "match_scope" => {
                    self.match_scope = ScopeArg::from_str(&value.replace('_', "-"), true)
                        .map_err(|_| {
                            Error::InvalidInput(format!("config: unknown match_scope {value:?}"))
                        })?
                        .into()
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "config: unknown key {other:?}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(cli: &Cli) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &cli.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            cfg.apply_config_text(&text)?;
        }
        if let Some(t) = cli.threads {
            cfg.threads = t;
        }
        cfg.pretty |= cli.pretty;
        match &cli.command {
            Command::BuildIndex(a) => {
                if let Some(s) = a.source {
                    cfg.alias_source = s.into();
                }
            }
            Command::Mine(a) => {
                if let Some(v) = a.m {
                    cfg.m = v;
                }
                if let Some(v) = a.seed {
                    cfg.seed = v;
                }
                if let Some(v) = a.top_k {
                    cfg.top_k = v;
                }
                if let Some(v) = a.match_scope {
                    cfg.match_scope = v.into();
                }
            }
            Command::ReaderCheck(a) => {
                if let Some(v) = a.trials {
                    cfg.trials = v;
                }
                if let Some(v) = a.seed {
                    cfg.seed = v;
                }
                if let Some(v) = a.top_k_eval {
                    cfg.top_k_eval = v;
                }
                if let Some(v) = a.max_span_len {
                    cfg.max_span_len = v;
                }
            }
            _ => {}
        }
        if cfg.threads == 0 {
            return Err(Error::InvalidInput("threads must be at least 1".into()));
        }
        if cfg.m < 2 {
            return Err(Error::InvalidInput(format!(
                "m must be at least 2, got {}",
                cfg.m
            )));
        }
        Ok(cfg)
    }
}

/// Parse `argv`, run, and return the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = writeln!(
                stderr,
                "{}",
                serde_json::json!({"error": "usage", "message": e.to_string().trim_end()})
            );
            return 1;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(
                stderr,
                "{}",
                serde_json::json!({"error": e.kind(), "message": e.to_string()})
            );
            match e {
                Error::Io { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(cli)?;
    validate_paths(&cli.command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut buf: Vec<u8> = Vec::new();
    let result = pool.install(|| {
        let out: &mut dyn Write = &mut buf;
        match &cli.command {
            Command::BuildIndex(a) => build_index(a, &cfg, out),
            Command::Expand(a) => expand(a, &cfg, out),
            Command::Mine(a) => mine(a, &cfg, out),
            Command::Evaluate(a) => evaluate(a, &cfg, out),
            Command::Stats(a) => stats(a, &cfg, out),
            Command::ReaderCheck(a) => reader_check(a, &cfg, out),
        }
    });
    stdout
        .write_all(&buf)
        .map_err(|e| Error::io("<stdout>", e))?;
    result
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        ))
    }
}

fn require_out_dir(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        )),
        _ => Ok(()),
    }
}

fn validate_paths(cmd: &Command) -> Result<()> {
    let (inputs, outputs): (Vec<&Path>, Vec<&Path>) = match cmd {
        Command::BuildIndex(a) => (
            a.inputs.iter().map(PathBuf::as_path).collect(),
            std::iter::once(a.out.as_path())
                .chain(a.dump.as_deref())
                .collect(),
        ),
        Command::Expand(a) => (
            vec![&a.index, &a.data],
            std::iter::once(a.out.as_path())
                .chain(a.stats.as_deref())
                .collect(),
        ),
        Command::Mine(a) => (
            a.index
                .as_deref()
                .into_iter()
                .chain([a.data.as_path(), &a.retrievals])
                .collect(),
            std::iter::once(a.out.as_path())
                .chain(a.counts.as_deref())
                .collect(),
        ),
        Command::Evaluate(a) => (
            [a.data.as_path(), &a.predictions]
                .into_iter()
                .chain(a.expanded.as_deref())
                .collect(),
            a.out.as_deref().into_iter().collect(),
        ),
        Command::Stats(a) => (
            vec![&a.index, &a.data],
            a.out.as_deref().into_iter().collect(),
        ),
        Command::ReaderCheck(a) => (vec![&a.tensors], a.out.as_deref().into_iter().collect()),
    };
    inputs.into_iter().try_for_each(require_file)?;
    outputs.into_iter().try_for_each(require_out_dir)
}

/// JSON to `--out` (atomically) or standard output; `pretty` rows replace the
/// JSON on standard output.
fn emit<T: Serialize>(
    value: &T,
    out: Option<&Path>,
    pretty: Option<Vec<(String, String)>>,
    stdout: &mut dyn Write,
) -> Result<()> {
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    if let Some(path) = out {
        let mut f = AtomicFile::create(path)?;
        writeln!(f, "{json}").map_err(|e| Error::io(path, e))?;
        f.commit()?;
    }
    let io_err = |e| Error::io("<stdout>", e);
    match pretty {
        Some(rows) => {
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in rows {
                writeln!(stdout, "{k:<width$}  {v}").map_err(io_err)?;
            }
        }
        None if out.is_none() => writeln!(stdout, "{json}").map_err(io_err)?,
        None => {}
    }
    Ok(())
}

fn rows<const N: usize>(pairs: [(&str, String); N]) -> Vec<(String, String)> {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

#[derive(Serialize)]
struct BuildReport {
    source: SourceTag,
    entities: usize,
    surfaces: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ingest: Option<IngestReport>,
}

fn build_index(a: &BuildIndexArgs, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let (index, ingest) = match cfg.alias_source {
        SourceTag::Freebase => {
            let [path] = a.inputs.as_slice() else {
                return Err(Error::InvalidInput(
                    "freebase source takes exactly one --in file".into(),
                ));
            };
            let config = FreebaseConfig {
                name_predicate: a.name_predicate.clone(),
                alias_predicate: a.alias_predicate.clone(),
            };
            let (idx, report) = kb::ingest_freebase(path, &config)?;
            (idx, Some(report))
        }
        SourceTag::Wikipedia => {
            let [titles, redirects] = a.inputs.as_slice() else {
                return Err(Error::InvalidInput(
                    "wikipedia source takes --in <titles.tsv> <redirects.tsv>".into(),
                ));
            };
            let (idx, report) = kb::ingest_wikipedia(titles, redirects)?;
            (idx, Some(report))
        }
        SourceTag::Merged => {
            if a.inputs.len() < 2 {
                return Err(Error::InvalidInput(
                    "merged source takes two or more index files".into(),
                ));
            }
            let mut merged = AliasIndex::load(&a.inputs[0])?;
            for p in &a.inputs[1..] {
                merged = AliasIndex::merge(&merged, &AliasIndex::load(p)?);
            }
            (merged, None)
        }
    };

    let mut out = AtomicFile::create(&a.out)?;
    index
        .write_binary(&mut out)
        .map_err(|e| Error::io(&a.out, e))?;
    let dump = match &a.dump {
        Some(path) => {
            let mut f = AtomicFile::create(path)?;
            index.write_jsonl(&mut f).map_err(|e| Error::io(path, e))?;
            Some(f)
        }
        None => None,
    };
    out.commit()?;
    if let Some(f) = dump {
        f.commit()?;
    }

    let report = BuildReport {
        source: index.source(),
        entities: index.len(),
        surfaces: index.surface_count(),
        ingest,
    };
    let pretty = cfg.pretty.then(|| {
        rows([
            ("source", report.source.to_string()),
            ("entities", report.entities.to_string()),
            ("surfaces", report.surfaces.to_string()),
        ])
    });
    emit(&report, None, pretty, stdout)
}

/// Stream `data` in chunks, expanding each chunk in parallel. `sink` gets
/// the expanded records of each chunk in input order.
fn expand_stream(
    index: &AliasIndex,
    data: &Path,
    mut sink: impl FnMut(&[QARecord]) -> Result<()>,
) -> Result<StatsAccumulator> {
    let mut seen = IdSet::default();
    let mut acc = StatsAccumulator::default();
    let mut reader = JsonlReader::<_, QARecord>::open(data)?;
    loop {
        let chunk: Vec<QARecord> = reader.by_ref().take(CHUNK).collect::<Result<_>>()?;
        if chunk.is_empty() {
            return Ok(acc);
        }
        for r in &chunk {
            if !seen.insert(&r.question_id) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate question id {:?}",
                    r.question_id
                )));
            }
        }
        let results: Vec<(QARecord, StatsAccumulator)> = chunk
            .par_iter()
            .map_init(|| Expander::new(index), |ex, r| ex.expand_record(r))
            .collect();
        let mut expanded = Vec::with_capacity(results.len());
        for (r, part) in results {
            acc = acc.merge(part);
            expanded.push(r);
        }
        sink(&expanded)?;
    }
}

fn stats_rows(s: &crate::expansion::ExpansionStats) -> Vec<(String, String)> {
    rows([
        ("questions", s.questions.to_string()),
        (
            "avg original answers",
            format!("{:.2}", s.avg_original_answers),
        ),
        (
            "matched answers (%)",
            format!("{:.2}", s.matched_answers_pct),
        ),
        (
            "avg augmented answers",
            format!("{:.2}", s.avg_augmented_answers),
        ),
    ])
}

fn expand(a: &ExpandArgs, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let index = AliasIndex::load(&a.index)?;
    let mut out = AtomicFile::create(&a.out)?;
    let acc = expand_stream(&index, &a.data, |records| {
        records.iter().try_for_each(|r| out.write_json_line(r))
    })?;
    out.commit()?;
    let stats = acc.finish();
    if let Some(path) = &a.stats {
        emit(&stats, Some(path), Some(Vec::new()), &mut std::io::sink())?;
    }
    emit(&stats, None, cfg.pretty.then(|| stats_rows(&stats)), stdout)
}

fn stats(a: &StatsArgs, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let index = AliasIndex::load(&a.index)?;
    let stats = expand_stream(&index, &a.data, |_| Ok(()))?.finish();
    emit(
        &stats,
        a.out.as_deref(),
        cfg.pretty.then(|| stats_rows(&stats)),
        stdout,
    )
}

#[derive(Debug, Serialize)]
struct CountsReport {
    m: usize,
    seed: u64,
    top_k: u32,
    match_scope: MatchScope,
    expanded: bool,
    #[serde(flatten)]
    counts: MiningCounts,
    unknown_retrievals: u64,
}

fn preview(ids: &[&str]) -> String {
    const SHOW: usize = 20;
    if ids.len() <= SHOW {
        format!("{ids:?}")
    } else {
        format!("{:?} and {} more", &ids[..SHOW], ids.len() - SHOW)
    }
}

fn mine(a: &MineArgs, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let index = a.index.as_deref().map(AliasIndex::load).transpose()?;
    let mut records: HashMap<String, QARecord> = HashMap::new();
    for r in JsonlReader::<_, QARecord>::open(&a.data)? {
        let r = r?;
        if records.contains_key(&r.question_id) {
            return Err(Error::InvalidDataset(format!(
                "duplicate question id {:?}",
                r.question_id
            )));
        }
        records.insert(r.question_id.clone(), r);
    }

    let config = MiningConfig {
        m: cfg.m,
        seed: cfg.seed,
        top_k: cfg.top_k,
        scope: cfg.match_scope,
    };
    let mut seen = IdSet::default();
    let mut counts = MiningCounts::default();
    let mut unknown = 0u64;
    let mut lines: Vec<(String, String)> = Vec::new();
    let mut reader = JsonlReader::<_, Retrieval>::open(&a.retrievals)?;
    loop {
        let chunk: Vec<Retrieval> = reader.by_ref().take(CHUNK).collect::<Result<_>>()?;
        if chunk.is_empty() {
            break;
        }
        let mut jobs: Vec<(&QARecord, &Retrieval)> = Vec::with_capacity(chunk.len());
        for ret in &chunk {
            if !seen.insert(&ret.id) {
                return Err(Error::InvalidInput(format!(
                    "duplicate retrieval id {:?}",
                    ret.id
                )));
            }
            match records.get(&ret.id) {
                Some(rec) => jobs.push((rec, ret)),
                None => unknown += 1,
            }
        }
        let outcomes: Vec<(MiningCounts, Option<TrainingLine>)> = jobs
            .par_iter()
            .map_init(
                || index.as_ref().map(Expander::new),
                |ex, (rec, ret)| {
                    let gold = rec.gold();
                    let expanded = match ex {
                        Some(ex) => ex.expand(gold).answers,
                        None => gold.clone(),
                    };
                    let o =
                        mine_question(&rec.question_id, gold, &expanded, &ret.passages, &config)?;
                    Ok((o.counts, o.example.map(|e| e.to_line())))
                },
            )
            .collect::<Result<_>>()?;
        for (c, line) in outcomes {
            counts = counts.merge(c);
            if let Some(line) = line {
                let json = serde_json::to_string(&line).expect("training line serializes");
                lines.push((line.id, json));
            }
        }
    }

    let mut missing: Vec<&str> = records
        .keys()
        .map(String::as_str)
        .filter(|id| !seen.contains(id))
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        return Err(Error::InvalidInput(format!(
            "questions without retrieval results: {}",
            preview(&missing)
        )));
    }

    lines.sort_unstable_by(|x, y| x.0.cmp(&y.0));
    let mut out = AtomicFile::create(&a.out)?;
    for (_, json) in &lines {
        writeln!(out, "{json}").map_err(|e| Error::io(&a.out, e))?;
    }
    let report = CountsReport {
        m: config.m,
        seed: config.seed,
        top_k: config.top_k,
        match_scope: config.scope,
        expanded: index.is_some(),
        counts,
        unknown_retrievals: unknown,
    };
    let counts_path = a.counts.clone().unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".counts.json");
        PathBuf::from(p)
    });
    out.commit()?;
    emit(
        &report,
        Some(&counts_path),
        Some(Vec::new()),
        &mut std::io::sink(),
    )?;
    let pretty = cfg.pretty.then(|| {
        rows([
            ("questions", counts.questions.to_string()),
            ("original positives", counts.original_positives.to_string()),
            (
                "augmented positives",
                counts.augmented_positives.to_string(),
            ),
            ("emitted", counts.emitted.to_string()),
            ("discarded", counts.discarded.to_string()),
            ("short negatives", counts.short_negatives.to_string()),
        ])
    });
    emit(&report, None, pretty, stdout)
}

fn evaluate(a: &EvaluateArgs, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let gold: Vec<QARecord> = read_jsonl(&a.data)?;
    let mut predictions: HashMap<String, String> = HashMap::new();
    for p in JsonlReader::<_, Prediction>::open(&a.predictions)? {
        let p = p?;
        if predictions.insert(p.id.clone(), p.prediction).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate prediction id {:?}",
                p.id
            )));
        }
    }
    let expanded: Option<Vec<QARecord>> = a.expanded.as_deref().map(read_jsonl).transpose()?;
    let report: EvalReport = evaluate_predictions(&predictions, &gold, expanded.as_deref())?;
    let pretty = cfg.pretty.then(|| {
        let mut r = rows([
            ("questions", report.questions.to_string()),
            ("EM original (%)", format!("{:.2}", report.em_original)),
        ]);
        if let Some(e) = report.em_expanded {
            r.push(("EM expanded (%)".into(), format!("{e:.2}")));
        }
        r
    });
    emit(&report, a.out.as_deref(), pretty, stdout)
}

#[derive(Debug, Serialize)]
pub struct ReaderCheckReport {
    pub passages: usize,
    pub seq_len: usize,
    pub hidden: usize,
    pub max_prob_sum_error: f64,
    pub prediction: reader::SpanPrediction,
    pub loss: f64,
    pub grad_rel_error: f64,
    pub trials: usize,
    pub trial_max_grad_rel_error: f64,
    pub pass: bool,
}

fn split_tensors(tensors: &[Tensor]) -> Result<(Vec<PassageEncoding>, ReaderWeights)> {
    let [enc, w, ..] = tensors else {
        return Err(Error::InvalidInput(
            "tensor file needs encodings and weights".into(),
        ));
    };
    let &[k, len, hidden] = enc.dims.as_slice() else {
        return Err(Error::Shape(format!(
            "encodings must be [k, L, h], got {:?}",
            enc.dims
        )));
    };
    if w.dims != [3, hidden] {
        return Err(Error::Shape(format!(
            "weights must be [3, {hidden}], got {:?}",
            w.dims
        )));
    }
    if k == 0 {
        return Err(Error::Shape("no passages in encodings".into()));
    }
    let per = len * hidden;
    let encodings = (0..k)
        .map(|i| PassageEncoding::new(len, hidden, enc.data[i * per..(i + 1) * per].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let weights = ReaderWeights::new(
        w.data[..hidden].to_vec(),
        w.data[hidden..2 * hidden].to_vec(),
        w.data[2 * hidden..].to_vec(),
    )?;
    Ok((encodings, weights))
}

fn reader_check(a: &ReaderCheckArgs, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    const PROB_TOL: f64 = 1e-9;
    const GRAD_TOL: f64 = 1e-4;
    const STEP: f64 = 1e-5;

    let (encodings, weights) = split_tensors(&load_tensors(&a.tensors)?)?;
    let top = &encodings[..cfg.top_k_eval.clamp(1, encodings.len())];

    let mut worst_sum: f64 = (reader::passage_probs(top, &weights.passage)?
        .iter()
        .sum::<f64>()
        - 1.0)
        .abs();
    for e in top {
        let (s, t) = reader::span_probs(e, &weights.start, &weights.end)?;
        worst_sum = worst_sum
            .max((s.iter().sum::<f64>() - 1.0).abs())
            .max((t.iter().sum::<f64>() - 1.0).abs());
    }
    let prediction = reader::select_prediction(top, &weights, cfg.max_span_len)?;
    let gold = [(prediction.token_start, prediction.token_end)];
    let loss = reader::mml_loss(top, &weights, prediction.passage_index, &gold)?;
    let grad_rel_error =
        reader::gradient_check(top, &weights, prediction.passage_index, &gold, STEP)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trial_worst: f64 = 0.0;
    for _ in 0..cfg.trials {
        let (encs, w) = reader::random_instance(&mut rng, 3, 8, 4);
        let pos = rand::Rng::random_range(&mut rng, 0..3);
        let s = rand::Rng::random_range(&mut rng, 0..8);
        let e = rand::Rng::random_range(&mut rng, s..8);
        trial_worst = trial_worst.max(reader::gradient_check(
            &encs,
            &w,
            pos,
            &[(s, e), (e, e)],
            STEP,
        )?);
    }

    let pass = worst_sum <= PROB_TOL && grad_rel_error <= GRAD_TOL && trial_worst <= GRAD_TOL;
    let report = ReaderCheckReport {
        passages: top.len(),
        seq_len: top[0].len(),
        hidden: weights.hidden(),
        max_prob_sum_error: worst_sum,
        prediction,
        loss,
        grad_rel_error,
        trials: cfg.trials,
        trial_max_grad_rel_error: trial_worst,
        pass,
    };
    let pretty = cfg.pretty.then(|| {
        rows([
            ("passages", report.passages.to_string()),
            ("max |Σp - 1|", format!("{:.3e}", report.max_prob_sum_error)),
            (
                "prediction",
                format!(
                    "passage {} tokens {}..={}",
                    prediction.passage_index, prediction.token_start, prediction.token_end
                ),
            ),
            ("grad rel error", format!("{:.3e}", report.grad_rel_error)),
            (
                "trial max grad rel error",
                format!("{:.3e}", report.trial_max_grad_rel_error),
            ),
            ("pass", report.pass.to_string()),
        ])
    });
    emit(&report, a.out.as_deref(), pretty, stdout)?;
    if pass {
        Ok(())
    } else {
        Err(Error::InvalidInput("reader self-check failed".into()))
    }
}
