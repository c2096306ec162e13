//! Scoring and the benchmark harness.
//!
//! Predictions are scored two ways: Rouge-L recall against the gold answer
//! and a model-judged consistency verdict. The benchmark runner executes
//! one episode per dataset record with a bounded worker pool, persists
//! newline-delimited results in dataset order, and aggregates them per
//! (domain, difficulty) group.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::actions::ActionEvaluator;
use crate::agent::{
    judge_verdict, AgentBackends, EpisodeOptions, EpisodeRunner, MemorySink, PromptCatalog,
    StepRecord, TraceSink,
};
use crate::graph::KnowledgeGraph;
use crate::llm::{ChatBackend, ChatTurn, GenerationParams, LlmError};
use crate::retrieval::RetrievalIndex;
use crate::text::tokenize;

/// One benchmark question.
///
/// `domain` picks the graph and prompt catalog (for example `amazon` or
/// `biomedical`); `difficulty` is a free label, conventionally one of
/// `easy`, `medium`, `hard`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QARecord {
    pub question_id: String,
    pub question: String,
    #[serde(rename = "answer")]
    pub gold_answer: String,
    pub domain: String,
    pub difficulty: String,
}

/// A scored benchmark outcome for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredResult {
    pub record: QARecord,
    /// Absent when the episode never produced an answer (or failed).
    pub predicted: Option<String>,
    /// Rouge-L recall of `predicted` against the gold answer; 0 when absent.
    pub rouge_l: f64,
    /// The consistency judge's verdict; absent when there was no prediction
    /// to grade or the judge call failed.
    pub judge_verdict: Option<bool>,
    pub wall_time_s: f64,
    pub attempts_used: usize,
}

/// The persisted projection of a [`ScoredResult`], one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub question_id: String,
    pub predicted: Option<String>,
    pub rouge_l: f64,
    pub judge_verdict: Option<bool>,
    pub wall_time_s: f64,
    pub attempts_used: usize,
}

impl ResultRow {
    pub fn from_scored(result: &ScoredResult) -> Self {
        ResultRow {
            question_id: result.record.question_id.clone(),
            predicted: result.predicted.clone(),
            rouge_l: result.rouge_l,
            judge_verdict: result.judge_verdict,
            wall_time_s: result.wall_time_s,
            attempts_used: result.attempts_used,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("could not access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at {path} line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("duplicate question_id {0} in dataset")]
    DuplicateQuestion(String),
    #[error("invalid dataset record {question_id}: {message}")]
    InvalidRecord {
        question_id: String,
        message: String,
    },
    #[error("record {question_id} names domain {domain}, but no assets are loaded for it")]
    UnknownDomain { question_id: String, domain: String },
    #[error("results reference unknown question_id {0}")]
    UnknownQuestion(String),
}

// ---------------------------------------------------------------------------
// Rouge-L

/// Rouge-L recall: LCS length over the token sequences divided by the
/// reference token count. Tokenization matches retrieval (lowercase,
/// punctuation stripped, interior hyphens kept). Returns 0 when either
/// side tokenizes to nothing.
pub fn rouge_l(pred: &str, reference: &str) -> f64 {
    let pred_tokens = tokenize(pred);
    let ref_tokens = tokenize(reference);
    if pred_tokens.is_empty() || ref_tokens.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&pred_tokens, &ref_tokens);
    (lcs as f64 / ref_tokens.len() as f64).clamp(0.0, 1.0)
}

/// Longest-common-subsequence length via the two-row dynamic program.
fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for item_a in a {
        for (j, item_b) in b.iter().enumerate() {
            curr[j + 1] = if item_a == item_b {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
        curr[0] = 0;
    }
    prev[b.len()]
}

// ---------------------------------------------------------------------------
// Consistency judge

/// Prompt for grading a prediction against the reference answer.
const CONSISTENCY_JUDGE_TEMPLATE: &str = "You are an intelligent evaluation agent. Given a question, a reference answer, and a predicted answer, decide whether the predicted answer is consistent with the reference answer. In one or two sentences, explain your decision. Then conclude with [yes] if the predicted answer is correct, or [no] if it is not.\nQuestion: {question}\nReference answer: {reference}\nPredicted answer: {predicted}\nJudgment:";

/// Asks `backend` whether `predicted` is consistent with the record's gold
/// answer. The reply is parsed with the same rightmost `[yes]`/`[no]` rule
/// as the episode judge; a reply with neither token counts as incorrect.
pub fn llm_judge_score(
    backend: &dyn ChatBackend,
    record: &QARecord,
    predicted: &str,
    params: &GenerationParams,
) -> Result<bool, LlmError> {
    let prompt = CONSISTENCY_JUDGE_TEMPLATE
        .replace("{question}", &record.question)
        .replace("{reference}", &record.gold_answer)
        .replace("{predicted}", predicted);
    let reply = backend.complete(&[ChatTurn::user(prompt)], params)?;
    match judge_verdict(&reply) {
        Some(verdict) => Ok(verdict),
        None => {
            log::warn!(
                "question {}: consistency judge reply carried neither [yes] nor [no]; treating as incorrect",
                record.question_id
            );
            Ok(false)
        }
    }
}

// ---------------------------------------------------------------------------
// Aggregation

/// Aggregate metrics for one (domain, difficulty) group or overall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub domain: String,
    pub difficulty: String,
    pub count: usize,
    /// Mean Rouge-L scaled to 0–100.
    pub rouge_l_x100: f64,
    /// Records with a judge verdict.
    pub judged: usize,
    pub judge_true: usize,
    /// Percent of judged records graded correct; absent when none were judged.
    pub judge_score_pct: Option<f64>,
    pub mean_wall_time_s: f64,
    pub mean_attempts: f64,
}

/// A per-record failure observed while running the benchmark.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureNote {
    pub question_id: String,
    pub message: String,
}

/// The benchmark report: per-group rows, the overall row, and any
/// per-record failures from the producing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub groups: Vec<GroupStats>,
    pub overall: GroupStats,
    pub failures: Vec<FailureNote>,
}

#[derive(Default)]
struct Accumulator {
    count: usize,
    rouge_sum: f64,
    judged: usize,
    judge_true: usize,
    wall_sum: f64,
    attempts_sum: usize,
}

impl Accumulator {
    fn add(&mut self, result: &ScoredResult) {
        self.count += 1;
        self.rouge_sum += result.rouge_l;
        if let Some(verdict) = result.judge_verdict {
            self.judged += 1;
            if verdict {
                self.judge_true += 1;
            }
        }
        self.wall_sum += result.wall_time_s;
        self.attempts_sum += result.attempts_used;
    }

    fn stats(&self, domain: &str, difficulty: &str) -> GroupStats {
        let n = self.count as f64;
        GroupStats {
            domain: domain.to_string(),
            difficulty: difficulty.to_string(),
            count: self.count,
            rouge_l_x100: if self.count == 0 {
                0.0
            } else {
                self.rouge_sum / n * 100.0
            },
            judged: self.judged,
            judge_true: self.judge_true,
            judge_score_pct: if self.judged == 0 {
                None
            } else {
                Some(self.judge_true as f64 / self.judged as f64 * 100.0)
            },
            mean_wall_time_s: if self.count == 0 {
                0.0
            } else {
                self.wall_sum / n
            },
            mean_attempts: if self.count == 0 {
                0.0
            } else {
                self.attempts_sum as f64 / n
            },
        }
    }
}

/// Groups results by (domain, difficulty) and computes per-group and
/// overall means. Judge percentages use only judged records as the
/// denominator; unjudged records still count toward `count`.
pub fn aggregate(results: &[ScoredResult]) -> Report {
    let mut groups: BTreeMap<(String, String), Accumulator> = BTreeMap::new();
    let mut overall = Accumulator::default();
    for result in results {
        let key = (
            result.record.domain.clone(),
            result.record.difficulty.clone(),
        );
        groups.entry(key).or_default().add(result);
        overall.add(result);
    }
    Report {
        groups: groups
            .iter()
            .map(|((domain, difficulty), acc)| acc.stats(domain, difficulty))
            .collect(),
        overall: overall.stats("overall", "-"),
        failures: Vec::new(),
    }
}

/// Renders the report as a fixed-width text table.
pub fn render_report(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:<12} {:>5} {:>8} {:>8} {:>7} {:>9} {:>9}\n",
        "domain", "difficulty", "n", "RL", "judge%", "judged", "wall_s", "attempts"
    ));
    let mut line = |stats: &GroupStats| {
        let judge = match stats.judge_score_pct {
            Some(pct) => format!("{pct:.1}"),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<16} {:<12} {:>5} {:>8.2} {:>8} {:>7} {:>9.3} {:>9.2}\n",
            stats.domain,
            stats.difficulty,
            stats.count,
            stats.rouge_l_x100,
            judge,
            stats.judged,
            stats.mean_wall_time_s,
            stats.mean_attempts
        ));
    };
    for stats in &report.groups {
        line(stats);
    }
    line(&report.overall);
    if !report.failures.is_empty() {
        out.push_str(&format!(
            "\n{} record(s) failed to run:\n",
            report.failures.len()
        ));
        for failure in &report.failures {
            out.push_str(&format!("  {}: {}\n", failure.question_id, failure.message));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Dataset and results files

/// Reads a newline-delimited dataset file, enforcing non-empty question
/// and answer and unique question ids. Blank lines are skipped.
pub fn read_dataset(path: &Path) -> Result<Vec<QARecord>, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: QARecord = serde_json::from_str(line).map_err(|e| BenchError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if record.question.trim().is_empty() || record.gold_answer.trim().is_empty() {
            return Err(BenchError::InvalidRecord {
                question_id: record.question_id.clone(),
                message: "question and answer must be non-empty".to_string(),
            });
        }
        if !seen.insert(record.question_id.clone()) {
            return Err(BenchError::DuplicateQuestion(record.question_id));
        }
        records.push(record);
    }
    Ok(records)
}

/// Reads a newline-delimited results file. A missing file reads as empty.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(source) => {
            return Err(BenchError::Io {
                path: path.display().to_string(),
                source,
            })
        }
    };
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(line).map_err(|e| BenchError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(rows)
}

fn join_rows(
    dataset: &[QARecord],
    rows: &[ResultRow],
    recompute_rouge: bool,
) -> Result<Vec<ScoredResult>, BenchError> {
    let by_id: HashMap<&str, &QARecord> = dataset
        .iter()
        .map(|r| (r.question_id.as_str(), r))
        .collect();
    rows.iter()
        .map(|row| {
            let record = by_id
                .get(row.question_id.as_str())
                .ok_or_else(|| BenchError::UnknownQuestion(row.question_id.clone()))?;
            let rouge = if recompute_rouge {
                row.predicted
                    .as_deref()
                    .map(|p| rouge_l(p, &record.gold_answer))
                    .unwrap_or(0.0)
            } else {
                row.rouge_l
            };
            Ok(ScoredResult {
                record: (*record).clone(),
                predicted: row.predicted.clone(),
                rouge_l: rouge,
                judge_verdict: row.judge_verdict,
                wall_time_s: row.wall_time_s,
                attempts_used: row.attempts_used,
            })
        })
        .collect()
}

/// Joins persisted rows back to their dataset records, keeping the
/// persisted scores.
pub fn results_to_scored(
    dataset: &[QARecord],
    rows: &[ResultRow],
) -> Result<Vec<ScoredResult>, BenchError> {
    join_rows(dataset, rows, false)
}

/// Joins persisted rows back to their dataset records, recomputing Rouge-L
/// from the persisted predictions. Used to verify that persisted scores
/// are reproducible.
pub fn rescore(dataset: &[QARecord], rows: &[ResultRow]) -> Result<Vec<ScoredResult>, BenchError> {
    join_rows(dataset, rows, true)
}

// ---------------------------------------------------------------------------
// Benchmark runner

/// Everything needed to run episodes for one domain.
pub struct DomainAssets {
    pub graph: KnowledgeGraph,
    pub index: RetrievalIndex,
    pub catalog: PromptCatalog,
}

impl std::fmt::Debug for DomainAssets {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainAssets")
            .field("nodes", &self.graph.node_count())
            .finish_non_exhaustive()
    }
}

/// The backends used for one record: the episode's three roles plus the
/// consistency judge.
#[derive(Clone)]
pub struct RecordBackends {
    pub agent: AgentBackends,
    pub consistency_judge: Arc<dyn ChatBackend>,
}

impl RecordBackends {
    /// One backend serving every role.
    pub fn single(backend: Arc<dyn ChatBackend>) -> Self {
        RecordBackends {
            agent: AgentBackends::single(backend.clone()),
            consistency_judge: backend,
        }
    }
}

/// Supplies backends per record. Live runs share one HTTP backend across
/// all records; scripted runs hand each record its own replay script so
/// concurrent workers never interleave on a shared cursor.
pub trait BackendProvider: Send + Sync {
    fn for_record(&self, record: &QARecord) -> Result<RecordBackends, LlmError>;
}

/// Shares fixed backends across all records.
pub struct SharedBackendProvider {
    backends: RecordBackends,
}

impl SharedBackendProvider {
    pub fn new(backends: RecordBackends) -> Self {
        SharedBackendProvider { backends }
    }
}

impl BackendProvider for SharedBackendProvider {
    fn for_record(&self, _record: &QARecord) -> Result<RecordBackends, LlmError> {
        Ok(self.backends.clone())
    }
}

/// Loads `{question_id}.json` from a scripts directory for each record.
/// The one script serves reasoning, episode judging, reflection, and the
/// consistency judge, consumed strictly in call order.
#[derive(Debug)]
pub struct ScriptedProvider {
    dir: std::path::PathBuf,
}

impl ScriptedProvider {
    pub fn new(dir: impl Into<std::path::PathBuf>) -> Self {
        ScriptedProvider { dir: dir.into() }
    }
}

impl BackendProvider for ScriptedProvider {
    fn for_record(&self, record: &QARecord) -> Result<RecordBackends, LlmError> {
        let path = self.dir.join(format!("{}.json", record.question_id));
        let backend = Arc::new(crate::llm::ScriptedBackend::from_file(&path)?);
        Ok(RecordBackends::single(backend))
    }
}

/// A benchmark invocation.
pub struct BenchmarkRun<'a> {
    pub dataset: &'a [QARecord],
    /// Assets keyed by domain; every dataset domain must be present.
    pub assets: &'a BTreeMap<String, DomainAssets>,
    pub provider: &'a dyn BackendProvider,
    pub t_max: usize,
    pub n_max: usize,
    pub params: GenerationParams,
    /// Worker threads; clamped to at least 1.
    pub workers: usize,
    /// Record `wall_time_s` as 0.0 so scripted runs are byte-reproducible.
    pub deterministic_timing: bool,
    /// Skip records whose question_id already has a persisted row.
    pub resume: bool,
    pub results_path: &'a Path,
    /// Where to stream per-step episode logs, if anywhere.
    pub log_path: Option<&'a Path>,
}

struct RecordOutcome {
    result: ScoredResult,
    log: Vec<StepRecord>,
    failure: Option<String>,
}

/// Runs the benchmark: one episode per record (minus resumed ones), scores
/// it, persists rows in dataset order with per-record flush, and
/// aggregates the complete results file into a report. Per-record episode
/// failures are recorded in the report, never abort the run.
pub fn run_benchmark(run: &BenchmarkRun) -> Result<(Vec<ScoredResult>, Report), BenchError> {
    for record in run.dataset {
        if !run.assets.contains_key(&record.domain) {
            return Err(BenchError::UnknownDomain {
                question_id: record.question_id.clone(),
                domain: record.domain.clone(),
            });
        }
    }

    let existing = if run.resume {
        read_results(run.results_path)?
    } else {
        Vec::new()
    };
    let done: HashSet<&str> = existing.iter().map(|r| r.question_id.as_str()).collect();
    let todo: Vec<&QARecord> = run
        .dataset
        .iter()
        .filter(|r| !done.contains(r.question_id.as_str()))
        .collect();

    let open = |path: &Path, append: bool| -> Result<std::fs::File, BenchError> {
        std::fs::OpenOptions::new()
            .create(true)
            .append(append)
            .write(true)
            .truncate(!append)
            .open(path)
            .map_err(|source| BenchError::Io {
                path: path.display().to_string(),
                source,
            })
    };
    let mut results_file = BufWriter::new(open(run.results_path, run.resume)?);
    let mut log_file = match run.log_path {
        Some(path) => Some(BufWriter::new(open(path, run.resume)?)),
        None => None,
    };

    let workers = run.workers.max(1).min(todo.len().max(1));
    let next = AtomicUsize::new(0);
    let mut failures: Vec<FailureNote> = Vec::new();

    std::thread::scope(|scope| -> Result<(), BenchError> {
        let (tx, rx) = mpsc::channel::<(usize, RecordOutcome)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let todo = &todo;
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= todo.len() {
                    break;
                }
                let outcome = run_one(run, todo[i]);
                if tx.send((i, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Reorder buffer: rows land in the file in dataset order no matter
        // which worker finishes first.
        let mut pending: BTreeMap<usize, RecordOutcome> = BTreeMap::new();
        let mut next_write = 0usize;
        for (i, outcome) in rx {
            pending.insert(i, outcome);
            while let Some(outcome) = pending.remove(&next_write) {
                write_outcome(&mut results_file, &mut log_file, &outcome, run.results_path)?;
                if let Some(message) = outcome.failure {
                    failures.push(FailureNote {
                        question_id: outcome.result.record.question_id.clone(),
                        message,
                    });
                }
                next_write += 1;
            }
        }
        Ok(())
    })?;

    // The report always reflects the persisted file (including resumed rows).
    let rows = read_results(run.results_path)?;
    let scored = results_to_scored(run.dataset, &rows)?;
    let mut report = aggregate(&scored);
    failures.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    report.failures = failures;
    Ok((scored, report))
}

fn write_outcome(
    results_file: &mut BufWriter<std::fs::File>,
    log_file: &mut Option<BufWriter<std::fs::File>>,
    outcome: &RecordOutcome,
    results_path: &Path,
) -> Result<(), BenchError> {
    let io_err = |source: std::io::Error| BenchError::Io {
        path: results_path.display().to_string(),
        source,
    };
    let row = ResultRow::from_scored(&outcome.result);
    let line = serde_json::to_string(&row).expect("row serialization cannot fail");
    writeln!(results_file, "{line}").map_err(io_err)?;
    results_file.flush().map_err(io_err)?;
    if let Some(file) = log_file {
        let mut sink = crate::agent::JsonlSink::new(&mut *file);
        for record in &outcome.log {
            sink.record(record);
        }
        file.flush().map_err(io_err)?;
    }
    Ok(())
}

fn run_one(run: &BenchmarkRun, record: &QARecord) -> RecordOutcome {
    let start = Instant::now();
    let assets = &run.assets[&record.domain];
    let mut sink = MemorySink::default();

    let failed = |message: String, sink: MemorySink, start: Instant| RecordOutcome {
        result: ScoredResult {
            record: record.clone(),
            predicted: None,
            rouge_l: 0.0,
            judge_verdict: None,
            wall_time_s: if run.deterministic_timing {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
            attempts_used: 0,
        },
        log: sink.records,
        failure: Some(message),
    };

    let backends = match run.provider.for_record(record) {
        Ok(backends) => backends,
        Err(e) => return failed(e.to_string(), sink, start),
    };
    let runner = EpisodeRunner::new(
        ActionEvaluator::new(&assets.graph, &assets.index),
        &assets.catalog,
        backends.agent,
        EpisodeOptions {
            t_max: run.t_max,
            n_max: run.n_max,
            params: run.params.clone(),
            question_id: record.question_id.clone(),
        },
    );
    let state = match runner.run(&record.question, &mut sink) {
        Ok(state) => state,
        Err(e) => return failed(e.to_string(), sink, start),
    };

    let predicted = state.final_answer.clone();
    let rouge = predicted
        .as_deref()
        .map(|p| rouge_l(p, &record.gold_answer))
        .unwrap_or(0.0);
    let mut failure = None;
    let verdict = match predicted.as_deref() {
        Some(text) => {
            match llm_judge_score(
                backends.consistency_judge.as_ref(),
                record,
                text,
                &run.params,
            ) {
                Ok(v) => Some(v),
                Err(e) => {
                    failure = Some(format!("consistency judge failed: {e}"));
                    None
                }
            }
        }
        None => None,
    };

    RecordOutcome {
        result: ScoredResult {
            record: record.clone(),
            predicted,
            rouge_l: rouge,
            judge_verdict: verdict,
            wall_time_s: if run.deterministic_timing {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
            attempts_used: state.attempts_used(),
        },
        log: sink.records,
        failure,
    }
}
