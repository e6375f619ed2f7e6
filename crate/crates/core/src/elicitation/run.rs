//! Concurrent, resumable corpus generation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::client::{BackendError, ChatBackend, CompletionRequest};
use super::{build_prompt, parse_completion, ElicitationConfig, ElicitationError, ParsedCompletion};
use crate::data_io::{normalize_token, AssociationCorpus, ResponseRecord, Source};

/// Optional side files of a run.
#[derive(Debug, Clone, Default)]
pub struct RunFiles {
    /// JSONL file of finished trials; an existing file is resumed.
    pub checkpoint: Option<PathBuf>,
    /// JSONL log of every raw completion and failed attempt.
    pub audit: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueError {
    pub cue: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CueStats {
    pub trials: usize,
    pub malformed: usize,
    /// More than half the completions were malformed.
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct ElicitationOutcome {
    /// Sorted by cue input order, then trial id.
    pub corpus: AssociationCorpus,
    pub cue_errors: Vec<CueError>,
    pub cue_stats: BTreeMap<String, CueStats>,
    /// Trials restored from the checkpoint instead of requested.
    pub resumed_trials: usize,
}

impl ElicitationOutcome {
    pub fn malformed_rate(&self) -> f64 {
        let (t, m) = self.cue_stats.values().fold((0, 0), |(t, m), s| (t + s.trials, m + s.malformed));
        if t == 0 { 0.0 } else { m as f64 / t as f64 }
    }

    pub fn flagged_cues(&self) -> Vec<&str> {
        self.cue_stats.iter().filter(|(_, s)| s.flagged).map(|(c, _)| c.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Fingerprint {
    model: String,
    temperature: f64,
    repeats_per_cue: usize,
    max_responses: usize,
}

impl Fingerprint {
    fn of(config: &ElicitationConfig) -> Self {
        Self {
            model: config.model.clone(),
            temperature: config.temperature,
            repeats_per_cue: config.repeats_per_cue,
            max_responses: config.max_responses,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrialLine {
    cue: String,
    trial_id: u64,
    responses: Vec<String>,
    malformed: bool,
}

#[derive(Serialize)]
struct AuditLine<'a> {
    cue: &'a str,
    trial_id: u64,
    attempt: u32,
    temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    completion: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Loads a checkpoint, dropping a torn final line, and rewrites it clean so
/// new trials can be appended.
fn load_checkpoint(path: &Path, fingerprint: &Fingerprint) -> Result<Vec<TrialLine>, ElicitationError> {
    let corrupt = |m: String| ElicitationError::CheckpointCorrupt { path: path.display().to_string(), message: m };
    let file = File::open(path).map_err(|e| ElicitationError::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| ElicitationError::io(path, e))?;
    let Some(header) = lines.first() else { return Ok(Vec::new()) };
    let stored: Fingerprint = serde_json::from_str(header).map_err(|e| corrupt(format!("bad header: {e}")))?;
    if &stored != fingerprint {
        return Err(ElicitationError::CheckpointMismatch { path: path.display().to_string() });
    }
    let mut trials = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        match serde_json::from_str::<TrialLine>(line) {
            Ok(t) => trials.push(t),
            Err(_) if i + 1 == lines.len() => log::warn!("dropping torn last line of checkpoint {}", path.display()),
            Err(e) => return Err(corrupt(format!("line {}: {e}", i + 1))),
        }
    }
    write_checkpoint(path, fingerprint, &trials)?;
    Ok(trials)
}

fn write_checkpoint(path: &Path, fingerprint: &Fingerprint, trials: &[TrialLine]) -> Result<(), ElicitationError> {
    let tmp = path.with_extension("tmp");
    {
        let file = File::create(&tmp).map_err(|e| ElicitationError::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |v: String| writeln!(w, "{v}").map_err(|e| ElicitationError::io(&tmp, e));
        put(serde_json::to_string(fingerprint).expect("serializable"))?;
        for t in trials {
            put(serde_json::to_string(t).expect("serializable"))?;
        }
        w.flush().map_err(|e| ElicitationError::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| ElicitationError::io(path, e))
}

fn append_file(path: &Path) -> Result<File, ElicitationError> {
    OpenOptions::new().create(true).append(true).open(path).map_err(|e| ElicitationError::io(path, e))
}

/// Requests `repeats_per_cue` completions for every cue.
///
/// Up to `max_concurrent` requests are in flight. A request that still
/// fails after `max_retries` retries records an error for its cue and the
/// cue's remaining trials are skipped; the run continues with other cues.
/// Finished trials are appended to the checkpoint as they arrive, and a
/// rerun with the same checkpoint only requests the missing trials.
pub fn elicit_corpus<S: AsRef<str>, B: ChatBackend + ?Sized>(
    cues: &[S],
    config: &ElicitationConfig,
    backend: &B,
    files: &RunFiles,
) -> Result<ElicitationOutcome, ElicitationError> {
    config.validate()?;
    let mut cue_list: Vec<String> = Vec::new();
    let mut seen = HashSet::new();
    for c in cues {
        let c = normalize_token(c.as_ref());
        if c.is_empty() {
            return Err(ElicitationError::EmptyCue);
        }
        if seen.insert(c.clone()) {
            cue_list.push(c);
        }
    }
    let cue_index: HashMap<&str, usize> = cue_list.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let repeats = config.repeats_per_cue as u64;
    let fingerprint = Fingerprint::of(config);

    let mut done: BTreeMap<(usize, u64), ParsedCompletion> = BTreeMap::new();
    let mut resumed_trials = 0;
    let checkpoint = match &files.checkpoint {
        Some(path) => {
            if path.exists() {
                for t in load_checkpoint(path, &fingerprint)? {
                    if let Some(&ci) = cue_index.get(t.cue.as_str()) {
                        if t.trial_id < repeats && !done.contains_key(&(ci, t.trial_id)) {
                            done.insert((ci, t.trial_id), ParsedCompletion { tokens: t.responses, malformed: t.malformed });
                            resumed_trials += 1;
                        }
                    }
                }
            } else {
                write_checkpoint(path, &fingerprint, &[])?;
            }
            Some(Mutex::new((path.clone(), append_file(path)?)))
        }
        None => None,
    };
    let audit = match &files.audit {
        Some(path) => Some(Mutex::new((path.clone(), append_file(path)?))),
        None => None,
    };

    let tasks: Vec<(usize, u64)> = (0..cue_list.len())
        .flat_map(|ci| (0..repeats).map(move |t| (ci, t)))
        .filter(|k| !done.contains_key(k))
        .collect();
    log::info!("eliciting {} trials ({} restored from checkpoint)", tasks.len(), resumed_trials);

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<((usize, u64), ParsedCompletion)>> = Mutex::new(Vec::new());
    let failures: Mutex<BTreeMap<usize, String>> = Mutex::new(BTreeMap::new());
    let io_error: Mutex<Option<ElicitationError>> = Mutex::new(None);

    let write_line = |sink: &Mutex<(PathBuf, File)>, line: String| {
        let mut guard = sink.lock().expect("sink lock");
        let (path, file) = &mut *guard;
        if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
            io_error.lock().expect("error lock").get_or_insert(ElicitationError::io(path, e));
        }
    };

    let workers = config.max_concurrent.min(tasks.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(ci, trial_id)) = tasks.get(i) else { break };
                if failures.lock().expect("failure lock").contains_key(&ci) {
                    continue;
                }
                let cue = &cue_list[ci];
                let request = CompletionRequest {
                    model: config.model.clone(),
                    messages: build_prompt(cue).expect("cue checked non-empty"),
                    temperature: config.temperature,
                    cue: cue.clone(),
                    trial_id,
                };
                let mut attempt = 0;
                let outcome = loop {
                    let r = backend.complete(&request);
                    if let Some(sink) = &audit {
                        let line = AuditLine {
                            cue,
                            trial_id,
                            attempt,
                            temperature: config.temperature,
                            completion: r.as_ref().ok().map(String::as_str),
                            error: r.as_ref().err().map(ToString::to_string),
                        };
                        write_line(sink, serde_json::to_string(&line).expect("serializable"));
                    }
                    match r {
                        Err(BackendError::Retryable(_)) if attempt < config.max_retries => {
                            std::thread::sleep(config.retry_backoff * 2u32.saturating_pow(attempt));
                            attempt += 1;
                        }
                        other => break other,
                    }
                };
                match outcome {
                    Ok(text) => {
                        let parsed = parse_completion(&text, config.max_responses);
                        if let Some(sink) = &checkpoint {
                            let line = TrialLine {
                                cue: cue.clone(),
                                trial_id,
                                responses: parsed.tokens.clone(),
                                malformed: parsed.malformed,
                            };
                            write_line(sink, serde_json::to_string(&line).expect("serializable"));
                        }
                        results.lock().expect("results lock").push(((ci, trial_id), parsed));
                    }
                    Err(e) => {
                        log::warn!("cue '{cue}' failed on trial {trial_id}: {e}");
                        failures.lock().expect("failure lock").entry(ci).or_insert_with(|| e.to_string());
                    }
                }
            });
        }
    });

    if let Some(e) = io_error.into_inner().expect("error lock") {
        return Err(e);
    }
    done.extend(results.into_inner().expect("results lock"));

    let mut cue_stats: BTreeMap<String, CueStats> = BTreeMap::new();
    let mut records = Vec::with_capacity(done.len());
    for ((ci, trial_id), parsed) in done {
        let cue = &cue_list[ci];
        let stats = cue_stats.entry(cue.clone()).or_default();
        stats.trials += 1;
        stats.malformed += usize::from(parsed.malformed);
        records.push(ResponseRecord { cue: cue.clone(), responses: parsed.tokens, source: Source::Llm, trial_id });
    }
    for s in cue_stats.values_mut() {
        s.flagged = 2 * s.malformed > s.trials;
    }
    let cue_errors = failures
        .into_inner()
        .expect("failure lock")
        .into_iter()
        .map(|(ci, message)| CueError { cue: cue_list[ci].clone(), message })
        .collect();
    Ok(ElicitationOutcome { corpus: AssociationCorpus::new(records), cue_errors, cue_stats, resumed_trials })
}
