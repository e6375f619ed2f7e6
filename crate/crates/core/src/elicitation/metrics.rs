//! Variability and split-half reliability of an association corpus, and the
//! temperature sweep built on them.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::client::ChatBackend;
use super::run::{elicit_corpus, RunFiles};
use super::{ElicitationConfig, ElicitationError};
use crate::data_io::{normalize_token, AssociationCorpus, ResponseRecord};
use crate::evaluation::{spearman, MIN_SHARED_RESPONSES};

pub const DEFAULT_SPLITS: usize = 10;

/// Number of distinct response types over all records of `cues`.
pub fn variability<S: AsRef<str>>(corpus: &AssociationCorpus, cues: &[S]) -> usize {
    let wanted: HashSet<String> = cues.iter().map(|c| normalize_token(c.as_ref())).collect();
    corpus
        .records
        .iter()
        .filter(|r| wanted.contains(&r.cue))
        .flat_map(|r| r.responses.iter().map(String::as_str))
        .collect::<HashSet<&str>>()
        .len()
}

/// `f_r / N` per response type, counting a response once per record.
pub fn response_strengths(records: &[&ResponseRecord]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for rec in records {
        let unique: BTreeSet<&String> = rec.responses.iter().collect();
        for r in unique {
            *counts.entry(r.clone()).or_insert(0.0) += 1.0;
        }
    }
    let total: f64 = counts.values().sum();
    for v in counts.values_mut() {
        *v /= total;
    }
    counts
}

/// `2r / (1 + r)`; undefined at `r = -1`.
pub fn spearman_brown(r_half: f64) -> Option<f64> {
    let denom = 1.0 + r_half;
    (denom != 0.0).then(|| 2.0 * r_half / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitHalf {
    Defined { r_half: f64, r_total: f64 },
    /// Fewer than two trials for the cue.
    TooFewTrials(usize),
    /// Shared response set below the minimum; carries its size.
    LowSupport(usize),
    /// Constant strengths in one half, or `r_half = -1`.
    Undefined,
}

impl SplitHalf {
    pub fn r_total(&self) -> Option<f64> {
        match self {
            SplitHalf::Defined { r_total, .. } => Some(*r_total),
            _ => None,
        }
    }
}

/// Reliability of an explicit partition of a cue's trials.
pub fn split_half_from_halves(first: &[&ResponseRecord], second: &[&ResponseRecord]) -> SplitHalf {
    let a = response_strengths(first);
    let b = response_strengths(second);
    let (xs, ys): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(r, &x)| b.get(r).map(|&y| (x, y))).unzip();
    if xs.len() < MIN_SHARED_RESPONSES {
        return SplitHalf::LowSupport(xs.len());
    }
    let Ok(c) = spearman(&xs, &ys) else { return SplitHalf::Undefined };
    match spearman_brown(c.rho) {
        Some(r_total) => SplitHalf::Defined { r_half: c.rho, r_total },
        None => SplitHalf::Undefined,
    }
}

fn random_split(trials: &mut [&ResponseRecord], rng: &mut ChaCha8Rng) -> SplitHalf {
    if trials.len() < 2 {
        return SplitHalf::TooFewTrials(trials.len());
    }
    trials.shuffle(rng);
    let (first, second) = trials.split_at(trials.len() / 2);
    split_half_from_halves(first, second)
}

fn cue_trials<'a>(corpus: &'a AssociationCorpus, cue: &'a str) -> Vec<&'a ResponseRecord> {
    let mut trials: Vec<&ResponseRecord> = corpus.records_for(cue).collect();
    trials.sort_by_key(|r| r.trial_id);
    trials
}

/// One random split of `cue`'s trials into halves.
pub fn split_half_reliability(corpus: &AssociationCorpus, cue: &str, seed: u64) -> SplitHalf {
    let cue = normalize_token(cue);
    let mut trials = cue_trials(corpus, &cue);
    random_split(&mut trials, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilitySummary {
    /// Mean over cues of each cue's mean reliability over its defined splits.
    pub mean: Option<f64>,
    pub cues_used: usize,
    pub cues_skipped: usize,
}

/// Averages split-half reliability over `splits` random splits per cue,
/// then over cues. Cue `i` draws its splits from stream `i` of the seeded
/// generator, so results do not depend on thread scheduling.
pub fn mean_split_half_reliability<S: AsRef<str> + Sync>(
    corpus: &AssociationCorpus,
    cues: &[S],
    splits: usize,
    seed: u64,
) -> ReliabilitySummary {
    let mut by_cue: HashMap<&str, Vec<&ResponseRecord>> = HashMap::new();
    for r in &corpus.records {
        by_cue.entry(r.cue.as_str()).or_default().push(r);
    }
    let per_cue: Vec<Option<f64>> = cues
        .par_iter()
        .enumerate()
        .map(|(ci, cue)| {
            let mut trials = by_cue.get(normalize_token(cue.as_ref()).as_str()).cloned().unwrap_or_default();
            trials.sort_by_key(|r| r.trial_id);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let values: Vec<f64> = (0..splits).filter_map(|_| random_split(&mut trials, &mut rng).r_total()).collect();
            (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
        })
        .collect();
    let used: Vec<f64> = per_cue.iter().flatten().copied().collect();
    ReliabilitySummary {
        mean: (!used.is_empty()).then(|| used.iter().sum::<f64>() / used.len() as f64),
        cues_used: used.len(),
        cues_skipped: per_cue.len() - used.len(),
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub splits: usize,
    pub seed: u64,
    /// Directory for per-temperature checkpoints and audit logs.
    pub work_dir: Option<PathBuf>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { splits: DEFAULT_SPLITS, seed: 0, work_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub temperature: f64,
    pub variability: Option<usize>,
    pub reliability: Option<f64>,
    pub variability_gap: Option<f64>,
    pub reliability_gap: Option<f64>,
    /// Gaps divided by the human values, summed; lower is better.
    pub objective: Option<f64>,
    pub cue_errors: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub human_variability: usize,
    pub human_reliability: f64,
    pub points: Vec<SweepPoint>,
    pub chosen_temperature: f64,
}

/// Elicits a corpus at each temperature and picks the one whose
/// variability and reliability sit closest to the human reference.
/// Ties go to the lowest temperature.
pub fn sweep_temperature<S: AsRef<str> + Sync, B: ChatBackend + ?Sized>(
    cues: &[S],
    temperatures: &[f64],
    human_ref: &AssociationCorpus,
    config: &ElicitationConfig,
    backend: &B,
    options: &SweepOptions,
) -> Result<SweepResult, ElicitationError> {
    if temperatures.is_empty() {
        return Err(ElicitationError::InvalidConfig("no temperatures to sweep".into()));
    }
    let human_variability = variability(human_ref, cues);
    if human_variability == 0 {
        return Err(ElicitationError::HumanReference("variability"));
    }
    let human_reliability = mean_split_half_reliability(human_ref, cues, options.splits, options.seed)
        .mean
        .ok_or(ElicitationError::HumanReference("reliability"))?;

    let mut temps = temperatures.to_vec();
    temps.sort_by(f64::total_cmp);
    temps.dedup();

    let mut points = Vec::with_capacity(temps.len());
    let mut best: Option<(f64, f64)> = None;
    for &t in &temps {
        let cfg = ElicitationConfig { temperature: t, ..config.clone() };
        let files = match &options.work_dir {
            Some(dir) => RunFiles {
                checkpoint: Some(dir.join(format!("checkpoint_t{t}.jsonl"))),
                audit: Some(dir.join(format!("audit_t{t}.jsonl"))),
            },
            None => RunFiles::default(),
        };
        let mut point = SweepPoint {
            temperature: t,
            variability: None,
            reliability: None,
            variability_gap: None,
            reliability_gap: None,
            objective: None,
            cue_errors: 0,
            error: None,
        };
        match elicit_corpus(cues, &cfg, backend, &files) {
            Err(e @ ElicitationError::Io { .. }) => return Err(e),
            Err(e) => point.error = Some(e.to_string()),
            Ok(out) if out.corpus.is_empty() => {
                point.cue_errors = out.cue_errors.len();
                point.error = Some("no completions".into());
            }
            Ok(out) => {
                point.cue_errors = out.cue_errors.len();
                let v = variability(&out.corpus, cues);
                let r = mean_split_half_reliability(&out.corpus, cues, options.splits, options.seed).mean;
                point.variability = Some(v);
                point.reliability = r;
                let vgap = (v as f64 - human_variability as f64).abs();
                point.variability_gap = Some(vgap);
                match r {
                    Some(r) => {
                        let rgap = (r - human_reliability).abs();
                        point.reliability_gap = Some(rgap);
                        let rnorm = if human_reliability == 0.0 { 1.0 } else { human_reliability.abs() };
                        point.objective = Some(vgap / human_variability as f64 + rgap / rnorm);
                    }
                    None => point.error = Some("reliability undefined for every cue".into()),
                }
            }
        }
        if let Some(obj) = point.objective {
            if best.is_none_or(|(_, b)| obj < b - 1e-12) {
                best = Some((t, obj));
            }
        }
        points.push(point);
    }
    let (chosen_temperature, _) = best.ok_or(ElicitationError::AllTemperaturesFailed)?;
    Ok(SweepResult { human_variability, human_reliability, points, chosen_temperature })
}
