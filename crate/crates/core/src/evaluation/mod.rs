//! Quantitative comparisons: GMN scores against a gold lexicon, precision@k
//! between association sources, per-cue strength correlation, and the
//! embedding-neighbor baseline.

mod correlation;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use correlation::{average_ranks, correlation_p_value, pearson, spearman, Correlation, CorrelationError};

use crate::data_io::{Column, ColumnType, EmbeddingTable, LexiconKind, MoralLexicon, Report, Value};
use crate::dimension::Dimension;
use crate::graph::{association_strength, AssociationGraph, Vocabulary};
use crate::propagation::MoralMatrix;

/// Dimensions evaluated on fewer words than this are flagged.
pub const MIN_SUPPORT: usize = 10;
/// Minimum shared responses for a per-cue strength correlation.
pub const MIN_SHARED_RESPONSES: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("gold lexicon must be soft-scored")]
    GoldNotSoft,
    #[error("score matrix has {scores} rows, vocabulary {vocab}, mask {mask}")]
    Misaligned { scores: usize, vocab: usize, mask: usize },
    #[error("cue '{0}' is not in the embedding table")]
    UnknownCue(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("runs must be at least 1")]
    ZeroRuns,
    #[error("no cue could be evaluated")]
    NoCues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    /// `None` for the pooled row.
    pub dimension: Option<Dimension>,
    pub n: usize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub low_support: bool,
}

impl EvalRow {
    pub fn label(&self) -> &'static str {
        self.dimension.map_or("all", |d| d.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Five dimension rows in canonical order, then the pooled row.
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn dimension(&self, d: Dimension) -> &EvalRow {
        &self.rows[d.index()]
    }

    pub fn overall(&self) -> &EvalRow {
        &self.rows[5]
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new(
            vec![
                Column::new("order", ColumnType::Int),
                Column::new("dimension", ColumnType::Str),
                Column::new("n", ColumnType::Int),
                Column::new("spearman_rho", ColumnType::Float),
                Column::new("p_value", ColumnType::Float),
                Column::new("low_support", ColumnType::Bool),
            ],
            1,
        );
        for (i, row) in self.rows.iter().enumerate() {
            r.push(vec![
                Value::from(i),
                Value::from(row.label()),
                Value::from(row.n),
                Value::from(row.rho),
                Value::from(row.p_value),
                Value::from(row.low_support),
            ])
            .expect("row matches columns");
        }
        r
    }
}

fn eval_row(dimension: Option<Dimension>, pred: &[f64], gold: &[f64]) -> EvalRow {
    let c = spearman(pred, gold).ok();
    EvalRow {
        dimension,
        n: pred.len(),
        rho: c.map(|c| c.rho),
        p_value: c.map(|c| c.p_value),
        low_support: pred.len() < MIN_SUPPORT,
    }
}

/// Pairs every unmasked word's propagated score with its gold score, per
/// dimension and pooled over all (word, dimension) pairs.
pub fn evaluate_gmn(
    vocab: &Vocabulary,
    scores: &MoralMatrix,
    mask: &[bool],
    gold: &MoralLexicon,
) -> Result<EvalReport, EvaluationError> {
    if gold.kind != LexiconKind::Soft {
        return Err(EvaluationError::GoldNotSoft);
    }
    if scores.len() != vocab.len() || mask.len() != vocab.len() {
        return Err(EvaluationError::Misaligned { scores: scores.len(), vocab: vocab.len(), mask: mask.len() });
    }
    // walk the gold lexicon in sorted word order so the result does not
    // depend on vocabulary order
    let mut per_dim: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); 5];
    for (word, g) in &gold.entries {
        let Some(i) = vocab.index_of(word) else { continue };
        if !mask[i] {
            continue;
        }
        for d in Dimension::ALL {
            if let Some(gv) = g[d.index()] {
                per_dim[d.index()].0.push(scores.get(i, d));
                per_dim[d.index()].1.push(gv);
            }
        }
    }
    let mut rows: Vec<EvalRow> = Dimension::ALL
        .iter()
        .map(|&d| eval_row(Some(d), &per_dim[d.index()].0, &per_dim[d.index()].1))
        .collect();
    let pooled_pred: Vec<f64> = per_dim.iter().flat_map(|p| p.0.iter().copied()).collect();
    let pooled_gold: Vec<f64> = per_dim.iter().flat_map(|p| p.1.iter().copied()).collect();
    rows.push(eval_row(None, &pooled_pred, &pooled_gold));
    Ok(EvalReport { rows })
}

/// Responses to `cue` by descending association strength, ties in
/// lexicographic order. Empty when the cue is unknown or unanswered.
pub fn ranked_responses(graph: &AssociationGraph, cue: &str) -> Vec<(String, f64)> {
    let Ok(strengths) = association_strength(graph, cue) else { return Vec::new() };
    let mut ranked: Vec<(String, f64)> = strengths.into_iter().collect();
    sort_ranking(&mut ranked);
    ranked
}

fn sort_ranking(ranked: &mut [(String, f64)]) {
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
}

/// Fraction of the first `k` ranked items found in `reference`; the
/// denominator is always `k`.
pub fn precision_at(ranking: &[String], reference: &HashSet<String>, k: usize) -> f64 {
    let hits = ranking.iter().take(k).filter(|r| reference.contains(*r)).count();
    hits as f64 / k as f64
}

/// One cue ready for precision scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCue {
    pub cue: String,
    /// Sorted by descending score, ties lexicographic.
    pub ranking: Vec<(String, f64)>,
    pub reference: HashSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    pub ks: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub runs: usize,
    pub evaluated_cues: usize,
    /// Cues absent from one of the sources or without reference responses.
    pub skipped_cues: Vec<String>,
    pub mean_strength_correlation: Option<f64>,
    pub strength_correlation_cues: usize,
    /// Cues whose shared response set was too small for a correlation.
    pub low_support_cues: usize,
}

impl PrecisionCurve {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new(
            vec![
                Column::new("k", ColumnType::Int),
                Column::new("mean_precision", ColumnType::Float),
                Column::new("std_precision", ColumnType::Float),
            ],
            1,
        );
        for ((k, m), s) in self.ks.iter().zip(&self.mean).zip(&self.std) {
            r.push(vec![Value::from(*k), Value::from(*m), Value::from(*s)]).expect("row matches columns");
        }
        r
    }
}

/// Shuffles each run of equal scores in place.
fn shuffle_ties(ranking: &mut [(String, f64)], rng: &mut ChaCha8Rng) {
    let mut i = 0;
    while i < ranking.len() {
        let mut j = i + 1;
        while j < ranking.len() && ranking[j].1 == ranking[i].1 {
            j += 1;
        }
        ranking[i..j].shuffle(rng);
        i = j;
    }
}

/// Mean and population std of precision@1..=k_max over `runs` tie orders.
/// Run 0 keeps lexicographic tie order; later runs shuffle tie groups.
pub fn precision_curve(items: &[RankedCue], k_max: usize, runs: usize, seed: u64) -> Result<(Vec<f64>, Vec<f64>), EvaluationError> {
    if k_max == 0 {
        return Err(EvaluationError::ZeroK);
    }
    if runs == 0 {
        return Err(EvaluationError::ZeroRuns);
    }
    if items.is_empty() {
        return Err(EvaluationError::NoCues);
    }
    let per_run: Vec<Vec<f64>> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
            let mut sums = vec![0.0; k_max];
            for item in items {
                let mut ranking = item.ranking.clone();
                if run > 0 {
                    shuffle_ties(&mut ranking, &mut rng);
                }
                let mut hits = 0usize;
                for (k, sum) in sums.iter_mut().enumerate() {
                    if ranking.get(k).is_some_and(|(r, _)| item.reference.contains(r)) {
                        hits += 1;
                    }
                    *sum += hits as f64 / (k + 1) as f64;
                }
            }
            sums.into_iter().map(|s| s / items.len() as f64).collect()
        })
        .collect();
    let r = runs as f64;
    let mean: Vec<f64> = (0..k_max).map(|k| per_run.iter().map(|v| v[k]).sum::<f64>() / r).collect();
    let std = (0..k_max)
        .map(|k| (per_run.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / r).sqrt())
        .collect();
    Ok((mean, std))
}

fn reference_set(reference: &AssociationGraph, cue: &str) -> HashSet<String> {
    association_strength(reference, cue).map(|m| m.into_keys().collect()).unwrap_or_default()
}

/// Precision@k of `candidate`'s strength-ranked responses against the
/// response set of `reference`, with the per-cue strength correlation.
pub fn precision_at_k<S: AsRef<str>>(
    candidate: &AssociationGraph,
    reference: &AssociationGraph,
    cues: &[S],
    k_max: usize,
    runs: usize,
    seed: u64,
) -> Result<PrecisionCurve, EvaluationError> {
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    let mut correlations = Vec::new();
    let mut low_support = 0;
    for cue in cues.iter().map(AsRef::as_ref) {
        let known = candidate.vocab().contains(cue) && reference.vocab().contains(cue);
        let reference_responses = if known { reference_set(reference, cue) } else { HashSet::new() };
        if reference_responses.is_empty() {
            skipped.push(cue.to_string());
            continue;
        }
        match strength_correlation(candidate, reference, cue) {
            StrengthCorrelation::Defined(rho) => correlations.push(rho),
            StrengthCorrelation::LowSupport(_) => low_support += 1,
            StrengthCorrelation::Undefined => {}
        }
        items.push(RankedCue { cue: cue.to_string(), ranking: ranked_responses(candidate, cue), reference: reference_responses });
    }
    let (mean, std) = precision_curve(&items, k_max, runs, seed)?;
    Ok(PrecisionCurve {
        ks: (1..=k_max).collect(),
        mean,
        std,
        runs,
        evaluated_cues: items.len(),
        skipped_cues: skipped,
        mean_strength_correlation: (!correlations.is_empty())
            .then(|| correlations.iter().sum::<f64>() / correlations.len() as f64),
        strength_correlation_cues: correlations.len(),
        low_support_cues: low_support,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrengthCorrelation {
    Defined(f64),
    /// Fewer than [`MIN_SHARED_RESPONSES`] shared responses; carries the count.
    LowSupport(usize),
    /// Enough shared responses but one side has constant strengths.
    Undefined,
}

/// Spearman correlation of the two sources' association strengths for
/// `cue`, over the responses both produced.
pub fn strength_correlation(candidate: &AssociationGraph, reference: &AssociationGraph, cue: &str) -> StrengthCorrelation {
    let a = association_strength(candidate, cue).unwrap_or_default();
    let b = association_strength(reference, cue).unwrap_or_default();
    strength_map_correlation(&a, &b)
}

pub fn strength_map_correlation(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> StrengthCorrelation {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(r, &x)| b.get(r).map(|&y| (x, y))).unzip();
    if xs.len() < MIN_SHARED_RESPONSES {
        return StrengthCorrelation::LowSupport(xs.len());
    }
    match spearman(&xs, &ys) {
        Ok(c) => StrengthCorrelation::Defined(c.rho),
        Err(_) => StrengthCorrelation::Undefined,
    }
}

/// The `k` words most cosine-similar to `cue`, excluding the cue, ties in
/// lexicographic order.
pub fn embedding_neighbors(table: &EmbeddingTable, cue: &str, k: usize) -> Result<Vec<(String, f64)>, EvaluationError> {
    let target = table.get(cue).ok_or_else(|| EvaluationError::UnknownCue(cue.to_string()))?;
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .filter(|&i| table.words()[i] != cue)
        .map(|i| {
            let sim: f64 = table.row(i).iter().zip(target).map(|(&a, &b)| a as f64 * b as f64).sum();
            (i, sim)
        })
        .collect();
    let words = table.words();
    let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then_with(|| words[a.0].cmp(&words[b.0]));
    if k < scored.len() {
        scored.select_nth_unstable_by(k, cmp);
        scored.truncate(k);
    }
    scored.sort_by(cmp);
    Ok(scored.into_iter().map(|(i, s)| (words[i].clone(), s)).collect())
}

/// Precision@k of embedding nearest neighbors against `reference`'s
/// response sets. Cues missing from the table are skipped.
pub fn embedding_precision_at_k<S: AsRef<str> + Sync>(
    table: &EmbeddingTable,
    reference: &AssociationGraph,
    cues: &[S],
    k_max: usize,
    runs: usize,
    seed: u64,
) -> Result<PrecisionCurve, EvaluationError> {
    let prepared: Vec<Result<RankedCue, String>> = cues
        .par_iter()
        .map(|cue| {
            let cue = cue.as_ref();
            let reference_responses =
                if reference.vocab().contains(cue) { reference_set(reference, cue) } else { HashSet::new() };
            match embedding_neighbors(table, cue, k_max) {
                Ok(ranking) if !reference_responses.is_empty() => {
                    Ok(RankedCue { cue: cue.to_string(), ranking, reference: reference_responses })
                }
                _ => Err(cue.to_string()),
            }
        })
        .collect();
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for p in prepared {
        match p {
            Ok(item) => items.push(item),
            Err(cue) => skipped.push(cue),
        }
    }
    let (mean, std) = precision_curve(&items, k_max, runs, seed)?;
    Ok(PrecisionCurve {
        ks: (1..=k_max).collect(),
        mean,
        std,
        runs,
        evaluated_cues: items.len(),
        skipped_cues: skipped,
        mean_strength_correlation: None,
        strength_correlation_cues: 0,
        low_support_cues: 0,
    })
}
