//! Moral value propagation over a global association graph.
//!
//! Seeds from a hard moral lexicon are spread with the normalized random
//! walk `F(t+1) = a S F(t) + (1 - a) F0`, `S = D^-1/2 W D^-1/2`. The
//! propagated matrix is reported as `F* = (I - a S)^-1 F0`: the closed-form
//! mode solves that system directly with conjugate gradient, and the
//! iterative mode runs the recurrence to its fixed point
//! `(1 - a)(I - a S)^-1 F0` and divides out the `(1 - a)` factor so both
//! modes return the same matrix.

use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_io::{csv_reader, format_float, normalize_token, DataError, LexiconKind, MoralLexicon};
use crate::dimension::{Dimension, DIMENSION_COUNT};
use crate::evaluation::spearman;
use crate::graph::{AssociationGraph, Vocabulary};
use crate::sparse::{conjugate_gradient, CsrMatrix, SolveError};

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum PropagationError {
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("seed matrix has {got} rows but the graph has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected a {expected:?} lexicon")]
    WrongLexiconKind { expected: LexiconKind },
    #[error("no lexicon word occurs in the graph vocabulary")]
    NoSeeds,
    #[error("no tuning word occurs in the graph vocabulary")]
    NoTuningWords,
    #[error("no usable correlation for any alpha candidate")]
    NoUsableCorrelation,
    #[error("alpha candidate list is empty")]
    NoCandidates,
    #[error("propagation did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("solver breakdown: system is not positive definite")]
    SolverBreakdown,
}

impl From<SolveError> for PropagationError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::NotConverged { iterations, residual } => PropagationError::NotConverged { iterations, residual },
            SolveError::Breakdown => PropagationError::SolverBreakdown,
        }
    }
}

/// Dense `n x 5` score matrix aligned with a graph's node order.
#[derive(Debug, Clone, PartialEq)]
pub struct MoralMatrix {
    rows: Vec<[f64; DIMENSION_COUNT]>,
}

impl MoralMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { rows: vec![[0.0; DIMENSION_COUNT]; n] }
    }

    pub fn from_rows(rows: Vec<[f64; DIMENSION_COUNT]>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64; DIMENSION_COUNT] {
        &self.rows[i]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64; DIMENSION_COUNT] {
        &mut self.rows[i]
    }

    pub fn rows(&self) -> &[[f64; DIMENSION_COUNT]] {
        &self.rows
    }

    pub fn column(&self, d: Dimension) -> Vec<f64> {
        self.rows.iter().map(|r| r[d.index()]).collect()
    }

    pub fn get(&self, i: usize, d: Dimension) -> f64 {
        self.rows[i][d.index()]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { rows: self.rows.iter().map(|r| r.map(|v| v * c)).collect() }
    }

    pub fn max_abs_diff(&self, other: &MoralMatrix) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    fn from_columns(n: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(n);
        for (d, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m.rows[i][d] = *v;
            }
        }
        m
    }
}

impl std::ops::Add for &MoralMatrix {
    type Output = MoralMatrix;

    fn add(self, rhs: &MoralMatrix) -> MoralMatrix {
        MoralMatrix {
            rows: self
                .rows
                .iter()
                .zip(&rhs.rows)
                .map(|(a, b)| std::array::from_fn(|d| a[d] + b[d]))
                .collect(),
        }
    }
}

/// Initial matrix `F0` plus which rows were seeded.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMatrix {
    pub f0: MoralMatrix,
    pub seeded: Vec<bool>,
    /// Lexicon words absent from the graph vocabulary.
    pub unmatched: Vec<String>,
}

impl SeedMatrix {
    pub fn seed_count(&self) -> usize {
        self.seeded.iter().filter(|&&s| s).count()
    }
}

/// Places each in-vocabulary lexicon vector on its node's row of `F0`.
/// Words scored on several dimensions seed all of them.
pub fn seed_matrix(graph: &AssociationGraph, lexicon: &MoralLexicon) -> Result<SeedMatrix, PropagationError> {
    if lexicon.kind != LexiconKind::Hard {
        return Err(PropagationError::WrongLexiconKind { expected: LexiconKind::Hard });
    }
    let n = graph.node_count();
    let mut f0 = MoralMatrix::zeros(n);
    let mut seeded = vec![false; n];
    let mut unmatched = Vec::new();
    for (word, scores) in &lexicon.entries {
        match graph.vocab().index_of(word) {
            Some(i) => {
                *f0.row_mut(i) = scores.map(|s| s.unwrap_or(0.0));
                seeded[i] = true;
            }
            None => unmatched.push(word.clone()),
        }
    }
    if !seeded.iter().any(|&s| s) {
        return Err(PropagationError::NoSeeds);
    }
    Ok(SeedMatrix { f0, seeded, unmatched })
}

/// `S = D^-1/2 W D^-1/2` with `D` the row sums of `W`. Isolated nodes get
/// all-zero rows and columns.
pub fn normalized_operator(graph: &AssociationGraph) -> CsrMatrix {
    let w = graph.weights();
    let d = w.row_sums();
    // an entry implies both endpoints have positive degree
    CsrMatrix::from_triplets(
        w.dim(),
        w.triplets().map(|(i, j, v)| (i, j, v / (d[i] * d[j]).sqrt())).collect::<Vec<_>>(),
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    Iterative,
    #[default]
    ClosedForm,
}

impl FromStr for PropagationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "iterative" => Ok(PropagationMode::Iterative),
            "closed_form" => Ok(PropagationMode::ClosedForm),
            other => Err(format!("unknown propagation mode '{other}' (expected iterative or closed-form)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub alpha: f64,
    pub mode: PropagationMode,
    pub max_iterations: usize,
    /// Max-norm change (iterative) or residual 2-norm (closed form).
    pub tolerance: f64,
}

impl PropagationConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            mode: PropagationMode::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn with_mode(mut self, mode: PropagationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PropagationError::InvalidAlpha(self.alpha));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub scores: MoralMatrix,
    /// Largest iteration count over the five columns.
    pub iterations: usize,
    /// Largest final residual over the five columns.
    pub residual: f64,
}

pub fn propagate(
    graph: &AssociationGraph,
    f0: &MoralMatrix,
    config: &PropagationConfig,
) -> Result<Propagated, PropagationError> {
    config.validate()?;
    let n = graph.node_count();
    if f0.len() != n {
        return Err(PropagationError::DimensionMismatch { expected: n, got: f0.len() });
    }
    let s = normalized_operator(graph);

    let solved: Vec<(Vec<f64>, usize, f64)> = Dimension::ALL
        .par_iter()
        .map(|&d| {
            let b = f0.column(d);
            match config.mode {
                PropagationMode::Iterative => iterate_column(&s, &b, config),
                PropagationMode::ClosedForm => solve_column(&s, &b, config),
            }
        })
        .collect::<Result<_, _>>()?;

    let iterations = solved.iter().map(|c| c.1).max().unwrap_or(0);
    let residual = solved.iter().map(|c| c.2).fold(0.0, f64::max);
    let columns: Vec<Vec<f64>> = solved.into_iter().map(|c| c.0).collect();
    Ok(Propagated { scores: MoralMatrix::from_columns(n, &columns), iterations, residual })
}

fn iterate_column(s: &CsrMatrix, f0: &[f64], config: &PropagationConfig) -> Result<(Vec<f64>, usize, f64), PropagationError> {
    let a = config.alpha;
    let scale = 1.0 / (1.0 - a);
    let mut f = f0.to_vec();
    let mut sf = vec![0.0; f.len()];
    let mut change = 0.0;
    for it in 1..=config.max_iterations {
        s.mul_vec_into(&f, &mut sf);
        change = 0.0f64;
        for i in 0..f.len() {
            let next = a * sf[i] + (1.0 - a) * f0[i];
            change = change.max((next - f[i]).abs());
            f[i] = next;
        }
        // convergence is judged on the rescaled iterate
        change *= scale;
        if change < config.tolerance {
            return Ok((f.into_iter().map(|v| v * scale).collect(), it, change));
        }
    }
    Err(PropagationError::NotConverged { iterations: config.max_iterations, residual: change })
}

fn solve_column(s: &CsrMatrix, b: &[f64], config: &PropagationConfig) -> Result<(Vec<f64>, usize, f64), PropagationError> {
    let a = config.alpha;
    let mut x = b.to_vec();
    let apply = |v: &[f64], out: &mut [f64]| {
        s.mul_vec_into(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - a * *o;
        }
    };
    let outcome = conjugate_gradient(apply, b, &mut x, config.tolerance, config.max_iterations)?;
    Ok((x, outcome.iterations, outcome.residual))
}

/// What to do with seeded rows before comparing against gold values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedHandling {
    /// Seeded rows become `F* - F0`.
    #[default]
    Subtract,
    /// Seeded rows keep `F*` but are masked out of evaluation.
    Exclude,
}

impl FromStr for SeedHandling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "subtract" => Ok(SeedHandling::Subtract),
            "exclude" => Ok(SeedHandling::Exclude),
            other => Err(format!("unknown seed handling '{other}' (expected subtract or exclude)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedAdjusted {
    pub scores: MoralMatrix,
    /// `true` where the row takes part in evaluation.
    pub eval_mask: Vec<bool>,
    /// Number of rows removed by the mask.
    pub masked: usize,
}

pub fn subtract_seeds(f_star: &MoralMatrix, seeds: &SeedMatrix, mode: SeedHandling) -> SeedAdjusted {
    let mut scores = f_star.clone();
    let mut eval_mask = vec![true; f_star.len()];
    for (i, &seeded) in seeds.seeded.iter().enumerate() {
        if !seeded {
            continue;
        }
        match mode {
            SeedHandling::Subtract => {
                let f0 = seeds.f0.row(i);
                for (v, s) in scores.row_mut(i).iter_mut().zip(f0) {
                    *v -= s;
                }
            }
            SeedHandling::Exclude => eval_mask[i] = false,
        }
    }
    let masked = eval_mask.iter().filter(|&&m| !m).count();
    SeedAdjusted { scores, eval_mask, masked }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaScore {
    pub alpha: f64,
    /// Mean Spearman correlation over the dimensions where it is defined.
    pub mean_rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTuning {
    pub best_alpha: f64,
    pub curve: Vec<AlphaScore>,
    pub tuning_words: usize,
}

/// Default candidate grid: 0.05, 0.10, ..., 0.95.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// Picks the alpha whose propagated scores correlate best (mean Spearman
/// over the five dimensions) with a held-out soft lexicon. Ties go to the
/// smaller alpha.
pub fn tune_alpha(
    graph: &AssociationGraph,
    f0: &MoralMatrix,
    tuning: &MoralLexicon,
    candidates: &[f64],
    base: &PropagationConfig,
) -> Result<AlphaTuning, PropagationError> {
    if tuning.kind != LexiconKind::Soft {
        return Err(PropagationError::WrongLexiconKind { expected: LexiconKind::Soft });
    }
    if candidates.is_empty() {
        return Err(PropagationError::NoCandidates);
    }
    let words: Vec<(usize, &[Option<f64>; DIMENSION_COUNT])> = tuning
        .entries
        .iter()
        .filter_map(|(w, g)| graph.vocab().index_of(w).map(|i| (i, g)))
        .collect();
    if words.is_empty() {
        return Err(PropagationError::NoTuningWords);
    }

    let mut sorted: Vec<f64> = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    let mut curve = Vec::with_capacity(sorted.len());
    let mut best: Option<(f64, f64)> = None;
    for &alpha in &sorted {
        let config = PropagationConfig { alpha, ..*base };
        let out = propagate(graph, f0, &config)?;
        let rhos: Vec<f64> = Dimension::ALL
            .iter()
            .filter_map(|&d| {
                let (pred, gold): (Vec<f64>, Vec<f64>) = words
                    .iter()
                    .filter_map(|&(i, g)| g[d.index()].map(|gv| (out.scores.get(i, d), gv)))
                    .unzip();
                spearman(&pred, &gold).ok().map(|c| c.rho)
            })
            .collect();
        let mean_rho = (!rhos.is_empty()).then(|| rhos.iter().sum::<f64>() / rhos.len() as f64);
        if let Some(m) = mean_rho {
            if best.is_none_or(|(_, b)| m > b + 1e-12) {
                best = Some((alpha, m));
            }
        }
        curve.push(AlphaScore { alpha, mean_rho });
    }
    let (best_alpha, _) = best.ok_or(PropagationError::NoUsableCorrelation)?;
    Ok(AlphaTuning { best_alpha, curve, tuning_words: words.len() })
}

/// Writes `word,care,fairness,loyalty,authority,sanctity,<flag_name>`.
pub fn write_moral_matrix(
    path: &Path,
    vocab: &Vocabulary,
    scores: &MoralMatrix,
    flag_name: &str,
    flags: &[bool],
) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["word".to_string()];
    header.extend(Dimension::ALL.iter().map(|d| d.label().to_string()));
    header.push(flag_name.to_string());
    w.write_record(&header)?;
    for (i, row) in scores.rows().iter().enumerate() {
        let mut rec = vec![vocab.token(i).to_string()];
        rec.extend(row.iter().map(|&v| format_float(v)));
        rec.push(flags[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| DataError::io(path, e))?;
    Ok(())
}

/// Reads a file written by [`write_moral_matrix`], in file order.
pub fn read_moral_matrix(path: &Path) -> Result<(Vocabulary, MoralMatrix, Vec<bool>), DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut rdr = csv_reader(file);
    let headers = rdr.headers()?.clone();
    let dims_ok = headers.len() == DIMENSION_COUNT + 2
        && headers.get(0) == Some("word")
        && Dimension::ALL.iter().all(|d| headers.get(d.index() + 1) == Some(d.label()));
    if !dims_ok {
        return Err(DataError::Format {
            line: 1,
            message: "expected header word,care,fairness,loyalty,authority,sanctity,<flag>".into(),
        });
    }
    let (mut words, mut rows, mut flags) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        let fmt_err = |m: String| DataError::Format { line, message: m };
        words.push(normalize_token(rec.get(0).unwrap_or("")));
        let mut row = [0.0; DIMENSION_COUNT];
        for (d, slot) in row.iter_mut().enumerate() {
            let cell = rec.get(d + 1).unwrap_or("");
            *slot = cell.trim().parse().map_err(|_| fmt_err(format!("bad score '{cell}'")))?;
        }
        rows.push(row);
        let flag = rec.get(DIMENSION_COUNT + 1).unwrap_or("");
        flags.push(flag.trim().parse().map_err(|_| fmt_err(format!("bad flag '{flag}'")))?);
    }
    let vocab = Vocabulary::new(words.iter().cloned());
    if vocab.len() != words.len() {
        return Err(DataError::Format { line: 1, message: "duplicate words in score file".into() });
    }
    Ok((vocab, MoralMatrix::from_rows(rows), flags))
}
