//! Weighted word-association graphs.
//!
//! Nodes are the cue vocabulary only; a response becomes an edge when it is
//! itself a cue. The directed cue-to-response counts are kept next to the
//! symmetric weight matrix because association strengths are directional.

mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data_io::{format_float, AssociationCorpus, DataError};
use crate::sparse::CsrMatrix;

pub use stats::{compute_stats, connected_components, local_clustering, GraphStats};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("seed set is empty")]
    EmptySeeds,
    #[error("'{0}' is not in the graph vocabulary")]
    UnknownToken(String),
}

/// Bijection between node indices and tokens.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps the given order; later duplicates are dropped.
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for t in tokens {
            let t = t.into();
            if !vocab.index.contains_key(&t) {
                vocab.index.insert(t.clone(), vocab.tokens.len());
                vocab.tokens.push(t);
            }
        }
        vocab
    }

    /// Sorted, deduplicated vocabulary.
    pub fn sorted<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        Self::new(set)
    }

    /// The corpus cue set, sorted.
    pub fn from_cues(corpus: &AssociationCorpus) -> Self {
        Self::sorted(corpus.cues().into_iter().map(str::to_string))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }
}

/// How directed counts are folded into the undirected weight matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetrization {
    /// `W = C + C^T`
    #[default]
    Sum,
    /// `W = max(C, C^T)`
    Max,
}

impl FromStr for Symmetrization {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sum" => Ok(Symmetrization::Sum),
            "max" => Ok(Symmetrization::Max),
            other => Err(format!("unknown symmetrization '{other}' (expected sum or max)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationGraph {
    vocab: Vocabulary,
    /// Symmetric, zero diagonal, nonnegative.
    weights: CsrMatrix,
    /// `directed[c][r]`: number of trials in which `r` was given for cue `c`.
    directed: CsrMatrix,
}

impl AssociationGraph {
    /// Assembles a graph from parts. `weights` must be symmetric with a zero
    /// diagonal.
    pub fn from_parts(vocab: Vocabulary, weights: CsrMatrix, directed: CsrMatrix) -> Self {
        assert_eq!(vocab.len(), weights.dim());
        assert_eq!(vocab.len(), directed.dim());
        debug_assert!(weights.is_symmetric());
        debug_assert!((0..weights.dim()).all(|i| weights.get(i, i) == 0.0));
        Self { vocab, weights, directed }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn weights(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn directed_counts(&self) -> &CsrMatrix {
        &self.directed
    }

    pub fn node_count(&self) -> usize {
        self.vocab.len()
    }

    /// Undirected edges (each unordered pair counted once).
    pub fn edge_count(&self) -> usize {
        self.weights.nnz() / 2
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.weights.row(i).0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.weights.get(self.vocab.index_of(a)?, self.vocab.index_of(b)?))
    }

    pub fn directed_count(&self, cue: &str, response: &str) -> Option<f64> {
        Some(self.directed.get(self.vocab.index_of(cue)?, self.vocab.index_of(response)?))
    }
}

/// Counts cue-response pairs restricted to `vocabulary` and symmetrizes.
///
/// Each response slot counts once per trial; a response repeated within a
/// single trial counts once. Responses outside the vocabulary are ignored
/// here (they stay in the corpus). Self-responses enter the directed counts
/// but never the weight matrix.
pub fn build_graph(
    corpus: &AssociationCorpus,
    vocabulary: &Vocabulary,
    symmetrization: Symmetrization,
) -> Result<AssociationGraph, GraphError> {
    if vocabulary.is_empty() {
        return Err(GraphError::EmptyVocabulary);
    }
    if corpus.is_empty() {
        return Err(GraphError::EmptyCorpus);
    }
    let n = vocabulary.len();
    let mut counts: Vec<(usize, usize, f64)> = Vec::new();
    for rec in &corpus.records {
        let Some(c) = vocabulary.index_of(&rec.cue) else { continue };
        let responses: BTreeSet<usize> = rec.responses.iter().filter_map(|r| vocabulary.index_of(r)).collect();
        counts.extend(responses.into_iter().map(|r| (c, r, 1.0)));
    }
    let directed = CsrMatrix::from_triplets(n, counts);
    let weights = symmetrize(&directed, symmetrization);
    Ok(AssociationGraph { vocab: vocabulary.clone(), weights, directed })
}

fn symmetrize(directed: &CsrMatrix, how: Symmetrization) -> CsrMatrix {
    let n = directed.dim();
    let off_diag = directed.triplets().filter(|&(i, j, _)| i != j);
    match how {
        Symmetrization::Sum => CsrMatrix::from_triplets(
            n,
            off_diag.flat_map(|(i, j, v)| [(i, j, v), (j, i, v)]).collect::<Vec<_>>(),
        ),
        Symmetrization::Max => {
            let mut best: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for (i, j, v) in off_diag {
                let key = (i.min(j), i.max(j));
                let e = best.entry(key).or_insert(0.0);
                *e = e.max(v);
            }
            CsrMatrix::from_triplets(
                n,
                best.into_iter().flat_map(|((i, j), v)| [(i, j, v), (j, i, v)]).collect::<Vec<_>>(),
            )
        }
    }
}

/// Relative frequency of each in-vocabulary response to `cue`:
/// `count(cue -> r) / sum_r' count(cue -> r')`. Empty when the cue has no
/// in-vocabulary responses.
pub fn association_strength(graph: &AssociationGraph, cue: &str) -> Result<BTreeMap<String, f64>, GraphError> {
    let c = graph
        .vocab
        .index_of(cue)
        .ok_or_else(|| GraphError::UnknownToken(cue.to_string()))?;
    let total = graph.directed.row_sum(c);
    if total == 0.0 {
        return Ok(BTreeMap::new());
    }
    Ok(graph
        .directed
        .row_iter(c)
        .map(|(r, count)| (graph.vocab.token(r).to_string(), count / total))
        .collect())
}

/// Induced subgraph on `seeds` (pruned) or on `seeds` plus all their
/// neighbors (non-pruned). Node order follows the parent graph.
pub fn extract_subgraph<S: AsRef<str>>(
    graph: &AssociationGraph,
    seeds: &[S],
    pruned: bool,
) -> Result<AssociationGraph, GraphError> {
    if seeds.is_empty() {
        return Err(GraphError::EmptySeeds);
    }
    let mut keep = BTreeSet::new();
    for s in seeds {
        let s = s.as_ref();
        let i = graph.vocab.index_of(s).ok_or_else(|| GraphError::UnknownToken(s.to_string()))?;
        keep.insert(i);
        if !pruned {
            keep.extend(graph.neighbors(i).iter().copied());
        }
    }
    let keep: Vec<usize> = keep.into_iter().collect();
    let vocab = Vocabulary::new(keep.iter().map(|&i| graph.vocab.token(i).to_string()));
    Ok(AssociationGraph {
        vocab,
        weights: graph.weights.submatrix(&keep),
        directed: graph.directed.submatrix(&keep),
    })
}

/// Writes a node list (`token`) and an undirected edge list
/// (`token_a,token_b,weight`, one line per pair in node order).
pub fn write_graph(graph: &AssociationGraph, nodes_path: &Path, edges_path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(nodes_path).map_err(|e| DataError::io(nodes_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["token"])?;
    for t in graph.vocab.tokens() {
        w.write_record([t])?;
    }
    w.flush().map_err(|e| DataError::io(nodes_path, e))?;

    let file = std::fs::File::create(edges_path).map_err(|e| DataError::io(edges_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["token_a", "token_b", "weight"])?;
    for (i, j, v) in graph.weights.triplets().filter(|&(i, j, _)| i < j) {
        w.write_record([graph.vocab.token(i), graph.vocab.token(j), &format_float(v)])?;
    }
    w.flush().map_err(|e| DataError::io(edges_path, e))?;
    Ok(())
}
