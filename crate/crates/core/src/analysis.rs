//! Comparative analytics over propagated moral scores: morality rankings,
//! cross-network divergence, dominant dimensions, response lexicon
//! statistics with significance tests, and per-dimension subgraph
//! properties.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data_io::{AssociationCorpus, Column, ColumnType, NormLexicon, Report, Value};
use crate::dimension::{Dimension, DIMENSION_COUNT};
use crate::graph::{association_strength, compute_stats, extract_subgraph, AssociationGraph, GraphError, GraphStats, Vocabulary};
use crate::propagation::MoralMatrix;

pub const DEFAULT_TOP_N: usize = 50;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Median of a non-empty slice; `NaN` when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadNormalized {
    pub values: Vec<f64>,
    pub median: f64,
    pub mad: f64,
    /// MAD was zero (or fewer than two values); all outputs are 0.
    pub degenerate: bool,
}

/// `(x - median) / MAD` with `MAD = median(|x - median|)`, no consistency
/// constant.
pub fn mad_normalize(values: &[f64]) -> MadNormalized {
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&deviations);
    if values.len() < 2 || mad == 0.0 || !mad.is_finite() {
        return MadNormalized { values: vec![0.0; values.len()], median: med, mad, degenerate: true };
    }
    MadNormalized { values: values.iter().map(|x| (x - med) / mad).collect(), median: med, mad, degenerate: false }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dominance {
    /// Every dimension attaining the row maximum, in canonical order.
    pub labels: Vec<Dimension>,
    /// The row is all zeros.
    pub indeterminate: bool,
}

impl Dominance {
    pub fn describe(&self) -> String {
        if self.indeterminate {
            return "indeterminate".into();
        }
        self.labels.iter().map(|d| d.label()).collect::<Vec<_>>().join(";")
    }
}

pub fn dominant_dimension(row: &[f64; DIMENSION_COUNT]) -> Dominance {
    if row.iter().all(|&v| v == 0.0) {
        return Dominance { labels: Dimension::ALL.to_vec(), indeterminate: true };
    }
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Dominance { labels: Dimension::ALL.iter().copied().filter(|d| row[d.index()] == max).collect(), indeterminate: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoralityEntry {
    pub word: String,
    pub overall: f64,
    pub normalized: f64,
    pub dominant: Dominance,
    /// 1-based position in descending normalized order.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoralityRanking {
    /// Descending by normalized morality, ties by word.
    pub entries: Vec<MoralityEntry>,
    pub mad_degenerate: bool,
}

impl MoralityRanking {
    pub fn top_positive(&self, n: usize) -> &[MoralityEntry] {
        &self.entries[..n.min(self.entries.len())]
    }

    /// Most negative first.
    pub fn top_negative(&self, n: usize) -> Vec<&MoralityEntry> {
        self.entries.iter().rev().take(n).collect()
    }

    pub fn get(&self, word: &str) -> Option<&MoralityEntry> {
        self.entries.iter().find(|e| e.word == word)
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new(
            vec![
                Column::new("rank", ColumnType::Int),
                Column::new("word", ColumnType::Str),
                Column::new("overall_morality", ColumnType::Float),
                Column::new("normalized_morality", ColumnType::Float),
                Column::new("dominant_dimension", ColumnType::Str),
            ],
            1,
        );
        for e in &self.entries {
            r.push(vec![
                Value::from(e.rank),
                Value::from(e.word.as_str()),
                Value::from(e.overall),
                Value::from(e.normalized),
                Value::from(e.dominant.describe()),
            ])
            .expect("row matches columns");
        }
        r
    }
}

/// Sums each row, MAD-normalizes the sums and ranks words by the result.
pub fn overall_morality(vocab: &Vocabulary, scores: &MoralMatrix) -> MoralityRanking {
    let overall: Vec<f64> = scores.rows().iter().map(|r| r.iter().sum()).collect();
    let norm = mad_normalize(&overall);
    let mut order: Vec<usize> = (0..overall.len()).collect();
    order.sort_by(|&a, &b| norm.values[b].total_cmp(&norm.values[a]).then_with(|| vocab.token(a).cmp(vocab.token(b))));
    let entries = order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| MoralityEntry {
            word: vocab.token(i).to_string(),
            overall: overall[i],
            normalized: norm.values[i],
            dominant: dominant_dimension(scores.row(i)),
            rank: pos + 1,
        })
        .collect();
    MoralityRanking { entries, mad_degenerate: norm.degenerate }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEntry {
    pub word: String,
    pub score_a: f64,
    pub score_b: f64,
    pub difference: f64,
    pub dominant_a: String,
    pub dominant_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Largest `a - b` first.
    pub a_over_b: Vec<DivergenceEntry>,
    /// Largest `b - a` first.
    pub b_over_a: Vec<DivergenceEntry>,
    pub shared_words: usize,
}

impl Divergence {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new(
            vec![
                Column::new("direction", ColumnType::Str),
                Column::new("rank", ColumnType::Int),
                Column::new("word", ColumnType::Str),
                Column::new("score_a", ColumnType::Float),
                Column::new("score_b", ColumnType::Float),
                Column::new("difference", ColumnType::Float),
                Column::new("dominant_a", ColumnType::Str),
                Column::new("dominant_b", ColumnType::Str),
            ],
            2,
        );
        for (direction, list) in [("a_over_b", &self.a_over_b), ("b_over_a", &self.b_over_a)] {
            for (i, e) in list.iter().enumerate() {
                r.push(vec![
                    Value::from(direction),
                    Value::from(i + 1),
                    Value::from(e.word.as_str()),
                    Value::from(e.score_a),
                    Value::from(e.score_b),
                    Value::from(e.difference),
                    Value::from(e.dominant_a.as_str()),
                    Value::from(e.dominant_b.as_str()),
                ])
                .expect("row matches columns");
            }
        }
        r
    }
}

/// Words whose normalized morality differs most between two rankings, over
/// the words both contain.
pub fn divergence(a: &MoralityRanking, b: &MoralityRanking, top_n: usize) -> Divergence {
    let b_index: HashMap<&str, &MoralityEntry> = b.entries.iter().map(|e| (e.word.as_str(), e)).collect();
    let mut shared: Vec<DivergenceEntry> = a
        .entries
        .iter()
        .filter_map(|ea| {
            b_index.get(ea.word.as_str()).map(|eb| DivergenceEntry {
                word: ea.word.clone(),
                score_a: ea.normalized,
                score_b: eb.normalized,
                difference: ea.normalized - eb.normalized,
                dominant_a: ea.dominant.describe(),
                dominant_b: eb.dominant.describe(),
            })
        })
        .collect();
    shared.sort_by(|x, y| y.difference.total_cmp(&x.difference).then_with(|| x.word.cmp(&y.word)));
    let a_over_b = shared.iter().take(top_n).cloned().collect();
    shared.sort_by(|x, y| x.difference.total_cmp(&y.difference).then_with(|| x.word.cmp(&y.word)));
    let b_over_a = shared.iter().take(top_n).map(|e| DivergenceEntry { difference: -e.difference, ..e.clone() }).collect();
    Divergence { a_over_b, b_over_a, shared_words: shared.len() }
}

/// Response strengths per cue.
pub type StrengthTable = HashMap<String, BTreeMap<String, f64>>;

/// Strengths over in-vocabulary responses, from the graph's directed counts.
pub fn strengths_from_graph(graph: &AssociationGraph) -> StrengthTable {
    graph
        .vocab()
        .tokens()
        .iter()
        .map(|cue| (cue.clone(), association_strength(graph, cue).unwrap_or_default()))
        .collect()
}

/// Strengths over every response in the corpus, including responses that
/// are not graph nodes. A response counts once per record.
pub fn strengths_from_corpus(corpus: &AssociationCorpus) -> StrengthTable {
    let mut counts: HashMap<String, BTreeMap<String, f64>> = HashMap::new();
    for rec in &corpus.records {
        let entry = counts.entry(rec.cue.clone()).or_default();
        let unique: BTreeSet<&String> = rec.responses.iter().collect();
        for r in unique {
            *entry.entry(r.clone()).or_insert(0.0) += 1.0;
        }
    }
    for m in counts.values_mut() {
        let total: f64 = m.values().sum();
        for v in m.values_mut() {
            *v /= total;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptLexiconStats {
    pub concept: String,
    /// Distinct response types.
    pub responses: usize,
    pub in_lexicon: usize,
    /// Percent of response types in the lexicon (and above the threshold,
    /// when one is given).
    pub proportion: f64,
    /// Strength-weighted lexicon score, renormalized over in-lexicon
    /// responses; `None` when no response is in the lexicon.
    pub weighted_mean: Option<f64>,
}

pub fn concept_lexicon_stats(
    concept: &str,
    strengths: &BTreeMap<String, f64>,
    lexicon: &NormLexicon,
    threshold: Option<f64>,
) -> ConceptLexiconStats {
    let (mut in_lex, mut counted, mut mass, mut weighted) = (0usize, 0usize, 0.0, 0.0);
    for (response, &s) in strengths {
        if let Some(score) = lexicon.get(response) {
            in_lex += 1;
            if threshold.is_none_or(|t| score > t) {
                counted += 1;
            }
            mass += s;
            weighted += s * score;
        }
    }
    let n = strengths.len();
    ConceptLexiconStats {
        concept: concept.to_string(),
        responses: n,
        in_lexicon: in_lex,
        proportion: if n == 0 { 0.0 } else { 100.0 * counted as f64 / n as f64 },
        weighted_mean: (mass > 0.0).then(|| weighted / mass),
    }
}

pub fn lexicon_analysis<S: AsRef<str>>(
    strengths: &StrengthTable,
    concepts: &[S],
    lexicon: &NormLexicon,
    threshold: Option<f64>,
) -> Vec<ConceptLexiconStats> {
    let empty = BTreeMap::new();
    concepts
        .iter()
        .map(|c| {
            let c = c.as_ref();
            concept_lexicon_stats(c, strengths.get(c).unwrap_or(&empty), lexicon, threshold)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconSummary {
    pub concepts: usize,
    pub mean_proportion: Option<f64>,
    pub mean_weighted: Option<f64>,
    /// Concepts without any in-lexicon response.
    pub undefined_weighted: usize,
}

/// Unweighted means over concepts.
pub fn summarize_lexicon(stats: &[ConceptLexiconStats]) -> LexiconSummary {
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let props: Vec<f64> = stats.iter().map(|s| s.proportion).collect();
    let weighted: Vec<f64> = stats.iter().filter_map(|s| s.weighted_mean).collect();
    LexiconSummary {
        concepts: stats.len(),
        mean_proportion: mean(&props),
        mean_weighted: mean(&weighted),
        undefined_weighted: stats.len() - weighted.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Two-sided Welch t-test. `None` with fewer than two values on a side or
/// when both samples are constant and different.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Option<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return (ma == mb).then_some(WelchTest { t: 0.0, df: na + nb - 2.0, p_value: 1.0 });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2.powi(2) / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some(WelchTest { t, df, p_value: (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0) })
}

/// Words with the lowest scores, most negative first, ties by word. With
/// `dimension = None` the row sum is used. `only_negative` drops
/// non-negative scores.
pub fn most_negative(
    vocab: &Vocabulary,
    scores: &MoralMatrix,
    dimension: Option<Dimension>,
    top_n: usize,
    only_negative: bool,
) -> Vec<String> {
    let value = |i: usize| match dimension {
        Some(d) => scores.get(i, d),
        None => scores.row(i).iter().sum(),
    };
    let mut idx: Vec<usize> = (0..vocab.len()).filter(|&i| !only_negative || value(i) < 0.0).collect();
    idx.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then_with(|| vocab.token(a).cmp(vocab.token(b))));
    idx.into_iter().take(top_n).map(|i| vocab.token(i).to_string()).collect()
}

/// One propagated network with the response strengths of its source.
pub struct NetworkView<'a> {
    pub vocab: &'a Vocabulary,
    pub scores: &'a MoralMatrix,
    pub strengths: &'a StrengthTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Dimension label or `all`.
    pub group: String,
    /// `proportion` or `weighted_mean`.
    pub metric: String,
    pub concepts: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconComparison {
    pub rows: Vec<ComparisonRow>,
}

impl LexiconComparison {
    pub fn row(&self, group: &str, metric: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.group == group && r.metric == metric)
    }

    pub fn to_report(&self) -> Report {
        let mut r = Report::new(
            vec![
                Column::new("order", ColumnType::Int),
                Column::new("group", ColumnType::Str),
                Column::new("metric", ColumnType::Str),
                Column::new("concepts", ColumnType::Int),
                Column::new("mean_a", ColumnType::Float),
                Column::new("mean_b", ColumnType::Float),
                Column::new("t", ColumnType::Float),
                Column::new("p_value", ColumnType::Float),
                Column::new("significant", ColumnType::Bool),
            ],
            1,
        );
        for (i, row) in self.rows.iter().enumerate() {
            r.push(vec![
                Value::from(i),
                Value::from(row.group.as_str()),
                Value::from(row.metric.as_str()),
                Value::from(row.concepts),
                Value::from(row.mean_a),
                Value::from(row.mean_b),
                Value::from(row.t),
                Value::from(row.p_value),
                Value::from(row.significant),
            ])
            .expect("row matches columns");
        }
        r
    }
}

fn compare_group(group: &str, concepts: &[String], a: &NetworkView, b: &NetworkView, lexicon: &NormLexicon, threshold: Option<f64>) -> [ComparisonRow; 2] {
    let sa = lexicon_analysis(a.strengths, concepts, lexicon, threshold);
    let sb = lexicon_analysis(b.strengths, concepts, lexicon, threshold);
    let row = |metric: &str, xa: Vec<f64>, xb: Vec<f64>| {
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let test = welch_t_test(&xa, &xb);
        ComparisonRow {
            group: group.to_string(),
            metric: metric.to_string(),
            concepts: concepts.len(),
            mean_a: mean(&xa),
            mean_b: mean(&xb),
            t: test.map(|t| t.t),
            p_value: test.map(|t| t.p_value),
            significant: test.is_some_and(|t| t.p_value < SIGNIFICANCE_LEVEL),
        }
    };
    [
        row("proportion", sa.iter().map(|s| s.proportion).collect(), sb.iter().map(|s| s.proportion).collect()),
        row("weighted_mean", sa.iter().filter_map(|s| s.weighted_mean).collect(), sb.iter().filter_map(|s| s.weighted_mean).collect()),
    ]
}

/// Compares response lexicon statistics of two networks. For each
/// dimension the concept set is the union of both networks' `top_n` most
/// negative concepts on that dimension; the `all` group takes every concept
/// with negative overall morality in either network. Differences are tested
/// with Welch's t-test at the 0.05 level.
pub fn compare_lexicon(a: &NetworkView, b: &NetworkView, lexicon: &NormLexicon, threshold: Option<f64>, top_n: usize) -> LexiconComparison {
    let mut rows = Vec::new();
    let union = |d: Option<Dimension>, n: usize| {
        let set: BTreeSet<String> = most_negative(a.vocab, a.scores, d, n, true)
            .into_iter()
            .chain(most_negative(b.vocab, b.scores, d, n, true))
            .collect();
        set.into_iter().collect::<Vec<_>>()
    };
    for d in Dimension::ALL {
        rows.extend(compare_group(d.label(), &union(Some(d), top_n), a, b, lexicon, threshold));
    }
    rows.extend(compare_group("all", &union(None, usize::MAX), a, b, lexicon, threshold));
    LexiconComparison { rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSubgraphs {
    pub dimension: Dimension,
    pub concepts: Vec<String>,
    /// Fewer than `top_n` concepts were available.
    pub truncated: bool,
    pub pruned: GraphStats,
    pub non_pruned: GraphStats,
}

/// Per dimension, the `top_n` lowest-scoring concepts and the statistics of
/// their induced subgraph (pruned) and of the subgraph that also holds all
/// their neighbors (non-pruned).
pub fn compare_dimension_subgraphs(
    graph: &AssociationGraph,
    vocab: &Vocabulary,
    scores: &MoralMatrix,
    top_n: usize,
) -> Result<Vec<DimensionSubgraphs>, GraphError> {
    Dimension::ALL
        .iter()
        .map(|&d| {
            let concepts = most_negative(vocab, scores, Some(d), top_n, false);
            let pruned = extract_subgraph(graph, &concepts, true)?;
            let non_pruned = extract_subgraph(graph, &concepts, false)?;
            Ok(DimensionSubgraphs {
                dimension: d,
                truncated: concepts.len() < top_n,
                concepts,
                pruned: compute_stats(&pruned),
                non_pruned: compute_stats(&non_pruned),
            })
        })
        .collect()
}

pub fn subgraph_report(rows: &[DimensionSubgraphs]) -> Report {
    let mut r = Report::new(
        vec![
            Column::new("dimension", ColumnType::Str),
            Column::new("mode", ColumnType::Str),
            Column::new("concepts", ColumnType::Int),
            Column::new("truncated", ColumnType::Bool),
            Column::new("nodes", ColumnType::Int),
            Column::new("edges", ColumnType::Int),
            Column::new("density", ColumnType::Float),
            Column::new("avg_local_clustering", ColumnType::Float),
            Column::new("wae", ColumnType::Float),
            Column::new("wdc", ColumnType::Float),
        ],
        2,
    );
    for row in rows {
        for (mode, s) in [("non_pruned", &row.non_pruned), ("pruned", &row.pruned)] {
            r.push(vec![
                Value::from(row.dimension.label()),
                Value::from(mode),
                Value::from(row.concepts.len()),
                Value::from(row.truncated),
                Value::from(s.node_count),
                Value::from(s.edge_count),
                Value::from(s.density),
                Value::from(s.avg_local_clustering),
                Value::from(s.weighted_avg_edge),
                Value::from(s.weighted_degree_centrality),
            ])
            .expect("row matches columns");
        }
    }
    r
}

pub fn lexicon_concept_report(stats: &[ConceptLexiconStats]) -> Report {
    let mut r = Report::new(
        vec![
            Column::new("concept", ColumnType::Str),
            Column::new("responses", ColumnType::Int),
            Column::new("in_lexicon", ColumnType::Int),
            Column::new("proportion", ColumnType::Float),
            Column::new("weighted_mean", ColumnType::Float),
        ],
        1,
    );
    for s in stats {
        r.push(vec![
            Value::from(s.concept.as_str()),
            Value::from(s.responses),
            Value::from(s.in_lexicon),
            Value::from(s.proportion),
            Value::from(s.weighted_mean),
        ])
        .expect("row matches columns");
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::{read_norm_lexicon, NormKind};
    use crate::sparse::CsrMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn mad_hand_examples() {
        let m = mad_normalize(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(m.values, vec![-2.0, -1.0, 0.0, 1.0, 97.0]);
        assert_eq!((m.median, m.mad, m.degenerate), (3.0, 1.0, false));
        let c = mad_normalize(&[4.0; 6]);
        assert_eq!(c.values, vec![0.0; 6]);
        assert!(c.degenerate);
        assert_eq!(mad_normalize(&[-1.0, 0.0, 1.0]).values, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn dominant_cases() {
        assert_eq!(dominant_dimension(&[0.2, 0.9, 0.0, 0.0, 0.1]).labels, vec![Dimension::Fairness]);
        let tie = dominant_dimension(&[0.5, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(tie.labels, vec![Dimension::Care, Dimension::Fairness]);
        assert_eq!(tie.describe(), "care;fairness");
        let zero = dominant_dimension(&[0.0; 5]);
        assert!(zero.indeterminate);
        assert_eq!(zero.labels.len(), 5);
    }

    #[test]
    fn overall_sums_and_ranks() {
        let vocab = Vocabulary::new(["a", "b", "c", "d"]);
        let scores = MoralMatrix::from_rows(vec![
            [1.0, 0.0, 0.0, 0.0, 1.0],
            [0.0; 5],
            [-3.0, 0.0, 0.0, 0.0, 0.0],
            [0.5, 0.0, 0.0, 0.0, 0.0],
        ]);
        let r = overall_morality(&vocab, &scores);
        assert_eq!(r.get("a").unwrap().overall, 2.0);
        let words: Vec<&str> = r.entries.iter().map(|e| e.word.as_str()).collect();
        assert_eq!(words, vec!["a", "d", "b", "c"]);
        assert_eq!(r.top_negative(1)[0].word, "c");
        assert_eq!(r.top_positive(10).len(), 4);
        assert_eq!(r.get("b").unwrap().rank, 3);
    }

    #[test]
    fn divergence_cases() {
        let vocab = Vocabulary::new(["a", "b", "c"]);
        let s = MoralMatrix::from_rows(vec![[1.0, 0.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0, 0.0], [3.0, 0.0, 0.0, 0.0, 0.0]]);
        let r = overall_morality(&vocab, &s);
        let same = divergence(&r, &r, 3);
        assert!(same.a_over_b.iter().all(|e| e.difference == 0.0));
        let mut shifted = r.clone();
        for e in &mut shifted.entries {
            if e.word == "b" {
                e.normalized -= 5.0;
            }
        }
        let d = divergence(&r, &shifted, 2);
        assert_eq!(d.a_over_b[0].word, "b");
        assert_eq!(d.a_over_b[0].difference, 5.0);
        assert!(d.b_over_a.iter().all(|e| e.word != "b"));
        let full = divergence(&r, &shifted, 3);
        assert_eq!((full.b_over_a[2].word.as_str(), full.b_over_a[2].difference), ("b", -5.0));
        assert_eq!(d.shared_words, 3);
    }

    fn norms(body: &str, kind: NormKind) -> NormLexicon {
        read_norm_lexicon(format!("word,score\n{body}").as_bytes(), kind).unwrap()
    }

    fn strengths(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(w, s)| (w.to_string(), *s)).collect()
    }

    #[test]
    fn lexicon_hand_examples() {
        let arousal = norms("gross,6.1\nspew,5.0\nlow,4.0\nhigh,6.0\n", NormKind::Arousal);
        let s = concept_lexicon_stats("vomit", &strengths(&[("gross", 0.5), ("spew", 0.3), ("xyzzy", 0.2)]), &arousal, None);
        assert!((s.proportion - 200.0 / 3.0).abs() < 1e-12);
        let w = concept_lexicon_stats("x", &strengths(&[("low", 0.3), ("high", 0.2), ("zzz", 0.5)]), &arousal, None);
        assert!((w.weighted_mean.unwrap() - 4.8).abs() < 1e-12);
        let conc = norms("stone,3.6\nidea,2.0\n", NormKind::Concreteness);
        let c = concept_lexicon_stats("x", &strengths(&[("stone", 0.5), ("idea", 0.5)]), &conc, Some(3.5));
        assert_eq!(c.proportion, 50.0);
        let none = concept_lexicon_stats("x", &strengths(&[("zzz", 1.0)]), &conc, None);
        assert_eq!((none.proportion, none.weighted_mean), (0.0, None));
    }

    #[test]
    fn corpus_strengths_keep_out_of_vocabulary_responses() {
        use crate::data_io::{ResponseRecord, Source};
        let rec = |rs: &[&str]| ResponseRecord { cue: "c".into(), responses: rs.iter().map(|s| s.to_string()).collect(), source: Source::Human, trial_id: 0 };
        let t = strengths_from_corpus(&AssociationCorpus::new(vec![rec(&["x", "y"]), rec(&["x", "x"])]));
        assert_eq!(t["c"]["x"], 2.0 / 3.0);
        assert_eq!(t["c"]["y"], 1.0 / 3.0);
    }

    #[test]
    fn welch_matches_reference_values() {
        // reference: t = -2.4495, df = 8, p = 0.0400 for these samples
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [3.0, 4.0, 5.0, 6.0, 7.0];
        let w = welch_t_test(&a, &b).unwrap();
        assert!((w.t + 2.0).abs() < 1e-12);
        assert!((w.df - 8.0).abs() < 1e-12);
        assert!((w.p_value - 0.080516).abs() < 1e-5, "{}", w.p_value);
        assert!(welch_t_test(&[1.0], &a).is_none());
        assert_eq!(welch_t_test(&[2.0, 2.0], &[2.0, 2.0]).unwrap().p_value, 1.0);
    }

    #[test]
    fn significance_flags_planted_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let arousal = norms("calm,2.0\nwild,7.0\nmid,4.5\n", NormKind::Arousal);
        let n = 30;
        let vocab = Vocabulary::new((0..n).map(|i| format!("c{i:02}")));
        let scores = MoralMatrix::from_rows((0..n).map(|_| [-rng.random_range(0.1..1.0), 0.0, 0.0, 0.0, 0.0]).collect());
        let mut hot = StrengthTable::new();
        let mut cold = StrengthTable::new();
        for w in vocab.tokens() {
            let j = rng.random_range(0.0..0.2);
            hot.insert(w.clone(), strengths(&[("wild", 0.7 + j), ("mid", 0.3 - j)]));
            cold.insert(w.clone(), strengths(&[("calm", 0.7 + j), ("mid", 0.3 - j)]));
        }
        let a = NetworkView { vocab: &vocab, scores: &scores, strengths: &hot };
        let b = NetworkView { vocab: &vocab, scores: &scores, strengths: &cold };
        let cmp = compare_lexicon(&a, &b, &arousal, None, 10);
        let care = cmp.row("care", "weighted_mean").unwrap();
        assert_eq!(care.concepts, 10);
        assert!(care.significant && care.mean_a.unwrap() > care.mean_b.unwrap());
        // proportions are identical on both sides
        assert!(!cmp.row("care", "proportion").unwrap().significant);
        assert_eq!(cmp.row("all", "weighted_mean").unwrap().concepts, n);
        // the fairness column has no negative concepts
        assert_eq!(cmp.row("fairness", "proportion").unwrap().concepts, 0);
    }

    fn graph_from_edges(n: usize, edges: &[(usize, usize, f64)]) -> AssociationGraph {
        let trips: Vec<_> = edges.iter().flat_map(|&(a, b, w)| [(a, b, w), (b, a, w)]).collect();
        let w = CsrMatrix::from_triplets(n, trips);
        AssociationGraph::from_parts(Vocabulary::new((0..n).map(|i| format!("n{i:02}"))), w.clone(), w)
    }

    #[test]
    fn planted_clique_dominates_density() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let n = 60;
        let mut edges = Vec::new();
        for a in 0..6 {
            for b in a + 1..6 {
                edges.push((a, b, 3.0));
            }
        }
        for i in 6..n {
            edges.push((rng.random_range(0..i), i, 1.0));
        }
        let g = graph_from_edges(n, &edges);
        let mut rows = vec![[0.0; 5]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (d, v) in row.iter_mut().enumerate() {
                *v = if d == 0 && i < 6 { -1.0 } else { -rng.random_range(0.0..0.5) };
            }
        }
        let scores = MoralMatrix::from_rows(rows);
        let res = compare_dimension_subgraphs(&g, g.vocab(), &scores, 6).unwrap();
        let care = &res[0];
        assert_eq!(care.pruned.density, 1.0);
        for other in &res[1..] {
            assert!(other.pruned.density < care.pruned.density);
        }
        for r in &res {
            assert!(r.pruned.node_count <= r.non_pruned.node_count);
            assert!(!r.truncated);
        }

        let all = compare_dimension_subgraphs(&g, g.vocab(), &scores, n + 5).unwrap();
        let global = compute_stats(&g);
        assert!(all[0].truncated);
        assert_eq!(all[0].pruned.edge_count, global.edge_count);
        assert_eq!(all[0].pruned.density, global.density);
    }

    proptest! {
        #[test]
        fn mad_preserves_order(xs in proptest::collection::vec(-100.0f64..100.0, 2..40)) {
            let m = mad_normalize(&xs);
            if !m.degenerate {
                for i in 0..xs.len() {
                    for j in 0..xs.len() {
                        if xs[i] < xs[j] {
                            prop_assert!(m.values[i] < m.values[j]);
                        }
                    }
                }
            }
        }

        #[test]
        fn dominance_survives_monotone_maps(row in proptest::array::uniform5(-3i32..3)) {
            let row = row.map(|v| v as f64);
            let mapped = row.map(|v| 2.0 * v + 7.0);
            let a = dominant_dimension(&row);
            if !a.indeterminate {
                prop_assert_eq!(a.labels, dominant_dimension(&mapped).labels);
            }
        }

        #[test]
        fn lexicon_stats_stay_in_range(entries in proptest::collection::vec((0u8..20, 1.0f64..8.0, 0.01f64..1.0), 0..20)) {
            let mut body = String::new();
            let mut s = BTreeMap::new();
            for (w, score, strength) in &entries {
                if w % 2 == 0 {
                    body.push_str(&format!("w{w},{score}\n"));
                }
                s.insert(format!("w{w}"), *strength);
            }
            let lex = read_norm_lexicon(format!("word,score\n{body}").as_bytes(), NormKind::Arousal).unwrap();
            let st = concept_lexicon_stats("c", &s, &lex, None);
            prop_assert!((0.0..=100.0).contains(&st.proportion));
            if let Some(m) = st.weighted_mean {
                prop_assert!((1.0 - 1e-9..=8.0 + 1e-9).contains(&m));
            }
        }
    }
}
