//! `build` subcommand: graph construction, seeding, optional alpha tuning,
//! propagation and seed adjustment.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use moralnet::data_io::{
    parse_cue_list, parse_moral_lexicon, parse_responses, AssociationCorpus, Column, ColumnType, LexiconKind, Report,
    Source, Value,
};
use moralnet::graph::{build_graph, compute_stats, write_graph, AssociationGraph, Symmetrization, Vocabulary};
use moralnet::propagation::{
    default_alpha_grid, propagate, seed_matrix, subtract_seeds, tune_alpha, write_moral_matrix, PropagationConfig,
    PropagationMode, SeedHandling, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE,
};
use serde::Serialize;

use crate::output::RunOutput;
use crate::{invalid, require_file, require_opt_file, CliResult};

pub const GMN_FILE: &str = "gmn.csv";
pub const GMN_EVAL_FILE: &str = "gmn_eval.csv";

#[derive(Args, Serialize, Debug)]
pub struct BuildArgs {
    /// Response table with `cue`, `R1`, `R2`, `R3` columns.
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long, default_value = "human")]
    pub source: Source,
    /// Cue list fixing the node set; defaults to every cue in the responses.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    #[arg(long, default_value = "sum")]
    pub symmetrization: Symmetrization,
    /// Hard moral lexicon supplying the seeds.
    #[arg(long)]
    pub mfd: PathBuf,
    /// Fixed propagation alpha; skips tuning.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Soft lexicon used to tune alpha when --alpha is absent.
    #[arg(long)]
    pub tune_lexicon: Option<PathBuf>,
    /// Candidate alphas for tuning.
    #[arg(long, value_delimiter = ',')]
    pub alpha_grid: Vec<f64>,
    #[arg(long, default_value = "closed-form")]
    pub mode: PropagationMode,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value = "subtract")]
    pub seed_handling: SeedHandling,
    /// Also write full graph statistics (slow on large graphs).
    #[arg(long)]
    pub stats: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct AlphaRecord {
    value: f64,
    /// `fixed` or `tuned`.
    source: &'static str,
    tuning_words: Option<usize>,
}

#[derive(Serialize)]
struct BuildMetadata {
    seed: u64,
    source: Source,
    nodes: usize,
    edges: usize,
    skipped_rows: usize,
    alpha: AlphaRecord,
    mode: PropagationMode,
    iterations: usize,
    residual: f64,
    seeds: usize,
    unmatched_seed_words: usize,
    seed_handling: SeedHandling,
    masked_rows: usize,
}

/// Reads a response table, logging skipped rows.
pub fn load_corpus(path: &Path, source: Source) -> CliResult<(AssociationCorpus, usize)> {
    let parsed = parse_responses(path, source).with_context(|| format!("reading responses {}", path.display()))?;
    for e in parsed.row_errors.iter().take(5) {
        log::warn!("{}: line {}: {}", path.display(), e.line, e.message);
    }
    if parsed.row_errors.len() > 5 {
        log::warn!("{}: {} more malformed rows skipped", path.display(), parsed.row_errors.len() - 5);
    }
    Ok((parsed.corpus, parsed.row_errors.len()))
}

/// Node set: an explicit cue list or the cues of the corpus.
pub fn load_vocabulary(corpus: &AssociationCorpus, cue_list: Option<&Path>) -> CliResult<Vocabulary> {
    match cue_list {
        Some(p) => {
            let cues = parse_cue_list(p).with_context(|| format!("reading cue list {}", p.display()))?;
            Ok(Vocabulary::sorted(cues.into_iter().map(|c| c.cue)))
        }
        None => Ok(Vocabulary::from_cues(corpus)),
    }
}

pub fn load_graph(
    responses: &Path,
    source: Source,
    cue_list: Option<&Path>,
    sym: Symmetrization,
) -> CliResult<(AssociationGraph, usize)> {
    let (corpus, skipped) = load_corpus(responses, source)?;
    let vocab = load_vocabulary(&corpus, cue_list)?;
    let graph = build_graph(&corpus, &vocab, sym).context("building graph")?;
    Ok((graph, skipped))
}

pub fn run(args: &BuildArgs, seed: u64) -> CliResult<()> {
    require_file("--responses", &args.responses)?;
    require_file("--mfd", &args.mfd)?;
    require_opt_file("--vocabulary", args.vocabulary.as_deref())?;
    require_opt_file("--tune-lexicon", args.tune_lexicon.as_deref())?;
    let base = PropagationConfig {
        alpha: args.alpha.unwrap_or(0.5),
        mode: args.mode,
        max_iterations: args.max_iterations,
        tolerance: args.tolerance,
    };
    base.validate().map_err(|e| invalid(format!("--alpha: {e}")))?;
    if args.tolerance.is_nan() || args.tolerance <= 0.0 || args.max_iterations == 0 {
        return Err(invalid("--tolerance and --max-iterations must be positive"));
    }
    if args.alpha.is_none() && args.tune_lexicon.is_none() {
        return Err(invalid("either --alpha or --tune-lexicon is required"));
    }
    if let Some(a) = args.alpha_grid.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(invalid(format!("--alpha-grid: {a} is outside (0, 1)")));
    }

    let mfd = parse_moral_lexicon(&args.mfd, LexiconKind::Hard).context("reading --mfd")?;
    let tuning = args
        .tune_lexicon
        .as_deref()
        .filter(|_| args.alpha.is_none())
        .map(|p| parse_moral_lexicon(p, LexiconKind::Soft).context("reading --tune-lexicon"))
        .transpose()?;
    let (graph, skipped_rows) =
        load_graph(&args.responses, args.source, args.vocabulary.as_deref(), args.symmetrization)?;
    log::info!("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());

    let mut out = RunOutput::create(&args.out_dir)?;
    out.input("--responses", &args.responses);
    out.input_opt("--vocabulary", args.vocabulary.as_deref());
    out.input("--mfd", &args.mfd);

    let seeds = seed_matrix(&graph, &mfd).context("seeding")?;
    log::info!("{} seed nodes, {} lexicon words outside the graph", seeds.seed_count(), seeds.unmatched.len());

    let alpha = match (args.alpha, &tuning) {
        (Some(a), _) => AlphaRecord { value: a, source: "fixed", tuning_words: None },
        (None, Some(lex)) => {
            out.input_opt("--tune-lexicon", args.tune_lexicon.as_deref());
            let grid = if args.alpha_grid.is_empty() { default_alpha_grid() } else { args.alpha_grid.clone() };
            let tuned = tune_alpha(&graph, &seeds.f0, lex, &grid, &base).context("tuning alpha")?;
            let mut curve = Report::new(
                vec![Column::new("alpha", ColumnType::Float), Column::new("mean_spearman_rho", ColumnType::Float)],
                1,
            );
            for p in &tuned.curve {
                curve.push(vec![Value::from(p.alpha), Value::from(p.mean_rho)]).context("alpha curve")?;
            }
            out.report("alpha_curve.csv", &curve)?;
            log::info!("tuned alpha {} over {} words", tuned.best_alpha, tuned.tuning_words);
            AlphaRecord { value: tuned.best_alpha, source: "tuned", tuning_words: Some(tuned.tuning_words) }
        }
        (None, None) => unreachable!("checked above"),
    };

    let config = PropagationConfig { alpha: alpha.value, ..base };
    let result = propagate(&graph, &seeds.f0, &config).context("propagation")?;
    let adjusted = subtract_seeds(&result.scores, &seeds, args.seed_handling);

    write_graph(&graph, &out.produced("nodes.csv"), &out.produced("edges.csv")).context("writing graph")?;
    write_moral_matrix(&out.produced(GMN_FILE), graph.vocab(), &result.scores, "is_seed", &seeds.seeded)
        .context("writing scores")?;
    write_moral_matrix(&out.produced(GMN_EVAL_FILE), graph.vocab(), &adjusted.scores, "in_eval", &adjusted.eval_mask)
        .context("writing evaluation scores")?;
    if args.stats {
        let s = compute_stats(&graph);
        out.json("graph_stats.json", &s)?;
    }
    let meta = BuildMetadata {
        seed,
        source: args.source,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        skipped_rows,
        alpha,
        mode: args.mode,
        iterations: result.iterations,
        residual: result.residual,
        seeds: seeds.seed_count(),
        unmatched_seed_words: seeds.unmatched.len(),
        seed_handling: args.seed_handling,
        masked_rows: adjusted.masked,
    };
    out.json("build_metadata.json", &meta)?;
    out.finish("build", seed, args)
}
