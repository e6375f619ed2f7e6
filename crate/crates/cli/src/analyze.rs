//! `analyze` subcommand: morality rankings, cross-network divergence,
//! response lexicon statistics and per-dimension subgraphs.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use moralnet::analysis::{
    compare_dimension_subgraphs, compare_lexicon, divergence, lexicon_analysis, most_negative, overall_morality,
    strengths_from_corpus, subgraph_report, summarize_lexicon, NetworkView, StrengthTable, DEFAULT_TOP_N,
};
use moralnet::data_io::{parse_norm_lexicon, Column, ColumnType, NormKind, NormLexicon, Report, Source, Value};
use moralnet::graph::{build_graph, Symmetrization, Vocabulary};
use moralnet::propagation::{read_moral_matrix, MoralMatrix};
use moralnet::Dimension;
use serde::Serialize;

use crate::build::load_corpus;
use crate::output::RunOutput;
use crate::{invalid, require_file, require_opt_file, CliResult};

#[derive(Args, Serialize, Debug)]
pub struct AnalyzeArgs {
    /// Raw score file written by `build` (gmn.csv).
    #[arg(long)]
    pub gmn: PathBuf,
    /// Responses the network was built from.
    #[arg(long)]
    pub responses: Option<PathBuf>,
    #[arg(long, default_value = "human")]
    pub source: Source,
    /// Second network to compare against.
    #[arg(long)]
    pub compare_gmn: Option<PathBuf>,
    #[arg(long)]
    pub compare_responses: Option<PathBuf>,
    #[arg(long, default_value = "llm")]
    pub compare_source: Source,
    /// Arousal norms (1-8).
    #[arg(long)]
    pub arousal: Option<PathBuf>,
    /// Concreteness norms (1-5).
    #[arg(long)]
    pub concreteness: Option<PathBuf>,
    #[arg(long, default_value_t = 3.5)]
    pub concreteness_threshold: f64,
    /// Concepts per dimension for lexicon and subgraph analyses.
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub top_n: usize,
    /// Words listed per divergence direction.
    #[arg(long, default_value_t = DEFAULT_TOP_N)]
    pub divergence_n: usize,
    #[arg(long, default_value = "sum")]
    pub symmetrization: Symmetrization,
    #[arg(long)]
    pub out_dir: PathBuf,
}

struct Network {
    vocab: Vocabulary,
    scores: MoralMatrix,
    strengths: Option<StrengthTable>,
}

/// Where one network's files come from.
struct NetworkInput<'a> {
    flag: &'a str,
    gmn: &'a Path,
    responses: Option<&'a Path>,
    source: Source,
    subgraph_file: &'a str,
}

fn load_network(out: &mut RunOutput, input: NetworkInput, sym: Symmetrization, top_n: usize) -> CliResult<Network> {
    let NetworkInput { flag, gmn, responses, source, subgraph_file } = input;
    out.input(flag, gmn);
    let (vocab, scores, _) = read_moral_matrix(gmn).with_context(|| format!("reading {flag}"))?;
    let mut strengths = None;
    if let Some(r) = responses {
        out.input(&format!("{flag}:responses"), r);
        let (corpus, _) = load_corpus(r, source)?;
        let graph = build_graph(&corpus, &vocab, sym).context("building graph")?;
        let subgraphs = compare_dimension_subgraphs(&graph, &vocab, &scores, top_n).context("subgraph statistics")?;
        for s in subgraphs.iter().filter(|s| s.truncated) {
            log::warn!("{}: only {} concepts available for top {top_n}", s.dimension.label(), s.concepts.len());
        }
        out.report(subgraph_file, &subgraph_report(&subgraphs))?;
        strengths = Some(strengths_from_corpus(&corpus));
    }
    Ok(Network { vocab, scores, strengths })
}

fn summary_report(
    networks: &[(&str, &Network)],
    lexicon: &NormLexicon,
    threshold: Option<f64>,
    top_n: usize,
) -> CliResult<Report> {
    let mut r = Report::new(
        vec![
            Column::new("network", ColumnType::Str),
            Column::new("group", ColumnType::Str),
            Column::new("concepts", ColumnType::Int),
            Column::new("mean_proportion", ColumnType::Float),
            Column::new("mean_weighted", ColumnType::Float),
            Column::new("undefined_weighted", ColumnType::Int),
        ],
        2,
    );
    for (name, net) in networks {
        let Some(strengths) = &net.strengths else { continue };
        let groups = Dimension::ALL.iter().map(|&d| (d.label(), Some(d), top_n)).chain([("all", None, usize::MAX)]);
        for (label, d, n) in groups {
            let concepts = most_negative(&net.vocab, &net.scores, d, n, true);
            let s = summarize_lexicon(&lexicon_analysis(strengths, &concepts, lexicon, threshold));
            r.push(vec![
                Value::from(*name),
                Value::from(label),
                Value::from(s.concepts),
                Value::from(s.mean_proportion),
                Value::from(s.mean_weighted),
                Value::from(s.undefined_weighted),
            ])
            .context("lexicon summary")?;
        }
    }
    Ok(r)
}

pub fn run(args: &AnalyzeArgs, seed: u64) -> CliResult<()> {
    require_file("--gmn", &args.gmn)?;
    require_opt_file("--responses", args.responses.as_deref())?;
    require_opt_file("--compare-gmn", args.compare_gmn.as_deref())?;
    require_opt_file("--compare-responses", args.compare_responses.as_deref())?;
    require_opt_file("--arousal", args.arousal.as_deref())?;
    require_opt_file("--concreteness", args.concreteness.as_deref())?;
    if args.compare_responses.is_some() && args.compare_gmn.is_none() {
        return Err(invalid("--compare-responses needs --compare-gmn"));
    }
    if (args.arousal.is_some() || args.concreteness.is_some()) && args.responses.is_none() {
        return Err(invalid("--arousal/--concreteness need --responses"));
    }
    if args.top_n == 0 {
        return Err(invalid("--top-n must be positive"));
    }

    let mut out = RunOutput::create(&args.out_dir)?;
    let input = NetworkInput {
        flag: "--gmn",
        gmn: &args.gmn,
        responses: args.responses.as_deref(),
        source: args.source,
        subgraph_file: "subgraphs.csv",
    };
    let a = load_network(&mut out, input, args.symmetrization, args.top_n)?;
    let ranking_a = overall_morality(&a.vocab, &a.scores);
    if ranking_a.mad_degenerate {
        log::warn!("--gmn: MAD of overall morality is zero; normalized scores are all 0");
    }
    out.report("ranking.csv", &ranking_a.to_report())?;

    let b = match &args.compare_gmn {
        Some(p) => {
            let input = NetworkInput {
                flag: "--compare-gmn",
                gmn: p,
                responses: args.compare_responses.as_deref(),
                source: args.compare_source,
                subgraph_file: "compare_subgraphs.csv",
            };
            Some(load_network(&mut out, input, args.symmetrization, args.top_n)?)
        }
        None => None,
    };
    if let Some(b) = &b {
        let ranking_b = overall_morality(&b.vocab, &b.scores);
        out.report("compare_ranking.csv", &ranking_b.to_report())?;
        let div = divergence(&ranking_a, &ranking_b, args.divergence_n);
        out.report("divergence.csv", &div.to_report())?;
    }

    for (kind, path, threshold) in [
        (NormKind::Arousal, &args.arousal, None),
        (NormKind::Concreteness, &args.concreteness, Some(args.concreteness_threshold)),
    ] {
        let Some(path) = path else { continue };
        out.input(&format!("--{}", kind_name(kind)), path);
        let lexicon = parse_norm_lexicon(path, kind).with_context(|| format!("reading --{}", kind_name(kind)))?;
        let mut nets = vec![("a", &a)];
        if let Some(b) = b.as_ref().filter(|b| b.strengths.is_some()) {
            nets.push(("b", b));
        }
        out.report(&format!("lexicon_{}_summary.csv", kind_name(kind)), &summary_report(&nets, &lexicon, threshold, args.top_n)?)?;
        if let (Some(sa), Some(b)) = (&a.strengths, &b) {
            if let Some(sb) = &b.strengths {
                let va = NetworkView { vocab: &a.vocab, scores: &a.scores, strengths: sa };
                let vb = NetworkView { vocab: &b.vocab, scores: &b.scores, strengths: sb };
                let cmp = compare_lexicon(&va, &vb, &lexicon, threshold, args.top_n);
                out.report(&format!("lexicon_{}.csv", kind_name(kind)), &cmp.to_report())?;
            }
        }
    }

    out.finish("analyze", seed, args)
}

fn kind_name(kind: NormKind) -> &'static str {
    match kind {
        NormKind::Arousal => "arousal",
        NormKind::Concreteness => "concreteness",
    }
}
