//! `evaluate` subcommand: correlation with a gold lexicon and precision@k
//! of response rankings.

use std::collections::HashSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use moralnet::data_io::{parse_cue_list, parse_embeddings_csv, parse_embeddings_word2vec, parse_moral_lexicon, LexiconKind, Source};
use moralnet::evaluation::{embedding_precision_at_k, evaluate_gmn, precision_at_k, EvalReport, PrecisionCurve};
use moralnet::graph::{build_graph, Symmetrization, Vocabulary};
use moralnet::propagation::read_moral_matrix;
use moralnet::Dimension;
use serde::Serialize;

use crate::build::load_corpus;
use crate::output::RunOutput;
use crate::{invalid, require_opt_file, CliResult};

/// Published correlations of the MAG baseline, shown next to ours.
const MAG_REFERENCE: [(&str, f64); 6] =
    [("care", 0.29), ("fairness", 0.23), ("loyalty", 0.30), ("authority", 0.21), ("sanctity", 0.25), ("all", 0.20)];

#[derive(ValueEnum, Serialize, Clone, Copy, Debug)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Csv,
    Word2vec,
}

#[derive(Args, Serialize, Debug)]
pub struct EvaluateArgs {
    /// Seed-adjusted score file written by `build` (gmn_eval.csv).
    #[arg(long)]
    pub gmn: Option<PathBuf>,
    /// Soft gold lexicon.
    #[arg(long)]
    pub emfd: Option<PathBuf>,
    /// Responses whose rankings are scored.
    #[arg(long)]
    pub candidate: Option<PathBuf>,
    #[arg(long, default_value = "llm")]
    pub candidate_source: Source,
    /// Responses defining the reference sets.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value = "human")]
    pub reference_source: Source,
    /// Cue list shared by both graphs; defaults to the union of their cues.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
    /// Cue list restricting which cues are scored for precision@k.
    #[arg(long)]
    pub subset: Option<PathBuf>,
    /// Word vectors for the nearest-neighbor baseline.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub embeddings_format: EmbeddingFormat,
    #[arg(long, default_value = "sum")]
    pub symmetrization: Symmetrization,
    /// Largest k of the precision curve.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Tie-shuffling runs per curve.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn check_eval_header(path: &Path) -> CliResult<()> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut first = String::new();
    std::io::BufReader::new(file).read_line(&mut first).with_context(|| format!("reading {}", path.display()))?;
    if first.trim_end().rsplit(',').next() != Some("in_eval") {
        return Err(invalid(format!("--gmn: '{}' is not a seed-adjusted score file (expected an in_eval column)", path.display())));
    }
    Ok(())
}

fn print_table(report: &EvalReport) {
    println!("{:<10} {:>8} {:>10} {:>7} {:>6}", "dimension", "rho", "p", "n", "MAG");
    for row in &report.rows {
        let label = row.label();
        let mag = MAG_REFERENCE.iter().find(|(l, _)| *l == label).map(|(_, v)| *v).unwrap_or(f64::NAN);
        let rho = row.rho.map_or("-".to_string(), |r| format!("{r:.2}"));
        let p = row.p_value.map_or("-".to_string(), |p| format!("{p:.2e}"));
        let flag = if row.low_support { " (low support)" } else { "" };
        println!("{label:<10} {rho:>8} {p:>10} {:>7} {mag:>6.2}{flag}", row.n);
    }
}

fn print_curve(name: &str, c: &PrecisionCurve) {
    let last = c.mean.last().copied().unwrap_or(f64::NAN);
    println!(
        "{name}: {} cues scored, {} skipped, precision@{} = {last:.3}",
        c.evaluated_cues,
        c.skipped_cues.len(),
        c.ks.last().copied().unwrap_or(0)
    );
}

#[derive(Serialize)]
struct CurveSummary<'a> {
    evaluated_cues: usize,
    skipped_cues: &'a [String],
    mean_strength_correlation: Option<f64>,
    strength_correlation_cues: usize,
    low_support_cues: usize,
}

impl<'a> From<&'a PrecisionCurve> for CurveSummary<'a> {
    fn from(c: &'a PrecisionCurve) -> Self {
        Self {
            evaluated_cues: c.evaluated_cues,
            skipped_cues: &c.skipped_cues,
            mean_strength_correlation: c.mean_strength_correlation,
            strength_correlation_cues: c.strength_correlation_cues,
            low_support_cues: c.low_support_cues,
        }
    }
}

pub fn run(args: &EvaluateArgs, seed: u64) -> CliResult<()> {
    require_opt_file("--gmn", args.gmn.as_deref())?;
    require_opt_file("--emfd", args.emfd.as_deref())?;
    require_opt_file("--candidate", args.candidate.as_deref())?;
    require_opt_file("--reference", args.reference.as_deref())?;
    require_opt_file("--vocabulary", args.vocabulary.as_deref())?;
    require_opt_file("--subset", args.subset.as_deref())?;
    require_opt_file("--embeddings", args.embeddings.as_deref())?;
    if args.gmn.is_some() && args.emfd.is_none() {
        return Err(invalid("--emfd is required with --gmn"));
    }
    if args.candidate.is_some() != args.reference.is_some() {
        return Err(invalid("--candidate and --reference must be given together"));
    }
    if args.embeddings.is_some() && args.reference.is_none() {
        return Err(invalid("--embeddings needs --reference"));
    }
    if args.gmn.is_none() && args.reference.is_none() {
        return Err(invalid("nothing to evaluate: give --gmn/--emfd and/or --candidate/--reference"));
    }
    if args.k == 0 || args.runs == 0 {
        return Err(invalid("--k and --runs must be positive"));
    }

    let mut out = RunOutput::create(&args.out_dir)?;
    let mut summary = serde_json::Map::new();
    summary.insert("seed".into(), seed.into());

    if let (Some(gmn), Some(emfd)) = (&args.gmn, &args.emfd) {
        check_eval_header(gmn)?;
        out.input("--gmn", gmn);
        out.input("--emfd", emfd);
        let gold = parse_moral_lexicon(emfd, LexiconKind::Soft).context("reading --emfd")?;
        let (vocab, scores, mask) = read_moral_matrix(gmn).context("reading --gmn")?;
        let report = evaluate_gmn(&vocab, &scores, &mask, &gold).context("correlating with gold")?;
        out.report("correlation.csv", &report.to_report())?;
        print_table(&report);
        let care = report.dimension(Dimension::Care);
        summary.insert("care_rho".into(), serde_json::json!(care.rho));
        summary.insert("all_rho".into(), serde_json::json!(report.overall().rho));
    }

    if let (Some(cand), Some(refp)) = (&args.candidate, &args.reference) {
        out.input("--candidate", cand);
        out.input("--reference", refp);
        out.input_opt("--vocabulary", args.vocabulary.as_deref());
        out.input_opt("--subset", args.subset.as_deref());
        let (cand_corpus, _) = load_corpus(cand, args.candidate_source)?;
        let (ref_corpus, _) = load_corpus(refp, args.reference_source)?;
        let vocab = match &args.vocabulary {
            Some(p) => Vocabulary::sorted(parse_cue_list(p).context("reading --vocabulary")?.into_iter().map(|c| c.cue)),
            None => Vocabulary::sorted(cand_corpus.cues().into_iter().chain(ref_corpus.cues()).map(str::to_string)),
        };
        let candidate = build_graph(&cand_corpus, &vocab, args.symmetrization).context("building candidate graph")?;
        let reference = build_graph(&ref_corpus, &vocab, args.symmetrization).context("building reference graph")?;
        let cues: Vec<String> = match &args.subset {
            Some(p) => parse_cue_list(p).context("reading --subset")?.into_iter().map(|c| c.cue).collect(),
            None => {
                let shared: HashSet<&str> = cand_corpus.cues().into_iter().collect();
                ref_corpus.cues().into_iter().filter(|c| shared.contains(c)).map(str::to_string).collect()
            }
        };
        let curve = precision_at_k(&candidate, &reference, &cues, args.k, args.runs, seed).context("precision@k")?;
        out.report("precision.csv", &curve.to_report())?;
        print_curve("candidate", &curve);
        summary.insert("precision".into(), serde_json::to_value(CurveSummary::from(&curve)).context("summary")?);

        if let Some(emb) = &args.embeddings {
            out.input("--embeddings", emb);
            let keep: HashSet<String> = reference.vocab().tokens().iter().cloned().collect();
            let table = match args.embeddings_format {
                EmbeddingFormat::Csv => parse_embeddings_csv(emb, Some(&keep)),
                EmbeddingFormat::Word2vec => parse_embeddings_word2vec(emb, Some(&keep)),
            }
            .context("reading --embeddings")?;
            let base = embedding_precision_at_k(&table, &reference, &cues, args.k, args.runs, seed)
                .context("embedding precision@k")?;
            out.report("precision_embedding.csv", &base.to_report())?;
            print_curve("embedding baseline", &base);
            summary.insert("embedding_precision".into(), serde_json::to_value(CurveSummary::from(&base)).context("summary")?);
        }
    }

    out.json("evaluate_summary.json", &summary)?;
    out.finish("evaluate", seed, args)
}
