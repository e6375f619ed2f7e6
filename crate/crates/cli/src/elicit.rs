//! `elicit` and `sweep` subcommands.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use clap::Args;
use moralnet::data_io::{parse_cue_list, parse_responses, write_corpus, Column, ColumnType, Report, Source, Value};
use moralnet::elicitation::{
    elicit_corpus, sweep_temperature, ElicitationConfig, HttpBackend, RunFiles, SweepOptions, DEFAULT_REPEATS,
};
use serde::Serialize;

use crate::output::RunOutput;
use crate::{invalid, require_file, CliError, CliResult};

#[derive(Args, Serialize, Debug)]
pub struct LlmArgs {
    /// Chat-completion URL, e.g. http://localhost:8000/v1/chat/completions.
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = 3)]
    pub max_responses: usize,
    #[arg(long, default_value_t = 60.0)]
    pub timeout_secs: f64,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    #[arg(long, default_value_t = 8)]
    pub max_concurrent: usize,
    #[arg(long, default_value_t = 500)]
    pub retry_backoff_ms: u64,
}

impl LlmArgs {
    fn config(&self, temperature: f64) -> CliResult<ElicitationConfig> {
        validate_endpoint(&self.endpoint)?;
        let timeout = Duration::try_from_secs_f64(self.timeout_secs)
            .ok()
            .filter(|d| !d.is_zero())
            .ok_or_else(|| invalid(format!("--timeout-secs must be positive, got {}", self.timeout_secs)))?;
        let config = ElicitationConfig {
            repeats_per_cue: self.repeats,
            max_responses: self.max_responses,
            timeout,
            max_retries: self.max_retries,
            max_concurrent: self.max_concurrent,
            retry_backoff: Duration::from_millis(self.retry_backoff_ms),
            ..ElicitationConfig::new(&self.endpoint, &self.model, temperature)
        };
        config.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(config)
    }
}

fn validate_endpoint(endpoint: &str) -> CliResult<()> {
    let parsed = url::Url::parse(endpoint).map_err(|e| invalid(format!("--endpoint '{endpoint}' is not a valid URL: {e}")))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
        return Err(invalid(format!("--endpoint '{endpoint}' must be an http(s) URL with a host")));
    }
    Ok(())
}

fn read_cues(path: &Path) -> CliResult<Vec<String>> {
    let cues: Vec<String> = parse_cue_list(path)
        .with_context(|| format!("reading cue list {}", path.display()))?
        .into_iter()
        .map(|c| c.cue)
        .collect();
    if cues.is_empty() {
        return Err(invalid(format!("--cues: '{}' lists no cues", path.display())));
    }
    Ok(cues)
}

#[derive(Args, Serialize, Debug)]
pub struct ElicitArgs {
    /// CSV with a `cue` column.
    #[arg(long)]
    pub cues: PathBuf,
    #[arg(long)]
    pub temperature: f64,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct ElicitSummary<'a> {
    model: &'a str,
    temperature: f64,
    repeats_per_cue: usize,
    cues: usize,
    records: usize,
    malformed_rate: f64,
    flagged_cues: Vec<&'a str>,
    cue_errors: &'a [moralnet::elicitation::CueError],
}

pub fn run_elicit(args: &ElicitArgs, seed: u64) -> CliResult<()> {
    require_file("--cues", &args.cues)?;
    let config = args.llm.config(args.temperature)?;
    let cues = read_cues(&args.cues)?;

    let mut out = RunOutput::create(&args.out_dir)?;
    out.input("--cues", &args.cues);
    let files = RunFiles { checkpoint: Some(out.log_file("checkpoint.jsonl")), audit: Some(out.log_file("audit.jsonl")) };
    let backend = HttpBackend::from_env(&config.endpoint, config.timeout);
    let outcome = elicit_corpus(&cues, &config, &backend, &files).context("elicitation failed")?;
    if outcome.resumed_trials > 0 {
        log::info!("resumed {} trials from the checkpoint", outcome.resumed_trials);
    }
    for e in &outcome.cue_errors {
        log::warn!("cue '{}' incomplete: {}", e.cue, e.message);
    }
    if outcome.corpus.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!("no trial succeeded; see {}", out.path("audit.jsonl").display())));
    }

    let corpus_path = out.produced("corpus.csv");
    write_corpus(&outcome.corpus, &corpus_path).context("writing corpus")?;
    let summary = ElicitSummary {
        model: &config.model,
        temperature: config.temperature,
        repeats_per_cue: config.repeats_per_cue,
        cues: cues.len(),
        records: outcome.corpus.len(),
        malformed_rate: outcome.malformed_rate(),
        flagged_cues: outcome.flagged_cues(),
        cue_errors: &outcome.cue_errors,
    };
    out.json("elicit_summary.json", &summary)?;
    log::info!("{} records for {} cues written to {}", summary.records, summary.cues, corpus_path.display());
    out.finish("elicit", seed, args)
}

#[derive(Args, Serialize, Debug)]
pub struct SweepArgs {
    /// CSV with a `cue` column.
    #[arg(long)]
    pub cues: PathBuf,
    /// Human response table used as the reference.
    #[arg(long)]
    pub human: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5,2.0,2.5")]
    pub temperatures: Vec<f64>,
    /// Random half splits per cue for split-half reliability.
    #[arg(long, default_value_t = moralnet::elicitation::DEFAULT_SPLITS)]
    pub splits: usize,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run_sweep(args: &SweepArgs, seed: u64) -> CliResult<()> {
    require_file("--cues", &args.cues)?;
    require_file("--human", &args.human)?;
    if args.splits == 0 {
        return Err(invalid("--splits must be at least 1"));
    }
    for &t in &args.temperatures {
        args.llm.config(t)?;
    }
    let config = args.llm.config(args.temperatures.first().copied().unwrap_or(1.0))?;
    let cues = read_cues(&args.cues)?;
    let human = parse_responses(&args.human, Source::Human).context("reading human responses")?;
    if !human.row_errors.is_empty() {
        log::warn!("skipped {} malformed rows in {}", human.row_errors.len(), args.human.display());
    }

    let mut out = RunOutput::create(&args.out_dir)?;
    out.input("--cues", &args.cues);
    out.input("--human", &args.human);
    let options = SweepOptions { splits: args.splits, seed, work_dir: Some(out.log_file("sweep_runs")) };
    let backend = HttpBackend::from_env(&config.endpoint, config.timeout);
    let result = sweep_temperature(&cues, &args.temperatures, &human.corpus, &config, &backend, &options)
        .context("temperature sweep failed")?;

    let mut report = Report::new(
        vec![
            Column::new("temperature", ColumnType::Float),
            Column::new("variability", ColumnType::Int),
            Column::new("reliability", ColumnType::Float),
            Column::new("variability_gap", ColumnType::Float),
            Column::new("reliability_gap", ColumnType::Float),
            Column::new("objective", ColumnType::Float),
            Column::new("cue_errors", ColumnType::Int),
            Column::new("error", ColumnType::Str),
        ],
        1,
    );
    for p in &result.points {
        report
            .push(vec![
                Value::from(p.temperature),
                Value::from(p.variability),
                Value::from(p.reliability),
                Value::from(p.variability_gap),
                Value::from(p.reliability_gap),
                Value::from(p.objective),
                Value::from(p.cue_errors),
                Value::from(p.error.clone()),
            ])
            .context("building sweep report")?;
    }
    out.report("sweep.csv", &report)?;
    out.json(
        "sweep_summary.json",
        &serde_json::json!({
            "human_variability": result.human_variability,
            "human_reliability": result.human_reliability,
            "chosen_temperature": result.chosen_temperature,
            "seed": seed,
        }),
    )?;
    println!("chosen temperature: {}", result.chosen_temperature);
    out.finish("sweep", seed, args)
}
