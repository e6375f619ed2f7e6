//! Parsing of every external data file and writing of every report.
//!
//! All inputs are UTF-8 CSV with a header row. Tokens (cues, responses,
//! lexicon words) are normalized with [`normalize_token`] on the way in, so
//! every downstream lookup compares normalized surface forms.

mod corpus;
mod embedding;
mod lexicon;
mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use corpus::{
    parse_cue_list, parse_responses, read_cue_list, read_responses, write_corpus, AssociationCorpus,
    CueEntry, ParsedResponses, MAX_RESPONSES, ResponseRecord, RowError, Source,
};
pub use embedding::{parse_embeddings_csv, parse_embeddings_word2vec, EmbeddingTable};
pub use lexicon::{
    parse_moral_lexicon, parse_norm_lexicon, read_moral_lexicon, read_norm_lexicon, LexiconKind,
    MoralLexicon, MoralVector, NormKind, NormLexicon,
};
pub use report::{
    format_float, read_report_csv, render_csv, render_json, round_sig6, write_report, Column,
    ColumnType, Report, ReportFormat, Value,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("format error at line {line}: {message}")]
    Format { line: u64, message: String },
    #[error("report error: {0}")]
    Report(String),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }

    pub(crate) fn format(line: u64, message: impl Into<String>) -> Self {
        DataError::Format { line, message: message.into() }
    }
}

/// Lowercases, trims, and collapses internal whitespace runs to one space.
/// No stemming: surface forms are the graph's nodes.
pub fn normalize_token(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

pub(crate) fn csv_reader<R: std::io::Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(reader)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization_rules() {
        assert_eq!(normalize_token("  Mother "), "mother");
        assert_eq!(normalize_token("ice \t  Cream"), "ice cream");
        assert_eq!(normalize_token("   "), "");
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(s in "\\PC{0,24}") {
            let once = normalize_token(&s);
            prop_assert_eq!(normalize_token(&once), once.clone());
        }
    }
}
