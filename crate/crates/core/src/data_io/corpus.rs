use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{csv_reader, normalize_token, DataError};

/// Maximum number of responses a participant (or model) gives per cue.
pub const MAX_RESPONSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Human,
    Llm,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Human => "human",
            Source::Llm => "llm",
        })
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" => Ok(Source::Human),
            "llm" => Ok(Source::Llm),
            other => Err(format!("unknown response source '{other}' (expected human or llm)")),
        }
    }
}

/// One trial: a cue and the (up to three) responses given to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub cue: String,
    pub responses: Vec<String>,
    pub source: Source,
    pub trial_id: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssociationCorpus {
    pub records: Vec<ResponseRecord>,
}

impl AssociationCorpus {
    pub fn new(records: Vec<ResponseRecord>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct cues in sorted order.
    pub fn cues(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.cue.as_str()).collect()
    }

    pub fn records_for<'a>(&'a self, cue: &'a str) -> impl Iterator<Item = &'a ResponseRecord> + 'a {
        self.records.iter().filter(move |r| r.cue == cue)
    }
}

/// A row that could not be turned into a record. The row is skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParsedResponses {
    pub corpus: AssociationCorpus,
    pub row_errors: Vec<RowError>,
}

pub fn parse_responses(path: &Path, source: Source) -> Result<ParsedResponses, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_responses(file, source)
}

/// Reads a response table. The header must name `cue`, `R1`, `R2` and `R3`
/// columns (any position, case-insensitive); an optional `trial_id` column
/// is honored, otherwise trials are numbered per cue in file order.
pub fn read_responses<R: Read>(reader: R, source: Source) -> Result<ParsedResponses, DataError> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));

    let cue_col = find("cue");
    let resp_cols: Vec<Option<usize>> = ["r1", "r2", "r3"].iter().map(|n| find(n)).collect();
    let (Some(cue_col), Some(r1), Some(r2), Some(r3)) = (cue_col, resp_cols[0], resp_cols[1], resp_cols[2]) else {
        return Err(DataError::format(1, "missing header: expected columns cue,R1,R2,R3"));
    };
    let trial_col = find("trial_id");

    let mut records = Vec::new();
    let mut row_errors = Vec::new();
    let mut next_trial: HashMap<String, u64> = HashMap::new();

    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                row_errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let cue = normalize_token(row.get(cue_col).unwrap_or(""));
        if cue.is_empty() {
            row_errors.push(RowError { line, message: "empty cue".into() });
            continue;
        }
        let responses: Vec<String> = [r1, r2, r3]
            .iter()
            .filter_map(|&c| row.get(c))
            .map(normalize_token)
            .filter(|t| !t.is_empty())
            .collect();

        let trial_id = match trial_col.and_then(|c| row.get(c)).map(str::trim) {
            Some(raw) if !raw.is_empty() => match raw.parse::<u64>() {
                Ok(id) => id,
                Err(_) => {
                    row_errors.push(RowError { line, message: format!("invalid trial_id '{raw}'") });
                    continue;
                }
            },
            _ => {
                let counter = next_trial.entry(cue.clone()).or_insert(0);
                let id = *counter;
                *counter += 1;
                id
            }
        };

        records.push(ResponseRecord { cue, responses, source, trial_id });
    }

    Ok(ParsedResponses { corpus: AssociationCorpus::new(records), row_errors })
}

/// A cue list entry, optionally carrying a part-of-speech label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CueEntry {
    pub cue: String,
    pub pos: Option<String>,
}

/// Reads a cue list with a `cue` column and an optional `pos` column.
/// Duplicate cues keep their first occurrence.
pub fn read_cue_list<R: Read>(reader: R) -> Result<Vec<CueEntry>, DataError> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let cue_col = find("cue").ok_or_else(|| DataError::format(1, "missing header: expected a cue column"))?;
    let pos_col = find("pos");
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let cue = normalize_token(row.get(cue_col).unwrap_or(""));
        if cue.is_empty() || !seen.insert(cue.clone()) {
            continue;
        }
        let pos = pos_col
            .and_then(|c| row.get(c))
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty());
        out.push(CueEntry { cue, pos });
    }
    Ok(out)
}

pub fn parse_cue_list(path: &Path) -> Result<Vec<CueEntry>, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_cue_list(file)
}

/// Writes `cue,R1,R2,R3,trial_id`; missing responses are empty cells.
pub fn write_corpus(corpus: &AssociationCorpus, path: &Path) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|e| DataError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["cue", "R1", "R2", "R3", "trial_id"])?;
    for rec in &corpus.records {
        let mut row: Vec<String> = Vec::with_capacity(5);
        row.push(rec.cue.clone());
        for slot in 0..MAX_RESPONSES {
            row.push(rec.responses.get(slot).cloned().unwrap_or_default());
        }
        row.push(rec.trial_id.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| DataError::io(path, e))?;
    Ok(())
}
