use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{csv_reader, normalize_token, DataError};
use crate::dimension::{Dimension, DIMENSION_COUNT};

/// Per-dimension scores for one word. `None` means the lexicon gives no
/// value on that dimension (only possible for soft lexicons).
pub type MoralVector = [Option<f64>; DIMENSION_COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconKind {
    /// Expert dictionary with scores in {-1, 0, 1}; supplies propagation seeds.
    Hard,
    /// Crowd-sourced scores in [-1, 1]; supplies gold values.
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoralLexicon {
    pub kind: LexiconKind,
    pub entries: BTreeMap<String, MoralVector>,
}

impl MoralLexicon {
    pub fn get(&self, word: &str) -> Option<&MoralVector> {
        self.entries.get(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_moral_lexicon(path: &Path, kind: LexiconKind) -> Result<MoralLexicon, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_moral_lexicon(file, kind)
}

/// Reads `word,care,fairness,loyalty,authority,sanctity`. Empty cells are 0
/// for hard lexicons and "no value" for soft ones.
pub fn read_moral_lexicon<R: Read>(reader: R, kind: LexiconKind) -> Result<MoralLexicon, DataError> {
    let mut rdr = csv_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["word", "care", "fairness", "loyalty", "authority", "sanctity"];
    let header_ok = headers.len() >= expected.len()
        && expected.iter().zip(headers.iter()).all(|(e, h)| h.trim().eq_ignore_ascii_case(e));
    if !header_ok {
        return Err(DataError::format(1, format!("expected header {}", expected.join(","))));
    }

    let mut entries = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row?;
        let word = normalize_token(row.get(0).unwrap_or(""));
        if word.is_empty() {
            return Err(DataError::format(line, "empty word"));
        }
        let mut scores: MoralVector = [None; DIMENSION_COUNT];
        for dim in Dimension::ALL {
            let cell = row.get(dim.index() + 1).unwrap_or("").trim();
            scores[dim.index()] = parse_score(cell, kind)
                .map_err(|m| DataError::format(line, format!("'{word}' {dim}: {m}")))?;
        }
        if entries.insert(word.clone(), scores).is_some() {
            return Err(DataError::format(line, format!("duplicate word '{word}'")));
        }
    }
    Ok(MoralLexicon { kind, entries })
}

fn parse_score(cell: &str, kind: LexiconKind) -> Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(match kind {
            LexiconKind::Hard => Some(0.0),
            LexiconKind::Soft => None,
        });
    }
    let v: f64 = cell.parse().map_err(|_| format!("'{cell}' is not a number"))?;
    match kind {
        LexiconKind::Hard if v == -1.0 || v == 0.0 || v == 1.0 => Ok(Some(v)),
        LexiconKind::Hard => Err(format!("{cell} is not one of -1, 0, 1")),
        LexiconKind::Soft if (-1.0..=1.0).contains(&v) => Ok(Some(v)),
        LexiconKind::Soft => Err(format!("{cell} is outside [-1, 1]")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Arousal,
    Concreteness,
}

impl NormKind {
    pub fn scale(self) -> (f64, f64) {
        match self {
            NormKind::Arousal => (1.0, 8.0),
            NormKind::Concreteness => (1.0, 5.0),
        }
    }
}

impl FromStr for NormKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arousal" => Ok(NormKind::Arousal),
            "concreteness" => Ok(NormKind::Concreteness),
            other => Err(format!("unknown norm kind '{other}'")),
        }
    }
}

/// Word-level scalar norms (arousal or concreteness ratings).
#[derive(Debug, Clone, PartialEq)]
pub struct NormLexicon {
    pub kind: NormKind,
    pub scale_min: f64,
    pub scale_max: f64,
    pub entries: BTreeMap<String, f64>,
}

impl NormLexicon {
    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }
}

pub fn parse_norm_lexicon(path: &Path, kind: NormKind) -> Result<NormLexicon, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_norm_lexicon(file, kind)
}

/// Reads `word,score`. Scores outside the kind's scale are rejected.
pub fn read_norm_lexicon<R: Read>(reader: R, kind: NormKind) -> Result<NormLexicon, DataError> {
    let (scale_min, scale_max) = kind.scale();
    let mut rdr = csv_reader(reader);
    if rdr.headers()?.len() < 2 {
        return Err(DataError::format(1, "expected header word,score"));
    }
    let mut entries = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = row?;
        let word = normalize_token(row.get(0).unwrap_or(""));
        let raw = row.get(1).unwrap_or("").trim();
        if word.is_empty() {
            return Err(DataError::format(line, "empty word"));
        }
        let score: f64 = raw
            .parse()
            .map_err(|_| DataError::format(line, format!("'{raw}' is not a number")))?;
        if !(scale_min..=scale_max).contains(&score) {
            return Err(DataError::format(
                line,
                format!("'{word}' score {score} outside [{scale_min}, {scale_max}]"),
            ));
        }
        // first occurrence wins when case-folding merges entries
        entries.entry(word).or_insert(score);
    }
    Ok(NormLexicon { kind, scale_min, scale_max, entries })
}
