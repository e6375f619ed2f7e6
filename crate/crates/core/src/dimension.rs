use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The five moral foundations, in the fixed column order used everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Care,
    Fairness,
    Loyalty,
    Authority,
    Sanctity,
}

pub const DIMENSION_COUNT: usize = 5;

impl Dimension {
    pub const ALL: [Dimension; DIMENSION_COUNT] = [
        Dimension::Care,
        Dimension::Fairness,
        Dimension::Loyalty,
        Dimension::Authority,
        Dimension::Sanctity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Dimension::Care => "care",
            Dimension::Fairness => "fairness",
            Dimension::Loyalty => "loyalty",
            Dimension::Authority => "authority",
            Dimension::Sanctity => "sanctity",
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|d| d.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown moral dimension '{s}'"))
    }
}
