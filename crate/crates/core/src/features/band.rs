use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    pub const ALL: [BandName; 5] = [
        BandName::Delta,
        BandName::Theta,
        BandName::Alpha,
        BandName::Beta,
        BandName::Gamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Option<BandName> {
        BandName::ALL.into_iter().find(|b| b.as_str().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named frequency band `[f1, f2]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub name: BandName,
    pub f1: f64,
    pub f2: f64,
}

impl FrequencyBand {
    pub fn canonical(name: BandName) -> Self {
        let (f1, f2) = match name {
            BandName::Delta => (0.5, 4.0),
            BandName::Theta => (4.0, 8.0),
            BandName::Alpha => (8.0, 12.0),
            BandName::Beta => (12.0, 30.0),
            BandName::Gamma => (30.0, 45.0),
        };
        Self { name, f1, f2 }
    }

    pub fn canonical_set() -> Vec<FrequencyBand> {
        BandName::ALL.into_iter().map(Self::canonical).collect()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.f1 + self.f2)
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f1 && f <= self.f2
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}-{} Hz)", self.name, self.f1, self.f2)
    }
}
