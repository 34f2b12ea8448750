//! 32-channel 10-20 montage, scalp coordinates and the four-region grouping.

use serde::{Deserialize, Serialize};
use std::fmt;

/// 2-D azimuthal projection of the montage: (label, azimuth in degrees
/// clockwise from the nose, normalized radius with Cz at 0).
const LAYOUT: [(&str, f64, f64); 32] = [
    ("Fp1", -18.0, 0.511),
    ("Fp2", 18.0, 0.511),
    ("F3", -39.9, 0.344),
    ("Fz", 0.0, 0.256),
    ("F4", 39.9, 0.344),
    ("FC5", -69.3, 0.394),
    ("FC1", -44.9, 0.181),
    ("FCz", 0.0, 0.128),
    ("FC2", 44.9, 0.181),
    ("FC6", 69.3, 0.394),
    ("T7", -90.0, 0.511),
    ("C3", -90.0, 0.256),
    ("C1", -90.0, 0.128),
    ("Cz", 0.0, 0.0),
    ("C2", 90.0, 0.128),
    ("C4", 90.0, 0.256),
    ("T8", 90.0, 0.511),
    ("CP5", -110.7, 0.394),
    ("CP1", -135.1, 0.181),
    ("CPz", 180.0, 0.128),
    ("CP2", 135.1, 0.181),
    ("CP6", 110.7, 0.394),
    ("P7", -126.0, 0.511),
    ("P3", -140.1, 0.344),
    ("P1", -157.7, 0.28),
    ("Pz", 180.0, 0.256),
    ("P2", 157.7, 0.28),
    ("P4", 140.1, 0.344),
    ("P8", 126.0, 0.511),
    ("O1", -162.0, 0.511),
    ("Oz", 180.0, 0.511),
    ("O2", 162.0, 0.511),
];

/// Channel labels of the 32-electrode montage in canonical (front to back) order.
pub fn montage_labels() -> Vec<String> {
    LAYOUT.iter().map(|(l, _, _)| l.to_string()).collect()
}

/// Planar (x, y) position of a montage electrode; x points right, y to the nose.
pub fn electrode_position(label: &str) -> Option<(f64, f64)> {
    LAYOUT
        .iter()
        .find(|(l, _, _)| l.eq_ignore_ascii_case(label))
        .map(|&(_, az, r)| {
            let a = az.to_radians();
            (r * a.sin(), r * a.cos())
        })
}

/// Electrode coordinates for an ordered channel list. Channels outside the
/// compiled table yield `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub positions: Vec<Option<(f64, f64)>>,
}

impl Layout {
    pub fn for_channels<S: AsRef<str>>(channels: &[S]) -> Self {
        Self {
            positions: channels.iter().map(|c| electrode_position(c.as_ref())).collect(),
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        let (xa, ya) = self.positions.get(a).copied().flatten()?;
        let (xb, yb) = self.positions.get(b).copied().flatten()?;
        Some(((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Frontal,
    Central,
    Parietal,
    Occipital,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Frontal, Region::Central, Region::Parietal, Region::Occipital];

    pub fn name(self) -> &'static str {
        match self {
            Region::Frontal => "frontal",
            Region::Central => "central",
            Region::Parietal => "parietal",
            Region::Occipital => "occipital",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Region::Frontal => "F",
            Region::Central => "C",
            Region::Parietal => "P",
            Region::Occipital => "O",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s) || r.abbrev().eq_ignore_ascii_case(s))
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unordered pair of regions, stored with the lower region first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionPair(Region, Region);

impl RegionPair {
    pub fn new(a: Region, b: Region) -> Self {
        if a.index() <= b.index() {
            RegionPair(a, b)
        } else {
            RegionPair(b, a)
        }
    }

    /// The ten pairs F-F, F-C, F-P, F-O, C-C, C-P, C-O, P-P, P-O, O-O.
    pub fn all() -> Vec<RegionPair> {
        let mut out = Vec::with_capacity(10);
        for (i, &a) in Region::ALL.iter().enumerate() {
            for &b in &Region::ALL[i..] {
                out.push(RegionPair(a, b));
            }
        }
        out
    }

    pub fn first(self) -> Region {
        self.0
    }

    pub fn second(self) -> Region {
        self.1
    }

    pub fn is_within(self) -> bool {
        self.0 == self.1
    }

    pub fn label(self) -> String {
        format!("{}-{}", self.0.abbrev(), self.1.abbrev())
    }

    pub fn parse(s: &str) -> Option<RegionPair> {
        let (a, b) = s.split_once('-')?;
        Some(RegionPair::new(Region::parse(a)?, Region::parse(b)?))
    }
}

impl fmt::Display for RegionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Electrode membership of the four scalp regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMap {
    pub frontal: Vec<String>,
    pub central: Vec<String>,
    pub parietal: Vec<String>,
    pub occipital: Vec<String>,
}

fn labels(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl Default for RegionMap {
    fn default() -> Self {
        Self {
            frontal: labels(&["Fp1", "Fp2", "F3", "Fz", "F4", "FC1", "FCz", "FC2"]),
            central: labels(&["C3", "C1", "Cz", "C2", "C4", "CP1", "CPz", "CP2"]),
            parietal: labels(&["FC5", "FC6", "T7", "T8", "CP5", "CP6", "P7", "P8"]),
            occipital: labels(&["P3", "P1", "Pz", "P2", "P4", "O1", "Oz", "O2"]),
        }
    }
}

impl RegionMap {
    pub fn electrodes(&self, region: Region) -> &[String] {
        match region {
            Region::Frontal => &self.frontal,
            Region::Central => &self.central,
            Region::Parietal => &self.parietal,
            Region::Occipital => &self.occipital,
        }
    }

    pub fn all_electrodes(&self) -> impl Iterator<Item = &String> {
        Region::ALL.into_iter().flat_map(|r| self.electrodes(r).iter())
    }

    /// Regions must be non-empty and pairwise disjoint.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for r in Region::ALL {
            if self.electrodes(r).is_empty() {
                return Err(format!("region {r} has no electrodes"));
            }
            for e in self.electrodes(r) {
                if !seen.insert(e.to_ascii_lowercase()) {
                    return Err(format!("electrode {e} assigned to more than one region"));
                }
            }
        }
        Ok(())
    }

    /// Resolve every region's electrodes to channel indices. Returns the first
    /// missing electrode name on failure.
    pub fn indices<S: AsRef<str>>(&self, channels: &[S]) -> Result<[Vec<usize>; 4], String> {
        let find = |name: &str| {
            channels
                .iter()
                .position(|c| c.as_ref().eq_ignore_ascii_case(name))
                .ok_or_else(|| name.to_string())
        };
        let mut out: [Vec<usize>; 4] = Default::default();
        for r in Region::ALL {
            out[r.index()] = self.electrodes(r).iter().map(|e| find(e)).collect::<Result<_, _>>()?;
        }
        Ok(out)
    }

    pub fn region_of(&self, label: &str) -> Option<Region> {
        Region::ALL
            .into_iter()
            .find(|&r| self.electrodes(r).iter().any(|e| e.eq_ignore_ascii_case(label)))
    }
}

pub(crate) fn region_slot(region: Region) -> usize {
    region.index()
}
