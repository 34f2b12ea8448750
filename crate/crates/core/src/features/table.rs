//! Per-subject feature tables and their CSV form
//! `subject,feature_kind,region_or_pair,band,value`.

use super::{band_psd, compute_spectrum, instantaneous_phase, region_band_power, region_pair_plv};
use super::{BandName, FeatureError, FrequencyBand};
use crate::ingest::SpectrumWindow;
use crate::montage::{Region, RegionMap, RegionPair};
use crate::preprocess::EpochSet;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Psd,
    Plv,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Psd => "psd",
            FeatureKind::Plv => "plv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureLocus {
    Region(Region),
    Pair(RegionPair),
}

impl fmt::Display for FeatureLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureLocus::Region(r) => f.write_str(r.name()),
            FeatureLocus::Pair(p) => f.write_str(&p.label()),
        }
    }
}

/// A single predictor, written `kind:locus:band`, e.g. `psd:frontal:delta`
/// or `plv:F-C:alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId {
    pub locus: FeatureLocus,
    pub band: BandName,
}

impl FeatureId {
    pub fn psd(region: Region, band: BandName) -> Self {
        Self {
            locus: FeatureLocus::Region(region),
            band,
        }
    }

    pub fn plv(pair: RegionPair, band: BandName) -> Self {
        Self {
            locus: FeatureLocus::Pair(pair),
            band,
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self.locus {
            FeatureLocus::Region(_) => FeatureKind::Psd,
            FeatureLocus::Pair(_) => FeatureKind::Plv,
        }
    }

    pub fn from_parts(kind: &str, locus: &str, band: &str) -> Option<Self> {
        let band = BandName::parse(band)?;
        match kind {
            "psd" => Some(Self::psd(Region::parse(locus)?, band)),
            "plv" => {
                if !locus.contains('-') {
                    return None;
                }
                Some(Self::plv(RegionPair::parse(locus)?, band))
            }
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut it = s.split(':');
        let (k, l, b) = (it.next()?, it.next()?, it.next()?);
        if it.next().is_some() {
            return None;
        }
        Self::from_parts(k, l, b)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.kind().as_str(), self.locus, self.band)
    }
}

/// Region band power (dB) and region-pair locking for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFeatureTable {
    pub subject_id: String,
    pub psd: BTreeMap<(Region, BandName), f64>,
    pub plv: BTreeMap<(RegionPair, BandName), f64>,
}

impl BandFeatureTable {
    pub fn new(subject_id: impl Into<String>) -> Self {
        Self {
            subject_id: subject_id.into(),
            psd: BTreeMap::new(),
            plv: BTreeMap::new(),
        }
    }

    pub fn get(&self, id: &FeatureId) -> Option<f64> {
        match id.locus {
            FeatureLocus::Region(r) => self.psd.get(&(r, id.band)).copied(),
            FeatureLocus::Pair(p) => self.plv.get(&(p, id.band)).copied(),
        }
    }

    pub fn insert(&mut self, id: FeatureId, value: f64) {
        match id.locus {
            FeatureLocus::Region(r) => self.psd.insert((r, id.band), value),
            FeatureLocus::Pair(p) => self.plv.insert((p, id.band), value),
        };
    }

    /// Every entry in table order: power by region then band, then locking.
    pub fn entries(&self) -> Vec<(FeatureId, f64)> {
        let psd = self.psd.iter().map(|(&(r, b), &v)| (FeatureId::psd(r, b), v));
        let plv = self.plv.iter().map(|(&(p, b), &v)| (FeatureId::plv(p, b), v));
        psd.chain(plv).collect()
    }

    /// Whether the table holds all 4x5 power and 10x5 locking entries with
    /// locking values in [0, 1].
    pub fn is_complete(&self) -> bool {
        self.psd.len() == Region::ALL.len() * BandName::ALL.len()
            && self.plv.len() == RegionPair::all().len() * BandName::ALL.len()
            && self.plv.values().all(|v| (0.0..=1.0).contains(v))
    }
}

/// Region power and region-pair locking for every band from resting epochs.
pub fn extract_features(
    resting: &EpochSet,
    bands: &[FrequencyBand],
    regions: &RegionMap,
    window: SpectrumWindow,
) -> Result<BandFeatureTable, FeatureError> {
    let spec = compute_spectrum(resting, window)?;
    let mut table = BandFeatureTable::new(resting.subject_id.clone());
    for band in bands {
        let per_channel = band_psd(&spec, band)?;
        for (r, v) in region_band_power(&per_channel, &resting.channel_names, regions)? {
            table.psd.insert((r, band.name), v);
        }
        let phase = instantaneous_phase(resting, band)?;
        for (p, v) in region_pair_plv(&phase, regions)? {
            table.plv.insert((p, band.name), v);
        }
    }
    Ok(table)
}

fn table_err(path: &Path, reason: impl ToString) -> FeatureError {
    FeatureError::Table {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

pub fn write_feature_tables(tables: &[BandFeatureTable], path: &Path) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| table_err(path, e))?;
    w.write_record(["subject", "feature_kind", "region_or_pair", "band", "value"])
        .map_err(|e| table_err(path, e))?;
    for t in tables {
        for (id, v) in t.entries() {
            w.write_record([
                t.subject_id.as_str(),
                id.kind().as_str(),
                &id.locus.to_string(),
                id.band.as_str(),
                &format!("{v:.10}"),
            ])
            .map_err(|e| table_err(path, e))?;
        }
    }
    w.flush().map_err(|e| FeatureError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read tables back in order of first appearance of each subject.
pub fn read_feature_tables(path: &Path) -> Result<Vec<BandFeatureTable>, FeatureError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| table_err(path, e))?;
    let headers = r.headers().map_err(|e| table_err(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["subject", "feature_kind", "region_or_pair", "band", "value"] {
        return Err(table_err(path, "unexpected header"));
    }
    let mut out: Vec<BandFeatureTable> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| table_err(path, e))?;
        let at = |m: &str| table_err(path, format!("row {}: {m}", line + 2));
        let id = FeatureId::from_parts(&rec[1], &rec[2], &rec[3]).ok_or_else(|| at("unknown feature"))?;
        let value: f64 = rec[4].parse().map_err(|_| at("bad value"))?;
        if !value.is_finite() {
            return Err(at("non-finite value"));
        }
        let subject = &rec[0];
        if out.last().map(|t| t.subject_id.as_str()) != Some(subject) {
            if out.iter().any(|t| t.subject_id == subject) {
                return Err(at("subject rows are not contiguous"));
            }
            out.push(BandFeatureTable::new(subject));
        }
        out.last_mut().expect("pushed above").insert(id, value);
    }
    Ok(out)
}
