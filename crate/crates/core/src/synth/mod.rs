//! Seeded synthetic EEG with known ground truth: resting recordings with
//! planted band power and phase coupling, speller sessions with a planted
//! P300, and cohorts whose spectral features track speller performance.

mod cohort;
mod session;
pub mod signal;

pub use cohort::{gen_cohort, gen_subject, planted_linear_cohort, CohortSpec, PlantedLinear, SyntheticSubject};
pub use session::{gen_erp_session, gen_resting, group_objects, TRIAL_LEAD_S, TRIAL_TAIL_S};

use crate::features::BandName;
use crate::ingest::{IngestError, N_OBJECTS};
use crate::montage::Region;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {reason}")]
    File { path: String, reason: String },
}

/// Phase coupling of `follower` to `leader` in one band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub leader: Region,
    pub follower: Region,
    pub band: BandName,
    /// Expected phase-locking value between the two regions, in [0, 1].
    pub plv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErpShape {
    /// Peak of the target deflection at the central sites, µV.
    pub p300_amplitude: f64,
    pub latency_ms: f64,
    /// Gaussian half-extent; the standard deviation is half of it.
    pub width_ms: f64,
}

impl Default for ErpShape {
    fn default() -> Self {
        Self {
            p300_amplitude: 2.0,
            latency_ms: 300.0,
            width_ms: 200.0,
        }
    }
}

fn default_amplitudes() -> BTreeMap<Region, BTreeMap<BandName, f64>> {
    let per_band = [
        (BandName::Delta, 6.0),
        (BandName::Theta, 4.0),
        (BandName::Alpha, 5.0),
        (BandName::Beta, 2.0),
        (BandName::Gamma, 1.0),
    ];
    Region::ALL
        .into_iter()
        .map(|r| (r, per_band.into_iter().collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub subject_id: String,
    pub fs: f64,
    /// Resting recording length.
    pub duration_s: f64,
    /// RMS amplitude in µV per region and band; absent entries are silent.
    pub band_amplitudes: BTreeMap<Region, BTreeMap<BandName, f64>>,
    pub coupling: Vec<Coupling>,
    pub erp: ErpShape,
    /// White background noise, µV.
    pub noise_sd: f64,
    pub n_trials: usize,
    /// Attended object for every trial; drawn per trial when absent.
    pub target_object: Option<u8>,
    /// Share of each electrode's band activity common to its region.
    pub spatial_coherence: f64,
    /// Span over which a coupled region keeps one phase offset.
    pub jitter_block_s: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            subject_id: "S01".into(),
            fs: 100.0,
            duration_s: 240.0,
            band_amplitudes: default_amplitudes(),
            coupling: Vec::new(),
            erp: ErpShape::default(),
            noise_sd: 2.0,
            n_trials: 10,
            target_object: None,
            spatial_coherence: 1.0,
            jitter_block_s: 2.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return bad(format!("fs must be positive, got {}", self.fs));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad(format!("duration_s must be positive, got {}", self.duration_s));
        }
        for (region, bands) in &self.band_amplitudes {
            for (band, &a) in bands {
                if !(a.is_finite() && a >= 0.0) {
                    return bad(format!("amplitude {region}/{band} must be non-negative, got {a}"));
                }
            }
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return bad(format!("noise_sd must be non-negative, got {}", self.noise_sd));
        }
        let e = &self.erp;
        if !(e.p300_amplitude.is_finite() && e.p300_amplitude >= 0.0) {
            return bad(format!("p300_amplitude must be non-negative, got {}", e.p300_amplitude));
        }
        if !(e.width_ms > 0.0 && e.latency_ms - e.width_ms >= 0.0 && e.latency_ms + e.width_ms <= 800.0) {
            return bad(format!(
                "latency {} ms +/- width {} ms must lie within 0-800 ms",
                e.latency_ms, e.width_ms
            ));
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if let Some(t) = self.target_object {
            if t as usize >= N_OBJECTS {
                return bad(format!("target_object must be below {N_OBJECTS}, got {t}"));
            }
        }
        if !(0.0..=1.0).contains(&self.spatial_coherence) {
            return bad(format!(
                "spatial_coherence must lie in [0, 1], got {}",
                self.spatial_coherence
            ));
        }
        if !(self.jitter_block_s.is_finite() && self.jitter_block_s > 0.0) {
            return bad(format!("jitter_block_s must be positive, got {}", self.jitter_block_s));
        }
        let mut followers = Vec::new();
        for c in &self.coupling {
            if !(0.0..=1.0).contains(&c.plv) {
                return bad(format!("coupling plv must lie in [0, 1], got {}", c.plv));
            }
            if c.leader == c.follower {
                return bad(format!("{} cannot be coupled to itself", c.leader));
            }
            if self.amplitude(c.leader, c.band) == 0.0 {
                return bad(format!("coupling leader {} has no {} activity", c.leader, c.band));
            }
            if followers.contains(&(c.follower, c.band)) {
                return bad(format!("{} follows more than one region in {}", c.follower, c.band));
            }
            followers.push((c.follower, c.band));
        }
        Ok(())
    }

    pub fn amplitude(&self, region: Region, band: BandName) -> f64 {
        self.band_amplitudes
            .get(&region)
            .and_then(|m| m.get(&band))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn set_amplitude(&mut self, region: Region, band: BandName, value: f64) {
        self.band_amplitudes.entry(region).or_default().insert(band, value);
    }

    pub fn from_json(text: &str) -> Result<Self, SynthError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|e| SynthError::File {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let spec = SynthSpec::default();
        spec.validate().unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(SynthSpec::from_json(&text).unwrap(), spec);
        let partial = SynthSpec::from_json(
            r#"{"seed": 9, "coupling": [{"leader": "frontal", "follower": "occipital", "band": "alpha", "plv": 0.5}]}"#,
        )
        .unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.amplitude(Region::Occipital, BandName::Alpha), 5.0);
    }

    #[test]
    fn invalid_specs() {
        let check = |f: &dyn Fn(&mut SynthSpec)| {
            let mut s = SynthSpec::default();
            f(&mut s);
            assert!(matches!(s.validate(), Err(SynthError::InvalidSpec(_))));
        };
        check(&|s| s.set_amplitude(Region::Central, BandName::Beta, -1.0));
        check(&|s| s.erp.latency_ms = 700.0);
        check(&|s| s.erp.latency_ms = 100.0);
        check(&|s| s.target_object = Some(36));
        check(&|s| s.n_trials = 0);
        check(&|s| {
            s.coupling.push(Coupling {
                leader: Region::Frontal,
                follower: Region::Occipital,
                band: BandName::Alpha,
                plv: 1.5,
            })
        });
        check(&|s| {
            s.set_amplitude(Region::Frontal, BandName::Alpha, 0.0);
            s.coupling.push(Coupling {
                leader: Region::Frontal,
                follower: Region::Occipital,
                band: BandName::Alpha,
                plv: 0.5,
            })
        });
        assert!(SynthSpec::from_json(r#"{"sed": 1}"#).is_err());
    }
}
