use super::{gen_erp_session, gen_resting, SynthError, SynthSpec};
use crate::features::BandName;
use crate::ingest::{EventStream, Recording};
use crate::montage::Region;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A population whose ERP signal-to-noise ratio rises with a per-subject
/// knob in [0, 1] while frontal delta power changes with it by `slope_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub seed: u64,
    /// Frontal delta power change in dB from the lowest to the highest knob.
    pub slope_db: f64,
    /// Per-subject Gaussian scatter of frontal delta power around the trend, dB.
    pub noise_db: f64,
    /// P300 amplitude at knob 0 and knob 1, µV.
    pub p300_range: (f64, f64),
    /// Per-subject Gaussian scatter of every other band's power, dB.
    pub spread_db: f64,
    /// White noise in the resting recordings; the sessions use `base.noise_sd`.
    pub resting_noise_sd: f64,
    pub train_trials: usize,
    pub test_trials: usize,
    pub base: SynthSpec,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_subjects: 16,
            seed: 0,
            slope_db: -6.0,
            noise_db: 0.0,
            p300_range: (0.7, 1.5),
            spread_db: 2.0,
            resting_noise_sd: 0.5,
            train_trials: 10,
            test_trials: 20,
            base: SynthSpec {
                spatial_coherence: 0.8,
                noise_sd: 6.0,
                ..SynthSpec::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSubject {
    pub subject_id: String,
    pub knob: f64,
    pub resting: Recording,
    pub train: (Recording, EventStream),
    pub test: (Recording, EventStream),
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, subject: usize, part: u64) -> u64 {
    splitmix(splitmix(seed ^ splitmix(subject as u64)) ^ part)
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.n_subjects < 3 {
            return bad(format!("a cohort needs at least 3 subjects, got {}", self.n_subjects));
        }
        let (lo, hi) = self.p300_range;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return bad(format!("p300_range must be ordered and non-negative, got ({lo}, {hi})"));
        }
        for (name, v) in [
            ("slope_db", self.slope_db),
            ("noise_db", self.noise_db),
            ("spread_db", self.spread_db),
        ] {
            if !v.is_finite() || (name != "slope_db" && v < 0.0) {
                return bad(format!("{name} is invalid: {v}"));
            }
        }
        if self.train_trials == 0 || self.test_trials == 0 {
            return bad("train_trials and test_trials must be positive".into());
        }
        if !(self.resting_noise_sd >= 0.0) {
            return bad(format!(
                "resting_noise_sd must be non-negative, got {}",
                self.resting_noise_sd
            ));
        }
        self.base.validate()
    }

    pub fn knob(&self, index: usize) -> f64 {
        index as f64 / (self.n_subjects - 1) as f64
    }

    /// Generation specs for one subject's resting recording and its training
    /// and test sessions.
    pub fn subject_specs(&self, index: usize) -> Result<(SynthSpec, SynthSpec, SynthSpec), SynthError> {
        self.validate()?;
        if index >= self.n_subjects {
            return Err(SynthError::InvalidSpec(format!(
                "subject {index} outside cohort of {}",
                self.n_subjects
            )));
        }
        let knob = self.knob(index);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, index, 0));
        let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
        let id = format!("S{:02}", index + 1);

        let mut resting = self.base.clone();
        resting.subject_id = id.clone();
        resting.seed = derive_seed(self.seed, index, 1);
        resting.noise_sd = self.resting_noise_sd;
        for region in Region::ALL {
            for band in BandName::ALL {
                let base = self.base.amplitude(region, band);
                let db = if (region, band) == (Region::Frontal, BandName::Delta) {
                    self.slope_db * knob + self.noise_db * z()
                } else {
                    self.spread_db * z()
                };
                resting.set_amplitude(region, band, base * 10f64.powf(db / 20.0));
            }
        }

        let mut session = self.base.clone();
        session.subject_id = id;
        session.erp.p300_amplitude = self.p300_range.0 + knob * (self.p300_range.1 - self.p300_range.0);
        let mut train = session.clone();
        train.seed = derive_seed(self.seed, index, 2);
        train.n_trials = self.train_trials;
        let mut test = session;
        test.seed = derive_seed(self.seed, index, 3);
        test.n_trials = self.test_trials;
        Ok((resting, train, test))
    }
}

pub fn gen_subject(spec: &CohortSpec, index: usize) -> Result<SyntheticSubject, SynthError> {
    let (resting, train, test) = spec.subject_specs(index)?;
    Ok(SyntheticSubject {
        subject_id: resting.subject_id.clone(),
        knob: spec.knob(index),
        resting: gen_resting(&resting)?,
        train: gen_erp_session(&train)?,
        test: gen_erp_session(&test)?,
    })
}

/// Every subject of the cohort, generated in parallel.
pub fn gen_cohort(spec: &CohortSpec) -> Result<Vec<SyntheticSubject>, SynthError> {
    spec.validate()?;
    (0..spec.n_subjects)
        .into_par_iter()
        .map(|i| gen_subject(spec, i))
        .collect()
}

/// Predictor table with a known linear link to performance in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedLinear {
    /// Subjects x predictors, standard normal.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    /// Intercept first.
    pub coefficients: Vec<f64>,
    pub noise_sd: f64,
}

pub fn planted_linear_cohort(n_subjects: usize, n_predictors: usize, noise_sd: f64, seed: u64) -> PlantedLinear {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coefficients = vec![50.0];
    coefficients.extend((0..n_predictors).map(|j| if j % 2 == 0 { 12.0 } else { -8.0 }));
    let x: Vec<Vec<f64>> = (0..n_subjects)
        .map(|_| (0..n_predictors).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let y = x
        .iter()
        .map(|row| {
            let e: f64 = StandardNormal.sample(&mut rng);
            coefficients[0] + row.iter().zip(&coefficients[1..]).map(|(a, b)| a * b).sum::<f64>() + noise_sd * e
        })
        .collect();
    PlantedLinear {
        x,
        y,
        coefficients,
        noise_sd,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CohortSpec {
        CohortSpec {
            n_subjects: 4,
            train_trials: 1,
            test_trials: 1,
            base: SynthSpec {
                duration_s: 10.0,
                ..CohortSpec::default().base
            },
            ..CohortSpec::default()
        }
    }

    #[test]
    fn cohort_is_deterministic_and_planted() {
        let spec = small();
        let a = gen_cohort(&spec).unwrap();
        let b = gen_cohort(&spec).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.resting.data, y.resting.data);
            assert_eq!(x.train, y.train);
            assert_eq!(x.test, y.test);
        }
        assert_eq!(
            a.iter().map(|s| s.knob).collect::<Vec<_>>(),
            vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]
        );
        let specs: Vec<_> = (0..4).map(|i| spec.subject_specs(i).unwrap()).collect();
        for (i, (r, tr, te)) in specs.iter().enumerate() {
            let knob = i as f64 / 3.0;
            let delta = r.amplitude(Region::Frontal, BandName::Delta);
            assert!((20.0 * (delta / 6.0).log10() - spec.slope_db * knob).abs() < 1e-9);
            assert!((tr.erp.p300_amplitude - (0.7 + 0.8 * knob)).abs() < 1e-12);
            assert_ne!(tr.seed, te.seed);
        }
        assert!(matches!(
            gen_cohort(&CohortSpec {
                n_subjects: 2,
                ..small()
            }),
            Err(SynthError::InvalidSpec(_))
        ));
    }

    #[test]
    fn planted_linear_is_seeded() {
        let a = planted_linear_cohort(16, 2, 5.0, 3);
        assert_eq!(a, planted_linear_cohort(16, 2, 5.0, 3));
        assert_eq!(a.x.len(), 16);
        assert_eq!(a.coefficients, vec![50.0, 12.0, -8.0]);
        let exact = planted_linear_cohort(16, 2, 0.0, 3);
        for (row, y) in exact.x.iter().zip(&exact.y) {
            assert!((50.0 + 12.0 * row[0] - 8.0 * row[1] - y).abs() < 1e-12);
        }
    }
}
