use bci_predict::features::FeatureId;
use bci_predict::ingest::StudyConfig;
use bci_predict::pipeline::{erp_epochs, resting_features, run_cohort_study, speller_performance};
use bci_predict::stats::{correlate_features, pearson};
use bci_predict::synth::{gen_erp_session, gen_resting, CohortSpec, SynthSpec};
use rayon::prelude::*;

fn frontal_delta() -> FeatureId {
    FeatureId::parse("psd:frontal:delta").unwrap()
}

#[test]
fn strong_p300_is_decoded_after_ten_sequences() {
    let cfg = StudyConfig::default();
    let mut spec = SynthSpec {
        seed: 31,
        noise_sd: 6.0,
        spatial_coherence: 0.8,
        ..SynthSpec::default()
    };
    spec.erp.p300_amplitude = 3.0;
    let (rec, ev) = gen_erp_session(&spec).unwrap();
    let train = erp_epochs(&rec, &ev, &cfg).unwrap();
    let (rec, ev) = gen_erp_session(&SynthSpec {
        seed: 32,
        n_trials: 40,
        ..spec
    })
    .unwrap();
    let test = erp_epochs(&rec, &ev, &cfg).unwrap();
    let (_, perf) = speller_performance(&train, &test, &cfg).unwrap();
    assert!(perf.accuracy_by_sequence[9] >= 0.95, "{:?}", perf.accuracy_by_sequence);
    assert!(perf.literate);
}

#[test]
fn noiseless_negative_slope_is_recovered_strongly() {
    let cfg = StudyConfig::default();
    let spec = CohortSpec {
        noise_db: 0.0,
        ..CohortSpec::default()
    };
    let study = run_cohort_study(&spec, &cfg).unwrap();
    let table = correlate_features(&study.features, &study.performance).unwrap();
    let r = table.get(&frontal_delta()).unwrap().r;
    assert!(r < -0.9, "{r}");
}

/// With no planted slope the frontal delta power of each subject is an
/// exchangeable draw independent of the session streams, so its correlation
/// with any fixed ordering of subjects has the null distribution that its
/// correlation with accuracy has. That allows checking many cohorts from
/// their resting recordings alone.
#[test]
fn flat_slope_gives_null_correlations() {
    let cfg = StudyConfig::default();
    let cohorts = 60u64;
    let rs: Vec<f64> = (0..cohorts)
        .into_par_iter()
        .map(|seed| {
            let spec = CohortSpec {
                seed: 1000 + seed,
                slope_db: 0.0,
                base: SynthSpec {
                    duration_s: 30.0,
                    ..CohortSpec::default().base
                },
                ..CohortSpec::default()
            };
            let (knobs, power): (Vec<f64>, Vec<f64>) = (0..spec.n_subjects)
                .map(|i| {
                    let (resting, _, _) = spec.subject_specs(i).unwrap();
                    let table = resting_features(&gen_resting(&resting).unwrap(), &cfg).unwrap();
                    (spec.knob(i), table.get(&frontal_delta()).unwrap())
                })
                .unzip();
            pearson(&knobs, &power).unwrap()
        })
        .collect();
    let large = rs.iter().filter(|r| r.abs() >= 0.5).count();
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    // Binomial(60, 0.05) exceeds 7 with probability about 0.01.
    assert!(large <= 7, "{large} of {cohorts} cohorts reached |r| >= 0.5: {rs:?}");
    assert!(mean.abs() < 0.1, "{mean}");
}
