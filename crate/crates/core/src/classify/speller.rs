use super::{check_sequences, ClassifyError, FeatureVector, TrainedClassifier};
use crate::ingest::{N_OBJECTS, SEQUENCES_PER_TRIAL};
use std::collections::BTreeMap;
use std::path::Path;

/// Selection accuracy after 1..=10 sequences for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct SpellerResult {
    pub subject_id: String,
    pub accuracy_by_sequence: Vec<f64>,
    pub literate: bool,
}

impl SpellerResult {
    /// Flag literacy from accuracy at the full sequence count.
    pub fn new(subject_id: impl Into<String>, accuracy_by_sequence: Vec<f64>, threshold: f64) -> Self {
        let literate = accuracy_by_sequence.last().is_some_and(|&a| a >= threshold);
        Self {
            subject_id: subject_id.into(),
            accuracy_by_sequence,
            literate,
        }
    }

    /// Highest accuracy over sequence counts.
    pub fn best_accuracy(&self) -> f64 {
        self.accuracy_by_sequence.iter().copied().fold(0.0, f64::max)
    }
}

/// Object with the largest summed score over flashes from the first `s`
/// sequences; ties go to the lowest object index.
///
/// Each entry is `(sequence_index, object_ids, score)` for one flash.
pub fn decode_from_scores(flashes: &[(usize, &[u8], f64)], s: usize) -> u8 {
    let mut evidence = [0.0f64; N_OBJECTS];
    for &(seq, objects, score) in flashes {
        if seq <= s {
            for &o in objects {
                evidence[o as usize] += score;
            }
        }
    }
    let mut best = 0;
    for o in 1..N_OBJECTS {
        if evidence[o] > evidence[best] {
            best = o;
        }
    }
    best as u8
}

fn trial_flashes<'a>(vectors: &'a [FeatureVector], scores: &[f64], trial_id: usize) -> Vec<(usize, &'a [u8], f64)> {
    vectors
        .iter()
        .zip(scores)
        .filter(|(v, _)| v.trial_id == trial_id)
        .map(|(v, &sc)| (v.sequence_index, v.object_ids.as_slice(), sc))
        .collect()
}

fn require_sequences(flashes: &[(usize, &[u8], f64)], trial: usize, s: usize) -> Result<(), ClassifyError> {
    check_sequences(s)?;
    let have = flashes.iter().map(|f| f.0).max().unwrap_or(0);
    if have < s {
        return Err(ClassifyError::MissingSequences { trial, have, need: s });
    }
    Ok(())
}

/// Decode one trial using the classifier's decision values.
pub fn decode_target(
    clf: &TrainedClassifier,
    test: &[FeatureVector],
    trial_id: usize,
    s: usize,
) -> Result<u8, ClassifyError> {
    let in_trial: Vec<FeatureVector> = test.iter().filter(|v| v.trial_id == trial_id).cloned().collect();
    let scores = clf.decisions(&in_trial)?;
    let flashes = trial_flashes(&in_trial, &scores, trial_id);
    require_sequences(&flashes, trial_id, s)?;
    Ok(decode_from_scores(&flashes, s))
}

/// The object shared by every target flash of a trial.
pub fn true_target(test: &[FeatureVector], trial_id: usize) -> Result<u8, ClassifyError> {
    let mut common: Option<Vec<u8>> = None;
    for v in test.iter().filter(|v| v.trial_id == trial_id && v.is_target) {
        common = Some(match common {
            None => v.object_ids.clone(),
            Some(c) => c.into_iter().filter(|o| v.object_ids.contains(o)).collect(),
        });
    }
    match common.as_deref() {
        Some([only]) => Ok(*only),
        _ => Err(ClassifyError::AmbiguousTarget(trial_id)),
    }
}

/// Accuracy per sequence count from precomputed per-vector scores.
pub fn accuracy_from_scores(
    subject_id: &str,
    test: &[FeatureVector],
    scores: &[f64],
    threshold: f64,
) -> Result<SpellerResult, ClassifyError> {
    if scores.len() != test.len() {
        return Err(ClassifyError::ScoreCount(scores.len(), test.len()));
    }
    let trials: Vec<usize> = test
        .iter()
        .map(|v| v.trial_id)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if trials.is_empty() {
        return Err(ClassifyError::NoTrials);
    }
    let mut hits = vec![0usize; SEQUENCES_PER_TRIAL];
    for &t in &trials {
        let target = true_target(test, t)?;
        let flashes = trial_flashes(test, scores, t);
        require_sequences(&flashes, t, SEQUENCES_PER_TRIAL)?;
        for (s, hit) in hits.iter_mut().enumerate() {
            if decode_from_scores(&flashes, s + 1) == target {
                *hit += 1;
            }
        }
    }
    let acc = hits.into_iter().map(|h| h as f64 / trials.len() as f64).collect();
    Ok(SpellerResult::new(subject_id, acc, threshold))
}

/// Accuracy per sequence count of a trained classifier on a test session.
pub fn accuracy_by_sequence(
    clf: &TrainedClassifier,
    subject_id: &str,
    test: &[FeatureVector],
    threshold: f64,
) -> Result<SpellerResult, ClassifyError> {
    let scores = clf.decisions(test)?;
    accuracy_from_scores(subject_id, test, &scores, threshold)
}

fn file_err(path: &Path, reason: impl ToString) -> ClassifyError {
    ClassifyError::File {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// CSV `subject,s,accuracy,literate`, one row per subject and sequence count.
pub fn write_speller_results(results: &[SpellerResult], path: &Path) -> Result<(), ClassifyError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| file_err(path, e))?;
    w.write_record(["subject", "s", "accuracy", "literate"])
        .map_err(|e| file_err(path, e))?;
    for r in results {
        for (k, a) in r.accuracy_by_sequence.iter().enumerate() {
            w.write_record([
                r.subject_id.clone(),
                (k + 1).to_string(),
                format!("{a}"),
                r.literate.to_string(),
            ])
            .map_err(|e| file_err(path, e))?;
        }
    }
    w.flush().map_err(|e| file_err(path, e))
}

pub fn read_speller_results(path: &Path) -> Result<Vec<SpellerResult>, ClassifyError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| file_err(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, (Vec<(usize, f64)>, bool)> = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| file_err(path, e))?;
        let at = |m: &str| file_err(path, format!("row {}: {m}", line + 2));
        if rec.len() != 4 {
            return Err(at("expected 4 fields"));
        }
        let s: usize = rec[1].parse().map_err(|_| at("bad s"))?;
        let a: f64 = rec[2].parse().map_err(|_| at("bad accuracy"))?;
        let lit: bool = rec[3].parse().map_err(|_| at("bad literate flag"))?;
        if !(0.0..=1.0).contains(&a) {
            return Err(at("accuracy outside [0, 1]"));
        }
        let entry = rows.entry(rec[0].to_string()).or_insert_with(|| {
            order.push(rec[0].to_string());
            (Vec::new(), lit)
        });
        entry.0.push((s, a));
    }
    order
        .into_iter()
        .map(|subject| {
            let (mut acc, literate) = rows.remove(&subject).expect("recorded above");
            acc.sort_by_key(|p| p.0);
            if acc.iter().enumerate().any(|(k, p)| p.0 != k + 1) {
                return Err(file_err(
                    path,
                    format!("subject {subject}: sequence counts must run 1..n"),
                ));
            }
            Ok(SpellerResult {
                subject_id: subject,
                accuracy_by_sequence: acc.into_iter().map(|p| p.1).collect(),
                literate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{FLASHES_PER_SEQUENCE, OBJECTS_PER_FLASH};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Groups 0-5 are rows, 6-11 are columns of the 6x6 matrix.
    fn group_objects(g: u8) -> Vec<u8> {
        let n = OBJECTS_PER_FLASH as u8;
        if g < n {
            (0..n).map(|c| g * n + c).collect()
        } else {
            (0..n).map(|r| r * n + (g - n)).collect()
        }
    }

    fn session(rng: &mut ChaCha8Rng, n_trials: usize) -> Vec<FeatureVector> {
        let mut out = Vec::new();
        for trial in 0..n_trials {
            let target: u8 = rng.random_range(0..36);
            for seq in 1..=SEQUENCES_PER_TRIAL {
                let mut groups: Vec<u8> = (0..FLASHES_PER_SEQUENCE as u8).collect();
                groups.shuffle(rng);
                for g in groups {
                    let objects = group_objects(g);
                    out.push(FeatureVector {
                        values: vec![],
                        is_target: objects.contains(&target),
                        trial_id: trial,
                        sequence_index: seq,
                        stimulus_group: g,
                        object_ids: objects,
                    });
                }
            }
        }
        out
    }

    #[test]
    fn dominant_object_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let test = session(&mut rng, 1);
        let scores: Vec<f64> = test
            .iter()
            .map(|v| if v.object_ids.contains(&7) { 1.0 } else { -1.0 })
            .collect();
        let flashes = trial_flashes(&test, &scores, 0);
        for s in 1..=10 {
            assert_eq!(decode_from_scores(&flashes, s), 7);
        }
        let flat = vec![0.25; test.len()];
        assert_eq!(decode_from_scores(&trial_flashes(&test, &flat, 0), 10), 0);
    }

    #[test]
    fn oracle_scores_are_always_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let test = session(&mut rng, 20);
        let scores: Vec<f64> = test.iter().map(|v| if v.is_target { 1.0 } else { 0.0 }).collect();
        let r = accuracy_from_scores("S", &test, &scores, 0.3).unwrap();
        assert_eq!(r.accuracy_by_sequence, vec![1.0; 10]);
        assert!(r.literate);
    }

    #[test]
    fn scaling_scores_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let test = session(&mut rng, 30);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let scores: Vec<f64> = test
            .iter()
            .map(|v| normal.sample(&mut rng) + if v.is_target { 0.5 } else { 0.0 })
            .collect();
        let scaled: Vec<f64> = scores.iter().map(|s| s * 3.7).collect();
        let a = accuracy_from_scores("S", &test, &scores, 0.3).unwrap();
        let b = accuracy_from_scores("S", &test, &scaled, 0.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn literacy_threshold() {
        let mut low = vec![0.1; 10];
        low[9] = 0.225;
        assert!(!SpellerResult::new("A", low, 0.30).literate);
        let mut high = vec![0.5; 10];
        high[9] = 0.758;
        assert!(SpellerResult::new("B", high, 0.30).literate);
        let mut edge = vec![0.0; 10];
        edge[9] = 0.30;
        assert!(SpellerResult::new("C", edge, 0.30).literate);
    }

    #[test]
    fn missing_sequences_and_bad_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut test = session(&mut rng, 1);
        test.retain(|v| v.sequence_index <= 4);
        let scores = vec![0.0; test.len()];
        assert!(matches!(
            require_sequences(&trial_flashes(&test, &scores, 0), 0, 5),
            Err(ClassifyError::MissingSequences { have: 4, need: 5, .. })
        ));
        assert!(matches!(
            accuracy_from_scores("S", &[], &[], 0.3),
            Err(ClassifyError::NoTrials)
        ));
        test.iter_mut().for_each(|v| v.is_target = false);
        assert!(matches!(true_target(&test, 0), Err(ClassifyError::AmbiguousTarget(0))));
    }

    #[test]
    fn chance_level_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let test = session(&mut rng, 2000);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let scores: Vec<f64> = test.iter().map(|_| normal.sample(&mut rng)).collect();
        let r = accuracy_from_scores("S", &test, &scores, 0.3).unwrap();
        let p: f64 = 1.0 / 36.0;
        let se = (p * (1.0 - p) / 2000.0).sqrt();
        for a in &r.accuracy_by_sequence {
            assert!((a - p).abs() < 3.0 * se, "{a}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let rs = vec![
            SpellerResult::new("S01", (1..=10).map(|k| k as f64 / 20.0).collect(), 0.3),
            SpellerResult::new("S02", vec![0.1; 10], 0.3),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("perf.csv");
        write_speller_results(&rs, &p).unwrap();
        assert_eq!(read_speller_results(&p).unwrap(), rs);
        assert_eq!(rs[0].best_accuracy(), 0.5);
    }
}
