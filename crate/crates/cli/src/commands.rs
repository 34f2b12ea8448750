use crate::error::CliError;
use crate::inputs::{Inputs, Session, FEATURES, MANIFEST, PERFORMANCE, REGRESSION_MODEL, RESTING_EPOCHS, RESTING_RAW};
use crate::svg::{Chart, Series};
use bci_predict::classify::{read_speller_results, write_speller_results, SpellerResult};
use bci_predict::features::BandName;
use bci_predict::features::{
    average_dynamics, extract_features, read_feature_tables, write_feature_tables, BandDynamics, FeatureId,
};
use bci_predict::ingest::{load_config, load_events, load_recording, write_events, write_recording, StudyConfig};
use bci_predict::montage::Region;
use bci_predict::pipeline::{dynamics_tests, erp_epochs, resting_epochs, speller_performance, subject_dynamics};
use bci_predict::preprocess::{read_epochs, write_epochs, EpochSet};
use bci_predict::stats::{
    correlate_features, fit_predictor, write_pair_table, write_permutation_masks, write_region_table,
    write_regression_summary, MaskRow, RegressionModel,
};
use bci_predict::synth::{gen_erp_session, gen_resting, gen_subject, CohortSpec, SynthSpec};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Everything a subcommand needs from the command line.
pub struct Ctx {
    pub inputs: Inputs,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub subjects: Vec<String>,
    pub config: Option<PathBuf>,
    pub outputs: Vec<String>,
}

/// What a subcommand reports back for the manifest.
pub struct Outcome {
    pub config: serde_json::Value,
    pub subjects: Vec<String>,
    pub resting_epoch_s: f64,
    pub svm_c: f64,
    pub artifact_threshold_uv: f64,
    pub reject_channel_fraction: f64,
}

impl Outcome {
    /// Generation uses no study settings; the defaults are reported.
    fn generated(config: serde_json::Value, subjects: Vec<String>) -> Self {
        Self {
            config,
            ..Self::study(&StudyConfig::default(), subjects)
        }
    }

    fn study(cfg: &StudyConfig, subjects: Vec<String>) -> Self {
        Self {
            config: serde_json::to_value(cfg).expect("config serializes"),
            subjects,
            resting_epoch_s: cfg.resting_epoch_s,
            svm_c: cfg.svm_c,
            artifact_threshold_uv: cfg.artifact_threshold_uv,
            reject_channel_fraction: cfg.reject_channel_fraction,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::data(format!("{}: {e}", path.display()))
}

impl Ctx {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn study_config(&self) -> Result<StudyConfig, CliError> {
        match &self.config {
            Some(p) => Ok(load_config(p)?),
            None => Ok(StudyConfig::default()),
        }
    }

    /// Path of an output file, creating its directory and noting it for
    /// the manifest.
    fn output(&mut self, rel: impl AsRef<Path>) -> Result<PathBuf, CliError> {
        let path = self.out.join(rel.as_ref());
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        self.outputs.push(rel.as_ref().to_string_lossy().replace('\\', "/"));
        Ok(path)
    }

    fn write_text(&mut self, rel: &str, text: &str) -> Result<(), CliError> {
        let path = self.output(rel)?;
        std::fs::write(&path, text).map_err(io_err(&path))
    }
}

fn subject_file(subject: &str, name: &str) -> PathBuf {
    Path::new(subject).join(name)
}

fn load_raw(
    ctx: &Ctx,
    cfg: &StudyConfig,
    subject: &str,
    name: &str,
) -> Result<bci_predict::ingest::Recording, CliError> {
    let path = ctx
        .inputs
        .used(ctx.inputs.require(subject_file(subject, name), "recording")?)?;
    Ok(load_recording(&path, cfg.sampling_rate_hz, &cfg.regions)?)
}

fn load_session_raw(
    ctx: &Ctx,
    cfg: &StudyConfig,
    subject: &str,
    session: Session,
) -> Result<(bci_predict::ingest::Recording, bci_predict::ingest::EventStream), CliError> {
    let rec = load_raw(ctx, cfg, subject, &session.raw())?;
    let ev_path = ctx
        .inputs
        .used(ctx.inputs.require(subject_file(subject, &session.events()), "events")?)?;
    let ev = load_events(&ev_path, &rec)?;
    Ok((rec, ev))
}

/// Cleaned epochs of a session: the preprocessed file when present,
/// otherwise the raw recording and its events.
fn session_epochs(ctx: &Ctx, cfg: &StudyConfig, subject: &str, session: Session) -> Result<EpochSet, CliError> {
    if let Some(p) = ctx.inputs.find(subject_file(subject, &session.epochs())) {
        return Ok(read_epochs(&ctx.inputs.used(p)?)?);
    }
    let (rec, ev) = load_session_raw(ctx, cfg, subject, session)?;
    Ok(erp_epochs(&rec, &ev, cfg)?)
}

fn resting_set(ctx: &Ctx, cfg: &StudyConfig, subject: &str) -> Result<EpochSet, CliError> {
    if let Some(p) = ctx.inputs.find(subject_file(subject, RESTING_EPOCHS)) {
        return Ok(read_epochs(&ctx.inputs.used(p)?)?);
    }
    let rec = load_raw(ctx, cfg, subject, RESTING_RAW)?;
    Ok(resting_epochs(&rec, cfg)?)
}

pub fn synth(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let text = match &ctx.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(io_err(p))?),
        None => None,
    };
    let value: serde_json::Value = match &text {
        Some(t) => serde_json::from_str(t).map_err(|e| CliError::data(format!("config: {e}")))?,
        None => serde_json::json!({}),
    };
    let is_single = value.get("n_subjects").is_none()
        && value.get("base").is_none()
        && value.as_object().is_some_and(|o| !o.is_empty());
    if is_single {
        let mut spec = SynthSpec::from_json(text.as_deref().unwrap_or("{}"))?;
        if let Some(seed) = ctx.seed {
            spec.seed = seed;
        }
        if !ctx.subjects.is_empty() && !ctx.subjects.contains(&spec.subject_id) {
            return Err(CliError::data(format!(
                "subject filter excludes the only subject {}",
                spec.subject_id
            )));
        }
        let id = spec.subject_id.clone();
        let test_spec = SynthSpec {
            seed: spec.seed.wrapping_add(1),
            ..spec.clone()
        };
        let resting = gen_resting(&spec)?;
        let train = gen_erp_session(&spec)?;
        let test = gen_erp_session(&test_spec)?;
        write_recording(&resting, &ctx.output(subject_file(&id, RESTING_RAW))?)?;
        for (session, (rec, ev)) in [(Session::Train, train), (Session::Test, test)] {
            write_recording(&rec, &ctx.output(subject_file(&id, &session.raw()))?)?;
            write_events(&ev, &ctx.output(subject_file(&id, &session.events()))?)?;
        }
        return Ok(Outcome::generated(
            serde_json::to_value(&spec).expect("spec serializes"),
            vec![id],
        ));
    }

    let mut spec: CohortSpec = serde_json::from_value(value).map_err(|e| CliError::data(format!("config: {e}")))?;
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let ids: Vec<String> = (0..spec.n_subjects).map(|i| format!("S{:02}", i + 1)).collect();
    if let Some(missing) = ctx.subjects.iter().find(|s| !ids.contains(s)) {
        return Err(CliError::data(format!("subject {missing} is not part of the cohort")));
    }
    let chosen: Vec<usize> = (0..spec.n_subjects)
        .filter(|&i| ctx.subjects.is_empty() || ctx.subjects.contains(&ids[i]))
        .collect();
    let mut files = Vec::new();
    for &i in &chosen {
        let id = &ids[i];
        files.push(subject_file(id, RESTING_RAW));
        for s in Session::ALL {
            files.push(subject_file(id, &s.raw()));
            files.push(subject_file(id, &s.events()));
        }
    }
    let paths: Vec<PathBuf> = files.iter().map(|f| ctx.output(f)).collect::<Result<_, _>>()?;
    chosen
        .par_iter()
        .enumerate()
        .try_for_each(|(k, &i)| -> Result<(), CliError> {
            let s = gen_subject(&spec, i)?;
            let p = &paths[k * 5..k * 5 + 5];
            write_recording(&s.resting, &p[0])?;
            write_recording(&s.train.0, &p[1])?;
            write_events(&s.train.1, &p[2])?;
            write_recording(&s.test.0, &p[3])?;
            write_events(&s.test.1, &p[4])?;
            Ok(())
        })?;
    let mut truth = String::from("subject,knob,p300_amplitude_uv,frontal_delta_uv\n");
    for &i in &chosen {
        let (resting, train, _) = spec.subject_specs(i)?;
        let _ = writeln!(
            truth,
            "{},{:.6},{:.6},{:.6}",
            ids[i],
            spec.knob(i),
            train.erp.p300_amplitude,
            resting.amplitude(Region::Frontal, BandName::Delta)
        );
    }
    ctx.write_text("truth.csv", &truth)?;
    Ok(Outcome::generated(
        serde_json::to_value(&spec).expect("spec serializes"),
        chosen.iter().map(|&i| ids[i].clone()).collect(),
    ))
}

pub fn preprocess(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let subjects = ctx.inputs.subjects(&ctx.subjects)?;
    let jobs: Vec<(String, Option<Session>)> = subjects
        .iter()
        .flat_map(|s| {
            let mut v = Vec::new();
            if ctx.inputs.find(subject_file(s, RESTING_RAW)).is_some() {
                v.push((s.clone(), None));
            }
            for session in Session::ALL {
                if ctx.inputs.find(subject_file(s, &session.raw())).is_some() {
                    v.push((s.clone(), Some(session)));
                }
            }
            v
        })
        .collect();
    if let Some(s) = subjects.iter().find(|s| !jobs.iter().any(|(j, _)| j == *s)) {
        return Err(CliError::data(format!("subject {s} has no raw recordings")));
    }
    let names: Vec<String> = jobs
        .iter()
        .map(|(s, session)| {
            subject_file(s, &session.map_or(RESTING_EPOCHS.to_string(), |x| x.epochs()))
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    let paths: Vec<PathBuf> = names.iter().map(|n| ctx.output(n)).collect::<Result<_, _>>()?;
    let summaries: Vec<String> = jobs
        .par_iter()
        .zip(&paths)
        .zip(&names)
        .map(|(((subject, session), path), name)| -> Result<String, CliError> {
            let eps = match session {
                None => resting_epochs(&load_raw(ctx, &cfg, subject, RESTING_RAW)?, &cfg)?,
                Some(s) => {
                    let (rec, ev) = load_session_raw(ctx, &cfg, subject, *s)?;
                    erp_epochs(&rec, &ev, &cfg)?
                }
            };
            write_epochs(&eps, path)?;
            Ok(format!(
                "{subject},{name},{},{},{}\n",
                eps.len(),
                eps.rejected_count,
                eps.interpolated.len()
            ))
        })
        .collect::<Result<_, _>>()?;
    let mut text = String::from("subject,file,epochs,rejected,interpolated_channels\n");
    summaries.iter().for_each(|l| text.push_str(l));
    ctx.write_text("preprocess_summary.csv", &text)?;
    Ok(Outcome::study(&cfg, subjects))
}

pub fn features(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let subjects = ctx.inputs.subjects(&ctx.subjects)?;
    let tables = subjects
        .par_iter()
        .map(|s| -> Result<_, CliError> {
            let eps = resting_set(ctx, &cfg, s)?;
            let mut table = extract_features(&eps, &cfg.bands, &cfg.regions, cfg.spectrum_window)?;
            table.subject_id = s.clone();
            Ok(table)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_feature_tables(&tables, &ctx.output(FEATURES)?)?;
    Ok(Outcome::study(&cfg, subjects))
}

fn accuracy_chart(results: &[SpellerResult], threshold: f64) -> Chart {
    let mut series: Vec<Series> = results
        .iter()
        .map(|r| {
            let mut s = Series::new(
                r.subject_id.clone(),
                r.accuracy_by_sequence
                    .iter()
                    .enumerate()
                    .map(|(k, a)| ((k + 1) as f64, a * 100.0))
                    .collect(),
            );
            s.width = 1.0;
            s
        })
        .collect();
    let n_seq = results.first().map_or(10, |r| r.accuracy_by_sequence.len());
    let mean: Vec<(f64, f64)> = (0..n_seq)
        .map(|k| {
            let m = results.iter().map(|r| r.accuracy_by_sequence[k]).sum::<f64>() / results.len() as f64;
            ((k + 1) as f64, m * 100.0)
        })
        .collect();
    let mut avg = Series::new("mean", mean);
    avg.width = 3.0;
    series.push(avg);
    Chart {
        title: "Speller accuracy by number of sequences".into(),
        x_label: "sequences".into(),
        y_label: "accuracy (%)".into(),
        x_range: (1.0, n_seq as f64),
        y_range: (0.0, 100.0),
        series,
        rules: vec![(threshold * 100.0, "illiteracy threshold".into())],
        spans: Vec::new(),
    }
}

pub fn classify(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let subjects = ctx.inputs.subjects(&ctx.subjects)?;
    let model_paths: Vec<PathBuf> = subjects
        .iter()
        .map(|s| ctx.output(subject_file(s, "classifier.json")))
        .collect::<Result<_, _>>()?;
    let results = subjects
        .par_iter()
        .zip(&model_paths)
        .map(|(s, model_path)| -> Result<SpellerResult, CliError> {
            let train = session_epochs(ctx, &cfg, s, Session::Train)?;
            let test = session_epochs(ctx, &cfg, s, Session::Test)?;
            let (clf, mut perf) = speller_performance(&train, &test, &cfg)?;
            clf.save(model_path)?;
            perf.subject_id = s.clone();
            Ok(perf)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_speller_results(&results, &ctx.output(PERFORMANCE)?)?;
    let svg = accuracy_chart(&results, cfg.illiteracy_threshold).render();
    ctx.write_text("accuracy.svg", &svg)?;
    Ok(Outcome::study(&cfg, subjects))
}

fn filtered<T>(items: Vec<T>, id: impl Fn(&T) -> &str, only: &[String]) -> Vec<T> {
    items
        .into_iter()
        .filter(|t| only.is_empty() || only.iter().any(|s| s == id(t)))
        .collect()
}

fn read_tables(ctx: &Ctx) -> Result<Vec<bci_predict::features::BandFeatureTable>, CliError> {
    let path = ctx.inputs.used(ctx.inputs.require(FEATURES, "feature table")?)?;
    Ok(filtered(
        read_feature_tables(&path)?,
        |t| t.subject_id.as_str(),
        &ctx.subjects,
    ))
}

fn read_performance(ctx: &Ctx) -> Result<Vec<SpellerResult>, CliError> {
    let path = ctx.inputs.used(ctx.inputs.require(PERFORMANCE, "performance")?)?;
    Ok(filtered(
        read_speller_results(&path)?,
        |r| r.subject_id.as_str(),
        &ctx.subjects,
    ))
}

pub fn correlate(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let tables = read_tables(ctx)?;
    let perf = read_performance(ctx)?;
    let result = correlate_features(&tables, &perf)?;
    write_region_table(&ctx.output("region_correlations.csv")?, &result.results)?;
    write_pair_table(&ctx.output("pair_correlations.csv")?, &result.results)?;
    let mut skipped = String::from("feature,reason\n");
    for (id, e) in &result.failures {
        let _ = writeln!(skipped, "{id},{}", e.to_string().replace(',', ";"));
    }
    ctx.write_text("correlation_skipped.csv", &skipped)?;
    Ok(Outcome::study(
        &cfg,
        tables.iter().map(|t| t.subject_id.clone()).collect(),
    ))
}

pub fn predict(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let tables = read_tables(ctx)?;
    let ids: Vec<FeatureId> = cfg
        .predictors
        .iter()
        .map(|p| FeatureId::parse(p).ok_or_else(|| CliError::data(format!("unknown predictor {p}"))))
        .collect::<Result<_, _>>()?;
    let names: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    let x: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| {
            ids.iter()
                .map(|id| {
                    t.get(id)
                        .ok_or_else(|| CliError::data(format!("subject {} lacks {id}", t.subject_id)))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let observed: Option<Vec<f64>> = match ctx.inputs.find(PERFORMANCE) {
        Some(_) => {
            let perf = read_performance(ctx)?;
            let y = tables
                .iter()
                .map(|t| {
                    perf.iter()
                        .find(|p| p.subject_id == t.subject_id)
                        .map(|p| 100.0 * p.best_accuracy())
                        .ok_or_else(|| CliError::data(format!("no performance for subject {}", t.subject_id)))
                })
                .collect::<Result<_, _>>()?;
            Some(y)
        }
        None => None,
    };

    let model = match ctx.inputs.find(REGRESSION_MODEL) {
        Some(p) => {
            let p = ctx.inputs.used(p)?;
            let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
            let model: RegressionModel =
                serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
            if model.predictor_ids != names {
                return Err(CliError::data(format!(
                    "model predictors {:?} differ from configured {:?}",
                    model.predictor_ids, names
                )));
            }
            model
        }
        None => {
            let y = observed.as_ref().ok_or_else(|| {
                CliError::data(format!(
                    "missing {PERFORMANCE} to fit a model and no {REGRESSION_MODEL} given"
                ))
            })?;
            let model = fit_predictor(&x, y, &names)?;
            let path = ctx.output(REGRESSION_MODEL)?;
            let text = serde_json::to_string_pretty(&model).expect("model serializes");
            std::fs::write(&path, text).map_err(io_err(&path))?;
            write_regression_summary(&ctx.output("regression.csv")?, &model)?;
            model
        }
    };
    let mut text = String::from("subject,observed_percent,predicted_percent\n");
    let mut sq = 0.0;
    for (i, t) in tables.iter().enumerate() {
        let pred = model.predict(&x[i]);
        let obs = observed.as_ref().map(|y| y[i]);
        if let Some(o) = obs {
            sq += (o - pred).powi(2);
        }
        let _ = writeln!(
            text,
            "{},{},{pred:.6}",
            t.subject_id,
            obs.map_or(String::new(), |o| format!("{o:.6}"))
        );
    }
    ctx.write_text("predictions.csv", &text)?;
    if observed.is_some() {
        let summary = format!(
            "term,value\nn_subjects,{}\nmse_prediction,{:.6}\nmse_loocv_fit,{:.6}\n",
            tables.len(),
            sq / tables.len() as f64,
            model.mse_loocv
        );
        ctx.write_text("prediction_error.csv", &summary)?;
    }
    Ok(Outcome::study(
        &cfg,
        tables.iter().map(|t| t.subject_id.clone()).collect(),
    ))
}

fn dynamics_chart(band: &BandDynamics, measure: &str, tests: &[&bci_predict::pipeline::DynamicsTest]) -> Chart {
    let centre = |(a, b): (f64, f64)| 0.5 * (a + b);
    let mut series = Vec::new();
    let (title, y_label);
    if measure == "power" {
        title = format!("{} band power, target vs non-target", band.band.name);
        y_label = "power (µV²)".to_string();
        for (r, t) in &band.target.power {
            let n = &band.nontarget.power[r];
            series.push(Series::new(
                format!("{} target", r.name()),
                band.bins_ms.iter().zip(t).map(|(b, v)| (centre(*b), *v)).collect(),
            ));
            let mut s = Series::new(
                format!("{} non-target", r.name()),
                band.bins_ms.iter().zip(n).map(|(b, v)| (centre(*b), *v)).collect(),
            );
            s.dashed = true;
            series.push(s);
        }
    } else {
        title = format!("{} band PLV, target minus non-target", band.band.name);
        y_label = "PLV difference".to_string();
        for (p, t) in &band.target.plv {
            let n = &band.nontarget.plv[p];
            series.push(Series::new(
                p.label(),
                band.bins_ms
                    .iter()
                    .zip(t.iter().zip(n))
                    .map(|(b, (x, y))| (centre(*b), x - y))
                    .collect(),
            ));
        }
    }
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.05).max(1e-6);
    let spans = band
        .bins_ms
        .iter()
        .enumerate()
        .filter(|(j, _)| tests.iter().any(|t| t.result.significant[*j]))
        .map(|(_, b)| *b)
        .collect();
    Chart {
        title,
        x_label: "time after flash (ms)".into(),
        y_label,
        x_range: (band.bins_ms[0].0, band.bins_ms[band.bins_ms.len() - 1].1),
        y_range: (lo - pad, hi + pad),
        series,
        rules: Vec::new(),
        spans,
    }
}

pub fn dynamics(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let subjects = ctx.inputs.subjects(&ctx.subjects)?;
    let seed = ctx.seed();
    let per_subject = subjects
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<Vec<BandDynamics>, CliError> {
            let sessions: Vec<Session> = Session::ALL
                .into_iter()
                .filter(|x| ctx.inputs.find(subject_file(s, &x.raw())).is_some())
                .collect();
            if sessions.is_empty() {
                return Err(CliError::data(format!("subject {s} has no session recordings")));
            }
            let runs = sessions
                .iter()
                .enumerate()
                .map(|(k, &x)| -> Result<Vec<BandDynamics>, CliError> {
                    let (rec, ev) = load_session_raw(ctx, &cfg, s, x)?;
                    let sub_seed = seed.wrapping_add((i * Session::ALL.len() + k) as u64);
                    Ok(subject_dynamics(&rec, &ev, &cfg, sub_seed)?)
                })
                .collect::<Result<Vec<_>, _>>()?;
            (0..cfg.bands.len())
                .map(|b| {
                    let bands: Vec<BandDynamics> = runs.iter().map(|r| r[b].clone()).collect();
                    Ok(average_dynamics(&bands)?)
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let tests = dynamics_tests(&per_subject, &cfg, seed)?;

    let mut text = String::from("band,measure,region_or_pair,condition,bin_start_ms,bin_end_ms,value\n");
    let mut grand = Vec::new();
    for b in 0..cfg.bands.len() {
        let bands: Vec<BandDynamics> = per_subject.iter().map(|s| s[b].clone()).collect();
        let avg = average_dynamics(&bands)?;
        for (cond, c) in [("target", &avg.target), ("nontarget", &avg.nontarget)] {
            let rows = c
                .power
                .iter()
                .map(|(r, v)| ("power", r.name().to_string(), v))
                .chain(c.plv.iter().map(|(p, v)| ("plv", p.label(), v)));
            for (measure, locus, values) in rows {
                for (bin, v) in avg.bins_ms.iter().zip(values) {
                    let _ = writeln!(
                        text,
                        "{},{measure},{locus},{cond},{},{},{v:.6}",
                        avg.band.name, bin.0, bin.1
                    );
                }
            }
        }
        grand.push(avg);
    }
    ctx.write_text("dynamics.csv", &text)?;

    let band_names: Vec<String> = tests.iter().map(|t| t.band.name.to_string()).collect();
    let rows: Vec<MaskRow> = tests
        .iter()
        .zip(&band_names)
        .map(|(t, name)| MaskRow {
            measure: t.locus.measure(),
            band: name,
            locus: t.locus.label(),
            bins_ms: &t.bins_ms,
            result: &t.result,
        })
        .collect();
    write_permutation_masks(&ctx.output("permutation_masks.csv")?, &rows)?;

    for avg in &grand {
        for measure in ["power", "plv"] {
            let relevant: Vec<_> = tests
                .iter()
                .filter(|t| t.band == avg.band && t.locus.measure() == measure)
                .collect();
            let svg = dynamics_chart(avg, measure, &relevant).render();
            ctx.write_text(&format!("dynamics_{}_{measure}.svg", avg.band.name), &svg)?;
        }
    }
    Ok(Outcome::study(&cfg, subjects))
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

pub fn report(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    ctx.inputs.require_dirs()?;
    let cfg = ctx.study_config()?;
    let mut md = String::from("# Run summary\n\n");
    let mut subjects = Vec::new();
    let mut found_any = false;

    if let Some(p) = ctx.inputs.find(MANIFEST) {
        let p = ctx.inputs.used(p)?;
        let text = std::fs::read_to_string(&p).map_err(io_err(&p))?;
        let v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
        let _ = writeln!(
            md,
            "Produced by `{}` ({} {}).\n",
            v["command"].as_str().unwrap_or("?"),
            v["tool"].as_str().unwrap_or("?"),
            v["version"].as_str().unwrap_or("?")
        );
    }

    if ctx.inputs.find(PERFORMANCE).is_some() {
        found_any = true;
        let perf = read_performance(ctx)?;
        let n = perf.len();
        let literate = perf.iter().filter(|p| p.literate).count();
        let _ = writeln!(
            md,
            "## Speller performance\n\n{n} subjects, {literate} above the illiteracy threshold.\n"
        );
        md.push_str("| sequences | mean accuracy |\n|---|---|\n");
        let n_seq = perf.first().map_or(0, |p| p.accuracy_by_sequence.len());
        for k in 0..n_seq {
            let m = perf.iter().map(|p| p.accuracy_by_sequence[k]).sum::<f64>() / n as f64;
            let _ = writeln!(md, "| {} | {:.1}% |", k + 1, 100.0 * m);
        }
        md.push('\n');
        subjects = perf.iter().map(|p| p.subject_id.clone()).collect();
    }

    for (file, title) in [
        ("region_correlations.csv", "Band power correlations"),
        ("pair_correlations.csv", "PLV correlations"),
    ] {
        if let Some(p) = ctx.inputs.find(file) {
            found_any = true;
            let rows = csv_rows(&ctx.inputs.used(p)?)?;
            let _ = writeln!(
                md,
                "## {title} (strongest five)\n\n| locus | band | r | p |\n|---|---|---|---|"
            );
            for r in rows.iter().take(5) {
                let _ = writeln!(md, "| {} |", r.join(" | "));
            }
            if rows.is_empty() {
                md.push_str("\nNo feature could be correlated; see correlation_skipped.csv.\n");
            }
            md.push('\n');
        }
    }

    if let Some(p) = ctx.inputs.find("regression.csv") {
        found_any = true;
        let rows = csv_rows(&ctx.inputs.used(p)?)?;
        md.push_str("## Performance regression\n\n| term | value |\n|---|---|\n");
        for r in rows {
            let _ = writeln!(md, "| {} |", r.join(" | "));
        }
        md.push('\n');
    }

    if let Some(p) = ctx.inputs.find("permutation_masks.csv") {
        found_any = true;
        let rows = csv_rows(&ctx.inputs.used(p)?)?;
        let mut counts: std::collections::BTreeMap<(String, String), (usize, usize)> = Default::default();
        for r in &rows {
            let e = counts.entry((r[1].clone(), r[0].clone())).or_default();
            e.1 += 1;
            if r.get(7).map(String::as_str) == Some("true") {
                e.0 += 1;
            }
        }
        md.push_str("## Target vs non-target dynamics\n\n| band | measure | significant bins |\n|---|---|---|\n");
        for ((band, measure), (sig, total)) in counts {
            let _ = writeln!(md, "| {band} | {measure} | {sig} of {total} |");
        }
        md.push('\n');
    }

    if !found_any {
        return Err(CliError::data("no result tables found in the inputs"));
    }
    ctx.write_text("summary.md", &md)?;
    Ok(Outcome::study(&cfg, subjects))
}
