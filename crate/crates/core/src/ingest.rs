//! Loading and validation of recordings, event streams and study configuration.
//!
//! Recordings are stored as CSV with a one-line metadata preamble:
//!
//! ```text
//! # subject=S01 condition=resting fs=100
//! t,Fp1,Fp2,...
//! 0.000000,1.250000,-3.500000,...
//! ```
//!
//! Event files carry `sample_index,kind,stimulus_group,object_ids,is_target`
//! with `object_ids` written as `|`-separated integers.

use crate::features::FrequencyBand;
use crate::montage::RegionMap;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Number of selectable objects in the 6x6 speller matrix.
pub const N_OBJECTS: usize = 36;
/// Flashes per sequence (6 rows + 6 columns).
pub const FLASHES_PER_SEQUENCE: usize = 12;
/// Objects highlighted by a single flash.
pub const OBJECTS_PER_FLASH: usize = 6;
/// Sequences per trial.
pub const SEQUENCES_PER_TRIAL: usize = 10;
/// Flash duration and inter-stimulus interval in ms.
pub const FLASH_MS: f64 = 50.0;
pub const ISI_MS: f64 = 135.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("montage electrode {0} missing from recording")]
    MissingChannel(String),
    #[error("duplicate channel {0}")]
    DuplicateChannel(String),
    #[error("sampling rate mismatch: expected {expected} Hz, found {found} Hz")]
    RateMismatch { expected: f64, found: f64 },
    #[error("non-finite sample at row {row}, channel {channel}")]
    NonFiniteSample { row: usize, channel: String },
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("recording has no samples")]
    EmptyRecording,
    #[error("malformed event on line {line}: {reason}")]
    MalformedEvent { line: usize, reason: String },
    #[error("events not strictly increasing at line {line}")]
    UnsortedEvents { line: usize },
    #[error("event sample index {index} outside recording of {len} samples")]
    OutOfRangeIndex { index: usize, len: usize },
    #[error("bad sequence structure: {0}")]
    BadSequenceStructure(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Resting,
    ErpTask,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Resting => "resting",
            Condition::ErpTask => "erp_task",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "resting" => Some(Condition::Resting),
            "erp_task" => Some(Condition::ErpTask),
            _ => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Continuous multichannel EEG in microvolts, `data` is channels x samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub condition: Condition,
    pub fs: f64,
    pub channel_names: Vec<String>,
    pub data: Array2<f64>,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        condition: Condition,
        fs: f64,
        channel_names: Vec<String>,
        data: Array2<f64>,
    ) -> Result<Self, IngestError> {
        let rec = Self {
            subject_id: subject_id.into(),
            condition,
            fs,
            channel_names,
            data,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(IngestError::MalformedHeader(format!(
                "sampling rate must be positive, got {}",
                self.fs
            )));
        }
        if self.subject_id.is_empty() || self.subject_id.contains(char::is_whitespace) {
            return Err(IngestError::MalformedHeader(format!(
                "subject id {:?} must be non-empty without whitespace",
                self.subject_id
            )));
        }
        if self.data.nrows() != self.channel_names.len() {
            return Err(IngestError::MalformedHeader(format!(
                "{} channel names for {} data rows",
                self.channel_names.len(),
                self.data.nrows()
            )));
        }
        if self.data.ncols() == 0 {
            return Err(IngestError::EmptyRecording);
        }
        let mut seen = HashSet::new();
        for name in &self.channel_names {
            if !seen.insert(name.to_ascii_lowercase()) {
                return Err(IngestError::DuplicateChannel(name.clone()));
            }
        }
        for ((ch, row), v) in self.data.indexed_iter() {
            if !v.is_finite() {
                return Err(IngestError::NonFiniteSample {
                    row,
                    channel: self.channel_names[ch].clone(),
                });
            }
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|c| c.eq_ignore_ascii_case(name))
    }

    /// Every electrode named in `regions` must be present.
    pub fn check_montage(&self, regions: &RegionMap) -> Result<(), IngestError> {
        regions
            .indices(&self.channel_names)
            .map(|_| ())
            .map_err(IngestError::MissingChannel)
    }
}

/// Format a sample value the way recordings are serialized.
pub fn format_sample(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_recording(rec: &Recording, path: &Path) -> Result<(), IngestError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "# subject={} condition={} fs={}",
            rec.subject_id, rec.condition, rec.fs
        )?;
        write!(w, "t")?;
        for name in &rec.channel_names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        let mut line = String::new();
        for i in 0..rec.n_samples() {
            line.clear();
            line.push_str(&format!("{:.6}", i as f64 / rec.fs));
            for ch in 0..rec.n_channels() {
                line.push(',');
                line.push_str(&format_sample(rec.data[[ch, i]]));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

fn parse_preamble(line: &str) -> Result<(String, Condition, f64), IngestError> {
    let rest = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| IngestError::MalformedHeader("missing '#' metadata line".into()))?;
    let (mut subject, mut condition, mut fs) = (None, None, None);
    for token in rest.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| IngestError::MalformedHeader(format!("bad metadata token {token:?}")))?;
        match k {
            "subject" => subject = Some(v.to_string()),
            "condition" => {
                condition = Some(
                    Condition::parse(v)
                        .ok_or_else(|| IngestError::MalformedHeader(format!("unknown condition {v:?}")))?,
                )
            }
            "fs" => {
                fs = Some(
                    v.parse::<f64>()
                        .map_err(|_| IngestError::MalformedHeader(format!("bad sampling rate {v:?}")))?,
                )
            }
            _ => {}
        }
    }
    match (subject, condition, fs) {
        (Some(s), Some(c), Some(f)) => Ok((s, c, f)),
        _ => Err(IngestError::MalformedHeader(
            "metadata line needs subject, condition and fs".into(),
        )),
    }
}

/// Read a recording CSV and check it against the expected rate and montage.
pub fn load_recording(path: &Path, expected_fs: f64, regions: &RegionMap) -> Result<Recording, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(io_err(path))?;
    let (subject, condition, fs) = parse_preamble(&first)?;
    if (fs - expected_fs).abs() > 1e-9 * expected_fs.abs().max(1.0) {
        return Err(IngestError::RateMismatch {
            expected: expected_fs,
            found: fs,
        });
    }

    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv
        .headers()
        .map_err(|e| IngestError::MalformedHeader(e.to_string()))?
        .clone();
    if header.get(0) != Some("t") || header.len() < 2 {
        return Err(IngestError::MalformedHeader(
            "column header must start with 't' followed by channel names".into(),
        ));
    }
    let channel_names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n_ch = channel_names.len();

    let mut samples: Vec<f64> = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != n_ch + 1 {
            return Err(IngestError::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", n_ch + 1, record.len()),
            });
        }
        for (ch, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| IngestError::MalformedRow {
                row,
                reason: format!("unparsable value {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteSample {
                    row,
                    channel: channel_names[ch].clone(),
                });
            }
            samples.push(v);
        }
    }
    let n_samples = samples.len() / n_ch;
    if n_samples == 0 {
        return Err(IngestError::EmptyRecording);
    }
    // rows were read sample-major; transpose into channels x samples
    let data = Array2::from_shape_vec((n_samples, n_ch), samples)
        .expect("row lengths checked")
        .reversed_axes()
        .as_standard_layout()
        .into_owned();
    let rec = Recording::new(subject, condition, fs, channel_names, data)?;
    rec.check_montage(regions)?;
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Flash,
    TrialStart,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Flash => "flash",
            EventKind::TrialStart => "trial_start",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub sample_index: usize,
    pub kind: EventKind,
    pub stimulus_group: Option<u8>,
    pub object_ids: Vec<u8>,
    pub is_target: bool,
}

impl Event {
    pub fn trial_start(sample_index: usize) -> Self {
        Self {
            sample_index,
            kind: EventKind::TrialStart,
            stimulus_group: None,
            object_ids: Vec::new(),
            is_target: false,
        }
    }

    pub fn flash(sample_index: usize, group: u8, object_ids: Vec<u8>, is_target: bool) -> Self {
        Self {
            sample_index,
            kind: EventKind::Flash,
            stimulus_group: Some(group),
            object_ids,
            is_target,
        }
    }
}

/// A flash located within the trial/sequence structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlashPosition {
    /// Index into `EventStream::events`.
    pub event: usize,
    pub trial_id: usize,
    /// 1-based sequence number within the trial.
    pub sequence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventStream {
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(events: Vec<Event>) -> Self {
        Self { events }
    }

    pub fn flash_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Flash).count()
    }

    /// Check ordering, range, flash contents and per-trial sequence structure.
    pub fn validate(&self, n_samples: usize) -> Result<(), IngestError> {
        for (i, ev) in self.events.iter().enumerate() {
            if i > 0 && ev.sample_index <= self.events[i - 1].sample_index {
                return Err(IngestError::UnsortedEvents { line: i + 2 });
            }
            if ev.sample_index >= n_samples {
                return Err(IngestError::OutOfRangeIndex {
                    index: ev.sample_index,
                    len: n_samples,
                });
            }
            if ev.kind == EventKind::Flash {
                check_flash(ev).map_err(|reason| IngestError::MalformedEvent { line: i + 2, reason })?;
            }
        }
        self.flash_positions().map(|_| ())
    }

    /// Position of every flash in its trial. Requires every flash to follow a
    /// `trial_start` and every trial to hold whole 12-flash sequences.
    pub fn flash_positions(&self) -> Result<Vec<FlashPosition>, IngestError> {
        self.positions(true)
    }

    /// Like `flash_positions` but tolerates incomplete sequences, for streams
    /// already validated at load or hand-built partial streams.
    pub fn flash_positions_lenient(&self) -> Result<Vec<FlashPosition>, IngestError> {
        self.positions(false)
    }

    fn positions(&self, strict: bool) -> Result<Vec<FlashPosition>, IngestError> {
        let mut out = Vec::with_capacity(self.events.len());
        let mut trial: Option<usize> = None;
        let mut in_trial = 0usize;
        let close = |trial: Option<usize>, count: usize| -> Result<(), IngestError> {
            match trial {
                Some(t) if strict && (count == 0 || !count.is_multiple_of(FLASHES_PER_SEQUENCE)) => {
                    Err(IngestError::BadSequenceStructure(format!(
                        "trial {t} has {count} flashes, not a positive multiple of {FLASHES_PER_SEQUENCE}"
                    )))
                }
                _ => Ok(()),
            }
        };
        for (i, ev) in self.events.iter().enumerate() {
            match ev.kind {
                EventKind::TrialStart => {
                    close(trial, in_trial)?;
                    trial = Some(trial.map_or(0, |t| t + 1));
                    in_trial = 0;
                }
                EventKind::Flash => {
                    let t = trial.ok_or_else(|| {
                        IngestError::BadSequenceStructure("flash before the first trial_start".into())
                    })?;
                    out.push(FlashPosition {
                        event: i,
                        trial_id: t,
                        sequence_index: in_trial / FLASHES_PER_SEQUENCE + 1,
                    });
                    in_trial += 1;
                }
            }
        }
        close(trial, in_trial)?;
        Ok(out)
    }

    pub fn n_trials(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::TrialStart).count()
    }
}

fn check_flash(ev: &Event) -> Result<(), String> {
    match ev.stimulus_group {
        Some(g) if (g as usize) < FLASHES_PER_SEQUENCE => {}
        Some(g) => return Err(format!("stimulus group {g} outside 0-11")),
        None => return Err("flash without stimulus group".into()),
    }
    if ev.object_ids.len() != OBJECTS_PER_FLASH {
        return Err(format!(
            "flash carries {} objects, expected {OBJECTS_PER_FLASH}",
            ev.object_ids.len()
        ));
    }
    let mut seen = [false; N_OBJECTS];
    for &o in &ev.object_ids {
        let o = o as usize;
        if o >= N_OBJECTS {
            return Err(format!("object id {o} outside 0-35"));
        }
        if std::mem::replace(&mut seen[o], true) {
            return Err(format!("object id {o} repeated"));
        }
    }
    Ok(())
}

fn parse_event(record: &csv::StringRecord, line: usize) -> Result<Event, IngestError> {
    let bad = |reason: String| IngestError::MalformedEvent { line, reason };
    if record.len() != 5 {
        return Err(bad(format!("expected 5 fields, found {}", record.len())));
    }
    let sample_index: usize = record[0]
        .parse()
        .map_err(|_| bad(format!("bad sample_index {:?}", &record[0])))?;
    let kind = match &record[1] {
        "flash" => EventKind::Flash,
        "trial_start" => EventKind::TrialStart,
        other => return Err(bad(format!("unknown kind {other:?}"))),
    };
    let stimulus_group = match &record[2] {
        "" | "none" => None,
        s => Some(s.parse::<u8>().map_err(|_| bad(format!("bad stimulus_group {s:?}")))?),
    };
    let object_ids = if record[3].is_empty() {
        Vec::new()
    } else {
        record[3]
            .split('|')
            .map(|s| s.trim().parse::<u8>().map_err(|_| bad(format!("bad object id {s:?}"))))
            .collect::<Result<_, _>>()?
    };
    let is_target = match record[4].to_ascii_lowercase().as_str() {
        "true" | "1" => true,
        "false" | "0" => false,
        other => return Err(bad(format!("bad is_target {other:?}"))),
    };
    Ok(Event {
        sample_index,
        kind,
        stimulus_group,
        object_ids,
        is_target,
    })
}

/// Read an events CSV. The file must already be sorted; shuffled files are
/// rejected with `UnsortedEvents` rather than reordered.
pub fn load_events(path: &Path, recording: &Recording) -> Result<EventStream, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let header = csv.headers().map_err(|e| IngestError::MalformedHeader(e.to_string()))?;
    let expected = ["sample_index", "kind", "stimulus_group", "object_ids", "is_target"];
    if header.iter().ne(expected.iter().copied()) {
        return Err(IngestError::MalformedHeader(format!(
            "events header must be {}",
            expected.join(",")
        )));
    }
    let mut events = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| IngestError::MalformedEvent {
            line,
            reason: e.to_string(),
        })?;
        events.push(parse_event(&record, line)?);
    }
    let stream = EventStream::new(events);
    stream.validate(recording.n_samples())?;
    Ok(stream)
}

pub fn write_events(stream: &EventStream, path: &Path) -> Result<(), IngestError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "sample_index,kind,stimulus_group,object_ids,is_target")?;
        for ev in &stream.events {
            let group = ev.stimulus_group.map(|g| g.to_string()).unwrap_or_default();
            let objects = ev
                .object_ids
                .iter()
                .map(|o| o.to_string())
                .collect::<Vec<_>>()
                .join("|");
            writeln!(
                w,
                "{},{},{},{},{}",
                ev.sample_index,
                ev.kind.as_str(),
                group,
                objects,
                ev.is_target
            )?;
        }
        w.flush()
    };
    body().map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumWindow {
    #[default]
    Rectangular,
    Hann,
}

fn default_bands() -> Vec<FrequencyBand> {
    FrequencyBand::canonical_set()
}

fn default_predictors() -> Vec<String> {
    [
        "psd:frontal:delta",
        "plv:F-F:delta",
        "plv:F-C:delta",
        "plv:F-P:delta",
        "plv:F-O:delta",
        "plv:C-P:delta",
        "plv:F-C:alpha",
        "plv:F-O:gamma",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Analysis parameters. Every field has a default so a partial JSON document
/// (or `{}`) is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub bands: Vec<FrequencyBand>,
    pub regions: RegionMap,
    pub epoch_window_ms: (f64, f64),
    pub baseline_ms: (f64, f64),
    pub artifact_threshold_uv: f64,
    pub resting_epoch_s: f64,
    pub svm_c: f64,
    pub illiteracy_threshold: f64,
    pub alpha: f64,
    pub sampling_rate_hz: f64,
    pub bandpass_hz: (f64, f64),
    /// Skipped when at or above Nyquist.
    pub notch_hz: Option<f64>,
    pub notch_q: f64,
    pub filter_order: usize,
    /// Epochs with more than this fraction of offending channels are dropped.
    pub reject_channel_fraction: f64,
    pub spectrum_window: SpectrumWindow,
    pub dynamics_bin_ms: f64,
    /// Segment used to extract band-limited analytic signals around each
    /// flash for the target/non-target time courses.
    pub dynamics_segment_ms: (f64, f64),
    pub n_permutations: usize,
    /// Regression predictors as `kind:region_or_pair:band`.
    pub predictors: Vec<String>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            bands: default_bands(),
            regions: RegionMap::default(),
            epoch_window_ms: (0.0, 800.0),
            baseline_ms: (-200.0, 0.0),
            artifact_threshold_uv: 100.0,
            resting_epoch_s: 2.0,
            svm_c: 1.0,
            illiteracy_threshold: 0.30,
            alpha: 0.05,
            sampling_rate_hz: 100.0,
            bandpass_hz: (0.5, 45.0),
            notch_hz: Some(60.0),
            notch_q: 30.0,
            filter_order: 4,
            reject_channel_fraction: 0.25,
            spectrum_window: SpectrumWindow::Rectangular,
            dynamics_bin_ms: 100.0,
            dynamics_segment_ms: (-1200.0, 2000.0),
            n_permutations: 10_000,
            predictors: default_predictors(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::InvalidConfig(m));
        let nyquist = self.sampling_rate_hz / 2.0;
        if !(self.sampling_rate_hz > 0.0) {
            return bad(format!("sampling rate {} must be positive", self.sampling_rate_hz));
        }
        if self.bands.is_empty() {
            return bad("no frequency bands".into());
        }
        for b in &self.bands {
            if !(b.f1 > 0.0 && b.f1 < b.f2 && b.f2 <= nyquist) {
                return bad(format!("band {b} must satisfy 0 < f1 < f2 <= {nyquist}"));
            }
        }
        self.regions.validate().map_err(IngestError::InvalidConfig)?;
        let (lo, hi) = self.bandpass_hz;
        if !(lo > 0.0 && lo < hi && hi < nyquist) {
            return bad(format!(
                "band-pass edges ({lo}, {hi}) invalid for fs {}",
                self.sampling_rate_hz
            ));
        }
        if self.epoch_window_ms.0 >= self.epoch_window_ms.1 {
            return bad("epoch window must be increasing".into());
        }
        if self.baseline_ms.0 >= self.baseline_ms.1 {
            return bad("baseline window must be increasing".into());
        }
        if self.dynamics_segment_ms.0 > self.epoch_window_ms.0 || self.dynamics_segment_ms.1 < self.epoch_window_ms.1 {
            return bad("dynamics segment must contain the epoch window".into());
        }
        for (name, v) in [
            ("artifact_threshold_uv", self.artifact_threshold_uv),
            ("resting_epoch_s", self.resting_epoch_s),
            ("svm_c", self.svm_c),
            ("notch_q", self.notch_q),
            ("dynamics_bin_ms", self.dynamics_bin_ms),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.illiteracy_threshold > 0.0 && self.illiteracy_threshold < 1.0) {
            return bad("illiteracy_threshold must lie in (0, 1)".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)".into());
        }
        if !(self.reject_channel_fraction > 0.0 && self.reject_channel_fraction <= 1.0) {
            return bad("reject_channel_fraction must lie in (0, 1]".into());
        }
        if self.filter_order < 2 || !self.filter_order.is_multiple_of(2) {
            return bad("filter_order must be even and at least 2".into());
        }
        if self.n_permutations == 0 {
            return bad("n_permutations must be positive".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

pub fn load_config(path: &Path) -> Result<StudyConfig, IngestError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let cfg = StudyConfig::from_json(&text).map_err(|source| IngestError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}
