//! Epoch sets on disk: one row per (epoch, channel).
//!
//! ```text
//! # subject=S01 fs=100 t0_ms=0 rejected=2 interpolated=4:Cz;17:Fp1
//! epoch,label,trial_id,sequence_index,stimulus_group,object_ids,onset_sample,channel,s0,s1,...
//! ```

use super::{Epoch, EpochLabel, EpochSet, Interpolation, PreprocessError};
use crate::ingest::format_sample;
use ndarray::Array2;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn file_err(path: &Path, reason: impl ToString) -> PreprocessError {
    PreprocessError::EpochFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_epochs(set: &EpochSet, path: &Path) -> Result<(), PreprocessError> {
    let file = File::create(path).map_err(|e| file_err(path, e))?;
    let mut w = BufWriter::new(file);
    let interp = set
        .interpolated
        .iter()
        .map(|i| format!("{}:{}", i.epoch, i.channel))
        .collect::<Vec<_>>()
        .join(";");
    let mut body = || -> std::io::Result<()> {
        writeln!(
            w,
            "# subject={} fs={} t0_ms={} rejected={} interpolated={}",
            set.subject_id,
            set.fs,
            set.t0_ms(),
            set.rejected_count,
            interp
        )?;
        write!(
            w,
            "epoch,label,trial_id,sequence_index,stimulus_group,object_ids,onset_sample,channel"
        )?;
        for k in 0..set.n_samples() {
            write!(w, ",s{k}")?;
        }
        writeln!(w)?;
        let mut line = String::new();
        for (i, e) in set.epochs.iter().enumerate() {
            let objects = e.object_ids.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("|");
            let prefix = format!(
                "{},{},{},{},{},{},{}",
                i,
                e.label.as_str(),
                opt(e.trial_id),
                opt(e.sequence_index),
                opt(e.stimulus_group),
                objects,
                e.onset_sample
            );
            for (ch, row) in e.data.outer_iter().enumerate() {
                line.clear();
                line.push_str(&prefix);
                line.push(',');
                line.push_str(&set.channel_names[ch]);
                for v in row {
                    line.push(',');
                    line.push_str(&format_sample(*v));
                }
                line.push('\n');
                w.write_all(line.as_bytes())?;
            }
        }
        w.flush()
    };
    body().map_err(|e| file_err(path, e))
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad value {s:?}"))
    }
}

pub fn read_epochs(path: &Path) -> Result<EpochSet, PreprocessError> {
    let file = File::open(path).map_err(|e| file_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| file_err(path, e))?;
    let meta = first
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| file_err(path, "missing metadata line"))?;
    let (mut subject, mut fs, mut t0, mut rejected, mut interp) = (None, None, 0.0, 0usize, String::new());
    for tok in meta.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| file_err(path, format!("bad token {tok}")))?;
        let num = |v: &str| v.parse::<f64>().map_err(|_| file_err(path, format!("bad {k}")));
        match k {
            "subject" => subject = Some(v.to_string()),
            "fs" => fs = Some(num(v)?),
            "t0_ms" => t0 = num(v)?,
            "rejected" => rejected = v.parse().map_err(|_| file_err(path, "bad rejected"))?,
            "interpolated" => interp = v.to_string(),
            _ => {}
        }
    }
    let subject = subject.ok_or_else(|| file_err(path, "missing subject"))?;
    let fs = fs.ok_or_else(|| file_err(path, "missing fs"))?;

    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let n_samples = csv.headers().map_err(|e| file_err(path, e))?.len().saturating_sub(8);
    let mut channel_names: Vec<String> = Vec::new();
    let mut epochs: Vec<Epoch> = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut current: Option<(usize, Epoch)> = None;

    let finish = |cur: Option<(usize, Epoch)>, rows: &mut Vec<f64>, epochs: &mut Vec<Epoch>| -> Result<(), String> {
        if let Some((_, mut e)) = cur {
            let n_ch = rows.len() / n_samples.max(1);
            e.data = Array2::from_shape_vec((n_ch, n_samples), std::mem::take(rows)).map_err(|e| e.to_string())?;
            epochs.push(e);
        }
        Ok(())
    };

    for (line, rec) in csv.records().enumerate() {
        let rec = rec.map_err(|e| file_err(path, e))?;
        let at = |m: String| file_err(path, format!("row {}: {m}", line + 3));
        if rec.len() != n_samples + 8 {
            return Err(at("wrong field count".into()));
        }
        let idx: usize = rec[0].parse().map_err(|_| at("bad epoch index".into()))?;
        if current.as_ref().map(|(i, _)| *i) != Some(idx) {
            finish(current.take(), &mut rows, &mut epochs).map_err(at)?;
            let label = EpochLabel::parse(&rec[1]).ok_or_else(|| at(format!("bad label {:?}", &rec[1])))?;
            let object_ids = if rec[5].is_empty() {
                Vec::new()
            } else {
                rec[5]
                    .split('|')
                    .map(|s| s.parse::<u8>().map_err(|_| at(format!("bad object {s:?}"))))
                    .collect::<Result<_, _>>()?
            };
            current = Some((
                idx,
                Epoch {
                    data: Array2::zeros((0, 0)),
                    t0_ms: t0,
                    label,
                    trial_id: parse_opt(&rec[2]).map_err(at)?,
                    sequence_index: parse_opt(&rec[3]).map_err(at)?,
                    stimulus_group: parse_opt(&rec[4]).map_err(at)?,
                    onset_sample: rec[6].parse().map_err(|_| at("bad onset".into()))?,
                    object_ids,
                },
            ));
        }
        if epochs.is_empty() {
            channel_names.push(rec[7].to_string());
        }
        for f in rec.iter().skip(8) {
            rows.push(f.parse().map_err(|_| at(format!("bad sample {f:?}")))?);
        }
    }
    finish(current, &mut rows, &mut epochs).map_err(|m| file_err(path, m))?;
    if epochs.iter().any(|e| e.data.nrows() != channel_names.len()) {
        return Err(file_err(path, "epochs disagree on channel count"));
    }
    let interpolated = interp
        .split(';')
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (e, c) = s
                .split_once(':')
                .ok_or_else(|| file_err(path, "bad interpolation entry"))?;
            Ok(Interpolation {
                epoch: e.parse().map_err(|_| file_err(path, "bad interpolation epoch"))?,
                channel: c.to_string(),
                neighbors: Vec::new(),
            })
        })
        .collect::<Result<_, PreprocessError>>()?;
    Ok(EpochSet {
        subject_id: subject,
        fs,
        channel_names,
        epochs,
        rejected_count: rejected,
        interpolated,
    })
}
