//! Recording files, trial segmentation and report output.
//!
//! Two recording formats are supported:
//!
//! * `CsvMatrix`: first line `fs=<hz>`, second line channel labels followed by
//!   `trigger`, then one row per sample. Trigger codes 1 to 4 are TrialStart,
//!   Cue1, Cue2 and MovementEnd; 0 means no event.
//! * `JsonLines`: a header object `{"fs", "labels", "triggers": [[index, code], ...]}`
//!   followed by one JSON array of channel values per sample.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::compare::DetectionReport;
use crate::error::{Error, Result};
use crate::model::{InvalidReason, Recording, Trial, TrialSet, TrialTiming, Trigger, TriggerCode};
use crate::novel::Transition;
use crate::num::Real;
use crate::standard::PeriodPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordingFormat {
    CsvMatrix,
    JsonLines,
}

impl RecordingFormat {
    /// `.jsonl`/`.json` map to JsonLines, anything else to CsvMatrix.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => RecordingFormat::JsonLines,
            _ => RecordingFormat::CsvMatrix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Json,
    /// A directory with one CSV file per table.
    CsvTables,
}

fn trigger_code(code: i64, line: usize) -> Result<Option<TriggerCode>> {
    if code == 0 {
        return Ok(None);
    }
    TriggerCode::from_code(code)
        .map(Some)
        .ok_or_else(|| Error::format(line, format!("unknown trigger code {code}")))
}

fn check_fs(fs: f64, line: usize) -> Result<()> {
    if fs.is_finite() && fs > 0.0 {
        Ok(())
    } else {
        Err(Error::format(line, format!("sample rate must be positive, got {fs}")))
    }
}

pub fn parse_csv_matrix<T: Real>(text: &str) -> Result<Recording<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, first) = lines.next().ok_or_else(|| Error::format(1, "empty file"))?;
    let fs: f64 = first
        .trim()
        .strip_prefix("fs=")
        .ok_or_else(|| Error::format(1, "expected `fs=<hz>`"))?
        .trim()
        .parse()
        .map_err(|_| Error::format(1, "sample rate is not a number"))?;
    check_fs(fs, 1)?;
    let (_, header) = lines.next().ok_or_else(|| Error::format(2, "missing label row"))?;
    let mut labels: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if labels.last().map(String::as_str) != Some("trigger") || labels.len() < 2 {
        return Err(Error::format(2, "label row must end with `trigger` after at least one channel"));
    }
    labels.pop();
    let n_ch = labels.len();
    let mut channels: Vec<Vec<T>> = vec![Vec::new(); n_ch];
    let mut triggers = Vec::new();
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != n_ch + 1 {
            return Err(Error::format(line, format!("expected {} fields, found {}", n_ch + 1, fields.len())));
        }
        for (c, f) in fields[..n_ch].iter().enumerate() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::format(line, format!("`{}` is not a number", f.trim())))?;
            channels[c].push(T::lit(v));
        }
        let code: i64 = fields[n_ch]
            .trim()
            .parse()
            .map_err(|_| Error::format(line, format!("trigger `{}` is not an integer", fields[n_ch].trim())))?;
        if let Some(code) = trigger_code(code, line)? {
            triggers.push(Trigger {
                sample_index: channels[0].len() - 1,
                code,
            });
        }
    }
    if channels[0].is_empty() {
        return Err(Error::format(3, "no sample rows"));
    }
    Recording::new(fs, labels, channels, triggers).map_err(|e| Error::format(0, e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonHeader {
    fs: f64,
    labels: Vec<String>,
    #[serde(default)]
    triggers: Vec<(usize, i64)>,
}

pub fn parse_json_lines<T: Real>(text: &str) -> Result<Recording<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::format(1, "empty file"))?;
    let header: JsonHeader = serde_json::from_str(first).map_err(|e| Error::format(1, e.to_string()))?;
    check_fs(header.fs, 1)?;
    if header.labels.is_empty() {
        return Err(Error::format(1, "no channel labels"));
    }
    let n_ch = header.labels.len();
    let mut channels: Vec<Vec<T>> = vec![Vec::new(); n_ch];
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = serde_json::from_str(row).map_err(|e| Error::format(line, e.to_string()))?;
        if values.len() != n_ch {
            return Err(Error::format(line, format!("expected {n_ch} values, found {}", values.len())));
        }
        for (c, v) in values.into_iter().enumerate() {
            channels[c].push(T::lit(v));
        }
    }
    let len = channels[0].len();
    if len == 0 {
        return Err(Error::format(2, "no sample rows"));
    }
    let mut triggers = Vec::with_capacity(header.triggers.len());
    for (idx, code) in header.triggers {
        if idx >= len {
            return Err(Error::format(1, format!("trigger at sample {idx} beyond {len} samples")));
        }
        if let Some(code) = trigger_code(code, 1)? {
            triggers.push(Trigger { sample_index: idx, code });
        }
    }
    Recording::new(header.fs, header.labels, channels, triggers).map_err(|e| Error::format(1, e.to_string()))
}

pub fn load_recording<T: Real>(path: &Path, format: RecordingFormat) -> Result<Recording<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        RecordingFormat::CsvMatrix => parse_csv_matrix(&text),
        RecordingFormat::JsonLines => parse_json_lines(&text),
    }
}

pub fn format_recording<T: Real>(recording: &Recording<T>, format: RecordingFormat) -> String {
    let n = recording.len();
    let mut out = String::with_capacity(n * recording.n_channels() * 12);
    match format {
        RecordingFormat::CsvMatrix => {
            let mut codes = vec![0u8; n];
            for t in recording.triggers() {
                codes[t.sample_index] = t.code.code();
            }
            let _ = writeln!(out, "fs={}", recording.sample_rate_hz());
            let _ = writeln!(out, "{},trigger", recording.labels().join(","));
            for (i, code) in codes.iter().enumerate() {
                for ch in recording.channels() {
                    // `{}` on f64 prints the shortest round-tripping form.
                    let _ = write!(out, "{},", ch[i].as_f64());
                }
                let _ = writeln!(out, "{code}");
            }
        }
        RecordingFormat::JsonLines => {
            let header = JsonHeader {
                fs: recording.sample_rate_hz(),
                labels: recording.labels().to_vec(),
                triggers: recording
                    .triggers()
                    .iter()
                    .map(|t| (t.sample_index, t.code.code() as i64))
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&header).expect("header serializes"));
            out.push('\n');
            let mut row = Vec::with_capacity(recording.n_channels());
            for i in 0..n {
                row.clear();
                row.extend(recording.channels().iter().map(|c| c[i].as_f64()));
                out.push_str(&serde_json::to_string(&row).expect("finite values serialize"));
                out.push('\n');
            }
        }
    }
    out
}

pub fn save_recording<T: Real>(recording: &Recording<T>, path: &Path, format: RecordingFormat) -> Result<()> {
    if recording.channels().iter().flatten().any(|v| !v.as_f64().is_finite()) {
        return Err(Error::InvalidRecording("non-finite samples cannot be written".into()));
    }
    fs::write(path, format_recording(recording, format)).map_err(|e| Error::io(path, e))
}

/// Groups triggers into trials. Incomplete or out-of-order groups and trials
/// whose analysis windows leave the recording are kept but marked invalid.
pub fn segment_trials<T: Copy>(recording: &Recording<T>, timing: &TrialTiming) -> TrialSet {
    let fs = recording.sample_rate_hz();
    let len = recording.len();
    let s = |ms: f64| crate::model::ms_to_samples(ms, fs);
    let mut out = TrialSet::default();
    // Landmarks seen so far for the open trial, in order.
    let mut open: Option<Vec<usize>> = None;

    let close = |marks: Vec<usize>, out: &mut TrialSet| {
        let index = out.trials.len();
        let complete = marks.len() == 4;
        let ts = marks[0];
        let cue1 = marks.get(1).copied().unwrap_or(ts + s(timing.pre_trigger_ms));
        let cue2 = marks.get(2).copied().unwrap_or(cue1 + s(timing.post_trigger_ms));
        let mend = marks
            .get(3)
            .copied()
            .unwrap_or(cue2 + s(timing.reaction_ms) + s(timing.movement_min_ms));
        let mut trial = match Trial::new(index, ts, cue1, cue2, mend, len) {
            Ok(t) => t,
            Err(_) => {
                // Coincident landmarks; keep the record with nominal spacing.
                let c1 = ts + s(timing.pre_trigger_ms).max(1);
                let c2 = c1 + s(timing.post_trigger_ms).max(1);
                let mut t = Trial::new(index, ts, c1, c2, c2 + s(timing.reaction_ms), len).expect("nominal order");
                t.invalidate(InvalidReason::Incomplete);
                t
            }
        };
        if !complete {
            trial.invalidate(InvalidReason::Incomplete);
        } else if trial.analysis_extent(timing, fs).is_err() {
            trial.invalidate(InvalidReason::Truncated);
        }
        out.trials.push(trial);
    };

    for t in recording.triggers() {
        let expected = open.as_ref().map(|m| m.len());
        match (t.code, expected) {
            (TriggerCode::TrialStart, _) => {
                if let Some(m) = open.take() {
                    close(m, &mut out);
                }
                open = Some(vec![t.sample_index]);
            }
            (TriggerCode::Cue1, Some(1)) | (TriggerCode::Cue2, Some(2)) => {
                open.as_mut().unwrap().push(t.sample_index);
            }
            (TriggerCode::MovementEnd, Some(3)) => {
                let mut m = open.take().unwrap();
                m.push(t.sample_index);
                close(m, &mut out);
            }
            (_, Some(_)) => {
                // Out of order: close what we have as incomplete.
                close(open.take().unwrap(), &mut out);
            }
            (_, None) => {}
        }
    }
    if let Some(m) = open.take() {
        close(m, &mut out);
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

/// Report CSV tables as (file name, contents).
pub fn report_tables(report: &DetectionReport) -> Vec<(String, String)> {
    let channels = &report.standard.channels;
    let std_cell = |pair: PeriodPair, ch: &str| report.standard.cell(pair, ch);

    let mut t1 = format!("pair,{}\n", channels.iter().map(|c| format!("{c}_mean,{c}_std")).collect::<Vec<_>>().join(","));
    let mut t2 = format!("pair,{}\n", channels.join(","));
    let mut t3 = t1.clone();
    if !report.standard.cells.is_empty() {
        for pair in PeriodPair::ALL {
            let mut r1 = vec![pair.label()];
            let mut r2 = vec![pair.label()];
            let mut r3 = vec![pair.label()];
            for ch in channels {
                let c = std_cell(pair, ch);
                r1.push(cell(c.map(|c| c.band_center_mean_hz)));
                r1.push(cell(c.map(|c| c.band_center_std_hz)));
                r2.push(cell(c.map(|c| c.aggregate.identification_rate_percent)));
                r3.push(cell(c.and_then(|c| c.aggregate.mean_erd)));
                r3.push(cell(c.and_then(|c| c.aggregate.std_erd)));
            }
            for (t, r) in [(&mut t1, r1), (&mut t2, r2), (&mut t3, r3)] {
                t.push_str(&r.join(","));
                t.push('\n');
            }
        }
    }

    let groups = crate::model::SignalGroup::ALL;
    let mut t4 = format!("interval,{}\n", groups.map(|g| g.short_name()).join(","));
    let mut t5 = format!(
        "interval,{}\n",
        groups.map(|g| format!("{0}_mean,{0}_std", g.short_name())).join(",")
    );
    if !report.novel.report_cells().is_empty() {
        for tr in Transition::ALL {
            let mut r4 = vec![tr.row_label().to_string()];
            let mut r5 = r4.clone();
            for g in groups {
                let c = report.novel.cell(tr, g);
                r4.push(cell(c.map(|c| c.identification_percent)));
                r5.push(cell(c.and_then(|c| c.mean_erd_percent)));
                r5.push(cell(c.and_then(|c| c.std_erd_percent)));
            }
            t4.push_str(&r4.join(","));
            t4.push('\n');
            t5.push_str(&r5.join(","));
            t5.push('\n');
        }
    }
    vec![
        ("table1_individual_band.csv".into(), t1),
        ("table2_standard_identification.csv".into(), t2),
        ("table3_standard_erd.csv".into(), t3),
        ("table4_novel_identification.csv".into(), t4),
        ("table5_novel_erd.csv".into(), t5),
    ]
}

pub fn emit_report(report: &DetectionReport, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(report)
                .map_err(|e| Error::Internal(format!("report serialization: {e}")))?;
            fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
        }
        ReportFormat::CsvTables => {
            fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
            for (name, body) in report_tables(report) {
                let p = path.join(name);
                fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            }
            Ok(())
        }
    }
}
