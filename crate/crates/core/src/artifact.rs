//! Electrode-polarization artifact detection and suppression.
//!
//! Detection flags runs of large first differences, widens each run to the
//! surrounding zero crossings and caps the result. Suppression zeroes each
//! span and multiplies a short raised-cosine ramp into the samples on both
//! sides, leaving everything else untouched.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ms_to_samples, Recording, TrialSet, TrialTiming};
use crate::num::{median, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    /// Absolute first-difference threshold in µV per sample.
    Fixed { uv_per_sample: f64 },
    /// `multiplier` times the median nonzero |first difference| over a centered window.
    Adaptive { multiplier: f64, window_ms: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactParams {
    pub enabled: bool,
    pub threshold: Threshold,
    pub min_consecutive_samples: usize,
    pub max_suppression_ms: f64,
    pub taper_samples: usize,
}

impl Default for ArtifactParams {
    fn default() -> Self {
        ArtifactParams {
            enabled: true,
            threshold: Threshold::Adaptive {
                multiplier: 8.0,
                window_ms: 4000.0,
            },
            min_consecutive_samples: 3,
            max_suppression_ms: 1000.0,
            taper_samples: 16,
        }
    }
}

impl ArtifactParams {
    pub fn validate(&self) -> Result<()> {
        match self.threshold {
            Threshold::Fixed { uv_per_sample } if !(uv_per_sample > 0.0) => {
                return Err(Error::config("artifact.threshold", "fixed threshold must be positive"))
            }
            Threshold::Adaptive { multiplier, window_ms } if !(multiplier > 0.0 && window_ms > 0.0) => {
                return Err(Error::config(
                    "artifact.threshold",
                    "adaptive multiplier and window must be positive",
                ))
            }
            _ => {}
        }
        if self.min_consecutive_samples == 0 {
            return Err(Error::config("artifact.min_consecutive_samples", "must be at least 1"));
        }
        if !(self.max_suppression_ms > 0.0) {
            return Err(Error::config("artifact.max_suppression_ms", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuppressionResult<T> {
    pub cleaned: Vec<T>,
    pub spans: Vec<Range<usize>>,
    /// Online feedback is paused for the duration of each span.
    pub feedback_suspended: Vec<bool>,
}

/// Per-difference thresholds, one per index of the first-difference series.
fn thresholds(absdiff: &[f64], fs: f64, threshold: Threshold) -> Vec<f64> {
    match threshold {
        Threshold::Fixed { uv_per_sample } => vec![uv_per_sample; absdiff.len()],
        Threshold::Adaptive { multiplier, window_ms } => {
            let n = absdiff.len();
            let hop = ms_to_samples(1000.0, fs).max(1);
            let half = (ms_to_samples(window_ms, fs) / 2).max(1);
            let mut out = Vec::with_capacity(n);
            let mut scratch = Vec::new();
            let mut block = 0;
            while block * hop < n {
                let a = block * hop;
                let b = (a + hop).min(n);
                let center = (a + b) / 2;
                let lo = center.saturating_sub(half);
                let hi = (center + half).min(n);
                scratch.clear();
                // Flat stretches (already suppressed, or a dead lead) would drag the scale down.
                scratch.extend(absdiff[lo..hi].iter().copied().filter(|&d| d > 0.0));
                let scale = if scratch.is_empty() { 0.0 } else { median(&mut scratch) };
                let t = (multiplier * scale).max(f64::MIN_POSITIVE);
                out.extend(std::iter::repeat(t).take(b - a));
                block += 1;
            }
            out
        }
    }
}

fn is_crossing(x: &[f64], k: usize) -> bool {
    x[k] == 0.0 || (x[k - 1] < 0.0) != (x[k] < 0.0)
}

/// Disjoint, sorted sample ranges judged to contain polarization artifacts.
pub fn detect_artifact_spans<T: Real>(signal: &[T], fs: f64, params: &ArtifactParams) -> Result<Vec<Range<usize>>> {
    params.validate()?;
    let n = signal.len();
    if n < 2 {
        return Ok(Vec::new());
    }
    let x: Vec<f64> = signal.iter().map(|v| v.as_f64()).collect();
    let absdiff: Vec<f64> = x.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let thr = thresholds(&absdiff, fs, params.threshold);
    let cap = ms_to_samples(params.max_suppression_ms, fs).max(1);

    let mut runs = Vec::new();
    let mut i = 0;
    while i < absdiff.len() {
        if absdiff[i] > thr[i] {
            let a = i;
            while i < absdiff.len() && absdiff[i] > thr[i] {
                i += 1;
            }
            if i - a >= params.min_consecutive_samples {
                runs.push((a, i - 1));
            }
        } else {
            i += 1;
        }
    }

    let mut spans: Vec<Range<usize>> = Vec::with_capacity(runs.len());
    for (a, b) in runs {
        // Difference k spans samples k and k + 1.
        let run_end = b + 2;
        let start = (1..=a + 1).rev().find(|&k| is_crossing(&x, k)).unwrap_or(0);
        let mut end = (run_end..n).find(|&k| is_crossing(&x, k)).unwrap_or(n);
        if end - start > cap {
            let limit = start + cap;
            end = (run_end..=limit.min(n - 1))
                .rev()
                .find(|&k| is_crossing(&x, k))
                .unwrap_or(limit);
        }
        let span = start..end.min(n);
        match spans.last_mut() {
            Some(last) if span.start <= last.end => last.end = last.end.max(span.end),
            _ => spans.push(span),
        }
    }
    Ok(spans)
}

/// Raised-cosine weight for a sample `j` (1-based) positions outside a span.
fn taper_weight(j: usize, taper: usize) -> f64 {
    0.5 * (1.0 - (std::f64::consts::PI * j as f64 / (taper + 1) as f64).cos())
}

/// Zeroes every span and tapers `taper_samples` on each side of it.
pub fn suppress<T: Real>(signal: &[T], spans: &[Range<usize>], taper_samples: usize) -> Result<SuppressionResult<T>> {
    let n = signal.len();
    for (k, s) in spans.iter().enumerate() {
        if s.start >= s.end {
            return Err(Error::EmptySpan);
        }
        if s.end > n {
            return Err(Error::SpanOutOfRange {
                start: s.start,
                end: s.end,
                len: n,
            });
        }
        if k > 0 && spans[k - 1].end > s.start {
            return Err(Error::Internal(format!(
                "artifact spans overlap or are unsorted at {:?} / {:?}",
                spans[k - 1],
                s
            )));
        }
    }
    let mut out = signal.to_vec();
    let inside = |i: usize| spans.iter().any(|s| s.contains(&i));
    for s in spans {
        for v in &mut out[s.clone()] {
            *v = T::zero();
        }
        for j in 1..=taper_samples {
            let w = T::lit(taper_weight(j, taper_samples));
            if s.start >= j && !inside(s.start - j) {
                out[s.start - j] = out[s.start - j] * w;
            }
            if s.end + j - 1 < n && !inside(s.end + j - 1) {
                out[s.end + j - 1] = out[s.end + j - 1] * w;
            }
        }
    }
    Ok(SuppressionResult {
        cleaned: out,
        feedback_suspended: vec![true; spans.len()],
        spans: spans.to_vec(),
    })
}

/// Detected spans per channel of a recording.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArtifactLog {
    pub spans: Vec<(String, Range<usize>)>,
}

/// Cleans every channel and invalidates trials whose analysis extent overlaps
/// a detected span.
pub fn clean_recording<T: Real>(
    recording: &Recording<T>,
    trials: &mut TrialSet,
    timing: &TrialTiming,
    params: &ArtifactParams,
) -> Result<(Recording<T>, ArtifactLog)> {
    let fs = recording.sample_rate_hz();
    let mut cleaned = recording.clone();
    let mut log = ArtifactLog::default();
    if !params.enabled {
        return Ok((cleaned, log));
    }
    for (c, label) in recording.labels().iter().enumerate() {
        let spans = detect_artifact_spans(&recording.channels()[c], fs, params)?;
        if spans.is_empty() {
            continue;
        }
        let res = suppress(&recording.channels()[c], &spans, params.taper_samples)?;
        cleaned = cleaned.with_channel(c, res.cleaned)?;
        for s in spans {
            log.spans.push((label.clone(), s));
        }
    }
    let taper = params.taper_samples;
    for trial in &mut trials.trials {
        let Ok(extent) = trial.analysis_extent(timing, fs) else {
            continue;
        };
        for (_, s) in &log.spans {
            let touched = s.start.saturating_sub(taper)..s.end + taper;
            if touched.start < extent.end && extent.start < touched.end {
                trial.artifact_spans.push(s.clone());
                trial.invalidate(crate::model::InvalidReason::Artifact);
            }
        }
    }
    Ok((cleaned, log))
}
