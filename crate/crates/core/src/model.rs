//! Domain types shared by both ERD pipelines.

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Default acquisition rate of the amplifier chain.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 512.0;

/// Length of every standard-method analysis period.
pub const STANDARD_PERIOD_MS: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hemisphere {
    Left,
    Midline,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Electrode {
    pub label: String,
    pub grid_row: i32,
    pub grid_col: i32,
    /// Optional in config files; derived from `grid_col` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hemisphere: Option<Hemisphere>,
}

/// Electrode layout on a row/column grid. Hemisphere follows from the column
/// relative to `midline_col`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Montage {
    pub midline_col: i32,
    pub electrodes: Vec<Electrode>,
}

impl Montage {
    pub fn new(midline_col: i32, electrodes: Vec<Electrode>) -> Result<Self> {
        let mut m = Montage {
            midline_col,
            electrodes,
        };
        m.validate()?;
        for e in &mut m.electrodes {
            e.hemisphere = Some(hemisphere_of(e.grid_col, midline_col));
        }
        Ok(m)
    }

    /// Sensorimotor layout: FC/C/CP rows over five columns plus Pz below CPz.
    pub fn default_sensorimotor() -> Self {
        let rows = [("FC", 0), ("C", 1), ("CP", 2)];
        let cols = [("3", 0), ("1", 1), ("z", 2), ("2", 3), ("4", 4)];
        let mut electrodes = Vec::with_capacity(16);
        for (prefix, r) in rows {
            for (suffix, c) in cols {
                electrodes.push(Electrode {
                    label: format!("{prefix}{suffix}"),
                    grid_row: r,
                    grid_col: c,
                    hemisphere: None,
                });
            }
        }
        electrodes.push(Electrode {
            label: "Pz".into(),
            grid_row: 3,
            grid_col: 2,
            hemisphere: None,
        });
        Montage::new(2, electrodes).expect("default montage is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.electrodes.is_empty() {
            return Err(Error::config("montage.electrodes", "montage is empty"));
        }
        let mut seen = HashSet::new();
        let mut cells = HashSet::new();
        for e in &self.electrodes {
            if e.label.is_empty() {
                return Err(Error::config("montage.electrodes", "empty electrode label"));
            }
            if !seen.insert(e.label.as_str()) {
                return Err(Error::config(
                    "montage.electrodes",
                    format!("duplicate label `{}`", e.label),
                ));
            }
            if !cells.insert((e.grid_row, e.grid_col)) {
                return Err(Error::config(
                    "montage.electrodes",
                    format!("`{}` shares a grid cell with another electrode", e.label),
                ));
            }
            let derived = hemisphere_of(e.grid_col, self.midline_col);
            if let Some(h) = e.hemisphere {
                if h != derived {
                    return Err(Error::config(
                        "montage.electrodes",
                        format!("`{}` declared {h:?} but column implies {derived:?}", e.label),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&Electrode> {
        self.electrodes.iter().find(|e| e.label == label)
    }

    pub fn labels(&self) -> Vec<String> {
        self.electrodes.iter().map(|e| e.label.clone()).collect()
    }

    pub fn hemisphere(&self, label: &str) -> Option<Hemisphere> {
        self.get(label)
            .map(|e| hemisphere_of(e.grid_col, self.midline_col))
    }

    /// Grid neighbours: Chebyshev distance 1 (includes diagonals).
    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        match (self.get(a), self.get(b)) {
            (Some(x), Some(y)) if x.label != y.label => {
                (x.grid_row - y.grid_row).abs() <= 1 && (x.grid_col - y.grid_col).abs() <= 1
            }
            _ => false,
        }
    }
}

fn hemisphere_of(col: i32, midline: i32) -> Hemisphere {
    match col.cmp(&midline) {
        std::cmp::Ordering::Less => Hemisphere::Left,
        std::cmp::Ordering::Equal => Hemisphere::Midline,
        std::cmp::Ordering::Greater => Hemisphere::Right,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriggerCode {
    TrialStart,
    Cue1,
    Cue2,
    MovementEnd,
}

impl TriggerCode {
    /// Wire encoding: 1..=4; 0 means "no event".
    pub fn code(self) -> u8 {
        match self {
            TriggerCode::TrialStart => 1,
            TriggerCode::Cue1 => 2,
            TriggerCode::Cue2 => 3,
            TriggerCode::MovementEnd => 4,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(TriggerCode::TrialStart),
            2 => Some(TriggerCode::Cue1),
            3 => Some(TriggerCode::Cue2),
            4 => Some(TriggerCode::MovementEnd),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub sample_index: usize,
    pub code: TriggerCode,
}

/// Continuous multichannel recording in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording<T> {
    sample_rate_hz: f64,
    labels: Vec<String>,
    channels: Vec<Vec<T>>,
    triggers: Vec<Trigger>,
}

impl<T: Copy> Recording<T> {
    pub fn new(
        sample_rate_hz: f64,
        labels: Vec<String>,
        channels: Vec<Vec<T>>,
        mut triggers: Vec<Trigger>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidRecording(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if labels.len() != channels.len() || channels.is_empty() {
            return Err(Error::InvalidRecording(format!(
                "{} labels for {} channels",
                labels.len(),
                channels.len()
            )));
        }
        let len = channels[0].len();
        if len == 0 {
            return Err(Error::InvalidRecording("channels are empty".into()));
        }
        if let Some(i) = channels.iter().position(|c| c.len() != len) {
            return Err(Error::InvalidRecording(format!(
                "channel `{}` has {} samples, expected {len}",
                labels[i],
                channels[i].len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidRecording(format!("duplicate label `{l}`")));
            }
        }
        triggers.sort_by_key(|t| t.sample_index);
        if let Some(t) = triggers.iter().find(|t| t.sample_index >= len) {
            return Err(Error::InvalidRecording(format!(
                "trigger at sample {} beyond recording of {len} samples",
                t.sample_index
            )));
        }
        Ok(Recording {
            sample_rate_hz,
            labels,
            channels,
            triggers,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn channel(&self, label: &str) -> Result<&[T]> {
        self.channel_index(label)
            .map(|i| self.channels[i].as_slice())
            .ok_or_else(|| Error::UnknownChannel(label.to_string()))
    }

    /// Replaces one channel's samples; length must match.
    pub fn with_channel(mut self, index: usize, samples: Vec<T>) -> Result<Self> {
        if index >= self.channels.len() || samples.len() != self.len() {
            return Err(Error::InvalidRecording(format!(
                "cannot replace channel {index} with {} samples",
                samples.len()
            )));
        }
        self.channels[index] = samples;
        Ok(self)
    }

    pub fn map_samples<U: Copy>(&self, f: impl Fn(T) -> U) -> Recording<U> {
        Recording {
            sample_rate_hz: self.sample_rate_hz,
            labels: self.labels.clone(),
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&x| f(x)).collect())
                .collect(),
            triggers: self.triggers.clone(),
        }
    }
}

/// Converts a duration to samples, rounding half up.
pub fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0 + 0.5).floor().max(0.0) as usize
}

/// Trial protocol durations in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialTiming {
    pub pre_trigger_ms: f64,
    pub post_trigger_ms: f64,
    pub reaction_ms: f64,
    pub movement_min_ms: f64,
    pub movement_max_ms: f64,
    pub recovery_ms: f64,
    /// Start of the initial rest segment that hosts R1 (offset into the recording).
    pub baseline_offset_ms: f64,
    /// Length of the initial rest segment; R1 windows tile it in 1 s steps.
    pub baseline_duration_ms: f64,
}

impl Default for TrialTiming {
    fn default() -> Self {
        TrialTiming {
            pre_trigger_ms: 500.0,
            post_trigger_ms: 1500.0,
            reaction_ms: 500.0,
            movement_min_ms: 500.0,
            movement_max_ms: 740.0,
            recovery_ms: 1000.0,
            baseline_offset_ms: 0.0,
            baseline_duration_ms: 10_000.0,
        }
    }
}

impl TrialTiming {
    pub fn validate(&self, fs: f64) -> Result<()> {
        let named = [
            ("pre_trigger_ms", self.pre_trigger_ms),
            ("post_trigger_ms", self.post_trigger_ms),
            ("reaction_ms", self.reaction_ms),
            ("movement_min_ms", self.movement_min_ms),
            ("movement_max_ms", self.movement_max_ms),
            ("recovery_ms", self.recovery_ms),
            ("baseline_duration_ms", self.baseline_duration_ms),
        ];
        for (field, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("timing.{field}"), "must be positive"));
            }
        }
        if !(self.baseline_offset_ms.is_finite() && self.baseline_offset_ms >= 0.0) {
            return Err(Error::config("timing.baseline_offset_ms", "must be >= 0"));
        }
        if self.movement_min_ms >= self.movement_max_ms {
            return Err(Error::config(
                "timing.movement_min_ms",
                "must be less than movement_max_ms",
            ));
        }
        let post = ms_to_samples(self.post_trigger_ms, fs);
        if post % 3 != 0 || post == 0 {
            return Err(Error::config(
                "timing.post_trigger_ms",
                format!("{post} samples at {fs} Hz do not split into three equal intervals"),
            ));
        }
        Ok(())
    }

    pub fn post_interval_ms(&self) -> f64 {
        self.post_trigger_ms / 3.0
    }
}

/// Why a trial is excluded from analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvalidReason {
    /// Trigger group incomplete or out of order.
    Incomplete,
    /// An analysis window runs off the recording.
    Truncated,
    /// An artifact span overlaps an analysis window.
    Artifact,
}

/// One trial's landmarks as absolute sample indices into its recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub trial_start: usize,
    pub cue1: usize,
    pub cue2: usize,
    pub movement_end: usize,
    pub recording_len: usize,
    pub valid: bool,
    pub invalid_reason: Option<InvalidReason>,
    pub artifact_spans: Vec<Range<usize>>,
}

impl Trial {
    pub fn new(
        index: usize,
        trial_start: usize,
        cue1: usize,
        cue2: usize,
        movement_end: usize,
        recording_len: usize,
    ) -> Result<Self> {
        if !(trial_start < cue1 && cue1 < cue2 && cue2 <= movement_end) {
            return Err(Error::InvalidRecording(format!(
                "trial {index}: landmarks out of order ({trial_start}, {cue1}, {cue2}, {movement_end})"
            )));
        }
        Ok(Trial {
            index,
            trial_start,
            cue1,
            cue2,
            movement_end,
            recording_len,
            valid: true,
            invalid_reason: None,
            artifact_spans: Vec::new(),
        })
    }

    pub fn invalidate(&mut self, reason: InvalidReason) {
        self.valid = false;
        if self.invalid_reason.is_none() {
            self.invalid_reason = Some(reason);
        }
    }

    /// Smallest range covering every analysis period of both methods (R1 excluded).
    pub fn analysis_extent(&self, timing: &TrialTiming, fs: f64) -> Result<Range<usize>> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for p in AnalysisPeriod::all_trial_relative() {
            let r = period_bounds(self, p, timing, fs)?;
            lo = lo.min(r.start);
            hi = hi.max(r.end);
        }
        Ok(lo..hi)
    }

    /// Translates every landmark by `shift` samples (positive or negative).
    pub fn shifted(&self, shift: i64, recording_len: usize) -> Trial {
        let s = |x: usize| (x as i64 + shift) as usize;
        Trial {
            trial_start: s(self.trial_start),
            cue1: s(self.cue1),
            cue2: s(self.cue2),
            movement_end: s(self.movement_end),
            recording_len,
            artifact_spans: self
                .artifact_spans
                .iter()
                .map(|r| s(r.start)..s(r.end))
                .collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
}

impl TrialSet {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn valid(&self) -> impl Iterator<Item = &Trial> {
        self.trials.iter().filter(|t| t.valid)
    }

    pub fn n_valid(&self) -> usize {
        self.valid().count()
    }
}

/// A frequency band in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl FrequencyBand {
    pub fn new(lo_hz: f64, hi_hz: f64, fs: f64) -> Result<Self> {
        let band = FrequencyBand { lo_hz, hi_hz };
        band.validate(fs)?;
        Ok(band)
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.lo_hz > 0.0 && self.lo_hz < self.hi_hz && self.hi_hz < fs / 2.0) {
            return Err(Error::InvalidBand {
                lo_hz: self.lo_hz,
                hi_hz: self.hi_hz,
                fs,
            });
        }
        Ok(())
    }

    pub fn center_hz(&self) -> f64 {
        0.5 * (self.lo_hz + self.hi_hz)
    }

    pub fn width_hz(&self) -> f64 {
        self.hi_hz - self.lo_hz
    }

    /// Open-interval overlap; bands that merely touch do not overlap.
    pub fn overlaps(&self, other: &FrequencyBand) -> bool {
        self.lo_hz < other.hi_hz && other.lo_hz < self.hi_hz
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo_hz && f <= self.hi_hz
    }
}

impl fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}) Hz", self.lo_hz, self.hi_hz)
    }
}

/// Relative change in band power between a reference and an active period.
///
/// Stored as a percentage; negative values are desynchronization. The ratio
/// view is `1 + percent / 100`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ErdMeasure<T> {
    pub percent: T,
}

impl<T: Scalar> ErdMeasure<T> {
    fn hundred() -> T {
        T::from_u8(100).expect("100 representable")
    }

    pub fn from_percent(percent: T) -> Self {
        ErdMeasure { percent }
    }

    pub fn from_ratio(ratio: T) -> Self {
        ErdMeasure {
            percent: (ratio - T::one()) * Self::hundred(),
        }
    }

    pub fn ratio(&self) -> T {
        T::one() + self.percent / Self::hundred()
    }

    /// Desynchronization at least as strong as `threshold_percent` (strict).
    pub fn is_identified(&self, threshold_percent: T) -> bool {
        self.percent < T::zero() - threshold_percent
    }
}

/// `(A - R) / R * 100`, evaluated as `(A - R) * 100 / R` so that round
/// percentages come out exact in binary floating point.
pub fn erd_percent<T: Scalar>(active_power: T, reference_power: T) -> Result<ErdMeasure<T>> {
    if !(reference_power > T::zero()) {
        return Err(Error::DegenerateReference(format!("{reference_power:?}")));
    }
    if active_power < T::zero() {
        return Err(Error::NegativePower(format!("{active_power:?}")));
    }
    let hundred = T::from_u8(100).expect("100 representable");
    Ok(ErdMeasure {
        percent: (active_power - reference_power) * hundred / reference_power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StandardPeriod {
    R1,
    R2,
    A1,
    A2,
    A3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NovelPeriod {
    PreTrigger,
    Post1,
    Post2,
    Post3,
    ReactionTime,
}

impl NovelPeriod {
    pub const ALL: [NovelPeriod; 5] = [
        NovelPeriod::PreTrigger,
        NovelPeriod::Post1,
        NovelPeriod::Post2,
        NovelPeriod::Post3,
        NovelPeriod::ReactionTime,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnalysisPeriod {
    Standard(StandardPeriod),
    Novel(NovelPeriod),
}

impl AnalysisPeriod {
    fn all_trial_relative() -> impl Iterator<Item = AnalysisPeriod> {
        [
            StandardPeriod::R2,
            StandardPeriod::A1,
            StandardPeriod::A2,
            StandardPeriod::A3,
        ]
        .into_iter()
        .map(AnalysisPeriod::Standard)
        .chain(NovelPeriod::ALL.into_iter().map(AnalysisPeriod::Novel))
    }
}

impl fmt::Display for AnalysisPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisPeriod::Standard(p) => write!(f, "{p:?}"),
            AnalysisPeriod::Novel(p) => write!(f, "{p:?}"),
        }
    }
}

/// Half-open sample range of `period` for `trial`.
///
/// Standard periods are 1 s: R1 at the baseline offset, R2 ends at cue1, A1
/// starts at cue1, A2 starts at cue2 + reaction time, A3 starts at movement
/// end. Novel periods: pre-trigger ends at cue1, three equal post-trigger
/// intervals start at cue1, reaction time starts at cue2.
pub fn period_bounds(
    trial: &Trial,
    period: AnalysisPeriod,
    timing: &TrialTiming,
    fs: f64,
) -> Result<Range<usize>> {
    let s = |ms: f64| ms_to_samples(ms, fs) as i64;
    let std_len = s(STANDARD_PERIOD_MS);
    let cue1 = trial.cue1 as i64;
    let cue2 = trial.cue2 as i64;
    let (start, end) = match period {
        AnalysisPeriod::Standard(p) => {
            let start = match p {
                StandardPeriod::R1 => s(timing.baseline_offset_ms),
                StandardPeriod::R2 => cue1 - std_len,
                StandardPeriod::A1 => cue1,
                StandardPeriod::A2 => cue2 + s(timing.reaction_ms),
                StandardPeriod::A3 => trial.movement_end as i64,
            };
            (start, start + std_len)
        }
        AnalysisPeriod::Novel(p) => {
            let third = timing.post_interval_ms();
            match p {
                NovelPeriod::PreTrigger => (cue1 - s(timing.pre_trigger_ms), cue1),
                NovelPeriod::Post1 => (cue1, cue1 + s(third)),
                NovelPeriod::Post2 => (cue1 + s(third), cue1 + s(2.0 * third)),
                NovelPeriod::Post3 => (cue1 + s(2.0 * third), cue1 + s(timing.post_trigger_ms)),
                NovelPeriod::ReactionTime => (cue2, cue2 + s(timing.reaction_ms)),
            }
        }
    };
    if start < 0 || end > trial.recording_len as i64 {
        return Err(Error::TruncatedTrial {
            trial: trial.index,
            period: period.to_string(),
            start,
            end,
            len: trial.recording_len,
        });
    }
    Ok(start as usize..end as usize)
}

/// Consecutive 1 s windows tiling the initial rest segment (R1 reference set).
pub fn baseline_windows(timing: &TrialTiming, fs: f64, recording_len: usize) -> Vec<Range<usize>> {
    let start = ms_to_samples(timing.baseline_offset_ms, fs);
    let end = (start + ms_to_samples(timing.baseline_duration_ms, fs)).min(recording_len);
    let step = ms_to_samples(STANDARD_PERIOD_MS, fs);
    (0..)
        .map(|k| start + k * step)
        .take_while(|&a| a + step <= end)
        .map(|a| a..a + step)
        .collect()
}

/// Differential signal groups used by the energy-ratio method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalGroup {
    LeftSide,
    InterHemisphere,
    RightSide,
}

impl SignalGroup {
    pub const ALL: [SignalGroup; 3] = [
        SignalGroup::LeftSide,
        SignalGroup::InterHemisphere,
        SignalGroup::RightSide,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            SignalGroup::LeftSide => "left",
            SignalGroup::InterHemisphere => "inter",
            SignalGroup::RightSide => "right",
        }
    }

    /// Left if both electrodes are left of the midline, right if both are
    /// right, inter-hemispheric otherwise.
    pub fn classify(a: Hemisphere, b: Hemisphere) -> SignalGroup {
        match (a, b) {
            (Hemisphere::Left, Hemisphere::Left) => SignalGroup::LeftSide,
            (Hemisphere::Right, Hemisphere::Right) => SignalGroup::RightSide,
            _ => SignalGroup::InterHemisphere,
        }
    }
}
