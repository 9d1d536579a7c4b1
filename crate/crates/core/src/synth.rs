//! Synthetic sensorimotor EEG with known ERD.
//!
//! Each channel carries a narrowband SMR oscillation whose power is scaled by
//! `1 - depth/100` from cue1 until movement end, on top of stationary pink
//! background noise. Ground truth is defined on the SMR envelope alone, so it
//! does not depend on the noise realization.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ms_to_samples, period_bounds, AnalysisPeriod, Hemisphere, Montage, NovelPeriod, Recording, Trial, TrialSet,
    TrialTiming, Trigger, TriggerCode, DEFAULT_SAMPLE_RATE_HZ,
};
use crate::num::Real;

/// Samples over which an injected polarization transient rises to its peak.
pub const ARTIFACT_RISE_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmrSpec {
    pub center_hz: f64,
    /// Zero gives a single tone; otherwise five tones spread over the bandwidth.
    pub bandwidth_hz: f64,
    pub rest_amplitude_uv: f64,
    /// Power drop from cue1 to cue2.
    pub planning_depth_percent: f64,
    /// Power drop from cue2 to movement end.
    pub movement_depth_percent: f64,
    /// Linear amplitude ramp at each level change; 0 is an instantaneous step.
    pub ramp_ms: f64,
    pub affected: Vec<Hemisphere>,
    /// Phase advance per grid column and per grid row (rad).
    pub phase_step_rad: (f64, f64),
    /// Per-channel uniform phase jitter, +- this value (rad).
    pub phase_jitter_rad: f64,
}

impl Default for SmrSpec {
    fn default() -> Self {
        SmrSpec {
            center_hz: 12.0,
            bandwidth_hz: 0.0,
            rest_amplitude_uv: 10.0,
            planning_depth_percent: 50.0,
            movement_depth_percent: 50.0,
            ramp_ms: 0.0,
            affected: vec![Hemisphere::Left, Hemisphere::Midline, Hemisphere::Right],
            // Neighbours (including diagonals) differ by at least pi/3 before jitter.
            phase_step_rad: (2.0 * std::f64::consts::FRAC_PI_3, std::f64::consts::PI),
            phase_jitter_rad: std::f64::consts::PI / 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArtifactSpec {
    pub probability: f64,
    pub peak_uv: f64,
    pub decay_ms: f64,
}

impl Default for ArtifactSpec {
    fn default() -> Self {
        ArtifactSpec {
            probability: 0.0,
            peak_uv: 500.0,
            decay_ms: 150.0,
        }
    }
}

/// Generator settings that are not shared with the analysis config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSettings {
    pub n_trials: usize,
    pub initial_rest_ms: f64,
    pub tail_ms: f64,
    pub background_rms_uv: f64,
    pub band_limit_hz: (f64, f64),
    pub smr: SmrSpec,
    pub artifact: ArtifactSpec,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            n_trials: 80,
            initial_rest_ms: 10_000.0,
            tail_ms: 1500.0,
            // 10 dB below the SMR rest power (10 µV tone: 50 µV²).
            background_rms_uv: (50.0f64 / 10.0).sqrt(),
            band_limit_hz: (0.1, 60.0),
            smr: SmrSpec::default(),
            artifact: ArtifactSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub fs: f64,
    pub timing: TrialTiming,
    pub montage: Montage,
    pub settings: SynthSettings,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            fs: DEFAULT_SAMPLE_RATE_HZ,
            timing: TrialTiming::default(),
            montage: Montage::default_sensorimotor(),
            settings: SynthSettings::default(),
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn with_depth(mut self, depth_percent: f64) -> Self {
        self.settings.smr.planning_depth_percent = depth_percent;
        self.settings.smr.movement_depth_percent = depth_percent;
        self
    }

    /// Sets the background RMS so that SMR rest power / noise power = `snr_db`.
    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        let smr_power = 0.5 * self.settings.smr.rest_amplitude_uv.powi(2);
        self.settings.background_rms_uv = (smr_power / 10f64.powf(snr_db / 10.0)).sqrt();
        self
    }

    pub fn noiseless(mut self) -> Self {
        self.settings.background_rms_uv = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        let bad = |m: String| Err(Error::InvalidSpec(m));
        self.timing.validate(self.fs)?;
        self.montage.validate()?;
        for (name, d) in [
            ("planning_depth_percent", s.smr.planning_depth_percent),
            ("movement_depth_percent", s.smr.movement_depth_percent),
        ] {
            if !(0.0..100.0).contains(&d) {
                return bad(format!("{name} = {d} outside [0, 100)"));
            }
        }
        if !(self.fs > 2.0 * (s.smr.center_hz + s.smr.bandwidth_hz)) {
            return bad(format!(
                "fs = {} must exceed twice center + bandwidth ({} Hz)",
                self.fs,
                s.smr.center_hz + s.smr.bandwidth_hz
            ));
        }
        if s.smr.center_hz <= 0.0 || s.smr.bandwidth_hz < 0.0 || s.smr.bandwidth_hz >= 2.0 * s.smr.center_hz {
            return bad("SMR center must be positive and bandwidth within [0, 2*center)".into());
        }
        if s.background_rms_uv < 0.0 || s.smr.rest_amplitude_uv < 0.0 || s.smr.ramp_ms < 0.0 || !(s.smr.phase_jitter_rad >= 0.0) {
            return bad("amplitudes, ramp and phase jitter must be non-negative".into());
        }
        let (lo, hi) = s.band_limit_hz;
        if !(0.0 <= lo && lo < hi) {
            return bad(format!("band limit ({lo}, {hi}) invalid"));
        }
        if !(0.0..=1.0).contains(&s.artifact.probability) || s.artifact.decay_ms <= 0.0 {
            return bad("artifact probability must be in [0, 1] and decay positive".into());
        }
        if s.initial_rest_ms < self.timing.baseline_offset_ms + self.timing.baseline_duration_ms {
            return bad("initial rest must contain the baseline segment".into());
        }
        if s.tail_ms < 1000.0 {
            return bad("tail must be at least 1000 ms so the last recovery window fits".into());
        }
        Ok(())
    }
}

/// Per-trial bookkeeping written by the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLedger {
    pub trial_start: usize,
    pub cue1: usize,
    pub cue2: usize,
    pub movement_end: usize,
    pub movement_ms: f64,
    /// (channel label, peak sample) of an injected artifact.
    pub artifact: Option<(String, usize)>,
}

/// True SMR energy ratios, per trial and channel, for each novel-method
/// period relative to the period immediately before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: Vec<String>,
    pub affected: Vec<bool>,
    pub trials: Vec<TrialLedger>,
    /// `[trial][k]` for k over PreTrigger, Post1, Post2, Post3, ReactionTime
    /// on affected channels; unaffected channels are 1 everywhere.
    pub affected_ratios: Vec<[f64; 5]>,
    /// Per-channel SMR phase (rad) and per-tone frequencies.
    pub smr_phases: Vec<f64>,
    pub smr_frequencies_hz: Vec<f64>,
}

impl GroundTruth {
    pub fn ratio(&self, trial: usize, channel: usize, period: NovelPeriod) -> f64 {
        if !self.affected[channel] {
            return 1.0;
        }
        let k = NovelPeriod::ALL.iter().position(|p| *p == period).unwrap();
        self.affected_ratios[trial][k]
    }
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SMR phase of each tone on one channel: a shared random offset plus a
/// linear gradient over the electrode grid and a small jitter.
fn channel_phases(spec: &SynthSpec, channel: usize, n_tones: usize) -> Vec<f64> {
    let smr = &spec.settings.smr;
    let e = &spec.montage.electrodes[channel];
    let mut base = substream(spec.seed, 2000);
    let mut jitter = substream(spec.seed, 2100 + channel as u64);
    (0..n_tones)
        .map(|_| {
            let offset = base.gen_range(0.0..std::f64::consts::TAU);
            let j = if smr.phase_jitter_rad > 0.0 {
                jitter.gen_range(-smr.phase_jitter_rad..=smr.phase_jitter_rad)
            } else {
                0.0
            };
            (offset + smr.phase_step_rad.0 * e.grid_col as f64 + smr.phase_step_rad.1 * e.grid_row as f64 + j)
                .rem_euclid(std::f64::consts::TAU)
        })
        .collect()
}

/// Step-plus-exponential transient: rises linearly over
/// [`ARTIFACT_RISE_SAMPLES`] to `peak_uv` at `at_sample`, then decays with
/// time constant `decay_samples`.
pub fn polarization_transient(len: usize, at_sample: usize, peak_uv: f64, decay_samples: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    if peak_uv == 0.0 {
        return out;
    }
    let rise = ARTIFACT_RISE_SAMPLES;
    let first = at_sample.saturating_sub(rise - 1);
    for (i, v) in out.iter_mut().enumerate().skip(first) {
        *v = if i <= at_sample {
            peak_uv * (i + rise - at_sample) as f64 / rise as f64
        } else {
            peak_uv * (-((i - at_sample) as f64) / decay_samples).exp()
        };
    }
    out
}

/// Adds a polarization transient to one channel, returning a new recording.
pub fn inject_polarization_artifact<T: Real>(
    recording: &Recording<T>,
    channel: &str,
    at_sample: usize,
    peak_uv: f64,
    decay_ms: f64,
) -> Result<Recording<T>> {
    let idx = recording
        .channel_index(channel)
        .ok_or_else(|| Error::UnknownChannel(channel.to_string()))?;
    if at_sample >= recording.len() {
        return Err(Error::SpanOutOfRange {
            start: at_sample,
            end: at_sample + 1,
            len: recording.len(),
        });
    }
    if !(decay_ms > 0.0) {
        return Err(Error::InvalidSpec("decay_ms must be positive".into()));
    }
    let decay = decay_ms * recording.sample_rate_hz() / 1000.0;
    let transient = polarization_transient(recording.len(), at_sample, peak_uv, decay);
    let samples: Vec<T> = recording.channels()[idx]
        .iter()
        .zip(&transient)
        .map(|(&x, &a)| x + T::lit(a))
        .collect();
    recording.clone().with_channel(idx, samples)
}

/// Pink (1/f power) noise band-limited to `band`, scaled to `rms` exactly.
pub fn pink_noise(len: usize, fs: f64, band: (f64, f64), rms: f64, rng: &mut impl Rng) -> Vec<f64> {
    if rms == 0.0 || len == 0 {
        return vec![0.0; len];
    }
    let n = len.next_power_of_two().max(2);
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|_| Complex::new(rng.sample::<f64, _>(StandardNormal), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for k in 0..n {
        let kk = if k <= n / 2 { k } else { n - k };
        let f = kk as f64 * fs / n as f64;
        let g = if f >= band.0 && f <= band.1 && f > 0.0 {
            1.0 / f.sqrt()
        } else {
            0.0
        };
        buf[k] *= g;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let mut out: Vec<f64> = buf[..len].iter().map(|c| c.re).collect();
    let mean = out.iter().sum::<f64>() / len as f64;
    out.iter_mut().for_each(|v| *v -= mean);
    let cur = (out.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    if cur > 0.0 {
        out.iter_mut().for_each(|v| *v *= rms / cur);
    }
    out
}

struct Layout {
    len: usize,
    trials: Vec<TrialLedger>,
}

fn layout(spec: &SynthSpec) -> Layout {
    let fs = spec.fs;
    let t = &spec.timing;
    let s = |ms: f64| ms_to_samples(ms, fs);
    let mut rng = substream(spec.seed, 1);
    let mut cursor = s(spec.settings.initial_rest_ms);
    let mut trials = Vec::with_capacity(spec.settings.n_trials);
    for _ in 0..spec.settings.n_trials {
        let movement_ms = rng.gen_range(t.movement_min_ms..=t.movement_max_ms);
        let trial_start = cursor;
        let cue1 = trial_start + s(t.pre_trigger_ms);
        let cue2 = cue1 + s(t.post_trigger_ms);
        let movement_end = cue2 + s(t.reaction_ms) + s(movement_ms);
        cursor = movement_end + s(t.recovery_ms);
        trials.push(TrialLedger {
            trial_start,
            cue1,
            cue2,
            movement_end,
            movement_ms,
            artifact: None,
        });
    }
    let len = cursor + s(spec.settings.tail_ms);
    Layout { len, trials }
}

/// SMR power gain (1 at rest) for every sample.
fn power_envelope(spec: &SynthSpec, len: usize, trials: &[TrialLedger]) -> Vec<f64> {
    let smr = &spec.settings.smr;
    let planning = 1.0 - smr.planning_depth_percent / 100.0;
    let movement = 1.0 - smr.movement_depth_percent / 100.0;
    let ramp = ms_to_samples(smr.ramp_ms, spec.fs);
    let mut power = vec![1.0; len];
    for tr in trials {
        for i in tr.cue1..tr.cue2.min(len) {
            power[i] = planning;
        }
        for i in tr.cue2..tr.movement_end.min(len) {
            power[i] = movement;
        }
        if ramp == 0 {
            continue;
        }
        // Amplitude moves linearly from the old level to the new one.
        let changes = [
            (tr.cue1, tr.cue2, 1.0, planning),
            (tr.cue2, tr.movement_end, planning, movement),
            (tr.movement_end, len, movement, 1.0),
        ];
        for (a, b, from, to) in changes {
            let (fa, ta) = (f64::sqrt(from), f64::sqrt(to));
            for j in 0..ramp.min(b.saturating_sub(a)) {
                let w = (j + 1) as f64 / (ramp + 1) as f64;
                let amp = fa + (ta - fa) * w;
                power[a + j] = amp * amp;
            }
        }
    }
    power
}

/// Generates a recording, its trial segmentation and the ground truth.
pub fn generate<T: Real>(spec: &SynthSpec) -> Result<(Recording<T>, TrialSet, GroundTruth)> {
    spec.validate()?;
    let fs = spec.fs;
    let st = &spec.settings;
    let Layout { len, mut trials } = layout(spec);
    let montage = &spec.montage;
    let labels = montage.labels();
    let n_ch = labels.len();
    let affected: Vec<bool> = montage
        .electrodes
        .iter()
        .map(|e| {
            let h = montage.hemisphere(&e.label).unwrap();
            st.smr.affected.contains(&h)
        })
        .collect();

    let env = power_envelope(spec, len, &trials);
    let amp_env: Vec<f64> = env.iter().map(|p| p.sqrt()).collect();

    let n_tones = if st.smr.bandwidth_hz > 0.0 { 5 } else { 1 };
    let freqs: Vec<f64> = (0..n_tones)
        .map(|k| {
            if n_tones == 1 {
                st.smr.center_hz
            } else {
                st.smr.center_hz + st.smr.bandwidth_hz * (k as f64 / (n_tones - 1) as f64 - 0.5)
            }
        })
        .collect();
    let tone_amp = st.smr.rest_amplitude_uv / (n_tones as f64).sqrt();

    let mut phases = Vec::with_capacity(n_ch);
    let mut channels: Vec<Vec<T>> = Vec::with_capacity(n_ch);
    for (c, is_affected) in affected.iter().enumerate() {
        let mut rng = substream(spec.seed, 1000 + c as u64);
        let noise = pink_noise(len, fs, st.band_limit_hz, st.background_rms_uv, &mut rng);
        let tone_phases = channel_phases(spec, c, n_tones);
        phases.push(tone_phases[0]);
        let w: Vec<f64> = freqs.iter().map(|f| std::f64::consts::TAU * f / fs).collect();
        let samples = (0..len)
            .map(|i| {
                let tone: f64 = w
                    .iter()
                    .zip(&tone_phases)
                    .map(|(wk, ph)| (wk * i as f64 + ph).cos())
                    .sum::<f64>()
                    * tone_amp;
                let a = if *is_affected { amp_env[i] } else { 1.0 };
                T::lit(a * tone + noise[i])
            })
            .collect();
        channels.push(samples);
    }

    let mut triggers = Vec::with_capacity(4 * trials.len());
    for tr in &trials {
        for (idx, code) in [
            (tr.trial_start, TriggerCode::TrialStart),
            (tr.cue1, TriggerCode::Cue1),
            (tr.cue2, TriggerCode::Cue2),
            (tr.movement_end, TriggerCode::MovementEnd),
        ] {
            triggers.push(Trigger {
                sample_index: idx,
                code,
            });
        }
    }
    let mut recording = Recording::new(fs, labels.clone(), channels, triggers)?;

    let mut trial_set = TrialSet::default();
    let mut affected_ratios = Vec::with_capacity(trials.len());
    for (k, tr) in trials.iter().enumerate() {
        let trial = Trial::new(k, tr.trial_start, tr.cue1, tr.cue2, tr.movement_end, len)?;
        let mut ratios = [1.0; 5];
        let windows: Vec<Range<usize>> = NovelPeriod::ALL
            .iter()
            .map(|&p| period_bounds(&trial, AnalysisPeriod::Novel(p), &spec.timing, fs))
            .collect::<Result<_>>()?;
        let pre = &windows[0];
        let before = pre.start.saturating_sub(pre.len())..pre.start;
        let energy = |r: &Range<usize>| env[r.clone()].iter().sum::<f64>();
        let mut prev = energy(&before);
        for (j, w) in windows.iter().enumerate() {
            let e = energy(w);
            ratios[j] = e / prev;
            prev = e;
        }
        affected_ratios.push(ratios);
        trial_set.trials.push(trial);
    }

    if st.artifact.probability > 0.0 && st.artifact.peak_uv != 0.0 {
        for (k, tr) in trials.iter_mut().enumerate() {
            let mut rng = substream(spec.seed, 3000 + k as u64);
            if rng.gen::<f64>() >= st.artifact.probability {
                continue;
            }
            let ch = rng.gen_range(0..n_ch);
            let extent = trial_set.trials[k].analysis_extent(&spec.timing, fs)?;
            let at = rng.gen_range(extent.start + ARTIFACT_RISE_SAMPLES..extent.end);
            recording = inject_polarization_artifact(&recording, &labels[ch], at, st.artifact.peak_uv, st.artifact.decay_ms)?;
            tr.artifact = Some((labels[ch].clone(), at));
        }
    }

    let truth = GroundTruth {
        labels,
        affected,
        trials,
        affected_ratios,
        smr_phases: phases,
        smr_frequencies_hz: freqs,
    };
    Ok((recording, trial_set, truth))
}

/// SMR component alone for one channel (noise-free), for oracle checks.
pub fn smr_component(spec: &SynthSpec, truth: &GroundTruth, channel: usize, len: usize) -> Vec<f64> {
    let env = power_envelope(spec, len, &truth.trials);
    let st = &spec.settings;
    let n_tones = truth.smr_frequencies_hz.len();
    let tone_amp = st.smr.rest_amplitude_uv / (n_tones as f64).sqrt();
    let phases = channel_phases(spec, channel, n_tones);
    (0..len)
        .map(|i| {
            let a = if truth.affected[channel] { env[i].sqrt() } else { 1.0 };
            a * tone_amp
                * truth
                    .smr_frequencies_hz
                    .iter()
                    .zip(&phases)
                    .map(|(f, ph)| (std::f64::consts::TAU * f / spec.fs * i as f64 + ph).cos())
                    .sum::<f64>()
        })
        .collect()
}
