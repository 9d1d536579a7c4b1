//! Head-to-head runs of both pipelines and a small timing harness.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::artifact::clean_recording;
use crate::config::AnalysisConfig;
use crate::dsp::{apply_filter, convolve_full, design_bandpass, mean_log_spectrum, FilterMode};
use crate::error::{Error, Result};
use crate::model::{
    erd_percent, ms_to_samples, period_bounds, AnalysisPeriod, FrequencyBand, InvalidReason, NovelPeriod, Recording,
    SignalGroup, StandardPeriod, TrialSet, STANDARD_PERIOD_MS,
};
use crate::novel::{build_differentials, group_identify, run_novel, BandBank, NovelReport, RatioProfile, Transition};
use crate::num::{dot, median, Real};
use crate::standard::{run_standard, PeriodPair, StandardReport};

/// Standard R2A1 on one channel next to novel post1/pre on the matching group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedCell {
    pub channel: String,
    pub group: SignalGroup,
    pub standard_identification_percent: f64,
    pub novel_identification_percent: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionTally {
    pub incomplete: usize,
    pub truncated: usize,
    pub artifact: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub n_trials: usize,
    pub identification_threshold_percent: f64,
    pub exclusions: ExclusionTally,
    pub artifact_spans: usize,
    pub standard: StandardReport,
    pub novel: NovelReport,
    pub aligned: Vec<AlignedCell>,
}

impl DetectionReport {
    /// A report with no trials and empty tables.
    pub fn empty(cfg: &AnalysisConfig) -> Self {
        DetectionReport {
            n_trials: 0,
            identification_threshold_percent: cfg.detection.identification_threshold_percent,
            exclusions: ExclusionTally::default(),
            artifact_spans: 0,
            standard: StandardReport {
                n_trials: 0,
                n_excluded: 0,
                channels: cfg.standard.channels.clone(),
                cells: Vec::new(),
            },
            novel: NovelReport {
                n_trials: 0,
                n_excluded: 0,
                report_band: cfg.bands.report_band,
                group_sizes: Vec::new(),
                filter_lengths: Vec::new(),
                bands: Vec::new(),
            },
            aligned: Vec::new(),
        }
    }
}

const ALIGNMENT: [(&str, SignalGroup); 3] = [
    ("C3", SignalGroup::LeftSide),
    ("Cz", SignalGroup::InterHemisphere),
    ("C4", SignalGroup::RightSide),
];

/// Artifact cleaning, then both methods on the surviving trials.
pub fn run_comparison<T: Real>(recording: &Recording<T>, trials: &TrialSet, cfg: &AnalysisConfig) -> Result<DetectionReport> {
    if trials.n_valid() == 0 {
        return Err(Error::EmptyReport);
    }
    let mut trials = trials.clone();
    let (cleaned, log) = clean_recording(recording, &mut trials, &cfg.timing, &cfg.artifact)?;
    if trials.n_valid() == 0 {
        return Err(Error::EmptyReport);
    }
    let standard = run_standard(&cleaned, &trials, cfg)?;
    let novel = run_novel(&cleaned, &trials, cfg)?;
    let r2a1 = PeriodPair {
        reference: StandardPeriod::R2,
        active: StandardPeriod::A1,
    };
    let aligned = ALIGNMENT
        .iter()
        .filter_map(|&(ch, g)| {
            let s = standard.cell(r2a1, ch)?;
            let n = novel.cell(Transition::Post1OverPre, g)?;
            Some(AlignedCell {
                channel: ch.to_string(),
                group: g,
                standard_identification_percent: s.aggregate.identification_rate_percent,
                novel_identification_percent: n.identification_percent,
            })
        })
        .collect();
    let count = |r| trials.trials.iter().filter(|t| t.invalid_reason == Some(r)).count();
    Ok(DetectionReport {
        n_trials: trials.len(),
        identification_threshold_percent: cfg.detection.identification_threshold_percent,
        exclusions: ExclusionTally {
            incomplete: count(InvalidReason::Incomplete),
            truncated: count(InvalidReason::Truncated),
            artifact: count(InvalidReason::Artifact),
        },
        artifact_spans: log.spans.len(),
        standard,
        novel,
        aligned,
    })
}

/// Multiply-accumulate estimates derived from filter lengths and window sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationCounts {
    pub interval_samples: usize,
    pub novel_filter_lengths: Vec<usize>,
    /// `N * L` for one interval of one differential signal in each band.
    pub novel_interval_macs_per_band: Vec<u64>,
    /// One interval of one differential signal across the whole bank.
    pub novel_interval_macs_per_signal: u64,
    pub novel_trial_macs: u64,
    pub standard_filter_length: usize,
    pub standard_window_samples: usize,
    pub standard_fft_size: usize,
    /// Zero-phase filtering of both windows for all six pairs plus the
    /// two spectra per pair used for band selection, on one channel.
    pub standard_trial_macs_per_channel: u64,
    pub standard_trial_macs: u64,
}

/// Real multiply-accumulates of a radix-2 complex FFT of size `n`.
pub fn fft_macs(n: usize) -> u64 {
    let log2 = (n as f64).log2().ceil() as u64;
    2 * n as u64 * log2
}

pub fn operation_counts(cfg: &AnalysisConfig, fs: f64, novel_lengths: &[usize], standard_len: usize) -> OperationCounts {
    let n_int = ms_to_samples(cfg.timing.post_interval_ms(), fs);
    let per_band: Vec<u64> = novel_lengths.iter().map(|&l| (n_int * l) as u64).collect();
    let per_signal: u64 = per_band.iter().sum();
    let n_signals = cfg.differential_pairs.len() as u64;
    // Pre-trigger and reaction intervals may differ in length from the thirds.
    let interval_lens = [
        ms_to_samples(cfg.timing.pre_trigger_ms, fs),
        n_int,
        n_int,
        n_int,
        ms_to_samples(cfg.timing.reaction_ms, fs),
    ];
    let novel_trial: u64 = interval_lens
        .iter()
        .map(|&n| novel_lengths.iter().map(|&l| (n * l) as u64).sum::<u64>())
        .sum::<u64>()
        * n_signals;
    let w = ms_to_samples(STANDARD_PERIOD_MS, fs);
    let nfft = ((fs / cfg.spectrum.resolution_hz).ceil() as usize).max(w);
    let per_pair = (2 * w * standard_len) as u64 + 2 * fft_macs(nfft);
    let per_channel = 6 * per_pair;
    OperationCounts {
        interval_samples: n_int,
        novel_filter_lengths: novel_lengths.to_vec(),
        novel_interval_macs_per_band: per_band,
        novel_interval_macs_per_signal: per_signal,
        novel_trial_macs: novel_trial,
        standard_filter_length: standard_len,
        standard_window_samples: w,
        standard_fft_size: nfft,
        standard_trial_macs_per_channel: per_channel,
        standard_trial_macs: per_channel * cfg.standard.channels.len() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub median_ms_per_trial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodBench {
    pub method: String,
    pub stages: Vec<StageTiming>,
    pub group_delay_ms: f64,
    /// Compute time attributable to one decision.
    pub compute_ms_per_decision: f64,
    pub decision_latency_ms: f64,
    pub macs_per_trial: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub repetitions: usize,
    pub n_trials: usize,
    pub methods: Vec<MethodBench>,
    pub operations: OperationCounts,
}

/// Trials timed per repetition; enough for stable medians, small enough for CI.
pub const BENCH_TRIALS: usize = 5;

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Median-of-repetitions stage timings for both methods, single-threaded.
pub fn run_bench<T: Real>(
    recording: &Recording<T>,
    trials: &TrialSet,
    cfg: &AnalysisConfig,
    repetitions: usize,
) -> Result<BenchResult> {
    if repetitions < 3 {
        return Err(Error::config("repetitions", format!("{repetitions} < 3")));
    }
    let fs = recording.sample_rate_hz();
    let timing = &cfg.timing;
    let chosen: Vec<_> = trials
        .valid()
        .filter(|t| t.analysis_extent(timing, fs).is_ok())
        .take(BENCH_TRIALS)
        .collect();
    if chosen.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "benchmark needs at least 2 valid trials, found {}",
            chosen.len()
        )));
    }
    let n = chosen.len() as f64;
    let bank = BandBank::<T>::from_config(cfg, fs)?;
    let diffs = build_differentials(recording, &cfg.differential_pairs, &cfg.montage, cfg.strict_adjacency)?;
    let std_filter = design_bandpass::<T>(cfg.standard.default_band, fs, cfg.filter)?;
    let thr_ratio = T::lit(cfg.detection.ratio_threshold());
    let thr_pct = T::lit(cfg.detection.identification_threshold_percent);

    let mut novel_t = [Vec::new(), Vec::new(), Vec::new()];
    let mut std_t = [Vec::new(), Vec::new(), Vec::new()];
    for _ in 0..repetitions {
        // Novel: streaming filter per interval, energy, then group decision.
        let (mut tf, mut te, mut td) = (0.0, 0.0, 0.0);
        for trial in &chosen {
            let ranges: Vec<_> = NovelPeriod::ALL
                .iter()
                .map(|&p| period_bounds(trial, AnalysisPeriod::Novel(p), timing, fs))
                .collect::<Result<_>>()?;
            let t0 = Instant::now();
            let outputs: Vec<Vec<Vec<Vec<T>>>> = diffs
                .iter()
                .map(|d| {
                    bank.filters
                        .iter()
                        .map(|f| ranges.iter().map(|r| convolve_full(&d.samples[r.clone()], f.taps())).collect())
                        .collect()
                })
                .collect();
            tf += elapsed_ms(t0);
            let t0 = Instant::now();
            let energies: Vec<Vec<[T; 5]>> = outputs
                .iter()
                .map(|per_band| {
                    per_band
                        .iter()
                        .zip(&bank.filters)
                        .map(|(ys, _)| {
                            let mut e = [T::zero(); 5];
                            for (k, y) in ys.iter().enumerate() {
                                e[k] = dot(y, y) / T::lit(ranges[k].len() as f64);
                            }
                            e
                        })
                        .collect()
                })
                .collect();
            te += elapsed_ms(t0);
            let t0 = Instant::now();
            let ratios = energies
                .iter()
                .map(|per_band| {
                    per_band
                        .iter()
                        .map(|e| {
                            let mut r = [None; 4];
                            for k in 0..4 {
                                if e[k] > T::zero() {
                                    r[k] = Some(e[k + 1] / e[k]);
                                }
                            }
                            r
                        })
                        .collect()
                })
                .collect();
            let profile = RatioProfile {
                trial_index: trial.index,
                channels: diffs.iter().map(|d| (d.label(), d.group)).collect(),
                bands: bank.bands.clone(),
                energies,
                ratios,
            };
            std::hint::black_box(group_identify(&profile, thr_ratio));
            td += elapsed_ms(t0);
        }
        novel_t[0].push(tf / n);
        novel_t[1].push(te / n);
        novel_t[2].push(td / n);

        // Standard: spectra for band selection, offline filtering, decision.
        let (mut tf, mut ts, mut td) = (0.0, 0.0, 0.0);
        for ch in &cfg.standard.channels {
            let signal = recording.channel(ch)?;
            for pair in PeriodPair::ALL {
                let windows = |p: StandardPeriod| -> Result<Vec<&[T]>> {
                    chosen
                        .iter()
                        .map(|t| {
                            let r = period_bounds(t, AnalysisPeriod::Standard(p), timing, fs)?;
                            Ok(&signal[r])
                        })
                        .collect()
                };
                let rw = windows(pair.reference)?;
                let aw = windows(pair.active)?;
                let t0 = Instant::now();
                std::hint::black_box(mean_log_spectrum(&rw, fs, &cfg.spectrum)?);
                std::hint::black_box(mean_log_spectrum(&aw, fs, &cfg.spectrum)?);
                ts += elapsed_ms(t0);
                for (r, a) in rw.iter().zip(&aw) {
                    let t0 = Instant::now();
                    let yr = apply_filter(&std_filter, r, FilterMode::ZeroPhase);
                    let ya = apply_filter(&std_filter, a, FilterMode::ZeroPhase);
                    tf += elapsed_ms(t0);
                    let t0 = Instant::now();
                    let pr = dot(&yr, &yr) / T::lit(yr.len() as f64);
                    let pa = dot(&ya, &ya) / T::lit(ya.len() as f64);
                    if let Ok(m) = erd_percent(pa, pr) {
                        std::hint::black_box(m.is_identified(thr_pct));
                    }
                    td += elapsed_ms(t0);
                }
            }
        }
        std_t[0].push(tf / n);
        std_t[1].push(ts / n);
        std_t[2].push(td / n);
    }

    let med = |v: &mut Vec<f64>| median(v).max(0.0);
    let novel_stages = vec![
        StageTiming { stage: "filtering".into(), median_ms_per_trial: med(&mut novel_t[0]) },
        StageTiming { stage: "energy".into(), median_ms_per_trial: med(&mut novel_t[1]) },
        StageTiming { stage: "decision".into(), median_ms_per_trial: med(&mut novel_t[2]) },
    ];
    let std_stages = vec![
        StageTiming { stage: "filtering".into(), median_ms_per_trial: med(&mut std_t[0]) },
        StageTiming { stage: "spectra".into(), median_ms_per_trial: med(&mut std_t[1]) },
        StageTiming { stage: "decision".into(), median_ms_per_trial: med(&mut std_t[2]) },
    ];
    let lengths: Vec<usize> = bank.filters.iter().map(|f| f.len()).collect();
    let ops = operation_counts(cfg, fs, &lengths, std_filter.len());
    let novel_delay = bank.filters.iter().map(|f| f.group_delay_ms()).fold(0.0, f64::max);
    let novel_total: f64 = novel_stages.iter().map(|s| s.median_ms_per_trial).sum();
    // Five intervals per trial; each decision needs one more interval.
    let novel_compute = novel_total / NovelPeriod::ALL.len() as f64;
    let std_compute: f64 = std_stages.iter().map(|s| s.median_ms_per_trial).sum();
    Ok(BenchResult {
        repetitions,
        n_trials: chosen.len(),
        methods: vec![
            MethodBench {
                method: "novel".into(),
                stages: novel_stages,
                group_delay_ms: novel_delay,
                compute_ms_per_decision: novel_compute,
                decision_latency_ms: novel_delay + novel_compute,
                macs_per_trial: ops.novel_trial_macs,
            },
            MethodBench {
                method: "standard".into(),
                stages: std_stages,
                group_delay_ms: std_filter.group_delay_ms(),
                compute_ms_per_decision: std_compute,
                decision_latency_ms: std_filter.group_delay_ms() + std_compute,
                macs_per_trial: ops.standard_trial_macs,
            },
        ],
        operations: ops,
    })
}

/// Report band filter length for the default novel bank, handy for checks.
pub fn default_band_filter_len(cfg: &AnalysisConfig, band: FrequencyBand) -> Result<usize> {
    Ok(design_bandpass::<f64>(band, cfg.sample_rate_hz, cfg.filter)?.len())
}
