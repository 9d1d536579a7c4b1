//! Energy-ratio ERD detection on differential signals.
//!
//! Each differential signal is split into five consecutive intervals around
//! the cue (pre-trigger, three post-trigger thirds, reaction time). Band
//! energies in a bank of overlapping 2 Hz bands give four ratios between
//! neighbouring intervals; a group of signals reports an ERD when its mean
//! ratio falls below the threshold.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::config::{AnalysisConfig, DifferentialPair};
use crate::dsp::{autocorrelation, band_power, design_bandpass, isolated_band_energy_from_autocorr, BandpassFilter, FilterSpec, PowerMode};
use crate::error::{Error, Result};
use crate::model::{period_bounds, AnalysisPeriod, FrequencyBand, Montage, NovelPeriod, Recording, SignalGroup, Trial, TrialSet, TrialTiming};
use crate::num::{mean_std, Real};

/// Ordered band list, `lo`, `lo + hop`, ... while the band fits in `hi`.
pub fn enumerate_bands(lo: f64, hi: f64, width: f64, hop: f64) -> Result<Vec<FrequencyBand>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi && 0.0 < hop && hop < width && width <= hi - lo) {
        return Err(Error::config(
            "bands",
            format!("need lo < hi and 0 < hop < width <= hi - lo; got ({lo}, {hi}, {width}, {hop})"),
        ));
    }
    let count = ((hi - lo - width) / hop + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let a = lo + k as f64 * hop;
            FrequencyBand { lo_hz: a, hi_hz: a + width }
        })
        .collect())
}

/// A band list with one designed filter per band.
#[derive(Debug, Clone)]
pub struct BandBank<T> {
    pub bands: Vec<FrequencyBand>,
    pub filters: Vec<BandpassFilter<T>>,
}

impl<T: Real> BandBank<T> {
    pub fn design(bands: Vec<FrequencyBand>, fs: f64, spec: FilterSpec) -> Result<Self> {
        let filters = bands
            .iter()
            .map(|&b| design_bandpass(b, fs, spec))
            .collect::<Result<Vec<_>>>()?;
        Ok(BandBank { bands, filters })
    }

    pub fn from_config(cfg: &AnalysisConfig, fs: f64) -> Result<Self> {
        let b = &cfg.bands;
        Self::design(
            enumerate_bands(b.range_hz.0, b.range_hz.1, b.band_width_hz, b.hop_hz())?,
            fs,
            cfg.filter,
        )
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn index_of(&self, band: FrequencyBand) -> Option<usize> {
        self.bands
            .iter()
            .position(|b| (b.lo_hz - band.lo_hz).abs() < 1e-9 && (b.hi_hz - band.hi_hz).abs() < 1e-9)
    }

    pub fn max_filter_len(&self) -> usize {
        self.filters.iter().map(|f| f.len()).max().unwrap_or(0)
    }
}

/// `positive - negative`, sample by sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialChannel<T> {
    pub positive: String,
    pub negative: String,
    pub group: SignalGroup,
    pub samples: Vec<T>,
}

impl<T> DifferentialChannel<T> {
    pub fn label(&self) -> String {
        format!("{}-{}", self.positive, self.negative)
    }
}

pub fn build_differentials<T: Real>(
    recording: &Recording<T>,
    pairs: &[DifferentialPair],
    montage: &Montage,
    strict: bool,
) -> Result<Vec<DifferentialChannel<T>>> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let field = || format!("differential_pairs[{k}]");
            for l in [&p.positive, &p.negative] {
                if montage.get(l).is_none() {
                    return Err(Error::config(field(), format!("label `{l}` not in montage")));
                }
            }
            if strict && !montage.adjacent(&p.positive, &p.negative) {
                return Err(Error::config(
                    field(),
                    format!("`{}` and `{}` are not grid neighbours", p.positive, p.negative),
                ));
            }
            let a = recording.channel(&p.positive)?;
            let b = recording.channel(&p.negative)?;
            let group = p.group.unwrap_or_else(|| {
                SignalGroup::classify(
                    montage.hemisphere(&p.positive).unwrap(),
                    montage.hemisphere(&p.negative).unwrap(),
                )
            });
            Ok(DifferentialChannel {
                positive: p.positive.clone(),
                negative: p.negative.clone(),
                group,
                samples: a.iter().zip(b).map(|(&x, &y)| x - y).collect(),
            })
        })
        .collect()
}

/// The four consecutive-interval transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Post1OverPre,
    Post2OverPost1,
    Post3OverPost2,
    ReactionOverPost3,
}

impl Transition {
    pub const ALL: [Transition; 4] = [
        Transition::Post1OverPre,
        Transition::Post2OverPost1,
        Transition::Post3OverPost2,
        Transition::ReactionOverPost3,
    ];

    /// Row label: time of the ratio's numerator interval relative to cue2.
    pub fn row_label(self) -> &'static str {
        match self {
            Transition::Post1OverPre => "-1.5s",
            Transition::Post2OverPost1 => "-1s",
            Transition::Post3OverPost2 => "-0.5s",
            Transition::ReactionOverPost3 => "onset",
        }
    }
}

/// Interval energies and ratios of one trial, indexed `[channel][band]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioProfile<T> {
    pub trial_index: usize,
    pub channels: Vec<(String, SignalGroup)>,
    pub bands: Vec<FrequencyBand>,
    /// Mean band power per sample in each of the five intervals.
    pub energies: Vec<Vec<[T; 5]>>,
    /// `None` marks a degenerate (zero-energy) denominator.
    pub ratios: Vec<Vec<[Option<T>; 4]>>,
}

fn interval_ranges(trial: &Trial, timing: &TrialTiming, fs: f64) -> Result<[Range<usize>; 5]> {
    let r = |p| period_bounds(trial, AnalysisPeriod::Novel(p), timing, fs);
    Ok([
        r(NovelPeriod::PreTrigger)?,
        r(NovelPeriod::Post1)?,
        r(NovelPeriod::Post2)?,
        r(NovelPeriod::Post3)?,
        r(NovelPeriod::ReactionTime)?,
    ])
}

/// Band energies over the five intervals and the four consecutive ratios.
///
/// In windowed mode each interval is filtered on its own, so interval `k`
/// depends only on its own samples. In continuous mode the value for interval
/// `k` needs samples up to its end plus the filter group delay.
pub fn ratio_profile<T: Real>(
    trial: &Trial,
    differentials: &[DifferentialChannel<T>],
    bank: &BandBank<T>,
    timing: &TrialTiming,
    fs: f64,
    mode: PowerMode,
) -> Result<RatioProfile<T>> {
    let ranges = interval_ranges(trial, timing, fs)?;
    let max_lag = bank.max_filter_len();
    let mut energies = Vec::with_capacity(differentials.len());
    let mut ratios = Vec::with_capacity(differentials.len());
    for d in differentials {
        if d.samples.len() < trial.recording_len.min(ranges[4].end) {
            return Err(Error::Internal(format!(
                "differential {} shorter than trial {} extent",
                d.label(),
                trial.index
            )));
        }
        let mut per_band = vec![[T::zero(); 5]; bank.len()];
        match mode {
            PowerMode::Windowed => {
                for (k, r) in ranges.iter().enumerate() {
                    let seg = &d.samples[r.clone()];
                    let rx = autocorrelation(seg, max_lag);
                    let n = T::lit(seg.len() as f64);
                    for (b, f) in bank.filters.iter().enumerate() {
                        // Rounding can leave a tiny negative value for silent input.
                        let e = isolated_band_energy_from_autocorr(f, &rx) / n;
                        per_band[b][k] = if e > T::zero() { e } else { T::zero() };
                    }
                }
            }
            PowerMode::Continuous => {
                for (b, f) in bank.filters.iter().enumerate() {
                    for (k, r) in ranges.iter().enumerate() {
                        per_band[b][k] = band_power(f, &d.samples, r.clone(), mode)?;
                    }
                }
            }
        }
        let band_ratios = per_band
            .iter()
            .map(|e| {
                let mut out = [None; 4];
                for (k, slot) in out.iter_mut().enumerate() {
                    if e[k] > T::zero() {
                        *slot = Some(e[k + 1] / e[k]);
                    }
                }
                out
            })
            .collect();
        energies.push(per_band);
        ratios.push(band_ratios);
    }
    Ok(RatioProfile {
        trial_index: trial.index,
        channels: differentials.iter().map(|d| (d.label(), d.group)).collect(),
        bands: bank.bands.clone(),
        energies,
        ratios,
    })
}

/// Group-level decision for one (band, transition, group) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDecision<T> {
    pub band: usize,
    pub transition: Transition,
    pub group: SignalGroup,
    /// `None` when every ratio in the group is degenerate.
    pub mean_ratio: Option<T>,
    pub identified: bool,
}

impl<T: Real> GroupDecision<T> {
    pub fn erd_percent(&self) -> Option<T> {
        self.mean_ratio.map(|r| (r - T::one()) * T::lit(100.0))
    }
}

/// Mean ratio per group; identified iff the mean is strictly below `threshold_ratio`.
pub fn group_identify<T: Real>(profile: &RatioProfile<T>, threshold_ratio: T) -> Vec<GroupDecision<T>> {
    let mut out = Vec::with_capacity(profile.bands.len() * 12);
    for b in 0..profile.bands.len() {
        for (t, &transition) in Transition::ALL.iter().enumerate() {
            for group in SignalGroup::ALL {
                let vals: Vec<T> = profile
                    .channels
                    .iter()
                    .enumerate()
                    .filter(|(_, (_, g))| *g == group)
                    .filter_map(|(c, _)| profile.ratios[c][b][t])
                    .collect();
                let mean_ratio = if vals.is_empty() {
                    None
                } else {
                    Some(vals.iter().copied().sum::<T>() / T::lit(vals.len() as f64))
                };
                out.push(GroupDecision {
                    band: b,
                    transition,
                    group,
                    mean_ratio,
                    identified: mean_ratio.map_or(false, |m| m < threshold_ratio),
                });
            }
        }
    }
    out
}

/// Report cell: identification rate and ERD of identified trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelCell {
    pub transition: Transition,
    pub group: SignalGroup,
    pub n_evaluated: usize,
    pub n_identified: usize,
    pub identification_percent: f64,
    pub mean_erd_percent: Option<f64>,
    pub std_erd_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelBandSummary {
    pub band: FrequencyBand,
    pub cells: Vec<NovelCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NovelReport {
    pub n_trials: usize,
    pub n_excluded: usize,
    pub report_band: FrequencyBand,
    pub group_sizes: Vec<(SignalGroup, usize)>,
    pub filter_lengths: Vec<usize>,
    pub bands: Vec<NovelBandSummary>,
}

impl NovelReport {
    pub fn report_cells(&self) -> &[NovelCell] {
        self.bands
            .iter()
            .find(|b| (b.band.lo_hz - self.report_band.lo_hz).abs() < 1e-9 && (b.band.hi_hz - self.report_band.hi_hz).abs() < 1e-9)
            .map(|b| b.cells.as_slice())
            .unwrap_or(&[])
    }

    pub fn cell(&self, transition: Transition, group: SignalGroup) -> Option<&NovelCell> {
        self.report_cells()
            .iter()
            .find(|c| c.transition == transition && c.group == group)
    }
}

fn summarize(band: usize, decisions: &[Vec<GroupDecision<f64>>]) -> Vec<NovelCell> {
    let mut cells = Vec::with_capacity(12);
    for transition in Transition::ALL {
        for group in SignalGroup::ALL {
            let mut n_eval = 0;
            let mut erds = Vec::new();
            for d in decisions.iter().flat_map(|v| v.iter()) {
                if d.band != band || d.transition != transition || d.group != group || d.mean_ratio.is_none() {
                    continue;
                }
                n_eval += 1;
                if d.identified {
                    erds.push(d.erd_percent().unwrap());
                }
            }
            let (mean, std) = if erds.is_empty() { (None, None) } else {
                let (m, s) = mean_std(&erds);
                (Some(m), Some(s))
            };
            cells.push(NovelCell {
                transition,
                group,
                n_evaluated: n_eval,
                n_identified: erds.len(),
                identification_percent: if n_eval == 0 { 0.0 } else { 100.0 * erds.len() as f64 / n_eval as f64 },
                mean_erd_percent: mean,
                std_erd_percent: std,
            });
        }
    }
    cells
}

/// Per-trial group decisions for all valid trials.
pub fn novel_decisions<T: Real>(
    recording: &Recording<T>,
    trials: &TrialSet,
    cfg: &AnalysisConfig,
    bank: &BandBank<T>,
) -> Result<(Vec<Vec<GroupDecision<f64>>>, usize, Vec<(SignalGroup, usize)>)> {
    let fs = recording.sample_rate_hz();
    let diffs = build_differentials(recording, &cfg.differential_pairs, &cfg.montage, cfg.strict_adjacency)?;
    let thr = T::lit(cfg.detection.ratio_threshold());
    let mut all = Vec::new();
    let mut excluded = 0;
    for trial in trials.valid() {
        match ratio_profile(trial, &diffs, bank, &cfg.timing, fs, cfg.detection.power_mode) {
            Ok(p) => all.push(
                group_identify(&p, thr)
                    .into_iter()
                    .map(|d| GroupDecision {
                        band: d.band,
                        transition: d.transition,
                        group: d.group,
                        mean_ratio: d.mean_ratio.map(|m| m.as_f64()),
                        identified: d.identified,
                    })
                    .collect(),
            ),
            Err(Error::TruncatedTrial { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let sizes = SignalGroup::ALL
        .iter()
        .map(|&g| (g, diffs.iter().filter(|d| d.group == g).count()))
        .collect();
    Ok((all, excluded, sizes))
}

pub fn run_novel<T: Real>(recording: &Recording<T>, trials: &TrialSet, cfg: &AnalysisConfig) -> Result<NovelReport> {
    let bank = BandBank::<T>::from_config(cfg, recording.sample_rate_hz())?;
    let (decisions, excluded, group_sizes) = novel_decisions(recording, trials, cfg, &bank)?;
    let bands = bank
        .bands
        .iter()
        .enumerate()
        .map(|(b, &band)| NovelBandSummary {
            band,
            cells: summarize(b, &decisions),
        })
        .collect();
    Ok(NovelReport {
        n_trials: decisions.len(),
        n_excluded: excluded + (trials.len() - trials.n_valid()),
        report_band: cfg.bands.report_band,
        group_sizes,
        filter_lengths: bank.filters.iter().map(|f| f.len()).collect(),
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn band_bank_examples() {
        let b = enumerate_bands(5.5, 16.5, 2.0, 1.0).unwrap();
        assert_eq!(b.len(), 10);
        assert_eq!((b[0].lo_hz, b[0].hi_hz), (5.5, 7.5));
        assert_eq!((b[9].lo_hz, b[9].hi_hz), (14.5, 16.5));
        assert_eq!(enumerate_bands(9.0, 14.0, 2.0, 1.0).unwrap().len(), 4);
        assert!(enumerate_bands(0.0, 4.0, 2.0, 2.0).is_err());
        assert!(enumerate_bands(5.0, 4.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn default_bank_covers_interior_twice() {
        let b = enumerate_bands(5.5, 16.5, 2.0, 1.0).unwrap();
        for w in b.windows(2) {
            assert!((w[0].hi_hz - w[1].lo_hz - 1.0).abs() < 1e-12);
        }
        let mut f = 6.55;
        while f < 15.5 {
            assert_eq!(b.iter().filter(|x| x.lo_hz < f && f < x.hi_hz).count(), 2, "{f}");
            f += 0.1;
        }
    }

    fn tiny_recording() -> (Recording<f64>, Montage) {
        let m = Montage::default_sensorimotor();
        let n = 100;
        let channels: Vec<Vec<f64>> = m
            .labels()
            .iter()
            .map(|l| match l.as_str() {
                "C3" => (0..n).map(|i| i as f64).collect(),
                "C1" => (0..n).map(|i| i as f64).collect(),
                _ => vec![0.0; n],
            })
            .collect();
        (Recording::new(512.0, m.labels(), channels, vec![]).unwrap(), m)
    }

    #[test]
    fn differential_examples() {
        let (rec, m) = tiny_recording();
        let pair = |a: &str, b: &str| DifferentialPair {
            positive: a.into(),
            negative: b.into(),
            group: None,
        };
        let d = build_differentials(&rec, &[pair("C3", "C1"), pair("C1", "Cz")], &m, true).unwrap();
        assert!(d[0].samples.iter().all(|&v| v == 0.0));
        assert_eq!(d[1].samples, rec.channel("C1").unwrap());
        assert_eq!(d[0].group, SignalGroup::LeftSide);
        assert_eq!(d[1].group, SignalGroup::InterHemisphere);
        assert!(matches!(
            build_differentials(&rec, &[pair("C3", "C4")], &m, true),
            Err(Error::Config { .. })
        ));
        assert!(build_differentials(&rec, &[pair("C3", "C4")], &m, false).is_ok());
    }

    fn profile_from_energies(e: [f64; 5]) -> RatioProfile<f64> {
        let mut ratios = [None; 4];
        for k in 0..4 {
            ratios[k] = if e[k] > 0.0 { Some(e[k + 1] / e[k]) } else { None };
        }
        RatioProfile {
            trial_index: 0,
            channels: vec![("a".into(), SignalGroup::LeftSide)],
            bands: vec![FrequencyBand { lo_hz: 1.0, hi_hz: 3.0 }],
            energies: vec![vec![e]],
            ratios: vec![vec![ratios]],
        }
    }

    #[test]
    fn energy_ratio_example() {
        let p = profile_from_energies([4.0, 2.0, 1.0, 1.0, 1.0]);
        let r: Vec<f64> = p.ratios[0][0].iter().map(|v| v.unwrap()).collect();
        assert_eq!(r, vec![0.5, 0.5, 1.0, 1.0]);
        let d = group_identify(&p, 0.6);
        let erd: Vec<f64> = d
            .iter()
            .filter(|x| x.group == SignalGroup::LeftSide)
            .map(|x| x.erd_percent().unwrap())
            .collect();
        assert_eq!(erd, vec![-50.0, -50.0, 0.0, 0.0]);
    }

    #[test]
    fn group_mean_examples() {
        let mk = |vals: &[f64]| RatioProfile {
            trial_index: 0,
            channels: vals.iter().map(|_| ("x".to_string(), SignalGroup::InterHemisphere)).collect(),
            bands: vec![FrequencyBand { lo_hz: 1.0, hi_hz: 3.0 }],
            energies: vals.iter().map(|_| vec![[1.0; 5]]).collect(),
            ratios: vals.iter().map(|&v| vec![[Some(v); 4]]).collect(),
        };
        let d = group_identify(&mk(&[0.5, 0.6, 0.64]), 0.6);
        let inter = d.iter().find(|x| x.group == SignalGroup::InterHemisphere).unwrap();
        assert!(inter.identified);
        assert!((inter.erd_percent().unwrap() + 42.0).abs() < 1e-9);
        let d = group_identify(&mk(&[0.6]), 0.6);
        assert!(!d.iter().find(|x| x.group == SignalGroup::InterHemisphere).unwrap().identified);
        let left = d.iter().find(|x| x.group == SignalGroup::LeftSide).unwrap();
        assert!(left.mean_ratio.is_none() && !left.identified);
    }

    #[test]
    fn degenerate_ratio_is_excluded() {
        let p = profile_from_energies([0.0, 2.0, 1.0, 1.0, 1.0]);
        assert!(p.ratios[0][0][0].is_none());
        let d = group_identify(&p, 0.6);
        assert!(d[0].mean_ratio.is_none());
    }

    #[test]
    fn noiseless_post1_ratio_is_half() {
        let mut spec = SynthSpec::default().with_depth(50.0).noiseless();
        spec.settings.n_trials = 3;
        let (rec, trials, _) = generate::<f64>(&spec).unwrap();
        let cfg = AnalysisConfig::default();
        let bank = BandBank::<f64>::from_config(&cfg, 512.0).unwrap();
        let b = bank.index_of(cfg.bands.report_band).unwrap();
        let diffs = build_differentials(&rec, &cfg.differential_pairs, &cfg.montage, true).unwrap();
        for t in trials.valid() {
            let p = ratio_profile(t, &diffs, &bank, &cfg.timing, 512.0, PowerMode::Windowed).unwrap();
            for c in 0..diffs.len() {
                let r = p.ratios[c][b][0].unwrap();
                assert!((r - 0.5).abs() < 0.02, "{}: {r}", diffs[c].label());
            }
        }
    }
}
