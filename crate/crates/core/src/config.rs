//! Analysis configuration: one TOML document, every field defaulted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::ArtifactParams;
use crate::dsp::{FilterSpec, PowerMode, SpectrumConfig};
use crate::error::{Error, Result};
use crate::model::{FrequencyBand, Montage, SignalGroup, TrialTiming, DEFAULT_SAMPLE_RATE_HZ};
use crate::synth::{SynthSettings, SynthSpec};

/// One differential signal: `positive - negative`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentialPair {
    pub positive: String,
    pub negative: String,
    /// Derived from electrode hemispheres when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<SignalGroup>,
}

/// Grid-adjacent horizontal and vertical pairs plus the diagonals that touch
/// the midline column. Gives 33 pairs on the default montage.
pub fn default_pairs(montage: &Montage) -> Vec<DifferentialPair> {
    let es = &montage.electrodes;
    let mut out = Vec::new();
    for i in 0..es.len() {
        for j in i + 1..es.len() {
            let (a, b) = (&es[i], &es[j]);
            if !montage.adjacent(&a.label, &b.label) {
                continue;
            }
            let diagonal = a.grid_row != b.grid_row && a.grid_col != b.grid_col;
            if diagonal && a.grid_col != montage.midline_col && b.grid_col != montage.midline_col {
                continue;
            }
            let group = SignalGroup::classify(
                montage.hemisphere(&a.label).unwrap(),
                montage.hemisphere(&b.label).unwrap(),
            );
            out.push(DifferentialPair {
                positive: a.label.clone(),
                negative: b.label.clone(),
                group: Some(group),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandConfig {
    pub range_hz: (f64, f64),
    pub band_width_hz: f64,
    pub band_overlap_hz: f64,
    /// Band used for the novel-method tables.
    pub report_band: FrequencyBand,
}

impl Default for BandConfig {
    fn default() -> Self {
        BandConfig {
            range_hz: (5.5, 16.5),
            band_width_hz: 2.0,
            band_overlap_hz: 1.0,
            report_band: FrequencyBand {
                lo_hz: 11.5,
                hi_hz: 13.5,
            },
        }
    }
}

impl BandConfig {
    pub fn hop_hz(&self) -> f64 {
        self.band_width_hz - self.band_overlap_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    /// ERD is identified when ERD% < -threshold (strict).
    pub identification_threshold_percent: f64,
    pub power_mode: PowerMode,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            identification_threshold_percent: 40.0,
            power_mode: PowerMode::Windowed,
        }
    }
}

impl DetectionConfig {
    /// Energy-ratio threshold equivalent to the percent threshold.
    pub fn ratio_threshold(&self) -> f64 {
        1.0 - self.identification_threshold_percent / 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateMode {
    /// Mean of per-trial ERD%.
    #[default]
    PerTrial,
    /// ERD% of the across-trial average power.
    AverageTrial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StandardConfig {
    pub channels: Vec<String>,
    /// Used whenever no reactive band is found.
    pub default_band: FrequencyBand,
    pub band_width_hz: f64,
    pub search_range_hz: (f64, f64),
    /// Two-sided normal quantile for the per-bin confidence bound.
    pub confidence_z: f64,
    pub min_trials: usize,
    /// Band selection runs on consecutive blocks of this many valid trials.
    pub block_trials: usize,
    pub aggregate: AggregateMode,
}

impl Default for StandardConfig {
    fn default() -> Self {
        StandardConfig {
            channels: vec!["C3".into(), "Cz".into(), "C4".into()],
            default_band: FrequencyBand {
                lo_hz: 11.5,
                hi_hz: 13.5,
            },
            band_width_hz: 2.0,
            search_range_hz: (4.0, 30.0),
            confidence_z: 1.96,
            min_trials: 8,
            block_trials: 80,
            aggregate: AggregateMode::PerTrial,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub timing: TrialTiming,
    pub montage: Montage,
    /// Empty means the built-in adjacency rule.
    pub differential_pairs: Vec<DifferentialPair>,
    pub strict_adjacency: bool,
    pub bands: BandConfig,
    pub detection: DetectionConfig,
    pub artifact: ArtifactParams,
    pub filter: FilterSpec,
    pub standard: StandardConfig,
    pub spectrum: SpectrumConfig,
    pub synth: SynthSettings,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let montage = Montage::default_sensorimotor();
        AnalysisConfig {
            seed: 0,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            timing: TrialTiming::default(),
            differential_pairs: default_pairs(&montage),
            montage,
            strict_adjacency: true,
            bands: BandConfig::default(),
            detection: DetectionConfig::default(),
            artifact: ArtifactParams::default(),
            filter: FilterSpec::default(),
            standard: StandardConfig::default(),
            spectrum: SpectrumConfig::default(),
            synth: SynthSettings::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: AnalysisConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .and_then(|s| text.get(..s.start))
                .and_then(|pre| pre.lines().rev().find(|l| l.trim_start().starts_with('[')))
                .map(|l| l.trim().trim_matches(|c| c == '[' || c == ']').to_string())
                .unwrap_or_else(|| "<root>".into());
            Error::config(field, e.message().to_string())
        })?;
        if cfg.differential_pairs.is_empty() {
            cfg.differential_pairs = default_pairs(&cfg.montage);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file; the literal path `default` yields the built-in config.
    pub fn load(path: &Path) -> Result<Self> {
        if path.as_os_str() == "default" {
            return Ok(AnalysisConfig::default());
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Internal(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let fs = self.sample_rate_hz;
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config("sample_rate_hz", "must be positive"));
        }
        self.timing.validate(fs)?;
        self.montage.validate()?;
        let b = &self.bands;
        if !(b.band_width_hz > b.band_overlap_hz && b.band_overlap_hz > 0.0) {
            return Err(Error::config(
                "bands.band_overlap_hz",
                "need band_width_hz > band_overlap_hz > 0",
            ));
        }
        crate::novel::enumerate_bands(b.range_hz.0, b.range_hz.1, b.band_width_hz, b.hop_hz())
            .map_err(|e| Error::config("bands.range_hz", e.to_string()))?;
        b.report_band
            .validate(fs)
            .map_err(|e| Error::config("bands.report_band", e.to_string()))?;
        let t = self.detection.identification_threshold_percent;
        if !(t > 0.0 && t < 100.0) {
            return Err(Error::config(
                "detection.identification_threshold_percent",
                format!("{t} outside (0, 100)"),
            ));
        }
        if self.differential_pairs.is_empty() {
            return Err(Error::config("differential_pairs", "no pairs configured"));
        }
        for (k, p) in self.differential_pairs.iter().enumerate() {
            for l in [&p.positive, &p.negative] {
                if self.montage.get(l).is_none() {
                    return Err(Error::config(
                        format!("differential_pairs[{k}]"),
                        format!("label `{l}` not in montage"),
                    ));
                }
            }
            if self.strict_adjacency && !self.montage.adjacent(&p.positive, &p.negative) {
                return Err(Error::config(
                    format!("differential_pairs[{k}]"),
                    format!("`{}` and `{}` are not grid neighbours", p.positive, p.negative),
                ));
            }
        }
        for c in &self.standard.channels {
            if self.montage.get(c).is_none() {
                return Err(Error::config("standard.channels", format!("label `{c}` not in montage")));
            }
        }
        self.standard
            .default_band
            .validate(fs)
            .map_err(|e| Error::config("standard.default_band", e.to_string()))?;
        if self.standard.min_trials < 2 || self.standard.block_trials < self.standard.min_trials {
            return Err(Error::config(
                "standard.block_trials",
                "need block_trials >= min_trials >= 2",
            ));
        }
        if !(self.standard.band_width_hz > 0.0 && self.standard.confidence_z > 0.0) {
            return Err(Error::config("standard", "band width and confidence z must be positive"));
        }
        if !(self.filter.transition_width_hz > 0.0 && self.filter.stopband_atten_db > 0.0) {
            return Err(Error::config("filter", "transition width and attenuation must be positive"));
        }
        self.artifact.validate()?;
        Ok(())
    }

    /// Generator spec sharing this config's timing, montage, rate and seed.
    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            fs: self.sample_rate_hz,
            timing: self.timing,
            montage: self.montage.clone(),
            settings: self.synth.clone(),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_pairs_count_and_groups() {
        let pairs = default_pairs(&Montage::default_sensorimotor());
        assert_eq!(pairs.len(), 33);
        let count = |g| pairs.iter().filter(|p| p.group == Some(g)).count();
        assert_eq!(count(SignalGroup::LeftSide), 7);
        assert_eq!(count(SignalGroup::RightSide), 7);
        assert_eq!(count(SignalGroup::InterHemisphere), 19);
    }

    #[test]
    fn default_config_validates_and_round_trips() {
        let cfg = AnalysisConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = AnalysisConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_document_keeps_defaults() {
        let cfg = AnalysisConfig::from_toml_str("seed = 9\n[detection]\nidentification_threshold_percent = 20\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.detection.identification_threshold_percent, 20.0);
        assert_eq!(cfg.differential_pairs.len(), 33);
        assert!((cfg.detection.ratio_threshold() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn invalid_fields_are_named() {
        let err = AnalysisConfig::from_toml_str("[detection]\nidentification_threshold_percent = 120\n").unwrap_err();
        assert!(err.to_string().contains("identification_threshold_percent"), "{err}");
        let err = AnalysisConfig::from_toml_str("[bands]\nband_width_hz = 1.0\nband_overlap_hz = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("band_overlap_hz"), "{err}");
        let err = AnalysisConfig::from_toml_str(
            "[[differential_pairs]]\npositive = \"FC3\"\nnegative = \"Pz\"\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("differential_pairs[0]"), "{err}");
        let err = AnalysisConfig::from_toml_str("[timing]\npre_trigger_ms = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("timing"), "{err}");
    }

    #[test]
    fn unknown_labels_rejected() {
        let mut cfg = AnalysisConfig::default();
        cfg.standard.channels.push("O1".into());
        assert!(cfg.validate().is_err());
    }
}
