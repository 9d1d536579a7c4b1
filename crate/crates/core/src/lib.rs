//! Detection of event-related desynchronization (ERD) in sensorimotor EEG.
//!
//! Two pipelines are provided and can be run head to head:
//!
//! * [`standard`]: individual 2 Hz band selection from short-term log spectra,
//!   band power in 1 s reference/active periods and `(A - R) / R * 100`.
//! * [`novel`]: differential signals between neighbouring electrodes, an
//!   overlapping 2 Hz band bank over (5.5, 16.5) Hz and energy ratios between
//!   consecutive 500 ms intervals, identified per signal group.
//!
//! Both share the electrode-polarization artifact suppressor in [`artifact`].
//! [`synth`] generates EEG with known ERD for verification and [`compare`]
//! builds the report tables, latency figures and operation counts.
//!
//! All numeric code is generic over [`Real`] (`f32`/`f64`); the aliases below
//! fix the common double-precision case.

pub mod artifact;
pub mod compare;
pub mod config;
pub mod dsp;
pub mod error;
pub mod io;
pub mod model;
pub mod novel;
pub mod num;
pub mod standard;
pub mod synth;

pub use error::{Error, Result};
pub use num::{Real, Scalar};

pub use artifact::{detect_artifact_spans, suppress, ArtifactParams, SuppressionResult, Threshold};
pub use compare::{run_bench, run_comparison, BenchResult, DetectionReport};
pub use config::AnalysisConfig;
pub use dsp::{
    apply_filter, design_bandpass, isolated_band_energy, mean_log_spectrum, window_energy, BandpassFilter,
    FilterMode, FilterSpec, PowerSpectrum, SpectrumConfig, StreamingFir,
};
pub use io::{emit_report, load_recording, save_recording, segment_trials, RecordingFormat, ReportFormat};
pub use model::{
    erd_percent, period_bounds, AnalysisPeriod, ErdMeasure, FrequencyBand, Hemisphere, Montage, NovelPeriod,
    Recording, SignalGroup, StandardPeriod, Trial, TrialSet, TrialTiming, Trigger, TriggerCode,
};
pub use novel::{build_differentials, enumerate_bands, group_identify, ratio_profile, BandBank, RatioProfile};
pub use standard::{erd_for_pair, select_individual_band, IndividualBand, PeriodPair};
pub use synth::{generate, inject_polarization_artifact, GroundTruth, SynthSpec};

/// Double-precision recording.
pub type Recording64 = Recording<f64>;
/// Single-precision recording.
pub type Recording32 = Recording<f32>;
pub type BandpassFilter64 = BandpassFilter<f64>;
pub type BandpassFilter32 = BandpassFilter<f32>;
pub type ErdMeasure64 = ErdMeasure<f64>;
/// ERD measure over exact rationals; percent/ratio conversions are lossless.
pub type ExactErdMeasure = ErdMeasure<num_rational::Rational64>;
