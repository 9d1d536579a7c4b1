//! Numeric kernels shared by both pipelines: linear-phase band-pass design,
//! filtering (batch and streaming), windowed energy and averaged log spectra.

use std::collections::HashMap;
use std::ops::Range;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FrequencyBand;
use crate::num::{dot, Real};

/// Design requirements for a band-pass filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    /// Distance from each band edge (the -6 dB cutoff) to its stopband edge.
    pub transition_width_hz: f64,
    pub stopband_atten_db: f64,
    /// Allowed passband deviation, measured over the band interior.
    pub passband_ripple_db: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            transition_width_hz: 1.0,
            stopband_atten_db: 40.0,
            passband_ripple_db: 1.0,
        }
    }
}

/// Symmetric (exactly linear-phase) FIR band-pass filter.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter<T> {
    taps: Vec<T>,
    band: FrequencyBand,
    fs: f64,
    spec: FilterSpec,
    // r_h[k] for k in 0..L, used by the fast isolated-energy path.
    taps_autocorr: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Streaming convolution; output lags the input by the group delay.
    Causal,
    /// Offline mode, output re-aligned by the group delay.
    ZeroPhase,
}

impl<T: Real> BandpassFilter<T> {
    /// Wraps existing taps. Fails unless the taps are symmetric with odd length.
    pub fn from_taps(taps: Vec<T>, band: FrequencyBand, fs: f64, spec: FilterSpec) -> Result<Self> {
        if taps.is_empty() || taps.len() % 2 == 0 {
            return Err(Error::Design(format!("tap count {} must be odd", taps.len())));
        }
        let n = taps.len();
        if (0..n / 2).any(|i| taps[i] != taps[n - 1 - i]) {
            return Err(Error::Design("taps are not symmetric".into()));
        }
        let taps_autocorr = autocorrelation(&taps, taps.len());
        Ok(BandpassFilter {
            taps,
            band,
            fs,
            spec,
            taps_autocorr,
        })
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn band(&self) -> FrequencyBand {
        self.band
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn spec(&self) -> FilterSpec {
        self.spec
    }

    pub fn group_delay_samples(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn group_delay_ms(&self) -> f64 {
        self.group_delay_samples() as f64 / self.fs * 1000.0
    }

    /// Zero-phase amplitude response at `freq_hz` (signed; magnitude is `abs`).
    pub fn amplitude_at(&self, freq_hz: f64) -> f64 {
        amplitude_response(&self.taps, freq_hz / self.fs)
    }

    pub fn magnitude_db_at(&self, freq_hz: f64) -> f64 {
        20.0 * self.amplitude_at(freq_hz).abs().max(1e-300).log10()
    }
}

/// Amplitude response of a symmetric odd-length FIR at normalized frequency
/// `f` (cycles/sample), via the cosine recurrence.
fn amplitude_response<T: Real>(taps: &[T], f: f64) -> f64 {
    let d = (taps.len() - 1) / 2;
    let theta = 2.0 * std::f64::consts::PI * f;
    let c1 = theta.cos();
    let mut acc = taps[d].as_f64();
    let (mut prev, mut cur) = (1.0f64, c1);
    for k in 1..=d {
        acc += 2.0 * taps[d + k].as_f64() * cur;
        let next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
    }
    acc
}

fn bessel_i0(x: f64) -> f64 {
    // Power series; converges quickly for the beta range used here.
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

pub fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Kaiser's length estimate for a full transition width of `delta_f` (cycles/sample).
fn kaiser_length(atten_db: f64, delta_f: f64) -> usize {
    let n = ((atten_db - 7.95) / (2.285 * 2.0 * std::f64::consts::PI * delta_f)).ceil() as usize + 1;
    n.max(3) | 1
}

fn kaiser_sinc_bandpass(len: usize, f1: f64, f2: f64, beta: f64) -> Vec<f64> {
    let d = (len - 1) as f64 / 2.0;
    let sinc = |x: f64| {
        if x == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        }
    };
    let i0b = bessel_i0(beta);
    let half = len / 2;
    let mut h = vec![0.0; len];
    for n in 0..=half {
        let m = n as f64 - d;
        let r = m / d;
        let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
        let ideal = 2.0 * f2 * sinc(2.0 * f2 * m) - 2.0 * f1 * sinc(2.0 * f1 * m);
        h[n] = ideal * w;
        h[len - 1 - n] = h[n];
    }
    h
}

/// Check a candidate against the stopband and passband requirements.
/// Points nearest the transition edges are tested first so failures exit early.
fn meets_spec(taps: &[f64], band: FrequencyBand, fs: f64, spec: FilterSpec) -> bool {
    let tw = spec.transition_width_hz;
    let limit = 10f64.powf(-spec.stopband_atten_db / 20.0);
    let step = (tw / 20.0).min(0.05);
    let nyq = fs / 2.0;
    let lower_edge = band.lo_hz - tw;
    let upper_edge = band.hi_hz + tw;

    let mut stop: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let off = k as f64 * step;
        let lo = lower_edge - off;
        let hi = upper_edge + off;
        let mut any = false;
        if lo >= 0.0 {
            stop.push(lo);
            any = true;
        }
        if hi <= nyq {
            stop.push(hi);
            any = true;
        }
        if !any {
            break;
        }
        k += 1;
    }
    if stop
        .iter()
        .any(|&f| amplitude_response(taps, f / fs).abs() > limit)
    {
        return false;
    }

    let (p_lo, p_hi) = (band.lo_hz + tw, band.hi_hz - tw);
    let pass: Vec<f64> = if p_hi > p_lo {
        let n = ((p_hi - p_lo) / step).ceil() as usize;
        (0..=n).map(|i| (p_lo + i as f64 * step).min(p_hi)).collect()
    } else {
        vec![band.center_hz()]
    };
    let db: Vec<f64> = pass
        .iter()
        .map(|&f| 20.0 * amplitude_response(taps, f / fs).abs().max(1e-300).log10())
        .collect();
    let max = db.iter().cloned().fold(f64::MIN, f64::max);
    let min = db.iter().cloned().fold(f64::MAX, f64::min);
    max - min <= spec.passband_ripple_db && max.abs() <= spec.passband_ripple_db && min.abs() <= spec.passband_ripple_db
}

/// Windowed-sinc (Kaiser) linear-phase band-pass design.
///
/// Searches odd lengths upward from Kaiser's estimate, and for each length a
/// small range of window shapes, returning the shortest filter whose
/// evaluated response meets `spec`. Taps are normalized to unit gain at the
/// band center.
pub fn design_bandpass<T: Real>(band: FrequencyBand, fs: f64, spec: FilterSpec) -> Result<BandpassFilter<T>> {
    band.validate(fs)?;
    let tw = spec.transition_width_hz;
    if !(tw.is_finite() && tw > 0.0) {
        return Err(Error::Design(format!("transition width must be positive, got {tw}")));
    }
    if !(spec.stopband_atten_db > 0.0 && spec.passband_ripple_db > 0.0) {
        return Err(Error::Design("attenuation and ripple must be positive".into()));
    }
    if band.lo_hz - tw <= 0.0 && band.hi_hz + tw >= fs / 2.0 {
        return Err(Error::Design(format!("no stopband left for {band} with {tw} Hz transitions")));
    }
    let f1 = band.lo_hz / fs;
    let f2 = band.hi_hz / fs;
    let delta = 2.0 * tw / fs;
    let atten = spec.stopband_atten_db;
    let start = kaiser_length(atten, delta);
    let max_len = (start * 4).max(64) | 1;
    let center = band.center_hz() / fs;

    let mut len = start;
    while len <= max_len {
        for extra in 0..=16 {
            let beta = kaiser_beta(atten + extra as f64);
            let mut h = kaiser_sinc_bandpass(len, f1, f2, beta);
            let g = amplitude_response(&h, center);
            if g.abs() < 1e-12 {
                continue;
            }
            h.iter_mut().for_each(|x| *x /= g);
            if meets_spec(&h, band, fs, spec) {
                let taps = h.into_iter().map(T::lit).collect();
                return BandpassFilter::from_taps(taps, band, fs, spec);
            }
        }
        len += 2;
    }
    Err(Error::Design(format!(
        "no filter up to {max_len} taps meets {atten} dB with {tw} Hz transitions for {band} at {fs} Hz"
    )))
}

/// Memoizes designs; filter design is the expensive part of building a bank.
#[derive(Debug, Default)]
pub struct FilterCache<T> {
    cache: HashMap<(u64, u64, u64, u64, u64), BandpassFilter<T>>,
}

impl<T: Real> FilterCache<T> {
    pub fn new() -> Self {
        FilterCache {
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, band: FrequencyBand, fs: f64, spec: FilterSpec) -> Result<&BandpassFilter<T>> {
        let key = (
            band.lo_hz.to_bits(),
            band.hi_hz.to_bits(),
            fs.to_bits(),
            spec.transition_width_hz.to_bits(),
            spec.stopband_atten_db.to_bits() ^ spec.passband_ripple_db.to_bits().rotate_left(17),
        );
        if !self.cache.contains_key(&key) {
            let f = design_bandpass(band, fs, spec)?;
            self.cache.insert(key, f);
        }
        Ok(&self.cache[&key])
    }
}

/// Full linear convolution, length `x.len() + h.len() - 1`.
pub fn convolve_full<T: Real>(x: &[T], h: &[T]) -> Vec<T> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let (n, l) = (x.len(), h.len());
    let hr: Vec<T> = h.iter().rev().copied().collect();
    (0..n + l - 1)
        .map(|i| {
            // y[i] = sum_k h[k] x[i-k], k in [max(0, i-n+1), min(i, l-1)]
            let k0 = i.saturating_sub(n - 1);
            let k1 = i.min(l - 1);
            // reversed index j = l-1-k; x index i-k = i-(l-1)+j
            let j0 = l - 1 - k1;
            let j1 = l - 1 - k0;
            let x0 = i + j0 + 1 - l;
            dot(&hr[j0..=j1], &x[x0..=x0 + (j1 - j0)])
        })
        .collect()
}

pub fn apply_filter<T: Real>(filter: &BandpassFilter<T>, signal: &[T], mode: FilterMode) -> Vec<T> {
    let n = signal.len();
    let full = convolve_full(signal, &filter.taps);
    match mode {
        FilterMode::Causal => full[..n].to_vec(),
        FilterMode::ZeroPhase => {
            let d = filter.group_delay_samples();
            full[d..d + n].to_vec()
        }
    }
}

/// Sum of squared samples over `span`.
pub fn window_energy<T: Real>(signal: &[T], span: Range<usize>) -> Result<T> {
    if span.start >= span.end {
        return Err(Error::EmptySpan);
    }
    if span.end > signal.len() {
        return Err(Error::SpanOutOfRange {
            start: span.start,
            end: span.end,
            len: signal.len(),
        });
    }
    let w = &signal[span];
    Ok(dot(w, w))
}

/// Energy of the complete response of a zero-state filter to `segment`
/// (input followed by a flush of `L - 1` zeros).
pub fn isolated_band_energy<T: Real>(filter: &BandpassFilter<T>, segment: &[T]) -> T {
    let y = convolve_full(segment, &filter.taps);
    dot(&y, &y)
}

/// Biased autocorrelation sums `r[k] = sum_i x[i] x[i + k]` for `k < max_lag`.
pub fn autocorrelation<T: Real>(x: &[T], max_lag: usize) -> Vec<T> {
    (0..max_lag.min(x.len())).map(|k| dot(&x[..x.len() - k], &x[k..])).collect()
}

/// Same value as [`isolated_band_energy`], computed from autocorrelations:
/// `E = r_h[0] r_x[0] + 2 sum_k r_h[k] r_x[k]`. `segment_autocorr` must hold
/// at least `min(N, L)` lags.
pub fn isolated_band_energy_from_autocorr<T: Real>(filter: &BandpassFilter<T>, segment_autocorr: &[T]) -> T {
    let m = segment_autocorr.len().min(filter.taps_autocorr.len());
    if m == 0 {
        return T::zero();
    }
    let two = T::lit(2.0);
    filter.taps_autocorr[0] * segment_autocorr[0]
        + two * dot(&filter.taps_autocorr[1..m], &segment_autocorr[1..m])
}

/// How band power in an analysis window is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerMode {
    /// Each window filtered on its own from zero state, tail flushed.
    #[default]
    Windowed,
    /// Window cut from the zero-phase filtered continuous signal.
    Continuous,
}

/// Mean band power per sample of `signal[span]` under `mode`.
pub fn band_power<T: Real>(filter: &BandpassFilter<T>, signal: &[T], span: Range<usize>, mode: PowerMode) -> Result<T> {
    if span.start >= span.end {
        return Err(Error::EmptySpan);
    }
    if span.end > signal.len() {
        return Err(Error::SpanOutOfRange {
            start: span.start,
            end: span.end,
            len: signal.len(),
        });
    }
    let n = T::lit(span.len() as f64);
    match mode {
        PowerMode::Windowed => {
            let seg = &signal[span];
            let rx = autocorrelation(seg, filter.len());
            Ok(isolated_band_energy_from_autocorr(filter, &rx) / n)
        }
        PowerMode::Continuous => {
            let d = filter.group_delay_samples();
            let lo = span.start.saturating_sub(d);
            let hi = (span.end + d).min(signal.len());
            let y = apply_filter(filter, &signal[lo..hi], FilterMode::ZeroPhase);
            let w = &y[span.start - lo..span.end - lo];
            Ok(dot(w, w) / n)
        }
    }
}

/// Sample-by-sample FIR for the online path.
#[derive(Debug, Clone)]
pub struct StreamingFir<T> {
    taps_rev: Vec<T>,
    // Delay line stored twice so the newest `L` samples are always contiguous.
    line: Vec<T>,
    pos: usize,
}

impl<T: Real> StreamingFir<T> {
    pub fn new(filter: &BandpassFilter<T>) -> Self {
        let l = filter.len();
        StreamingFir {
            taps_rev: filter.taps.iter().rev().copied().collect(),
            line: vec![T::zero(); 2 * l],
            pos: 0,
        }
    }

    pub fn reset(&mut self) {
        self.line.iter_mut().for_each(|x| *x = T::zero());
        self.pos = 0;
    }

    pub fn push(&mut self, x: T) -> T {
        let l = self.taps_rev.len();
        self.line[self.pos] = x;
        self.line[self.pos + l] = x;
        self.pos = (self.pos + 1) % l;
        // Oldest sample now sits at `pos`, newest at `pos + l - 1`.
        dot(&self.taps_rev, &self.line[self.pos..self.pos + l])
    }

    /// Feeds `L - 1` zeros, returning the tail of the response.
    pub fn flush(&mut self) -> Vec<T> {
        (0..self.taps_rev.len() - 1).map(|_| self.push(T::zero())).collect()
    }
}

/// Welch-style spectral estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    pub segment_ms: f64,
    /// Fractional overlap between consecutive segments, in [0, 1).
    pub overlap: f64,
    /// Grid spacing achieved by zero padding.
    pub resolution_hz: f64,
    pub max_freq_hz: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            segment_ms: 1000.0,
            overlap: 0.5,
            resolution_hz: 0.5,
            max_freq_hz: 40.0,
        }
    }
}

/// Across-trial mean of per-trial log power spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    pub frequencies_hz: Vec<f64>,
    /// Mean natural-log PSD (µV²/Hz) per bin.
    pub log_power: Vec<f64>,
    /// Across-trial sample standard deviation of the log PSD per bin.
    pub log_power_std: Vec<f64>,
    pub n_windows: usize,
}

impl PowerSpectrum {
    /// Standard error of the mean log power per bin.
    pub fn std_error(&self) -> Vec<f64> {
        let s = (self.n_windows as f64).sqrt();
        self.log_power_std.iter().map(|v| v / s).collect()
    }

    pub fn bin_of(&self, freq_hz: f64) -> Option<usize> {
        self.frequencies_hz
            .iter()
            .position(|&f| (f - freq_hz).abs() < 1e-9)
    }
}

/// Per-window Welch PSD (Hann segments, averaged) on a zero-padded grid,
/// log-transformed and averaged across windows.
pub fn mean_log_spectrum<T: Real>(windows: &[&[T]], fs: f64, cfg: &SpectrumConfig) -> Result<PowerSpectrum> {
    if windows.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} windows; at least 2 are needed for a spectrum",
            windows.len()
        )));
    }
    let seg = crate::model::ms_to_samples(cfg.segment_ms, fs).max(2);
    if let Some(w) = windows.iter().find(|w| w.len() < seg) {
        return Err(Error::WindowTooShort {
            window: w.len(),
            segment: seg,
        });
    }
    if !(cfg.resolution_hz > 0.0 && (0.0..1.0).contains(&cfg.overlap)) {
        return Err(Error::config("spectrum", "resolution must be > 0 and overlap in [0, 1)"));
    }
    let nfft = ((fs / cfg.resolution_hz).ceil() as usize).max(seg);
    let df = fs / nfft as f64;
    let n_bins = ((cfg.max_freq_hz.min(fs / 2.0) / df).floor() as usize + 1).min(nfft / 2 + 1);
    let hop = ((seg as f64) * (1.0 - cfg.overlap)).round().max(1.0) as usize;

    let hann: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos())
        .collect();
    let wss: f64 = hann.iter().map(|w| w * w).sum();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];

    let mut per_window: Vec<Vec<f64>> = Vec::with_capacity(windows.len());
    for w in windows {
        let mut psd = vec![0.0; n_bins];
        let mut n_seg = 0usize;
        let mut start = 0;
        while start + seg <= w.len() {
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for i in 0..seg {
                buf[i].re = w[start + i].as_f64() * hann[i];
            }
            fft.process(&mut buf);
            for (k, p) in psd.iter_mut().enumerate() {
                let scale = if k == 0 || (nfft % 2 == 0 && k == nfft / 2) { 1.0 } else { 2.0 };
                *p += scale * buf[k].norm_sqr() / (fs * wss);
            }
            n_seg += 1;
            start += hop;
        }
        per_window.push(psd.iter().map(|p| (p / n_seg as f64).max(1e-300).ln()).collect());
    }

    let n = per_window.len() as f64;
    let mut log_power = vec![0.0; n_bins];
    let mut log_power_std = vec![0.0; n_bins];
    for k in 0..n_bins {
        let mean = per_window.iter().map(|v| v[k]).sum::<f64>() / n;
        let var = per_window.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        log_power[k] = mean;
        log_power_std[k] = var.sqrt();
    }
    Ok(PowerSpectrum {
        frequencies_hz: (0..n_bins).map(|k| k as f64 * df).collect(),
        log_power,
        log_power_std,
        n_windows: windows.len(),
    })
}
