//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Lines go straight to stdout so they show up even when the harness captures
//! output.

use std::io::Write;
use std::time::Instant;

use erdkit::compare::{fft_macs, operation_counts, run_bench, DetectionReport};
use erdkit::config::AnalysisConfig;
use erdkit::dsp::{apply_filter, band_power, design_bandpass, FilterMode, FilterSpec, PowerMode, StreamingFir};
use erdkit::io::report_tables;
use erdkit::model::{
    erd_percent, period_bounds, AnalysisPeriod, ErdMeasure, FrequencyBand, NovelPeriod, SignalGroup, StandardPeriod,
};
use erdkit::novel::{
    build_differentials, enumerate_bands, novel_decisions, ratio_profile, run_novel, BandBank, NovelBandSummary,
    NovelCell, Transition,
};
use erdkit::standard::{select_individual_band, PairAggregate, PeriodPair, StandardCell};
use erdkit::synth::{generate, SynthSpec};
use erdkit::{detect_artifact_spans, run_comparison, suppress, ArtifactParams, ExactErdMeasure, Recording64};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: f64 = 512.0;

struct Verdict {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn finish(self, n: u32, title: &str, started: Instant) {
        let pass = self.failures.is_empty();
        let mut out = std::io::stdout().lock();
        let _ = writeln!(
            out,
            "criterion {n:>2} {}: {title} ({:.1}s){}{}",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            if self.notes.is_empty() { String::new() } else { format!(" | {}", self.notes.join("; ")) },
            if pass { String::new() } else { format!(" | failed: {}", self.failures.join("; ")) },
        );
        drop(out);
        assert!(pass, "criterion {n} failed: {:?}", self.failures);
    }
}

fn band(lo: f64, hi: f64) -> FrequencyBand {
    FrequencyBand { lo_hz: lo, hi_hz: hi }
}

fn spec(depth: f64, snr_db: Option<f64>, trials: usize, seed: u64) -> SynthSpec {
    let mut s = SynthSpec::default().with_depth(depth);
    s = match snr_db {
        Some(db) => s.with_snr_db(db),
        None => s.noiseless(),
    };
    s.settings.n_trials = trials;
    s.seed = seed;
    s
}

#[test]
fn criterion_01_formula_exactness() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let m = erd_percent(60.0f64, 100.0).unwrap();
    v.check(m.percent == -40.0, format!("erd_percent(60, 100) = {}", m.percent));
    let exact = erd_percent(Rational64::from_integer(60), Rational64::from_integer(100)).unwrap();
    v.check(exact.percent == Rational64::from_integer(-40), "rational erd_percent(60, 100)");

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..1000 {
        let ratio = Rational64::new(rng.gen_range(0..=100_000), rng.gen_range(1..=10_000));
        let back = ExactErdMeasure::from_ratio(ratio);
        let again = ErdMeasure::from_percent(back.percent);
        if again.ratio() != ratio || ExactErdMeasure::from_ratio(again.ratio()).percent != back.percent {
            bad += 1;
        }
    }
    v.check(bad == 0, format!("{bad}/1000 round trips inexact"));
    v.note("1000 rational round trips");
    v.finish(1, "ERD formula exactness", t0);
}

#[test]
fn criterion_02_band_bank() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let full = enumerate_bands(5.5, 16.5, 2.0, 1.0).unwrap();
    let expected: Vec<_> = (0..10).map(|k| band(5.5 + k as f64, 7.5 + k as f64)).collect();
    v.check(full == expected, format!("(5.5, 16.5) gave {full:?}"));
    let subset = enumerate_bands(9.0, 14.0, 2.0, 1.0).unwrap();
    let expected: Vec<_> = (0..4).map(|k| band(9.0 + k as f64, 11.0 + k as f64)).collect();
    v.check(subset == expected, format!("(9, 14) gave {subset:?}"));
    v.note(format!("{} and {} bands", full.len(), subset.len()));
    v.finish(2, "band bank enumeration", t0);
}

/// Group delay in samples from the phase slope around `f`.
fn measured_group_delay(taps: &[f64], f: f64, fs: f64) -> f64 {
    let phase = |freq: f64| {
        let w = std::f64::consts::TAU * freq / fs;
        let (re, im) = taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, &h)| (re + h * (w * n as f64).cos(), im - h * (w * n as f64).sin()));
        im.atan2(re)
    };
    let df = 1e-3;
    let mut dphi = phase(f + df) - phase(f - df);
    while dphi > std::f64::consts::PI {
        dphi -= std::f64::consts::TAU;
    }
    while dphi < -std::f64::consts::PI {
        dphi += std::f64::consts::TAU;
    }
    -dphi / (std::f64::consts::TAU * 2.0 * df / fs)
}

#[test]
fn criterion_03_group_delay() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let spec = FilterSpec::default();
    let mut bands = enumerate_bands(5.5, 16.5, 2.0, 1.0).unwrap();
    bands.extend([band(8.0, 10.0), band(11.5, 13.5), band(5.5, 16.5), band(20.0, 24.0)]);
    for b in &bands {
        let f = design_bandpass::<f64>(*b, FS, spec).unwrap();
        let l = f.len();
        let taps = f.taps();
        v.check(l % 2 == 1, format!("{b}: even length {l}"));
        v.check((0..l).all(|i| taps[i] == taps[l - 1 - i]), format!("{b}: taps not symmetric"));
        let analytic_ms = (l - 1) as f64 / 2.0 / FS * 1000.0;
        v.check(f.group_delay_ms() == analytic_ms, format!("{b}: reported {} ms", f.group_delay_ms()));
        let measured = measured_group_delay(taps, b.center_hz(), FS);
        v.check(
            (measured - (l - 1) as f64 / 2.0).abs() < 1e-6,
            format!("{b}: measured {measured} samples vs {}", (l - 1) / 2),
        );
    }
    let default = design_bandpass::<f64>(band(11.5, 13.5), FS, spec).unwrap();
    let gd = default.group_delay_ms();
    v.check((350.0..=650.0).contains(&gd), format!("default design delay {gd} ms"));
    v.note(format!("default 2 Hz band: L = {}, delay {gd:.1} ms", default.len()));
    v.finish(3, "linear-phase group delay", t0);
}

#[test]
fn criterion_04_noiseless_novel() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let cfg = AnalysisConfig::default();
    let s = spec(50.0, None, 100, 4);
    let (rec, trials, truth) = generate::<f64>(&s).unwrap();
    let bank = BandBank::<f64>::from_config(&cfg, FS).unwrap();
    let b = bank.index_of(band(11.5, 13.5)).unwrap();
    let diffs = build_differentials(&rec, &cfg.differential_pairs, &cfg.montage, cfg.strict_adjacency).unwrap();
    let affected = |label: &str| truth.affected[truth.labels.iter().position(|l| l == label).unwrap()];
    let (mut lo, mut hi, mut checked) = (f64::MAX, f64::MIN, 0);
    for trial in trials.valid() {
        let p = ratio_profile(trial, &diffs, &bank, &cfg.timing, FS, cfg.detection.power_mode).unwrap();
        for (c, d) in diffs.iter().enumerate() {
            if !(affected(&d.positive) && affected(&d.negative)) {
                continue;
            }
            let r = p.ratios[c][b][0].unwrap_or(f64::NAN);
            lo = lo.min(r);
            hi = hi.max(r);
            checked += 1;
            if !((r - 0.5).abs() <= 0.02) {
                v.check(false, format!("trial {} {}: ratio {r}", trial.index, d.label()));
            }
        }
    }
    v.check(checked == 100 * diffs.len(), format!("only {checked} channel-trials checked"));
    let report = run_novel(&rec, &trials, &cfg).unwrap();
    for g in SignalGroup::ALL {
        let cell = report.cell(Transition::Post1OverPre, g).unwrap();
        v.check(
            cell.n_evaluated == 100 && cell.identification_percent == 100.0,
            format!("{}: {}% of {}", g.short_name(), cell.identification_percent, cell.n_evaluated),
        );
    }
    v.note(format!("post1/pre in [{lo:.4}, {hi:.4}] over {checked} channel-trials"));
    v.finish(4, "noiseless novel end to end", t0);
}

#[test]
fn criterion_05_noisy_both_methods() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let cfg = AnalysisConfig::default();
    let seeds = [1000u64, 1001];
    let mut summary = Vec::new();
    for (depth, want_high) in [(50.0, true), (0.0, false)] {
        let (mut min_rate, mut max_rate) = (f64::MAX, f64::MIN);
        for &seed in &seeds {
            let (rec, trials, _) = generate::<f64>(&spec(depth, Some(10.0), 200, seed)).unwrap();
            let report = run_comparison(&rec, &trials, &cfg).unwrap();
            v.check(report.aligned.len() == 3, format!("seed {seed}: {} aligned cells", report.aligned.len()));
            for a in &report.aligned {
                for (method, rate) in [
                    ("standard", a.standard_identification_percent),
                    ("novel", a.novel_identification_percent),
                ] {
                    min_rate = min_rate.min(rate);
                    max_rate = max_rate.max(rate);
                    let ok = if want_high { rate >= 80.0 } else { rate <= 20.0 };
                    v.check(ok, format!("depth {depth} seed {seed} {} {method}: {rate:.2}%", a.channel));
                }
            }
        }
        summary.push(format!("depth {depth}: aligned rates [{min_rate:.1}, {max_rate:.1}]%"));
    }
    for s in summary {
        v.note(s);
    }
    v.finish(5, "noisy end to end, both methods", t0);
}

#[test]
fn criterion_06_individual_band_recovery() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let cfg = AnalysisConfig::default();
    let target = band(11.5, 13.5);
    let mut hits = 0;
    for run in 0..100u64 {
        let s = spec(50.0, Some(10.0), 100, 5000 + run);
        let (rec, trials, _) = generate::<f64>(&s).unwrap();
        let c3 = rec.channel("C3").unwrap();
        let windows = |p| -> Vec<&[f64]> {
            trials
                .valid()
                .map(|t| &c3[period_bounds(t, AnalysisPeriod::Standard(p), &s.timing, FS).unwrap()])
                .collect()
        };
        let (r, a) = (windows(StandardPeriod::R2), windows(StandardPeriod::A1));
        if let Ok(found) = select_individual_band(&r, &a, "C3", FS, &cfg.standard, &cfg.spectrum) {
            if found.band.overlaps(&target) {
                hits += 1;
            }
        }
    }
    v.check(hits >= 90, format!("{hits}/100 runs overlap the injected band"));
    v.note(format!("{hits}/100 recovered"));
    v.finish(6, "individual band recovery", t0);
}

#[test]
fn criterion_07_artifact_suppression() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let cfg = AnalysisConfig::default();
    let params = ArtifactParams::default();
    let mut clean_spec = spec(50.0, Some(10.0), 100, 77);
    clean_spec.settings.artifact.probability = 0.0;
    let mut dirty_spec = clean_spec.clone();
    dirty_spec.settings.artifact.probability = 1.0;
    let (clean, trials, _) = generate::<f64>(&clean_spec).unwrap();
    let (dirty, _, truth) = generate::<f64>(&dirty_spec).unwrap();

    let filter = design_bandpass::<f64>(band(5.5, 16.5), FS, FilterSpec::default()).unwrap();
    let reach = params.taper_samples + filter.group_delay_samples();
    let mut within = 0;
    let mut evaluated = 0;
    let mut worst = 0.0f64;
    let mut per_channel = std::collections::HashMap::new();
    for (k, ledger) in truth.trials.iter().enumerate() {
        let Some((label, at)) = &ledger.artifact else { continue };
        evaluated += 1;
        let (spans, suppressed_band, clean_band) = per_channel.entry(label.clone()).or_insert_with(|| {
            let x = dirty.channel(label).unwrap();
            let spans = detect_artifact_spans(x, FS, &params).unwrap();
            let cleaned = suppress(x, &spans, params.taper_samples).unwrap().cleaned;
            (
                spans,
                apply_filter(&filter, &cleaned, FilterMode::ZeroPhase),
                apply_filter(&filter, clean.channel(label).unwrap(), FilterMode::ZeroPhase),
            )
        });
        if !spans.iter().any(|s| s.contains(at)) {
            v.check(false, format!("trial {k}: artifact on {label} at {at} not detected"));
            continue;
        }
        let extent = trials.trials[k].analysis_extent(&cfg.timing, FS).unwrap();
        let outside = |i: &usize| spans.iter().all(|s| *i + reach < s.start || *i >= s.end + reach);
        let (mut es, mut ec) = (0.0, 0.0);
        for i in extent.filter(outside) {
            es += suppressed_band[i] * suppressed_band[i];
            ec += clean_band[i] * clean_band[i];
        }
        let dev = (es / ec - 1.0).abs();
        worst = worst.max(dev);
        if ec > 0.0 && dev <= 0.10 {
            within += 1;
        }
    }
    v.check(evaluated == 100, format!("{evaluated} corrupted trials"));
    v.check(within * 10 >= evaluated * 9, format!("{within}/{evaluated} within 10%"));

    let mut flagged_trials = trials.clone();
    let (_, log) = erdkit::artifact::clean_recording(&clean, &mut flagged_trials, &cfg.timing, &params).unwrap();
    let false_pos = flagged_trials.trials.iter().filter(|t| !t.valid).count();
    let rate = 100.0 * false_pos as f64 / trials.len() as f64;
    v.check(rate <= 1.0, format!("false-positive rate {rate:.2}% ({} spans)", log.spans.len()));
    v.note(format!(
        "{within}/{evaluated} within 10% (worst {:.1}%), clean-trial false positives {rate:.2}%",
        worst * 100.0
    ));
    v.finish(7, "artifact suppression", t0);
}

#[test]
fn criterion_08_invariance_suite() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let cfg = AnalysisConfig::default();
    let (rec, trials, _) = generate::<f64>(&spec(50.0, Some(10.0), 40, 8)).unwrap();
    let bank = BandBank::<f64>::from_config(&cfg, FS).unwrap();
    let (base, _, _) = novel_decisions(&rec, &trials, &cfg, &bank).unwrap();

    // Gain.
    for k in [1e-3, 7.5, 250.0] {
        let scaled: Recording64 = rec.map_samples(|x| x * k);
        let (d, _, _) = novel_decisions(&scaled, &trials, &cfg, &bank).unwrap();
        let same = base.iter().flatten().zip(d.iter().flatten()).all(|(a, b)| {
            a.identified == b.identified
                && match (a.mean_ratio, b.mean_ratio) {
                    (Some(x), Some(y)) => (x - y).abs() <= 1e-9 * x.abs(),
                    (x, y) => x == y,
                }
        });
        v.check(same, format!("decisions changed under gain {k}"));
    }

    // Telescoping.
    let diffs = build_differentials(&rec, &cfg.differential_pairs, &cfg.montage, cfg.strict_adjacency).unwrap();
    let mut worst_tel = 0.0f64;
    for trial in trials.valid() {
        let p = ratio_profile(trial, &diffs, &bank, &cfg.timing, FS, cfg.detection.power_mode).unwrap();
        for c in 0..diffs.len() {
            for b in 0..bank.len() {
                let prod: f64 = p.ratios[c][b].iter().map(|r| r.unwrap()).product();
                let direct = p.energies[c][b][4] / p.energies[c][b][0];
                worst_tel = worst_tel.max((prod / direct - 1.0).abs());
            }
        }
    }
    v.check(worst_tel <= 1e-9, format!("telescoping error {worst_tel:e}"));

    // Causality under truncation.
    let x = rec.channel("C3").unwrap();
    let trial = trials.valid().nth(5).unwrap();
    let pre = period_bounds(trial, AnalysisPeriod::Novel(NovelPeriod::PreTrigger), &cfg.timing, FS).unwrap();
    let post1 = period_bounds(trial, AnalysisPeriod::Novel(NovelPeriod::Post1), &cfg.timing, FS).unwrap();
    for f in &bank.filters {
        let windowed = |sig: &[f64], r: std::ops::Range<usize>| band_power(f, sig, r, PowerMode::Windowed).unwrap();
        let cut = &x[..post1.end];
        v.check(
            windowed(cut, pre.clone()) == windowed(x, pre.clone()) && windowed(cut, post1.clone()) == windowed(x, post1.clone()),
            format!("{}: windowed energy used samples past the interval", f.band()),
        );
        let cont = |sig: &[f64], r: std::ops::Range<usize>| band_power(f, sig, r, PowerMode::Continuous).unwrap();
        let cut = &x[..post1.end + f.group_delay_samples()];
        v.check(
            cont(cut, post1.clone()) == cont(x, post1.clone()),
            format!("{}: continuous energy needs more than the group delay of lookahead", f.band()),
        );
        let mut full = StreamingFir::new(f);
        let mut part = StreamingFir::new(f);
        let a: Vec<f64> = x[..2000].iter().map(|&s| full.push(s)).collect();
        let b: Vec<f64> = x[..1500].iter().map(|&s| part.push(s)).collect();
        v.check(a[..1500] == b[..], format!("{}: streaming output depends on future input", f.band()));
    }

    // Threshold 40 -> 20.
    let mut cfg20 = cfg.clone();
    cfg20.detection.identification_threshold_percent = 20.0;
    let (loose, _, _) = novel_decisions(&rec, &trials, &cfg20, &bank).unwrap();
    let implied = base.iter().flatten().zip(loose.iter().flatten()).all(|(a, b)| !a.identified || b.identified);
    v.check(implied, "novel decision identified at 40% but not at 20%");
    let r40 = run_comparison(&rec, &trials, &cfg).unwrap();
    let r20 = run_comparison(&rec, &trials, &cfg20).unwrap();
    for (a, b) in r40.standard.cells.iter().zip(&r20.standard.cells) {
        v.check(
            b.aggregate.identification_rate_percent >= a.aggregate.identification_rate_percent,
            format!("standard {} {}: rate fell at the looser threshold", a.pair, a.channel),
        );
    }

    // Depth sweep.
    let mut prev: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    for depth in [0.0, 20.0, 40.0, 60.0, 80.0] {
        let (rec, trials, _) = generate::<f64>(&spec(depth, Some(10.0), 40, 9)).unwrap();
        let report = run_comparison(&rec, &trials, &cfg).unwrap();
        let rates: Vec<f64> = report
            .aligned
            .iter()
            .flat_map(|a| [a.standard_identification_percent, a.novel_identification_percent])
            .collect();
        if let Some(p) = &prev {
            v.check(
                rates.iter().zip(p).all(|(r, q)| r >= q),
                format!("identification fell going to depth {depth}: {p:?} -> {rates:?}"),
            );
        }
        trace.push(format!("{depth}:{:.0}", rates.iter().sum::<f64>() / rates.len() as f64));
        prev = Some(rates);
    }
    v.note(format!("telescoping {worst_tel:.1e}, mean aligned rate by depth {}", trace.join(" ")));
    v.finish(8, "invariance suite", t0);
}

#[test]
fn criterion_09_benchmark_sanity() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let cfg = AnalysisConfig::default();
    let bank = BandBank::<f64>::from_config(&cfg, FS).unwrap();
    let lengths: Vec<usize> = bank.filters.iter().map(|f| f.len()).collect();
    let std_len = design_bandpass::<f64>(cfg.standard.default_band, FS, cfg.filter).unwrap().len();
    let ops = operation_counts(&cfg, FS, &lengths, std_len);
    let n = 256usize;
    v.check(ops.interval_samples == n, format!("interval of {} samples", ops.interval_samples));
    for (b, &l) in lengths.iter().enumerate() {
        v.check(
            ops.novel_interval_macs_per_band[b] == (n * l) as u64,
            format!("band {b}: {} MACs for L = {l}", ops.novel_interval_macs_per_band[b]),
        );
    }
    let per_signal: u64 = lengths.iter().map(|&l| (n * l) as u64).sum();
    v.check(ops.novel_interval_macs_per_signal == per_signal, "per-signal interval count");
    let expected_std = 6 * ((2 * 512 * std_len) as u64 + 2 * fft_macs(1024));
    v.check(
        ops.standard_trial_macs_per_channel == expected_std,
        format!("standard per channel {} vs {expected_std}", ops.standard_trial_macs_per_channel),
    );
    v.check(
        ops.novel_interval_macs_per_signal < ops.standard_trial_macs_per_channel,
        format!(
            "novel interval {} >= standard trial {}",
            ops.novel_interval_macs_per_signal, ops.standard_trial_macs_per_channel
        ),
    );

    let (rec, trials, _) = generate::<f64>(&spec(50.0, Some(10.0), 8, 3)).unwrap();
    let bench = run_bench(&rec, &trials, &cfg, 3).unwrap();
    v.check(bench.operations == ops, "benchmark reports different operation counts");
    v.check(
        bench.methods.iter().all(|m| m.stages.iter().all(|s| s.median_ms_per_trial >= 0.0)),
        "negative stage timing",
    );
    v.note(format!(
        "novel {} MACs per interval per signal vs standard {} per trial per channel",
        ops.novel_interval_macs_per_signal, ops.standard_trial_macs_per_channel
    ));
    v.finish(9, "benchmark operation counts", t0);
}

fn table_report() -> DetectionReport {
    let cfg = AnalysisConfig::default();
    let mut report = DetectionReport::empty(&cfg);
    let standard = [
        [28.21, 33.59, 26.11],
        [43.86, 52.30, 52.53],
        [21.82, 26.38, 19.4],
        [14.38, 13.97, 19.58],
        [41.12, 40.03, 40.94],
        [13.14, 13.97, 17.12],
    ];
    for (pair, row) in PeriodPair::ALL.iter().zip(standard) {
        for (ch, rate) in ["C3", "Cz", "C4"].iter().zip(row) {
            report.standard.cells.push(StandardCell {
                pair: *pair,
                channel: ch.to_string(),
                blocks: Vec::new(),
                band_center_mean_hz: 12.5,
                band_center_std_hz: 0.0,
                aggregate: PairAggregate {
                    n_evaluated: 100,
                    n_identified: 0,
                    n_excluded: 0,
                    identification_rate_percent: rate,
                    mean_erd: None,
                    std_erd: None,
                },
                average_trial_erd_percent: None,
            });
        }
    }
    let novel = [
        [10.04, 40.32, 10.83],
        [11.77, 52.14, 13.34],
        [15.95, 64.44, 19.35],
        [19.14, 73.48, 24.48],
    ];
    let mut cells = Vec::new();
    for (tr, row) in Transition::ALL.iter().zip(novel) {
        for (g, rate) in SignalGroup::ALL.iter().zip(row) {
            cells.push(NovelCell {
                transition: *tr,
                group: *g,
                n_evaluated: 100,
                n_identified: 0,
                identification_percent: rate,
                mean_erd_percent: None,
                std_erd_percent: None,
            });
        }
    }
    report.novel.bands.push(NovelBandSummary {
        band: cfg.bands.report_band,
        cells,
    });
    report
}

#[test]
fn criterion_10_report_fidelity() {
    let t0 = Instant::now();
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().unwrap();
    erdkit::emit_report(&table_report(), dir.path(), erdkit::ReportFormat::CsvTables).unwrap();
    let fixtures = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    for name in ["table2_standard_identification.csv", "table4_novel_identification.csv"] {
        let got = std::fs::read(dir.path().join(name)).unwrap();
        let want = std::fs::read(fixtures.join(name)).unwrap();
        v.check(got == want, format!("{name} differs:\n{}", String::from_utf8_lossy(&got)));
    }
    let in_memory = report_tables(&table_report());
    v.check(in_memory.len() == 5, format!("{} tables", in_memory.len()));
    v.note("identification tables byte-identical");
    v.finish(10, "report fidelity", t0);
}
