//! Monte Carlo calibration of the end-to-end identification rates and of
//! individual-band recovery on synthetic data.
//!
//! Usage: `cargo run --release --example calibrate -- [seeds] [band_runs]`

use std::time::Instant;

use erdkit::model::{period_bounds, AnalysisPeriod, StandardPeriod};
use erdkit::standard::select_individual_band;
use erdkit::{generate, run_comparison, AnalysisConfig, FrequencyBand, SynthSpec};

fn main() -> erdkit::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let seeds = args.first().copied().unwrap_or(20) as u64;
    let band_runs = args.get(1).copied().unwrap_or(100) as u64;
    let cfg = AnalysisConfig::default();

    for depth in [0.0, 20.0, 40.0, 50.0, 60.0] {
        let mut worst_std = (f64::MAX, f64::MIN);
        let mut worst_novel = (f64::MAX, f64::MIN);
        let t0 = Instant::now();
        for seed in 0..seeds {
            let mut spec = SynthSpec::default().with_depth(depth).with_snr_db(10.0);
            spec.settings.n_trials = 200;
            spec.seed = 1000 + seed;
            let (rec, trials, _) = generate::<f64>(&spec)?;
            let report = run_comparison(&rec, &trials, &cfg)?;
            for a in &report.aligned {
                worst_std = (worst_std.0.min(a.standard_identification_percent), worst_std.1.max(a.standard_identification_percent));
                worst_novel = (worst_novel.0.min(a.novel_identification_percent), worst_novel.1.max(a.novel_identification_percent));
            }
        }
        println!(
            "depth {depth:>4}: standard aligned [{:.2}, {:.2}]  novel aligned [{:.2}, {:.2}]  ({:.1}s)",
            worst_std.0, worst_std.1, worst_novel.0, worst_novel.1,
            t0.elapsed().as_secs_f64()
        );
    }

    let target = FrequencyBand { lo_hz: 11.5, hi_hz: 13.5 };
    let mut hits = 0;
    let t0 = Instant::now();
    for seed in 0..band_runs {
        let mut spec = SynthSpec::default().with_depth(50.0).with_snr_db(10.0);
        spec.settings.n_trials = 100;
        spec.seed = 5000 + seed;
        let (rec, trials, _) = generate::<f64>(&spec)?;
        let c3 = rec.channel("C3")?;
        let win = |p| -> Vec<&[f64]> {
            trials
                .valid()
                .map(|t| &c3[period_bounds(t, AnalysisPeriod::Standard(p), &spec.timing, spec.fs).unwrap()])
                .collect()
        };
        let (r, a) = (win(StandardPeriod::R2), win(StandardPeriod::A1));
        match select_individual_band(&r, &a, "C3", spec.fs, &cfg.standard, &cfg.spectrum) {
            Ok(b) if b.band.overlaps(&target) => hits += 1,
            Ok(b) => println!("seed {seed}: selected {}", b.band),
            Err(e) => println!("seed {seed}: {e}"),
        }
    }
    println!("band recovery: {hits}/{band_runs} ({:.1}s)", t0.elapsed().as_secs_f64());
    Ok(())
}
