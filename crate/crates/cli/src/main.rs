//! `erdkit`: synthesize recordings, run either ERD pipeline, compare them and
//! time them.
//!
//! Exit codes: 0 success, 1 bad input or configuration, 2 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use erdkit::io::{segment_trials, RecordingFormat, ReportFormat};
use erdkit::{AnalysisConfig, Error, Recording64, Result};

#[derive(Parser, Debug)]
#[command(name = "erdkit", version, about = "ERD detection in sensorimotor EEG")]
struct Cli {
    /// Repeat for more progress output on stderr.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config file, or `default` for built-in settings.
    #[arg(long, default_value = "default")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct Analyze {
    #[command(flatten)]
    common: Common,
    /// Recording (.csv matrix or .jsonl).
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic recording plus a `<out>.truth.json` ground-truth file.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Band-power method only.
    AnalyzeStandard(Analyze),
    /// Energy-ratio method only.
    AnalyzeNovel(Analyze),
    /// Both methods; optional CSV tables directory.
    Compare {
        #[command(flatten)]
        analyze: Analyze,
        #[arg(long)]
        tables: Option<PathBuf>,
    },
    /// Per-stage timings and operation counts.
    Bench {
        #[command(flatten)]
        analyze: Analyze,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
    },
    /// Check a config and recording pair without analysing it.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
}

struct Ctx {
    verbose: u8,
}

impl Ctx {
    fn log(&self, level: u8, msg: impl AsRef<str>) {
        if self.verbose >= level {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn load_config(c: &Common) -> Result<AnalysisConfig> {
    let mut cfg = AnalysisConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn load(path: &Path) -> Result<Recording64> {
    erdkit::load_recording(path, RecordingFormat::from_path(path))
}

fn write_json<S: serde::Serialize>(value: &S, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx { verbose: cli.verbose };
    match cli.command {
        Command::Synth { common, out } => {
            let cfg = load_config(&common)?;
            ctx.log(1, format!("generating {} trials (seed {})", cfg.synth.n_trials, cfg.seed));
            let (rec, _, truth) = erdkit::generate::<f64>(&cfg.synth_spec())?;
            erdkit::save_recording(&rec, &out, RecordingFormat::from_path(&out))?;
            let mut truth_path = out.clone().into_os_string();
            truth_path.push(".truth.json");
            write_json(&truth, Path::new(&truth_path))?;
            ctx.log(1, format!("wrote {} samples x {} channels", rec.len(), rec.n_channels()));
        }
        Command::AnalyzeStandard(a) => {
            let cfg = load_config(&a.common)?;
            let rec = load(&a.input)?;
            let trials = segment_trials(&rec, &cfg.timing);
            ctx.log(1, format!("{} trials, {} valid", trials.len(), trials.n_valid()));
            if trials.n_valid() == 0 {
                return Err(Error::EmptyReport);
            }
            let report = erdkit::standard::run_standard(&rec, &trials, &cfg)?;
            write_json(&report, &a.out)?;
        }
        Command::AnalyzeNovel(a) => {
            let cfg = load_config(&a.common)?;
            let rec = load(&a.input)?;
            let trials = segment_trials(&rec, &cfg.timing);
            ctx.log(1, format!("{} trials, {} valid", trials.len(), trials.n_valid()));
            if trials.n_valid() == 0 {
                return Err(Error::EmptyReport);
            }
            let report = erdkit::novel::run_novel(&rec, &trials, &cfg)?;
            write_json(&report, &a.out)?;
        }
        Command::Compare { analyze: a, tables } => {
            let cfg = load_config(&a.common)?;
            let rec = load(&a.input)?;
            let trials = segment_trials(&rec, &cfg.timing);
            ctx.log(1, format!("{} trials, {} valid", trials.len(), trials.n_valid()));
            let report = erdkit::run_comparison(&rec, &trials, &cfg)?;
            erdkit::emit_report(&report, &a.out, ReportFormat::Json)?;
            if let Some(dir) = tables {
                erdkit::emit_report(&report, &dir, ReportFormat::CsvTables)?;
            }
            for cell in &report.aligned {
                ctx.log(
                    1,
                    format!(
                        "{} / {}: standard {:.2}%, novel {:.2}%",
                        cell.channel,
                        cell.group.short_name(),
                        cell.standard_identification_percent,
                        cell.novel_identification_percent
                    ),
                );
            }
        }
        Command::Bench { analyze: a, repetitions } => {
            let cfg = load_config(&a.common)?;
            let rec = load(&a.input)?;
            let trials = segment_trials(&rec, &cfg.timing);
            let bench = erdkit::run_bench(&rec, &trials, &cfg, repetitions)?;
            write_json(&bench, &a.out)?;
        }
        Command::Validate { common, input } => {
            let cfg = load_config(&common)?;
            let rec = load(&input)?;
            for pair in &cfg.differential_pairs {
                for l in [&pair.positive, &pair.negative] {
                    rec.channel(l)?;
                }
            }
            for c in &cfg.standard.channels {
                rec.channel(c)?;
            }
            if (rec.sample_rate_hz() - cfg.sample_rate_hz).abs() > 1e-9 {
                ctx.log(
                    0,
                    format!(
                        "note: recording rate {} Hz differs from config {} Hz; the recording's rate is used",
                        rec.sample_rate_hz(),
                        cfg.sample_rate_hz
                    ),
                );
            }
            let trials = segment_trials(&rec, &cfg.timing);
            println!(
                "ok: {} channels, {} samples at {} Hz, {} trials ({} valid)",
                rec.n_channels(),
                rec.len(),
                rec.sample_rate_hz(),
                trials.len(),
                trials.n_valid()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
