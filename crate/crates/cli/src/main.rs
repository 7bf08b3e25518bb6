//! `railpca` command-line tool.
//!
//! Exit status: 0 no breakage (or command succeeded), 1 breakage classified,
//! 2 breakage classified with a low-confidence or inconsistency flag,
//! 3 runtime error, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use railpca::detector::{detect, Measurements, ModelBundle};
use railpca::features::symbol_map_json;
use railpca::harness::{
    evaluate_seeded, phases_present, read_dataset, scenario_measurements, simulate, sweep_rmse, train_bundle,
    write_dataset, write_rmse_file, AmplitudeCache, ScenarioSuite, SHUFFLE_SEED,
};
use railpca::netmodel::{parse_breakage_set, SectionModel, SoilKind};
use railpca::pca::{TrainOptions, DEFAULT_CONFIDENCE, DEFAULT_RIDGE, DEFAULT_RMSE_CAP};
use railpca::signal::{kasami_code, DEFAULT_DEGREE};
use railpca::Error;

const EXIT_ERROR: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "railpca", version, about = "PCA-based broken-rail detection on a simulated double-track section")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled dataset CSV from a scenario suite.
    Simulate {
        /// Scenario suite JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Override the suite's seed_base.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train per-class PCA models and write a model bundle.
    Train {
        /// Dataset CSV produced by `simulate`.
        #[arg(long)]
        dataset: PathBuf,
        /// Phase to train (1, 2 or 3); repeat for several. Default: every
        /// phase with labelled rows in the dataset.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        phase: Vec<u8>,
        /// Soil preset to train on when the dataset mixes several.
        #[arg(long)]
        soil: Option<SoilKind>,
        /// RMSE cap for order selection.
        #[arg(long, default_value_t = DEFAULT_RMSE_CAP)]
        rmse_cap: f64,
        /// Confidence level of the T² threshold.
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        /// Ridge added before inverting S, as a fraction of trace(S)/n.
        #[arg(long, default_value_t = DEFAULT_RIDGE)]
        ridge: f64,
        /// Merge into this existing bundle instead of starting empty.
        #[arg(long)]
        merge: Option<PathBuf>,
        /// Output bundle JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the three-phase detector on one measurement set.
    Classify {
        /// Model bundle JSON.
        #[arg(long)]
        bundle: PathBuf,
        /// Measurements JSON ({"independent": [..], "joint": ..}).
        #[arg(long, conflicts_with = "scenario")]
        input: Option<PathBuf>,
        /// Simulate this breakage set inline, e.g. `R1e3/4`, `R1i2/4+R1e2/4` or `healthy`.
        #[arg(long)]
        scenario: Option<String>,
        /// Suite JSON supplying the base model and code degree for --scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Soil preset for --scenario.
        #[arg(long, default_value = "dry")]
        soil: SoilKind,
        /// Per-stream SNR in dB for --scenario (`inf` for noiseless).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        snr: f64,
        /// Kasami degree for --scenario when no --config is given.
        #[arg(long, default_value_t = DEFAULT_DEGREE)]
        degree: u32,
        /// Noise seed for --scenario.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a held-out dataset and write an evaluation summary.
    Evaluate {
        /// Model bundle JSON.
        #[arg(long)]
        bundle: PathBuf,
        /// Labelled test dataset CSV.
        #[arg(long)]
        dataset: PathBuf,
        /// Seed of the shuffled-label sanity run.
        #[arg(long, default_value_t = SHUFFLE_SEED)]
        seed: u64,
        /// Per-case results CSV.
        #[arg(long)]
        cases: Option<PathBuf>,
        /// Output summary JSON path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate RMSE(m) per soil, SNR and class as plot-ready CSV.
    SweepRmse {
        /// Training scenario suite JSON.
        #[arg(long)]
        config: PathBuf,
        /// Override the suite's seed_base.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the feature index to current symbol map as JSON.
    Symbols,
}

fn load_suite(path: &Path, seed: Option<u64>) -> railpca::Result<ScenarioSuite> {
    let mut s = ScenarioSuite::load(path)?;
    if let Some(seed) = seed {
        s.seed_base = seed;
    }
    Ok(s)
}

fn run(cli: Cli) -> railpca::Result<u8> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let suite = load_suite(&config, seed)?;
            let rows = simulate(&suite)?;
            write_dataset(&rows, &out)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(0)
        }
        Command::Train {
            dataset,
            phase,
            soil,
            rmse_cap,
            confidence,
            ridge,
            merge,
            out,
        } => {
            let rows = read_dataset(&dataset)?;
            let phases = if phase.is_empty() { phases_present(&rows) } else { phase };
            let opts = TrainOptions {
                rmse_cap,
                ridge,
                confidence,
            };
            let (trained, report) = train_bundle(&rows, &phases, soil, &opts)?;
            let mut bundle = match merge {
                Some(p) => ModelBundle::load(&p)?,
                None => ModelBundle::new(),
            };
            bundle.merge(trained)?;
            bundle.save(&out)?;
            println!("{:<8} {:>5} {:>3} {:>10}", "class", "K", "m", "RMSE(m)");
            for r in &report {
                println!(
                    "{:<8} {:>5} {:>3} {:>10.6}{}",
                    r.class,
                    r.k,
                    r.m,
                    r.rmse_at_m,
                    if r.flagged { "  flagged" } else { "" }
                );
            }
            eprintln!("wrote {} models to {}", bundle.len(), out.display());
            Ok(0)
        }
        Command::Classify {
            bundle,
            input,
            scenario,
            config,
            soil,
            snr,
            degree,
            seed,
            out,
        } => {
            let bundle = ModelBundle::load(&bundle)?;
            let measurements = match (input, scenario) {
                (Some(p), None) => {
                    let text = std::fs::read_to_string(&p)
                        .map_err(|e| Error::from(e).context(format!("reading {}", p.display())))?;
                    let m: Measurements = serde_json::from_str(&text)
                        .map_err(|e| Error::Schema(format!("measurements {}: {e}", p.display())))?;
                    m.validate()?;
                    m
                }
                (None, Some(s)) => {
                    let (model, degree) = match config {
                        Some(c) => {
                            let suite = ScenarioSuite::load(&c)?;
                            (suite.base_model()?, suite.code_degree)
                        }
                        None => (SectionModel::default(), degree),
                    };
                    let code = kasami_code(degree, 0)?;
                    let mut cache = AmplitudeCache::new(model);
                    scenario_measurements(&mut cache, soil, &parse_breakage_set(&s)?, &code, snr, seed)?
                }
                _ => return Err(Error::Configuration("give either --input or --scenario".into())),
            };
            let report = detect(&bundle, &measurements)?;
            let json = report.to_json()?;
            println!("{json}");
            println!();
            print!("{}", report.render_text());
            if let Some(p) = out {
                std::fs::write(&p, &json).map_err(|e| Error::from(e).context(format!("writing {}", p.display())))?;
            }
            Ok(report.exit_code() as u8)
        }
        Command::Evaluate {
            bundle,
            dataset,
            seed,
            cases,
            out,
        } => {
            let bundle = ModelBundle::load(&bundle)?;
            let rows = read_dataset(&dataset)?;
            let (summary, results) = evaluate_seeded(&bundle, &rows, seed)?;
            std::fs::write(&out, summary.to_json()?)
                .map_err(|e| Error::from(e).context(format!("writing {}", out.display())))?;
            if let Some(p) = cases {
                let mut w = csv::Writer::from_path(&p)?;
                for r in &results {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            println!(
                "cases {}  success {:.4}  margin<{} {:.4}  shuffled {:.4}",
                summary.cases,
                summary.success_rate,
                summary.margins.threshold,
                summary.margins.below_threshold,
                summary.shuffled_success_rate
            );
            Ok(0)
        }
        Command::SweepRmse { config, seed, out } => {
            let suite = load_suite(&config, seed)?;
            let rows = sweep_rmse(&suite)?;
            write_rmse_file(&rows, &out)?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(0)
        }
        Command::Symbols => {
            println!("{}", symbol_map_json());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
