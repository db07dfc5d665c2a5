//! `ubm`: run the preset experiments, validate scenario configs, and print
//! closed-form moment oracles for a matrix file.
//!
//! Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 configuration
//! error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ubm_core::error::UbmError;
use ubm_core::oracles;
use ubm_core::presets::{run_preset, PRESET_NAMES};
use ubm_core::report::{emit_report, ReportFormat, RunRecord, Verdict};
use ubm_core::scenario::{parse_scenario, read_matrix_file, PartialScenario};

#[derive(Parser)]
#[command(
    name = "ubm",
    about = "Unitary Brownian motion laboratory: simulate linear statistics of the process on U(n) and verify them against exact moment formulas and Gaussian limit laws",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named preset experiment and report pass/fail per check.
    Run {
        /// One of: theorem-main, corner-regimes, permutation-corner,
        /// poisson-trace, haar-gaussian, haar-entries, moment-oracles.
        preset: String,
        /// TOML file with partial scenario overrides (n, replications, ...).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the replication count.
        #[arg(long)]
        replications: Option<usize>,
        /// Directory to write the report files into.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report file format.
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Parse and validate a scenario config, printing the resolved document.
    Validate {
        /// TOML scenario file.
        config: PathBuf,
    },
    /// Print closed-form moment values for matrices read from a file
    /// (format: first line `n k`, then k blocks of n rows of n `re im`
    /// pairs).
    Oracles {
        /// Matrix file.
        matrix_file: PathBuf,
        /// Expected dimension; must match the file.
        #[arg(long)]
        n: usize,
        /// Time at which to evaluate the time-dependent moments.
        #[arg(long)]
        t: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                UbmError::InvalidScenario(_)
                | UbmError::UnknownPreset(_)
                | UbmError::MatrixFile { .. }
                | UbmError::InvalidArgument(_) => 2,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

/// Honors UBM_THREADS when the parallel runtime is compiled in. Results are
/// identical for every worker count; this only affects wall-clock time.
fn configure_threads() {
    if let Ok(value) = std::env::var("UBM_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, UbmError> {
    match cli.command {
        Command::Run {
            preset,
            config,
            seed,
            replications,
            out,
            format,
        } => {
            if !PRESET_NAMES.contains(&preset.as_str()) {
                return Err(UbmError::UnknownPreset(preset));
            }
            let mut overrides = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|source| UbmError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    PartialScenario::parse(&text)?
                }
                None => PartialScenario::default(),
            };
            if seed.is_some() {
                overrides.seed = seed;
            }
            if replications.is_some() {
                overrides.replications = replications;
            }
            let record = run_preset(&preset, &overrides)?;
            print_record(&record);
            if let Some(dir) = out {
                let fmt = match format {
                    Format::Csv => ReportFormat::Csv,
                    Format::Json => ReportFormat::Json,
                };
                for path in emit_report(&record, fmt, &dir)? {
                    println!("wrote {}", path.display());
                }
            }
            if record.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config).map_err(|source| UbmError::Io {
                path: config.display().to_string(),
                source,
            })?;
            let scenario = parse_scenario(&text)?;
            println!("ok: scenario is valid");
            println!("{scenario:#?}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracles { matrix_file, n, t } => {
            let path = matrix_file.display().to_string();
            let (file_n, matrices) = read_matrix_file(&path)?;
            if file_n != n {
                return Err(UbmError::InvalidArgument(format!(
                    "--n {n} does not match the file dimension {file_n}"
                )));
            }
            if t < 0.0 {
                return Err(UbmError::InvalidArgument(format!(
                    "--t must be nonnegative, got {t}"
                )));
            }
            for (idx, a) in matrices.iter().enumerate() {
                print_oracles(idx, a, n, t)?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_record(record: &RunRecord) {
    println!(
        "preset {} (n = {}, replications = {}, seed = {})",
        record.preset, record.scenario.n, record.scenario.replications, record.scenario.seed
    );
    for r in &record.reports {
        let verdict = match r.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        };
        println!(
            "{verdict} {:<55} t={:<6} empirical=({:+.6e}, {:+.6e}) oracle=({:+.6e}, {:+.6e}) se={:.3e} sigma_dist={:.3}",
            r.statistic, r.time, r.empirical.re, r.empirical.im, r.oracle.re, r.oracle.im, r.se, r.sigma_distance
        );
    }
    let failed = record.failed_count();
    println!(
        "{} checks, {} failed, wall clock {:.1}s",
        record.reports.len(),
        failed,
        record.wall_clock_seconds
    );
}

fn print_oracles(idx: usize, a: &ubm_core::linalg::ComplexMatrix, n: usize, t: f64) -> Result<(), UbmError> {
    let tr = a.trace();
    let tr2 = ubm_core::linalg::trace_product(a, a)?;
    println!("matrix {idx} ({n}x{n}) at t = {t}:");
    println!("  Tr A                 = {:+.12e} {:+.12e}i", tr.re, tr.im);
    println!("  Tr A^2               = {:+.12e} {:+.12e}i", tr2.re, tr2.im);
    let m = oracles::mixed_moment(a, n, t);
    println!("  E Tr(A V_t A V_t)    = {:+.12e} {:+.12e}i", m.re, m.im);
    match oracles::second_moment(a, n, t) {
        Ok(f) => println!("  E |Tr(A V_t A V_t)|^2 = {:+.12e}", f),
        Err(e) => println!("  E |Tr(A V_t A V_t)|^2 : unavailable ({e})"),
    }
    let u = oracles::u_cd(a, a, n, t)?;
    let v = oracles::v_cd(a, a, n, t)?;
    println!("  E Tr(V_t A V_t* A)   = {:+.12e} {:+.12e}i", u.re, u.im);
    println!("  E Tr(V_t A)Tr(V_t*A) = {:+.12e} {:+.12e}i", v.re, v.im);
    println!(
        "  E |Tr(A U)|^2 (Haar) = {:+.12e}",
        oracles::haar_moment_second(a)?
    );
    match oracles::haar_moment_fourth_bound(a) {
        Ok(b) => println!("  E |Tr(A U A U)|^2    <= {:+.12e} (Haar ceiling)", b),
        Err(e) => println!("  E |Tr(A U A U)|^2 ceiling: unavailable ({e})"),
    }
    match oracles::permutation_trace_bounds(a, a) {
        Ok((b1, b2)) => {
            println!("  E |Tr(A S)|          <= {:+.12e} (permutation bound)", b1);
            println!("  E |Tr(A S A S)|      <= {:+.12e} (permutation bound)", b2);
        }
        Err(e) => println!("  permutation bounds: unavailable ({e})"),
    }
    Ok(())
}
