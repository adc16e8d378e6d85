//! `mscr`: corruption-robustness evaluation via minimal class separation.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mscr_core::{
    augment, k_convergence_study, load_external_predictions, min_class_separation,
    min_class_separation_oracle, render, render_kstudy, run_experiment, split,
    write_augmented_csv, AccuracyMatrix, AugmentationConfig, Dataset, Error, KStudy,
    SeparationResult,
};

use config::Config;

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mscr",
    version,
    about = "Evaluate classifier corruption robustness via minimal class separation (MSCR)"
)]
struct Cli {
    /// Experiment configuration file (TOML, schema version 1)
    #[arg(long, global = true, default_value = "mscr.toml")]
    config: PathBuf,

    /// Override the config's master seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output directory
    #[arg(long, global = true, default_value = "mscr-out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure the minimal inter-class distance (2r) and epsilon_min
    Separation(SeparationArgs),
    /// Export uniform ball corruptions of a dataset partition as CSV,
    /// or score an external prediction file against that export
    Augment(AugmentArgs),
    /// Run the full experiment grid and render the report
    Run,
    /// Measure robust accuracy as a function of k
    Kstudy(KstudyArgs),
    /// Re-render report files from a results directory
    Report(ReportArgs),
}

#[derive(Args)]
struct SeparationArgs {
    /// Use the brute-force oracle instead of the pruned search
    #[arg(long)]
    oracle: bool,

    /// Measure on the train partition of the configured split instead of
    /// the full dataset
    #[arg(long)]
    train_only: bool,

    /// Also write separation.json into --out
    #[arg(long)]
    write: bool,
}

#[derive(Args)]
struct AugmentArgs {
    /// Ball radius; "eps-min" measures and uses epsilon_min
    #[arg(long)]
    epsilon: String,

    /// Corruptions per point (defaults to the config's k_test)
    #[arg(long)]
    k: Option<usize>,

    /// Which rows to augment
    #[arg(long, default_value = "test", value_parser = ["full", "train", "test"])]
    partition: String,

    /// Omit the ordinal-0 clean rows from the export
    #[arg(long)]
    no_clean: bool,

    /// Score an external prediction CSV (parent_index,sample_ordinal,
    /// predicted_label) against the export instead of writing it
    #[arg(long)]
    score: Option<PathBuf>,

    /// With --score: also measure epsilon_min and report MSCR when the
    /// export radius equals it
    #[arg(long)]
    mscr: bool,
}

#[derive(Args)]
struct KstudyArgs {
    /// Comma-separated ascending k values, e.g. 1,10,50,100
    #[arg(long, default_value = "1,10,50,100")]
    k: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding runs.json (and optionally kstudy.json); defaults
    /// to --out
    #[arg(long)]
    results: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if cli.threads != 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(EXIT_RUNTIME);
        }
    }

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_)
        | Error::Parse { .. }
        | Error::Format(_)
        | Error::EmptyInput(_)
        | Error::UndefinedSeparation
        | Error::DimensionMismatch { .. } => EXIT_VALIDATION,
        Error::Io { .. } | Error::UndefinedMscr | Error::RunFailed { .. } => EXIT_RUNTIME,
    }
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    let config = Config::load(&cli.config)?;
    match &cli.command {
        Command::Separation(args) => cmd_separation(cli, &config, args),
        Command::Augment(args) => cmd_augment(cli, &config, args),
        Command::Run => cmd_run(cli, &config),
        Command::Kstudy(args) => cmd_kstudy(cli, &config, args),
        Command::Report(args) => cmd_report(cli, args),
    }
}

/// Separation result plus wall time, as emitted on stdout.
#[derive(Serialize)]
struct SeparationReport {
    #[serde(flatten)]
    result: SeparationResult,
    wall_time_ms: u128,
}

fn cmd_separation(cli: &Cli, config: &Config, args: &SeparationArgs) -> Result<(), Error> {
    let dataset = config.dataset_source()?.load()?;
    let dataset = if args.train_only {
        let (train, _) = split(&dataset, &config.split_spec())?;
        train
    } else {
        dataset
    };
    let norm = config.norm()?;
    let started = Instant::now();
    let result = if args.oracle {
        min_class_separation_oracle(&dataset, norm)?
    } else {
        min_class_separation(&dataset, norm, 0)?
    };
    let report = SeparationReport {
        result,
        wall_time_ms: started.elapsed().as_millis(),
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Format(format!("serializing separation result: {e}")))?;
    println!("{json}");
    if args.write {
        std::fs::create_dir_all(&cli.out)
            .map_err(|e| Error::io(cli.out.display().to_string(), e))?;
        let path = cli.out.join("separation.json");
        std::fs::write(&path, json.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn partition_of(config: &Config, which: &str) -> Result<Dataset, Error> {
    let dataset = config.dataset_source()?.load()?;
    match which {
        "full" => Ok(dataset),
        "train" => Ok(split(&dataset, &config.split_spec())?.0),
        "test" => Ok(split(&dataset, &config.split_spec())?.1),
        other => Err(Error::Validation(format!("unknown partition {other:?}"))),
    }
}

#[derive(Serialize)]
struct ExternalScore {
    predictions: String,
    rows_joined: usize,
    acc_clean: Option<f64>,
    acc_robust: f64,
    epsilon: f64,
    epsilon_min: Option<f64>,
    mscr: Option<f64>,
}

fn cmd_augment(cli: &Cli, config: &Config, args: &AugmentArgs) -> Result<(), Error> {
    let master_seed = cli.seed.unwrap_or(config.experiment.master_seed);
    let base = partition_of(config, &args.partition)?;
    let norm = config.norm()?;

    let epsilon = if args.epsilon == "eps-min" {
        let full = config.dataset_source()?.load()?;
        min_class_separation(&full, norm, 0)?.epsilon_min
    } else {
        args.epsilon.parse::<f64>().map_err(|_| {
            Error::Validation(format!(
                "--epsilon must be a number or \"eps-min\", got {:?}",
                args.epsilon
            ))
        })?
    };

    let aug_config = AugmentationConfig {
        epsilon,
        k: args.k.unwrap_or(config.experiment.k_test),
        norm,
        clip_to_unit: config.experiment.clip_to_unit,
        seed: master_seed,
    };
    let augmented = augment(&base, &aug_config)?;
    let include_clean = !args.no_clean;

    match &args.score {
        None => {
            std::fs::create_dir_all(&cli.out)
                .map_err(|e| Error::io(cli.out.display().to_string(), e))?;
            let path = cli.out.join("augmented.csv");
            write_augmented_csv(&base, &augmented, &path, include_clean)?;
            eprintln!(
                "wrote {} ({} parents x {} samples{})",
                path.display(),
                base.n(),
                aug_config.k,
                if include_clean { " + clean rows" } else { "" }
            );
            Ok(())
        }
        Some(pred_path) => {
            let table = load_external_predictions(pred_path)?;
            let k = aug_config.k;
            let mut clean_keys = Vec::new();
            let mut aug_keys = Vec::new();
            for parent in 0..base.n() as u64 {
                if include_clean {
                    clean_keys.push((parent, 0u32));
                }
                for s in 1..=k as u32 {
                    aug_keys.push((parent, s));
                }
            }
            let acc_clean = if include_clean {
                let preds = table.join(&clean_keys)?;
                Some(mscr_core::accuracy(&preds, base.labels())?)
            } else {
                None
            };
            let aug_preds = table.join(&aug_keys)?;
            let acc_robust = mscr_core::accuracy(&aug_preds, augmented.data().labels())?;
            let (epsilon_min, mscr_value) = if args.mscr {
                let full = config.dataset_source()?.load()?;
                let em = min_class_separation(&full, norm, 0)?.epsilon_min;
                let at_min = (epsilon - em).abs() <= 1e-12 * em.max(1.0);
                let m = match (at_min, acc_clean) {
                    (true, Some(clean)) => Some(mscr_core::mscr(acc_robust, clean)?),
                    _ => None,
                };
                (Some(em), m)
            } else {
                (None, None)
            };
            let score = ExternalScore {
                predictions: pred_path.display().to_string(),
                rows_joined: clean_keys.len() + aug_keys.len(),
                acc_clean,
                acc_robust,
                epsilon,
                epsilon_min,
                mscr: mscr_value,
            };
            let json = serde_json::to_string_pretty(&score)
                .map_err(|e| Error::Format(format!("serializing score: {e}")))?;
            println!("{json}");
            Ok(())
        }
    }
}

fn cmd_run(cli: &Cli, config: &Config) -> Result<(), Error> {
    let plan = config.plan(cli.seed)?;
    let started = Instant::now();
    let matrix = run_experiment(&plan)?;
    eprintln!(
        "experiment finished: {} runs x {} models x {} eps_train values in {:.1}s",
        matrix.n_runs,
        matrix.model_ids.len(),
        matrix.eps_train_grid.len(),
        started.elapsed().as_secs_f64()
    );
    let bundle = render(&matrix, None, &cli.out, Some(config_hash(&cli.config)?))?;
    print_matrix(&matrix);
    for file in &bundle.files {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}

fn cmd_kstudy(cli: &Cli, config: &Config, args: &KstudyArgs) -> Result<(), Error> {
    let plan = config.plan(cli.seed)?;
    let k_candidates: Vec<usize> = args
        .k
        .split(',')
        .map(|s| {
            s.trim().parse::<usize>().map_err(|_| {
                Error::Validation(format!("--k values must be integers, got {s:?}"))
            })
        })
        .collect::<Result<_, _>>()?;
    let study = k_convergence_study(&plan, &k_candidates)?;
    println!(
        "k study: model {}, eps_train {}, eps_test {}, {} runs",
        study.model_id, study.eps_train, study.eps_test, study.n_runs
    );
    println!("{:>6} {:>14} {:>14}", "k", "robust mean", "ci95 hw");
    for row in &study.rows {
        println!(
            "{:>6} {:>14.6} {:>14.6}",
            row.k, row.robust.mean, row.robust.ci95_half_width
        );
    }
    for file in render_kstudy(&study, &cli.out)? {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<(), Error> {
    let results = args.results.clone().unwrap_or_else(|| cli.out.clone());
    let runs_path = results.join("runs.json");
    let text = std::fs::read_to_string(&runs_path)
        .map_err(|e| Error::io(runs_path.display().to_string(), e))?;
    let matrix: AccuracyMatrix = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", runs_path.display())))?;
    let kstudy_path = results.join("kstudy.json");
    let kstudy: Option<KStudy> = match std::fs::read_to_string(&kstudy_path) {
        Ok(text) => Some(
            serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("{}: {e}", kstudy_path.display())))?,
        ),
        Err(_) => None,
    };
    let bundle = render(&matrix, kstudy.as_ref(), &cli.out, None)?;
    print_matrix(&matrix);
    for file in &bundle.files {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}

fn config_hash(path: &Path) -> Result<String, Error> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Text rendering of the accuracy matrix, one block per model.
fn print_matrix(matrix: &AccuracyMatrix) {
    for model_id in &matrix.model_ids {
        println!("\nmodel {model_id} ({} runs, norm {})", matrix.n_runs, matrix.norm);
        print!("{:>12}", "eps_test\\tr");
        for et in &matrix.eps_train_grid {
            print!(" {et:>19}");
        }
        println!();
        for (ti, eps_test) in matrix.eps_test_grid.iter().enumerate() {
            print!("{eps_test:>12}");
            for cell in matrix.cells_for_model(model_id) {
                let s = cell.robust[ti];
                print!(" {:>10.6} ±{:>7.6}", s.mean, s.ci95_half_width);
            }
            println!();
        }
        if matrix.has_mscr() {
            print!("{:>12}", "mscr");
            for cell in matrix.cells_for_model(model_id) {
                let s = cell.mscr.unwrap();
                print!(" {:>10.6} ±{:>7.6}", s.mean, s.ci95_half_width);
            }
            println!();
        }
    }
    if let Some(em) = matrix.epsilon_min {
        println!("\nepsilon_min = {em} (norm {})", matrix.norm);
    }
}
