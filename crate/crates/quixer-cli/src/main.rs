//! Command-line entry point: `train`, `eval`, `verify`, and `resources`
//! subcommands driven by a JSON config plus flag overrides.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error
//! (missing files, malformed corpora or checkpoints), 3 numeric failure
//! (non-finite values, degenerate states, failed verification).

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use quixer::checkpoint;
use quixer::config::RunConfig;
use quixer::model::QuixerModel;
use quixer::resources::{estimate, ResourceQuery};
use quixer::text::{Split, TokenStream, Vocabulary};
use quixer::train::{evaluate_windows, train_model_with_progress};
use quixer::verify::{run_all, VerifyScale};
use quixer::Error;

#[derive(Parser)]
#[command(
    name = "quixer",
    version,
    about = "Classical simulator, trainer, and hardware resource estimator for a quantum-mixing language model"
)]
struct Cli {
    /// Cap the worker thread pool (1 guarantees bitwise determinism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a JSON config; writes checkpoint and metrics.
    Train {
        /// Path to the run config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's epoch count.
        #[arg(long)]
        epochs: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write a per-step JSON-lines log.
        #[arg(long)]
        steps_jsonl: bool,
    },
    /// Evaluate a trained run directory on a corpus split.
    Eval {
        /// Run directory containing config-echo.json, vocab.txt, and
        /// checkpoint.qxcp.
        #[arg(long)]
        run_dir: PathBuf,
        /// Which split to evaluate: train, valid, or test.
        #[arg(long, default_value = "valid")]
        split: String,
        /// Evaluate this text file instead of the split path in the config.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Where to write per-window postselection values
        /// (default: <run_dir>/postselection.csv).
        #[arg(long)]
        output_csv: Option<PathBuf>,
    },
    /// Run the property-verification suites.
    Verify {
        /// small (seconds) or full (the documented instance counts).
        #[arg(long, default_value = "small")]
        scale: String,
    },
    /// Print qubit and gate counts for a hardware instance.
    Resources {
        /// Data qubits per token unitary.
        #[arg(short = 'q', long)]
        qubits: u64,
        /// Tokens mixed per context.
        #[arg(short = 'n', long)]
        window: u64,
        /// Ansatz layers per token unitary.
        #[arg(short = 'l', long)]
        layers: u64,
        /// Polynomial degree.
        #[arg(short = 'd', long)]
        degree: u64,
        /// Use the ancilla-assisted selection circuit.
        #[arg(long)]
        ancilla_select: bool,
        /// Override the per-token gate count.
        #[arg(long)]
        gates_per_token: Option<u64>,
        /// Count coefficient preparation at this many gates per circuit.
        #[arg(long)]
        prep_gates: Option<u64>,
        /// Constant overhead factor of the ancilla-assisted selection.
        #[arg(long, default_value_t = 1)]
        ancilla_overhead: u64,
    },
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::InvalidArgument(_) => 1,
        Error::Io(_)
        | Error::Json(_)
        | Error::EmptyCorpus
        | Error::VocabMismatch(_)
        | Error::Checkpoint(_)
        | Error::StreamTooShort { .. }
        | Error::TokenOutOfRange { .. }
        | Error::ContextLength { .. } => 2,
        _ => 3,
    }
}

fn read_text(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn cmd_train(
    config_path: &Path,
    seed: Option<u64>,
    epochs: Option<usize>,
    output: Option<PathBuf>,
    steps_jsonl: bool,
) -> Result<(), Error> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(epochs) = epochs {
        config.epochs = epochs;
    }
    if let Some(output) = output {
        config.output_dir = output.to_string_lossy().into_owned();
    }
    if steps_jsonl {
        config.steps_jsonl = true;
    }
    config.validate()?;

    let train_text = read_text(Path::new(&config.train_path))?;
    let valid_text = read_text(Path::new(&config.valid_path))?;
    let vocab = Vocabulary::build(&train_text)?;
    let train_stream = vocab.encode(&train_text, Split::Train, config.append_eos);
    let valid_stream = vocab.encode(&valid_text, Split::Valid, config.append_eos);
    println!(
        "vocabulary: {} words; train tokens: {}; valid tokens: {}",
        vocab.size(),
        train_stream.len(),
        valid_stream.len()
    );

    let model = QuixerModel::new(config.model_config(vocab.size()), config.seed)?;
    let (best, log) = train_model_with_progress(
        &model,
        &train_stream,
        &valid_stream,
        &config.train_config(),
        |epoch| {
            println!(
                "epoch {}: train loss {:.4}, val ppl {:.3}, postselection mean {:.4} (min {:.4}, max {:.4}), {:.1}s",
                epoch.epoch,
                epoch.train_loss,
                epoch.val_perplexity,
                epoch.postselection.mean,
                epoch.postselection.min,
                epoch.postselection.max,
                epoch.wall_time_secs
            );
        },
    )?;

    let out_dir = PathBuf::from(&config.output_dir);
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("config-echo.json"), config.to_pretty_json()?)?;
    std::fs::write(out_dir.join("metrics.csv"), log.to_csv())?;
    std::fs::write(out_dir.join("vocab.txt"), vocab.export())?;
    checkpoint::save(&best, &out_dir.join("checkpoint.qxcp"))?;
    write_postselection_csv(
        &best,
        &valid_stream,
        config.window,
        &out_dir.join("postselection.csv"),
    )?;
    if config.steps_jsonl {
        std::fs::write(out_dir.join("steps.jsonl"), log.steps_jsonl()?)?;
    }
    if let Some(best_epoch) = log.best_epoch {
        println!(
            "best epoch {} (val ppl {:.3}); artifacts in {}",
            best_epoch,
            log.epochs[best_epoch].val_perplexity,
            out_dir.display()
        );
    }
    Ok(())
}

fn write_postselection_csv(
    model: &QuixerModel,
    stream: &TokenStream,
    window: usize,
    path: &Path,
) -> Result<(), Error> {
    let evals = evaluate_windows(model, stream, window)?;
    let mut csv = String::from("window,nll,postselection_prob\n");
    for (i, e) in evals.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", i, e.nll, e.postselection_prob));
    }
    std::fs::write(path, csv)?;
    Ok(())
}

fn cmd_eval(
    run_dir: &Path,
    split: &str,
    data: Option<PathBuf>,
    output_csv: Option<PathBuf>,
) -> Result<(), Error> {
    let config = RunConfig::load(&run_dir.join("config-echo.json"))?;
    let vocab = Vocabulary::from_export(&read_text(&run_dir.join("vocab.txt"))?)?;
    let model = checkpoint::load(&run_dir.join("checkpoint.qxcp"))?;
    if model.config().vocab_size != vocab.size() {
        return Err(Error::VocabMismatch(format!(
            "checkpoint was trained with {} words but vocab.txt lists {}",
            model.config().vocab_size,
            vocab.size()
        )));
    }

    let (split_tag, default_path) = match split {
        "train" => (Split::Train, Some(config.train_path.clone())),
        "valid" => (Split::Valid, Some(config.valid_path.clone())),
        "test" => (Split::Test, config.test_path.clone()),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown split {other:?} (expected train, valid, or test)"
            )))
        }
    };
    let data_path = match data {
        Some(path) => path,
        None => PathBuf::from(default_path.ok_or_else(|| {
            Error::Config(format!("config has no path for the {split} split"))
        })?),
    };
    let text = read_text(&data_path)?;
    let stream = vocab.encode(&text, split_tag, config.append_eos);

    let evals = evaluate_windows(&model, &stream, config.window)?;
    let count = evals.len() as f64;
    let mean_nll = evals.iter().map(|e| e.nll).sum::<f64>() / count;
    let mean_post = evals.iter().map(|e| e.postselection_prob).sum::<f64>() / count;
    let min_post = evals
        .iter()
        .map(|e| e.postselection_prob)
        .fold(f64::INFINITY, f64::min);
    let max_post = evals
        .iter()
        .map(|e| e.postselection_prob)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "split {split} ({} windows): perplexity {:.6}",
        evals.len(),
        mean_nll.exp()
    );
    println!(
        "postselection probability: mean {mean_post:.6}, min {min_post:.6}, max {max_post:.6}"
    );

    let csv_path = output_csv.unwrap_or_else(|| run_dir.join("postselection.csv"));
    let mut csv = String::from("window,nll,postselection_prob\n");
    for (i, e) in evals.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", i, e.nll, e.postselection_prob));
    }
    std::fs::write(&csv_path, csv)?;
    println!("per-window records written to {}", csv_path.display());
    Ok(())
}

fn cmd_verify(scale: &str) -> Result<i32, Error> {
    let scale = match scale {
        "small" => VerifyScale::Small,
        "full" => VerifyScale::Full,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown scale {other:?} (expected small or full)"
            )))
        }
    };
    let reports = run_all(scale);
    let mut failures = 0;
    for report in &reports {
        println!("{report}");
        if !report.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        eprintln!("{failures} of {} property suites failed", reports.len());
        return Ok(3);
    }
    println!("all {} property suites passed", reports.len());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_resources(
    qubits: u64,
    window: u64,
    layers: u64,
    degree: u64,
    ancilla_select: bool,
    gates_per_token: Option<u64>,
    prep_gates: Option<u64>,
    ancilla_overhead: u64,
) -> Result<(), Error> {
    let query = ResourceQuery {
        num_qubits: qubits,
        window,
        ansatz_layers: layers,
        degree,
        gate_override: gates_per_token,
        use_ancilla_select: ancilla_select,
        ancilla_overhead,
        prep_gate_override: prep_gates,
    };
    let report = estimate(&query)?;
    println!("{report}");
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Train {
            config,
            seed,
            epochs,
            output,
            steps_jsonl,
        } => cmd_train(&config, seed, epochs, output, steps_jsonl).map(|_| 0),
        Command::Eval {
            run_dir,
            split,
            data,
            output_csv,
        } => cmd_eval(&run_dir, &split, data, output_csv).map(|_| 0),
        Command::Verify { scale } => cmd_verify(&scale),
        Command::Resources {
            qubits,
            window,
            layers,
            degree,
            ancilla_select,
            gates_per_token,
            prep_gates,
            ancilla_overhead,
        } => cmd_resources(
            qubits,
            window,
            layers,
            degree,
            ancilla_select,
            gates_per_token,
            prep_gates,
            ancilla_overhead,
        )
        .map(|_| 0),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(1);
        }
        // Ignore the error if a pool already exists (e.g. under test).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
