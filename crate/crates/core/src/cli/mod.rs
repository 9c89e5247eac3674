//! The `qdec` command line.
//!
//! Exit codes: 0 success, 1 invalid arguments or runtime failure, 2 usage
//! error, 3 DEM fingerprint mismatch, 4 unreadable or malformed file.

mod config;
mod manifest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::ansatz::{AnsatzConfig, Checkpoint, Entangler};
use crate::baselines::MldTable;
use crate::bits::LogicalLabel;
use crate::dem::{
    build_repetition_dem, build_surface_code_capacity_dem, extract_matching_graph, parse_dem, CodeFamily, CodeSpec,
    DetectorErrorModel, NoiseKind,
};
use crate::error::Error;
use crate::sampler::{sample_shots, split_train_test, ShotSet};
use crate::selfcorrect::{equivalence_check, run_selfcorrect, ClassicalPipeline, SelfCorrectConfig};
use crate::trainer::{evaluate, predict, train, PredictMode, TrainConfig};

use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Fingerprint(String),
    File(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Fingerprint(_) => 3,
            CliError::File(_) => 4,
        }
    }

    fn file(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::File(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Fingerprint(m) | CliError::File(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::FingerprintMismatch { .. } => CliError::Fingerprint(e.to_string()),
            Error::Io(_) | Error::Format(_) => CliError::File(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "qdec", version, about = "Train and benchmark quantum-circuit decoders")]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a detector error model for a built-in code.
    GenDem(GenDemArgs),
    /// Sample (syndrome, label) shots from a DEM.
    Sample(SampleArgs),
    /// Train a decoding circuit.
    Train(TrainArgs),
    /// Logical error rate of a checkpoint on a shot file.
    Eval(EvalArgs),
    /// Write a checkpoint's predictions in the shot format.
    Decode(DecodeArgs),
    /// Minimum-weight perfect matching baseline.
    Mwpm(BaselineArgs),
    /// Exhaustive maximum-likelihood baseline.
    Mld(BaselineArgs),
    /// Coherent self-correcting repetition memory.
    Selfcorrect(SelfCorrectArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenDemArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    distance: usize,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// `code-capacity` or `circuit-level`.
    #[arg(long, default_value = "circuit-level")]
    noise: String,
    #[arg(long)]
    p: f64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    #[arg(long)]
    dem: PathBuf,
    #[arg(long)]
    shots: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Keep this fraction in `--out` and write the rest to `--test-out`.
    #[arg(long, requires = "test_out")]
    split: Option<f64>,
    #[arg(long)]
    test_out: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Timing {
    /// Record elapsed wall-clock seconds in the trace.
    Wall,
    /// Write 0 in the seconds column so traces are byte-reproducible.
    Off,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    dem: PathBuf,
    #[arg(long = "train")]
    train_shots: PathBuf,
    #[arg(long = "test")]
    test_shots: PathBuf,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    adam_eps: f64,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    #[arg(long, default_value_t = 10)]
    eval_every: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = "cz-chain")]
    entangler: String,
    /// Comma-separated readout qubits; defaults to 0..L.
    #[arg(long)]
    readout: Option<String>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Timing::Wall)]
    timing: Timing,
    /// Full-size protocol: 3 qubits, 10 blocks, 10,000 epochs unless overridden.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    shots: PathBuf,
    /// Verify the shot file was generated from this DEM.
    #[arg(long)]
    dem: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Argmax,
    Sample,
}

#[derive(Args, Debug, Serialize)]
struct DecodeArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    shots: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Argmax)]
    mode: Mode,
    /// Required in sample mode; shot `k` draws with seed `seed + k`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BaselineArgs {
    #[arg(long)]
    dem: PathBuf,
    #[arg(long)]
    shots: PathBuf,
    /// Write predictions in the shot format.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SelfCorrectArgs {
    /// Classical decoder trained on the 2-detector repetition model; its
    /// single readout qubit drives the correction.
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    shots: usize,
    #[arg(long)]
    seed: u64,
    /// Per-pattern probability table (CSV).
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.workers {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command, &argv)),
            Err(e) => Err(CliError::Failed(e.to_string())),
        },
        None => dispatch(cli.command, &argv),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, argv: &[String]) -> CliResult<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new(argv);
    let manifest_path = match command {
        Command::GenDem(a) => cmd_gen_dem(a, &mut manifest)?,
        Command::Sample(a) => cmd_sample(a, &mut manifest)?,
        Command::Train(a) => cmd_train(a, &mut manifest)?,
        Command::Eval(a) => cmd_eval(a, &mut manifest)?,
        Command::Decode(a) => cmd_decode(a, &mut manifest)?,
        Command::Mwpm(a) => cmd_mwpm(a, &mut manifest)?,
        Command::Mld(a) => cmd_mld(a, &mut manifest)?,
        Command::Selfcorrect(a) => cmd_selfcorrect(a, &mut manifest)?,
    };
    if let Some(path) = manifest_path {
        manifest.wall_time_seconds = started.elapsed().as_secs_f64();
        manifest.write(&path)?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn read_dem(path: &Path, manifest: &mut RunManifest) -> CliResult<DetectorErrorModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    manifest.record_input(path, text.as_bytes());
    parse_dem(&text).map_err(|e| CliError::file(path, e))
}

fn read_shots(path: &Path, manifest: &mut RunManifest) -> CliResult<ShotSet> {
    let bytes = fs::read(path).map_err(|e| CliError::file(path, e))?;
    manifest.record_input(path, &bytes);
    ShotSet::read_from(bytes.as_slice()).map_err(|e| CliError::file(path, e))
}

fn read_checkpoint(path: &Path, manifest: &mut RunManifest) -> CliResult<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| CliError::file(path, e))?;
    manifest.record_input(path, &bytes);
    Checkpoint::read_from(bytes.as_slice()).map_err(|e| CliError::file(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::file(parent, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::file(path, e))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::file(path, e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::file(path, e))
}

fn check_fingerprint(shots: &ShotSet, model: &DetectorErrorModel) -> CliResult<()> {
    shots.check_model(model).map_err(CliError::from)
}

fn binomial_summary(errors: usize, shots: usize) -> (f64, f64) {
    let rate = errors as f64 / shots as f64;
    (rate, (rate * (1.0 - rate) / shots as f64).sqrt())
}

fn print_rate(name: &str, errors: usize, shots: usize) {
    let (rate, se) = binomial_summary(errors, shots);
    println!(
        "{name} logical error rate {rate:.6} +/- {se:.6} ({errors}/{shots}; 95% CI [{:.6}, {:.6}])",
        (rate - 1.96 * se).max(0.0),
        (rate + 1.96 * se).min(1.0)
    );
}

fn cmd_gen_dem(a: GenDemArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    manifest.set_options("gen-dem", &a);
    let family: CodeFamily = a.family.parse().map_err(|e: Error| CliError::Failed(e.to_string()))?;
    let noise: NoiseKind = a.noise.parse().map_err(|e: Error| CliError::Failed(e.to_string()))?;
    let spec = CodeSpec {
        family,
        distance: a.distance,
        rounds: a.rounds,
        noise,
        p: a.p,
    };
    let model = match family {
        CodeFamily::Repetition => build_repetition_dem(&spec)?,
        CodeFamily::RotatedSurface => build_surface_code_capacity_dem(&spec)?,
    };
    let text = model.to_text();
    eprintln!(
        "{} {}: {} detectors, {} observables, {} mechanisms",
        family,
        noise,
        model.num_detectors(),
        model.num_observables(),
        model.mechanisms().len()
    );
    match &a.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| CliError::file(path, e))?;
            manifest.record_output("dem", path);
            Ok(Some(
                a.manifest
                    .clone()
                    .unwrap_or_else(|| with_suffix(path, ".manifest.json")),
            ))
        }
        None => {
            print!("{text}");
            Ok(a.manifest.clone())
        }
    }
}

fn cmd_sample(a: SampleArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    manifest.set_options("sample", &a);
    manifest.record_seed("sample", a.seed);
    let model = read_dem(&a.dem, manifest)?;
    let shots = sample_shots(&model, a.shots, a.seed)?;
    let write = |set: &ShotSet, path: &Path| -> CliResult<()> {
        set.write_to(create(path)?).map_err(|e| CliError::file(path, e))
    };
    match (a.split, &a.test_out) {
        (Some(fraction), Some(test_path)) => {
            let (train_part, test_part) = split_train_test(&shots, fraction)?;
            write(&train_part, &a.out)?;
            write(&test_part, test_path)?;
            manifest.record_output("test_shots", test_path);
            eprintln!("wrote {} + {} shots", train_part.len(), test_part.len());
        }
        _ => {
            write(&shots, &a.out)?;
            eprintln!("wrote {} shots", shots.len());
        }
    }
    manifest.record_output("shots", &a.out);
    Ok(Some(
        a.manifest
            .clone()
            .unwrap_or_else(|| with_suffix(&a.out, ".manifest.json")),
    ))
}

fn parse_readout(spec: &str) -> CliResult<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Failed(format!("bad readout list `{spec}`")))
        })
        .collect()
}

fn cmd_train(a: TrainArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    let (default_qubits, default_blocks, default_epochs) = if a.paper_scale { (3, 10, 10_000) } else { (3, 10, 100) };
    let qubits = a.qubits.unwrap_or(default_qubits);
    let blocks = a.blocks.unwrap_or(default_blocks);
    let epochs = a.epochs.unwrap_or(default_epochs);
    manifest.set_options("train", &a);
    manifest.resolve("qubits", qubits);
    manifest.resolve("blocks", blocks);
    manifest.resolve("epochs", epochs);
    manifest.record_seed("train", a.seed);

    let model = read_dem(&a.dem, manifest)?;
    let data = read_shots(&a.train_shots, manifest)?;
    let test = read_shots(&a.test_shots, manifest)?;
    check_fingerprint(&data, &model)?;
    check_fingerprint(&test, &model)?;

    let readout = match &a.readout {
        Some(s) => parse_readout(s)?,
        None => (0..model.num_observables()).collect(),
    };
    let ansatz = AnsatzConfig {
        qubits,
        blocks,
        syndrome_len: model.num_detectors(),
        readout,
        entangler: a.entangler.parse::<Entangler>()?,
    };
    ansatz.validate()?;
    let cfg = TrainConfig {
        epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        beta1: a.beta1,
        beta2: a.beta2,
        eps: a.adam_eps,
        init_scale: a.init_scale,
        eval_every: a.eval_every,
        seed: a.seed,
    };
    let outcome = train(&model, &ansatz, &data, &test, &cfg)?;

    let mut trace = outcome.trace.clone();
    if a.timing == Timing::Off {
        trace.records.iter_mut().for_each(|r| r.seconds = 0.0);
    }
    let dir = &a.out_dir;
    let trace_path = dir.join("trace.csv");
    trace
        .write_csv(create(&trace_path)?)
        .map_err(|e| CliError::file(&trace_path, e))?;
    for (name, params) in [("best.ckpt", &outcome.best), ("final.ckpt", &outcome.final_params)] {
        let path = dir.join(name);
        Checkpoint {
            config: ansatz.clone(),
            params: params.clone(),
        }
        .write_to(create(&path)?)
        .map_err(|e| CliError::file(&path, e))?;
        manifest.record_output(name, &path);
    }
    manifest.record_output("trace", &trace_path);

    let last = outcome
        .trace
        .records
        .last()
        .expect("trace has at least the initial record");
    let summary = json!({
        "command": "train",
        "best_epoch": outcome.best_epoch,
        "best_test_ler": outcome.best_test_ler,
        "final": last,
        "test_shots": test.len(),
        "train_shots": data.len(),
        "hyperparameters": cfg,
        "ansatz": {
            "qubits": ansatz.qubits,
            "blocks": ansatz.blocks,
            "syndrome_len": ansatz.syndrome_len,
            "readout": ansatz.readout,
            "entangler": ansatz.entangler.to_string(),
            "parameters": ansatz.num_params(),
        },
        "dem_fingerprint": model.fingerprint(),
    });
    let summary_path = dir.join("summary.json");
    write_json(&summary_path, &summary)?;
    manifest.record_output("summary", &summary_path);
    println!(
        "best test LER {:.6} at epoch {}; final train loss {:.6}, train LER {:.6}, test LER {:.6}",
        outcome.best_test_ler, outcome.best_epoch, last.train_loss, last.train_ler, last.test_ler
    );
    Ok(Some(dir.join("manifest.json")))
}

fn cmd_eval(a: EvalArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    manifest.set_options("eval", &a);
    let ckpt = read_checkpoint(&a.checkpoint, manifest)?;
    let shots = read_shots(&a.shots, manifest)?;
    if let Some(dem) = &a.dem {
        let model = read_dem(dem, manifest)?;
        check_fingerprint(&shots, &model)?;
    }
    let eval = evaluate(&ckpt.params, &ckpt.config, shots.shots())?;
    print_rate("circuit", eval.errors, eval.shots);
    if let Some(path) = &a.summary {
        let (rate, se) = binomial_summary(eval.errors, eval.shots);
        write_json(
            path,
            &json!({
                "command": "eval",
                "logical_error_rate": rate,
                "std_error": se,
                "errors": eval.errors,
                "shots": eval.shots,
                "mean_loss": eval.mean_loss,
            }),
        )?;
        manifest.record_output("summary", path);
    }
    Ok(a.manifest
        .clone()
        .or_else(|| a.summary.as_ref().map(|p| with_suffix(p, ".manifest.json"))))
}

fn cmd_decode(a: DecodeArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    manifest.set_options("decode", &a);
    let ckpt = read_checkpoint(&a.checkpoint, manifest)?;
    let shots = read_shots(&a.shots, manifest)?;
    let base_seed = match (a.mode, a.seed) {
        (Mode::Sample, None) => return Err(CliError::Usage("--seed is required in sample mode".into())),
        (_, Some(s)) => {
            manifest.record_seed("decode", s);
            s
        }
        (Mode::Argmax, None) => 0,
    };
    let labels = shots
        .shots()
        .iter()
        .enumerate()
        .map(|(k, shot)| {
            let mode = match a.mode {
                Mode::Argmax => PredictMode::Argmax,
                Mode::Sample => PredictMode::Sample {
                    seed: base_seed.wrapping_add(k as u64),
                },
            };
            predict(&ckpt.params, &ckpt.config, &shot.syndrome, mode)
        })
        .collect::<crate::Result<Vec<LogicalLabel>>>()?;
    let errors = labels.iter().zip(shots.shots()).filter(|(l, s)| **l != s.label).count();
    print_rate("circuit", errors, shots.len());
    let predicted = shots.with_labels(labels)?;
    predicted
        .write_to(create(&a.out)?)
        .map_err(|e| CliError::file(&a.out, e))?;
    manifest.record_output("predictions", &a.out);
    Ok(Some(
        a.manifest
            .clone()
            .unwrap_or_else(|| with_suffix(&a.out, ".manifest.json")),
    ))
}

enum Baseline {
    Mwpm,
    Mld,
}

fn cmd_baseline(kind: Baseline, a: BaselineArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    let name = match kind {
        Baseline::Mwpm => "mwpm",
        Baseline::Mld => "mld",
    };
    manifest.set_options(name, &a);
    let model = read_dem(&a.dem, manifest)?;
    let shots = read_shots(&a.shots, manifest)?;
    check_fingerprint(&shots, &model)?;
    if shots.is_empty() {
        return Err(CliError::Failed("shot file has no shots".into()));
    }
    let width = model.num_observables();
    // A shot the matcher cannot handle is written as label 0 and counted as an error.
    let decided: Vec<Option<LogicalLabel>> = match kind {
        Baseline::Mwpm => {
            let graph = extract_matching_graph(&model)?;
            shots
                .shots()
                .iter()
                .map(|s| {
                    graph
                        .decode_mask(&s.syndrome)
                        .ok()
                        .map(|m| LogicalLabel::from_u64(m, width))
                })
                .collect()
        }
        Baseline::Mld => {
            let table = MldTable::build(&model)?;
            shots
                .shots()
                .iter()
                .map(|s| Some(LogicalLabel::from_u64(table.decide(&s.syndrome).label, width)))
                .collect()
        }
    };
    let failures = decided.iter().filter(|d| d.is_none()).count();
    let errors = decided
        .iter()
        .zip(shots.shots())
        .filter(|(d, s)| d.as_ref() != Some(&s.label))
        .count();
    let labels: Vec<LogicalLabel> = decided
        .into_iter()
        .map(|d| d.unwrap_or_else(|| LogicalLabel::zeros(width)))
        .collect();
    print_rate(name, errors, shots.len());
    if failures > 0 {
        eprintln!("{failures} shots exceeded the matcher's limits and were counted as errors");
    }
    if let Some(path) = &a.out {
        shots
            .with_labels(labels)?
            .write_to(create(path)?)
            .map_err(|e| CliError::file(path, e))?;
        manifest.record_output("predictions", path);
    }
    if let Some(path) = &a.summary {
        let (rate, se) = binomial_summary(errors, shots.len());
        write_json(
            path,
            &json!({
                "command": name,
                "logical_error_rate": rate,
                "std_error": se,
                "errors": errors,
                "failures": failures,
                "shots": shots.len(),
            }),
        )?;
        manifest.record_output("summary", path);
    }
    let derived = a
        .out
        .as_ref()
        .or(a.summary.as_ref())
        .map(|p| with_suffix(p, ".manifest.json"));
    Ok(a.manifest.clone().or(derived))
}

fn cmd_mwpm(a: BaselineArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    cmd_baseline(Baseline::Mwpm, a, manifest)
}

fn cmd_mld(a: BaselineArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    cmd_baseline(Baseline::Mld, a, manifest)
}

fn cmd_selfcorrect(a: SelfCorrectArgs, manifest: &mut RunManifest) -> CliResult<Option<PathBuf>> {
    manifest.set_options("selfcorrect", &a);
    manifest.record_seed("selfcorrect", a.seed);
    let ckpt = read_checkpoint(&a.checkpoint, manifest)?;
    let c = &ckpt.config;
    if c.syndrome_len != 2 || c.readout.len() != 1 {
        return Err(CliError::Failed(format!(
            "checkpoint must take 2 syndrome bits and read 1 qubit, got m={} and {} readout qubits",
            c.syndrome_len,
            c.readout.len()
        )));
    }
    let cfg = SelfCorrectConfig {
        decode_qubits: c.qubits,
        blocks: c.blocks,
        params: ckpt.params.clone(),
        entangler: c.entangler,
        p: a.p,
        control_qubit: c.readout[0],
        shots: a.shots,
        seed: a.seed,
    };
    let report = equivalence_check(
        &cfg,
        &ClassicalPipeline {
            ansatz: c.clone(),
            params: ckpt.params.clone(),
        },
    )?;
    let result = run_selfcorrect(&cfg)?;
    println!(
        "self-corrected logical error rate {:.6} +/- {:.6}; uncorrected {:.6} +/- {:.6}; max coherent/classical gap {:.3e}",
        result.logical_error_rate, result.std_error, result.raw_flip_rate, result.raw_std_error, report.max_abs_diff
    );
    if let Some(path) = &a.table {
        report.write_csv(create(path)?).map_err(|e| CliError::file(path, e))?;
        manifest.record_output("table", path);
    }
    if let Some(path) = &a.summary {
        write_json(
            path,
            &json!({
                "command": "selfcorrect",
                "result": result,
                "equivalence": report,
                "p": a.p,
                "decode_qubits": cfg.decode_qubits,
                "blocks": cfg.blocks,
                "control_qubit": cfg.control_qubit,
            }),
        )?;
        manifest.record_output("summary", path);
    }
    let derived = a
        .summary
        .as_ref()
        .or(a.table.as_ref())
        .map(|p| with_suffix(p, ".manifest.json"));
    Ok(a.manifest.clone().or(derived))
}

pub fn run_from_env() -> i32 {
    run(std::env::args().collect())
}
