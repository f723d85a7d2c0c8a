//! Command-line entry point: training, evaluation, sweeps, memory
//! accounting, chaos diagnostics, timing benchmarks and pattern/model
//! export. All tabular output is CSV with a header row, to stdout or
//! `--out`; every run that writes a file also writes a
//! `<file>.manifest.json` with the fully resolved configuration next to it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use lognnet::bench;
use lognnet::chaos::{self, ReservoirParams};
use lognnet::classifier::Loss;
use lognnet::csvout::{fmt_f64, write_csv};
use lognnet::error::Error;
use lognnet::mnist::{self, Dataset};
use lognnet::network::{
    self, Algorithm, Model, NetworkConfig, PatternSource, SWEEP_CSV_HEADER,
};
use lognnet::tpattern::Pattern;

#[derive(Parser)]
#[command(
    name = "lognnet",
    version,
    about = "Feedforward MNIST classifier with logistic-map-generated reservoir weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on MNIST and emit per-epoch test accuracy as CSV.
    Train(TrainArgs),
    /// Evaluate a saved model on the MNIST test set.
    Eval(EvalArgs),
    /// Retrain over a grid of r values; emits r, accuracy, lyapunov rows.
    #[command(name = "sweep-r")]
    SweepR(SweepArgs),
    /// Weight-array memory of a configuration (4 bytes per element).
    Memory(MemoryArgs),
    /// Lyapunov exponent of the logistic map over a grid of r values.
    Lyapunov(LyapunovArgs),
    /// Post-transient orbit samples over a grid of r values.
    Bifurcation(BifurcationArgs),
    /// Per-image inference timing for the three algorithms.
    Bench(BenchArgs),
    /// T-pattern file operations.
    Pattern(PatternCmd),
    /// Model file operations.
    Model(ModelCmd),
}

#[derive(Args)]
struct NetOpts {
    /// Network shape, 784:P:10 or 784:P:H:10.
    #[arg(long, default_value = "784:25:10")]
    shape: String,
    /// Logistic-map parameter, in (0, 2].
    #[arg(long, default_value_t = ReservoirParams::DEFAULT_R)]
    r: f64,
    /// Seed-row amplitude.
    #[arg(long, default_value_t = ReservoirParams::DEFAULT_A)]
    a: f64,
    /// Seed-row period divisor.
    #[arg(long, default_value_t = ReservoirParams::DEFAULT_B)]
    b: f64,
    /// Builtin T-pattern id (1, 2, 3) or a pattern file path.
    #[arg(long, default_value = "3")]
    pattern: String,
    /// Training epochs.
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// Backpropagation learning rate.
    #[arg(long, default_value_t = 0.3)]
    lr: f64,
    /// RNG seed for classifier initialization.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Inference algorithm: 1, 2 or 3.
    #[arg(long, default_value_t = 2)]
    algorithm: u8,
    /// Training loss: mse or cross-entropy.
    #[arg(long, default_value = "mse")]
    loss: String,
}

impl NetOpts {
    fn to_config(&self) -> Result<NetworkConfig, Error> {
        let (p, classifier_shape) = NetworkConfig::parse_shape(&self.shape)?;
        let params = ReservoirParams::new(self.r, self.a, self.b, p)?;
        let pattern = parse_pattern_source(&self.pattern)?;
        let loss = parse_loss(&self.loss)?;
        let config = NetworkConfig {
            params,
            pattern,
            classifier_shape,
            learning_rate: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            algorithm: Algorithm::from_index(self.algorithm)?,
            loss,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct DataOpts {
    /// Directory holding the four canonical MNIST IDX files (plain or .gz).
    /// Defaults to $LOGNNET_DATA_DIR, then ./data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Use only the first N training images (0 = all).
    #[arg(long, default_value_t = 0)]
    limit_train: usize,
    /// Use only the first N test images (0 = all).
    #[arg(long, default_value_t = 0)]
    limit_test: usize,
}

impl DataOpts {
    fn dir(&self) -> PathBuf {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os("LOGNNET_DATA_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("data"))
    }

    fn load(&self) -> Result<(Dataset, Dataset), Error> {
        let (train, test) = mnist::load_mnist(self.dir())?;
        Ok((train.truncated(self.limit_train), test.truncated(self.limit_test)))
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    net: NetOpts,
    #[command(flatten)]
    data: DataOpts,
    /// Write the trained model here.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Write the epoch-accuracy CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataOpts,
    /// Inference algorithm: 1, 2 or 3.
    #[arg(long, default_value_t = 2)]
    algorithm: u8,
    /// Worker threads for evaluation.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    net: NetOpts,
    #[command(flatten)]
    data: DataOpts,
    #[arg(long)]
    r_from: Option<f64>,
    #[arg(long)]
    r_to: Option<f64>,
    /// Grid spacing for --r-from/--r-to.
    #[arg(long)]
    step: Option<f64>,
    /// Explicit comma-separated grid, alternative to --r-from/--r-to/--step.
    #[arg(long)]
    r_list: Option<String>,
    /// Grid points trained in parallel.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MemoryArgs {
    /// Network shape, 784:P:10 or 784:P:H:10.
    #[arg(long, default_value = "784:25:10")]
    shape: String,
    /// Inference algorithm: 1, 2 or 3.
    #[arg(long, default_value_t = 2)]
    algorithm: u8,
    /// Emit the per-array CSV breakdown instead of the bare byte count.
    #[arg(long)]
    breakdown: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LyapunovArgs {
    #[arg(long)]
    r_from: f64,
    #[arg(long)]
    r_to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = chaos::DEFAULT_X0)]
    x0: f64,
    #[arg(long, default_value_t = chaos::DEFAULT_TRANSIENT)]
    transient: usize,
    #[arg(long, default_value_t = chaos::DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BifurcationArgs {
    #[arg(long)]
    r_from: f64,
    #[arg(long)]
    r_to: f64,
    #[arg(long)]
    step: f64,
    #[arg(long, default_value_t = chaos::DEFAULT_TRANSIENT)]
    transient: usize,
    /// Orbit samples recorded per grid point.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Hidden widths to measure, comma separated.
    #[arg(long, default_value = "25,45,75,100")]
    p_grid: String,
    /// Test images timed per pass.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Timed passes per measurement (the median of their means is reported).
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Training images used to fit the throwaway models being timed.
    #[arg(long, default_value_t = 2000)]
    train_subset: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    data: DataOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PatternCmd {
    #[command(subcommand)]
    action: PatternAction,
}

#[derive(Subcommand)]
enum PatternAction {
    /// Write a builtin T-pattern to a pattern text file.
    Export {
        /// Builtin pattern id: 1, 2 or 3.
        #[arg(long)]
        id: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ModelCmd {
    #[command(subcommand)]
    action: ModelAction,
}

#[derive(Subcommand)]
enum ModelAction {
    /// Dump a model file as human-readable text.
    Export {
        #[arg(long)]
        model: PathBuf,
        /// Output text file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pattern_source(s: &str) -> Result<PatternSource, Error> {
    match s {
        "1" | "2" | "3" => Ok(PatternSource::Builtin(s.parse().unwrap())),
        path => {
            let p = PathBuf::from(path);
            if p.exists() {
                Ok(PatternSource::File(p))
            } else {
                Err(Error::InvalidPattern(format!(
                    "pattern must be 1, 2, 3 or an existing pattern file, got {s:?}"
                )))
            }
        }
    }
}

fn parse_loss(s: &str) -> Result<Loss, Error> {
    match s {
        "mse" | "squared-error" => Ok(Loss::SquaredError),
        "cross-entropy" | "ce" => Ok(Loss::CrossEntropy),
        other => Err(Error::InvalidParameter(format!(
            "loss must be mse or cross-entropy, got {other:?}"
        ))),
    }
}

fn parse_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Error> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if to < from {
        return Err(Error::InvalidParameter(format!("empty grid: {to} < {from}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| from + i as f64 * step).collect())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Emit CSV rows to `--out` or stdout.
fn emit(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            write_csv(&mut buf, header, rows).expect("vec write");
            fs::write(path, buf).map_err(|e| Error::io(path_owned(path), e))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, header, rows).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn path_owned(p: &Path) -> PathBuf {
    p.to_path_buf()
}

/// Reproducibility record written next to the first output file.
struct Manifest {
    command: &'static str,
    started: u64,
    config: serde_json::Value,
    seed: Option<u64>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    fn new(command: &'static str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command,
            started: unix_now(),
            config,
            seed,
            outputs: Vec::new(),
        }
    }

    fn output(&mut self, path: Option<&Path>) {
        if let Some(p) = path {
            self.outputs.push(p.to_path_buf());
        }
    }

    fn write(&self) -> Result<(), Error> {
        let Some(first) = self.outputs.first() else {
            return Ok(()); // stdout-only run, nothing to sit next to
        };
        let manifest_path = PathBuf::from(format!("{}.manifest.json", first.display()));
        let argv: Vec<String> = std::env::args().collect();
        let doc = serde_json::json!({
            "command": self.command,
            "argv": argv,
            "config": self.config,
            "seed": self.seed,
            "started_unix": self.started,
            "finished_unix": unix_now(),
            "outputs": self.outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        let text = serde_json::to_string_pretty(&doc).expect("manifest serialization");
        fs::write(&manifest_path, text).map_err(|e| Error::io(manifest_path, e))
    }
}

fn config_json(cfg: &NetworkConfig) -> serde_json::Value {
    serde_json::json!({
        "shape": cfg.shape_string(),
        "r": cfg.params.r,
        "a": cfg.params.a,
        "b": cfg.params.b,
        "p": cfg.params.p,
        "pattern": cfg.pattern.describe(),
        "classifier_shape": cfg.classifier_shape,
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "algorithm": cfg.algorithm.index(),
        "loss": format!("{:?}", cfg.loss),
    })
}

fn cmd_train(args: &TrainArgs) -> Result<(), Error> {
    let config = args.net.to_config()?;
    let mut manifest = Manifest::new("train", config_json(&config), Some(config.seed));
    let (train_set, test_set) = args.data.load()?;
    eprintln!(
        "training {} on {} images, testing on {} (pattern {}, algorithm {})",
        config.shape_string(),
        train_set.len(),
        test_set.len(),
        config.pattern.describe(),
        config.algorithm.index()
    );
    let model = network::train_with_progress(&config, &train_set, &test_set, |epoch, acc| {
        eprintln!("epoch {epoch}/{}: test accuracy {acc:.2}%", config.epochs);
    })?;
    let dead = model.stats.degenerate_neurons();
    if !dead.is_empty() {
        eprintln!(
            "note: {} hidden neurons had constant sums over the training set and were dropped: {:?}",
            dead.len(),
            dead
        );
    }

    if let Some(model_out) = &args.model_out {
        network::save_model(&model, model_out)?;
        manifest.output(Some(model_out));
        eprintln!("model written to {}", model_out.display());
    }

    let rows: Vec<Vec<String>> = model
        .training_history
        .iter()
        .enumerate()
        .map(|(i, &acc)| vec![(i + 1).to_string(), fmt_f64(acc)])
        .collect();
    emit(args.out.as_deref(), &["epoch", "test_accuracy"], &rows)?;
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let model = network::load_model(&args.model)?;
    let algorithm = Algorithm::from_index(args.algorithm)?;
    let mut manifest = Manifest::new("eval", config_json(&model.config), None);
    let dir = args.data.dir();
    let test = mnist::load_dataset(
        mnist::locate(&dir, "t10k-images-idx3-ubyte")?,
        mnist::locate(&dir, "t10k-labels-idx1-ubyte")?,
    )?
    .truncated(args.data.limit_test);
    let accuracy = network::evaluate_threaded(&model, &test, algorithm, args.threads);
    emit(args.out.as_deref(), &["accuracy"], &[vec![fmt_f64(accuracy)]])?;
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let config = args.net.to_config()?;
    let grid = match (&args.r_list, args.r_from, args.r_to, args.step) {
        (Some(list), None, None, None) => parse_list::<f64>(list, "r")?,
        (None, Some(from), Some(to), Some(step)) => parse_grid(from, to, step)?,
        _ => {
            return Err(Error::InvalidParameter(
                "give either --r-list or all of --r-from/--r-to/--step".into(),
            ))
        }
    };
    let mut manifest = Manifest::new("sweep-r", config_json(&config), Some(config.seed));
    let (train_set, test_set) = args.data.load()?;
    let rows = network::sweep_r(&config, &grid, &train_set, &test_set, args.threads)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| vec![fmt_f64(row.r), fmt_f64(row.accuracy), fmt_f64(row.lyapunov)])
        .collect();
    emit(args.out.as_deref(), &SWEEP_CSV_HEADER, &csv_rows)?;
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_memory(args: &MemoryArgs) -> Result<(), Error> {
    let (p, classifier_shape) = NetworkConfig::parse_shape(&args.shape)?;
    let config = NetworkConfig {
        params: ReservoirParams::with_defaults(p)?,
        pattern: PatternSource::Builtin(3),
        classifier_shape,
        learning_rate: 0.3,
        epochs: 1,
        seed: 0,
        algorithm: Algorithm::from_index(args.algorithm)?,
        loss: Loss::SquaredError,
    };
    let report = network::memory_report(&config);
    let mut manifest = Manifest::new(
        "memory",
        serde_json::json!({"shape": args.shape, "algorithm": args.algorithm}),
        None,
    );
    if args.breakdown {
        let mut rows: Vec<Vec<String>> = report
            .breakdown
            .iter()
            .map(|(name, n)| {
                vec![
                    name.clone(),
                    n.to_string(),
                    (n * network::BYTES_PER_ELEMENT).to_string(),
                ]
            })
            .collect();
        rows.push(vec![
            "total".into(),
            report.stored_elements.to_string(),
            report.bytes.to_string(),
        ]);
        emit(args.out.as_deref(), &["array", "elements", "bytes"], &rows)?;
    } else {
        let line = format!("{}\n", report.bytes);
        match &args.out {
            Some(path) => fs::write(path, line).map_err(|e| Error::io(path_owned(path), e))?,
            None => print!("{line}"),
        }
    }
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_lyapunov(args: &LyapunovArgs) -> Result<(), Error> {
    let grid = parse_grid(args.r_from, args.r_to, args.step)?;
    for &r in &grid {
        if !(r > 0.0 && r <= 2.0) {
            return Err(Error::InvalidParameter(format!("r must be in (0, 2], grid contains {r}")));
        }
    }
    let mut manifest = Manifest::new(
        "lyapunov",
        serde_json::json!({
            "r_from": args.r_from, "r_to": args.r_to, "step": args.step,
            "x0": args.x0, "transient": args.transient, "samples": args.samples,
        }),
        None,
    );
    let rows: Vec<Vec<String>> = grid
        .iter()
        .map(|&r| {
            let l = chaos::lyapunov(r, args.x0, args.transient, args.samples);
            vec![fmt_f64(r), fmt_f64(l)]
        })
        .collect();
    emit(args.out.as_deref(), &["r", "lyapunov"], &rows)?;
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_bifurcation(args: &BifurcationArgs) -> Result<(), Error> {
    let grid = parse_grid(args.r_from, args.r_to, args.step)?;
    for &r in &grid {
        if !(r > 0.0 && r <= 2.0) {
            return Err(Error::InvalidParameter(format!("r must be in (0, 2], grid contains {r}")));
        }
    }
    let mut manifest = Manifest::new(
        "bifurcation",
        serde_json::json!({
            "r_from": args.r_from, "r_to": args.r_to, "step": args.step,
            "transient": args.transient, "samples": args.samples,
        }),
        None,
    );
    let points = chaos::bifurcation(&grid, args.transient, args.samples);
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|&(r, x)| vec![fmt_f64(r), fmt_f64(x)])
        .collect();
    emit(args.out.as_deref(), &["r", "x"], &rows)?;
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let p_grid: Vec<usize> = parse_list(&args.p_grid, "p")?;
    if p_grid.is_empty() || args.samples == 0 || args.repetitions == 0 {
        return Err(Error::InvalidParameter(
            "bench needs a nonempty p grid, samples >= 1 and repetitions >= 1".into(),
        ));
    }
    let mut manifest = Manifest::new(
        "bench",
        serde_json::json!({
            "p_grid": p_grid, "samples": args.samples, "repetitions": args.repetitions,
            "train_subset": args.train_subset, "seed": args.seed,
        }),
        Some(args.seed),
    );
    let (train_full, test_full) = args.data.load()?;
    let train_small = train_full.truncated(args.train_subset);
    let images = &test_full.images()[..args.samples.min(test_full.len())];

    let mut rows = Vec::with_capacity(p_grid.len());
    for &p in &p_grid {
        // model quality is irrelevant for timing; one epoch on the subset
        // produces a fully functional model quickly
        let config = NetworkConfig {
            params: ReservoirParams::with_defaults(p)?,
            pattern: PatternSource::Builtin(3),
            classifier_shape: vec![10],
            learning_rate: 0.3,
            epochs: 1,
            seed: args.seed,
            algorithm: Algorithm::Alg2,
            loss: Loss::SquaredError,
        };
        let model = network::train(&config, &train_small, &test_full.truncated(1))?;
        eprintln!("timing P = {p} over {} images x {} passes", images.len(), args.repetitions);
        rows.push(bench::time_all_algorithms(&model, images, args.repetitions));
    }
    let (header, table) = bench::ratio_report(&rows);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    emit(args.out.as_deref(), &header_refs, &table)?;
    manifest.output(args.out.as_deref());
    manifest.write()
}

fn cmd_pattern(args: &PatternCmd) -> Result<(), Error> {
    match &args.action {
        PatternAction::Export { id, out } => {
            let pattern = Pattern::builtin(*id)?;
            pattern.save(out)?;
            let mut manifest = Manifest::new(
                "pattern",
                serde_json::json!({"action": "export", "id": id}),
                None,
            );
            manifest.output(Some(out));
            manifest.write()
        }
    }
}

fn cmd_model(args: &ModelCmd) -> Result<(), Error> {
    match &args.action {
        ModelAction::Export { model, out } => {
            let m: Model = network::load_model(model)?;
            let text = network::model_to_text(&m);
            match out {
                Some(path) => {
                    fs::write(path, text).map_err(|e| Error::io(path_owned(path), e))?;
                    let mut manifest = Manifest::new(
                        "model",
                        serde_json::json!({"action": "export", "model": model.display().to_string()}),
                        None,
                    );
                    manifest.output(Some(path));
                    manifest.write()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    lock.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))?;
                }
            }
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::SweepR(args) => cmd_sweep(args),
        Command::Memory(args) => cmd_memory(args),
        Command::Lyapunov(args) => cmd_lyapunov(args),
        Command::Bifurcation(args) => cmd_bifurcation(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Pattern(args) => cmd_pattern(args),
        Command::Model(args) => cmd_model(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse(); // usage errors exit 2 here
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
