//! Full network assembly: training and evaluation pipelines, memory
//! accounting, model persistence and the accuracy-vs-r sweep.
//!
//! Training order is fixed: resolve the pattern, fit the hidden-layer
//! statistics over the whole training set, then run per-sample classifier
//! epochs in file order, recording test accuracy after each epoch. All of
//! it is deterministic given the seed. Hidden sums are computed with the
//! materialized matrix during training; the three inference algorithms are
//! arithmetically identical, so the choice is a pure runtime tradeoff.
//!
//! Model file format (version 1, all integers little-endian):
//!
//! ```text
//! 8 bytes  magic "LOGNNET1"
//! u32      builtin pattern id (0 = custom permutation)
//! f64 * 3  r, A, B
//! u64      P
//! u64      seed
//! f64      learning rate
//! u64      epochs
//! u8       loss (0 = squared error, 1 = cross entropy)
//! u64      classifier shape length, then u64 per width
//! u16*784  pattern permutation
//! f64 * P  sh_min, then sh_max, then usre
//! per layer: u64 fan_in, u64 fan_out, f64 * (fan_in+1)*fan_out
//! u64      history length, then f64 per epoch accuracy
//! u32      crc32 of everything above
//! ```
//!
//! The inference algorithm is a runtime choice and is deliberately not
//! stored in the file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::chaos::{self, ReservoirParams, W1Matrix};
use crate::classifier::{self, DenseLayer, Loss, CLASSES};
use crate::error::{Error, Result};
use crate::mnist::{Dataset, RawImage, IMAGE_PIXELS};
use crate::reservoir::{self, HiddenStats, HiddenVector};
use crate::rng::{derive_seed, Xorshift64Star};
use crate::tpattern::{Pattern, INPUT_LEN};

/// Which storage strategy evaluates the reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// One weight scalar, recomputed from the seed for every entry.
    Alg1,
    /// One 785-element working row.
    Alg2,
    /// Fully materialized 785 x P matrix.
    Alg3,
}

impl Algorithm {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Algorithm::Alg1),
            2 => Ok(Algorithm::Alg2),
            3 => Ok(Algorithm::Alg3),
            _ => Err(Error::InvalidParameter(format!("algorithm must be 1, 2 or 3, got {i}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Algorithm::Alg1 => 1,
            Algorithm::Alg2 => 2,
            Algorithm::Alg3 => 3,
        }
    }

    pub const ALL: [Algorithm; 3] = [Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3];
}

/// Where the flattening permutation comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternSource {
    Builtin(u8),
    File(PathBuf),
    /// Carried inside a loaded model file.
    Embedded,
}

impl PatternSource {
    pub fn resolve(&self) -> Result<Pattern> {
        match self {
            PatternSource::Builtin(id) => Pattern::builtin(*id),
            PatternSource::File(path) => Pattern::load(path),
            PatternSource::Embedded => Err(Error::InvalidPattern(
                "embedded pattern source cannot be re-resolved; use the model's stored pattern".into(),
            )),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            PatternSource::Builtin(id) => format!("builtin-{id}"),
            PatternSource::File(path) => path.display().to_string(),
            PatternSource::Embedded => "embedded".into(),
        }
    }
}

/// Everything needed to train or size a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub params: ReservoirParams,
    pub pattern: PatternSource,
    /// Widths after the reservoir layer; the last entry must be 10.
    pub classifier_shape: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub loss: Loss,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classifier_shape.last() != Some(&CLASSES) {
            return Err(Error::InvalidParameter(format!(
                "classifier shape must end in {CLASSES}, got {:?}",
                self.classifier_shape
            )));
        }
        if self.classifier_shape.len() > 2 {
            return Err(Error::InvalidParameter(format!(
                "at most two classifier layers are supported, got {:?}",
                self.classifier_shape
            )));
        }
        if self.classifier_shape.contains(&0) {
            return Err(Error::InvalidParameter("classifier layer widths must be nonzero".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        Ok(())
    }

    /// Parse `784:P[:H]:10` into `(P, classifier widths)`.
    pub fn parse_shape(s: &str) -> Result<(usize, Vec<usize>)> {
        let parts: Vec<usize> = s
            .split(':')
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("shape element {t:?} is not an integer")))
            })
            .collect::<Result<_>>()?;
        if parts.len() < 3 || parts.len() > 4 {
            return Err(Error::InvalidParameter(format!(
                "shape must be 784:P:10 or 784:P:H:10, got {s:?}"
            )));
        }
        if parts[0] != IMAGE_PIXELS {
            return Err(Error::InvalidParameter(format!(
                "shape must start with {IMAGE_PIXELS}, got {}",
                parts[0]
            )));
        }
        if *parts.last().unwrap() != CLASSES {
            return Err(Error::InvalidParameter(format!(
                "shape must end with {CLASSES}, got {}",
                parts.last().unwrap()
            )));
        }
        if parts.contains(&0) {
            return Err(Error::InvalidParameter("shape widths must be nonzero".into()));
        }
        Ok((parts[1], parts[2..].to_vec()))
    }

    /// The `784:P[:H]:10` string for this configuration.
    pub fn shape_string(&self) -> String {
        let mut s = format!("{IMAGE_PIXELS}:{}", self.params.p);
        for w in &self.classifier_shape {
            s.push(':');
            s.push_str(&w.to_string());
        }
        s
    }
}

/// A trained network.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: NetworkConfig,
    pub pattern: Pattern,
    pub stats: HiddenStats,
    pub layers: Vec<DenseLayer>,
    /// Test accuracy (percent) after each training epoch.
    pub training_history: Vec<f64>,
}

impl Model {
    pub fn final_accuracy(&self) -> f64 {
        *self.training_history.last().unwrap_or(&0.0)
    }
}

fn build_layers(p: usize, shape: &[usize], rng: &mut Xorshift64Star) -> Vec<DenseLayer> {
    let mut widths = Vec::with_capacity(shape.len() + 1);
    widths.push(p);
    widths.extend_from_slice(shape);
    (0..shape.len())
        .map(|i| DenseLayer::init(widths[i], widths[i + 1], rng))
        .collect()
}

/// Raw hidden sums for every image, row-major, via the materialized matrix.
fn project_all(pattern: &Pattern, w1: &W1Matrix, images: &[RawImage]) -> Vec<f64> {
    let p = w1.hidden_width();
    let mut raws = Vec::with_capacity(images.len() * p);
    for img in images {
        let y = pattern.prepare_input(img);
        raws.extend_from_slice(&reservoir::project_alg3(&y, w1));
    }
    raws
}

fn classify_cached(hidden: &HiddenVector, layers: &[DenseLayer]) -> u8 {
    classifier::predict(&classifier::forward(hidden, layers))
}

/// Train a model. Deterministic given `(config, seed, data)`.
pub fn train(config: &NetworkConfig, train_set: &Dataset, test_set: &Dataset) -> Result<Model> {
    train_with_progress(config, train_set, test_set, |_, _| {})
}

/// [`train`] with a per-epoch callback `(epoch index starting at 1, test accuracy)`.
pub fn train_with_progress(
    config: &NetworkConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    mut progress: impl FnMut(usize, f64),
) -> Result<Model> {
    config.validate()?;
    if train_set.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "training set must hold at least 2 images, got {}",
            train_set.len()
        )));
    }
    let pattern = config.pattern.resolve()?;
    let w1 = W1Matrix::build(&config.params);
    let p = config.params.p;

    let train_raws = project_all(&pattern, &w1, train_set.images());
    let stats = HiddenStats::from_raw_sums(p, &train_raws)?;

    let train_hidden: Vec<HiddenVector> = train_raws
        .chunks_exact(p)
        .map(|row| reservoir::normalize_hidden(row, &stats))
        .collect();
    drop(train_raws);
    let test_raws = project_all(&pattern, &w1, test_set.images());
    let test_hidden: Vec<HiddenVector> = test_raws
        .chunks_exact(p)
        .map(|row| reservoir::normalize_hidden(row, &stats))
        .collect();
    drop(test_raws);

    let mut rng = Xorshift64Star::new(config.seed);
    let mut layers = build_layers(p, &config.classifier_shape, &mut rng);

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        classifier::train_epoch(
            &mut layers,
            train_hidden.iter().zip(train_set.labels().iter().copied()),
            config.learning_rate,
            config.loss,
        )?;
        let correct = test_hidden
            .iter()
            .zip(test_set.labels())
            .filter(|(hv, label)| classify_cached(hv, &layers) == **label)
            .count();
        let accuracy = if test_set.is_empty() {
            0.0
        } else {
            correct as f64 / test_set.len() as f64 * 100.0
        };
        progress(epoch, accuracy);
        history.push(accuracy);
    }

    Ok(Model {
        config: config.clone(),
        pattern,
        stats,
        layers,
        training_history: history,
    })
}

/// Reusable per-worker state for single-image inference.
pub struct InferenceContext {
    algorithm: Algorithm,
    w1: Option<W1Matrix>,
    scratch: Vec<f64>,
}

impl InferenceContext {
    pub fn new(model: &Model, algorithm: Algorithm) -> Self {
        let w1 = match algorithm {
            Algorithm::Alg3 => Some(W1Matrix::build(&model.config.params)),
            _ => None,
        };
        Self {
            algorithm,
            w1,
            scratch: vec![0.0; INPUT_LEN],
        }
    }
}

/// Full single-image inference: pattern, projection, normalization,
/// classifier, argmax.
pub fn predict_image(model: &Model, ctx: &mut InferenceContext, image: &RawImage) -> u8 {
    let y = model.pattern.prepare_input(image);
    let raw = match ctx.algorithm {
        Algorithm::Alg1 => reservoir::project_alg1(&y, &model.config.params),
        Algorithm::Alg2 => reservoir::project_alg2(&y, &model.config.params, &mut ctx.scratch),
        Algorithm::Alg3 => reservoir::project_alg3(&y, ctx.w1.as_ref().unwrap()),
    };
    let hidden = reservoir::normalize_hidden(&raw, &model.stats);
    classify_cached(&hidden, &model.layers)
}

/// Percentage of argmax-correct predictions over a dataset.
pub fn evaluate(model: &Model, dataset: &Dataset, algorithm: Algorithm) -> f64 {
    evaluate_threaded(model, dataset, algorithm, 1)
}

/// [`evaluate`] over worker threads; the result is identical for any
/// thread count.
pub fn evaluate_threaded(model: &Model, dataset: &Dataset, algorithm: Algorithm, threads: usize) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let n = dataset.len();
    let threads = threads.max(1).min(n);
    let correct: usize = if threads == 1 {
        let mut ctx = InferenceContext::new(model, algorithm);
        dataset
            .iter()
            .filter(|(img, label)| predict_image(model, &mut ctx, img) == *label)
            .count()
    } else {
        let chunk = n.div_ceil(threads);
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(threads);
            for t in 0..threads {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(n);
                if lo >= hi {
                    break;
                }
                handles.push(scope.spawn(move || {
                    let mut ctx = InferenceContext::new(model, algorithm);
                    (lo..hi)
                        .filter(|&i| predict_image(model, &mut ctx, dataset.image(i)) == dataset.label(i))
                        .count()
                }));
            }
            handles.into_iter().map(|h| h.join().unwrap()).sum()
        })
    };
    correct as f64 / n as f64 * 100.0
}

/// Element counts and byte totals under the 4-bytes-per-element accounting
/// convention (a bookkeeping convention, not the runtime representation;
/// arithmetic runs in f64).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryReport {
    pub stored_elements: usize,
    pub bytes: usize,
    pub breakdown: Vec<(String, usize)>,
}

pub const BYTES_PER_ELEMENT: usize = 4;

pub fn memory_report(config: &NetworkConfig) -> MemoryReport {
    let p = config.params.p;
    let mut breakdown = Vec::new();
    let w1 = match config.algorithm {
        Algorithm::Alg1 => ("w1_scalar".to_string(), 1),
        Algorithm::Alg2 => ("w1_row".to_string(), INPUT_LEN),
        Algorithm::Alg3 => ("w1_matrix".to_string(), INPUT_LEN * p),
    };
    breakdown.push(w1);
    let mut fan_in = p;
    for (idx, &width) in config.classifier_shape.iter().enumerate() {
        breakdown.push((format!("w2_layer{idx}"), (fan_in + 1) * width));
        fan_in = width;
    }
    let stored_elements = breakdown.iter().map(|(_, n)| n).sum();
    MemoryReport {
        stored_elements,
        bytes: stored_elements * BYTES_PER_ELEMENT,
        breakdown,
    }
}

const MODEL_MAGIC: &[u8; 8] = b"LOGNNET1";

struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.offset + n;
        if end > self.bytes.len() {
            return Err(Error::format(
                self.path,
                self.offset as u64,
                format!("model file truncated while reading {what}"),
            ));
        }
        let s = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let raw = self.take(n * 8, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn model_bytes(model: &Model) -> Vec<u8> {
    let mut w = ByteWriter { buf: Vec::new() };
    w.buf.extend_from_slice(MODEL_MAGIC);
    let pattern_id = match model.config.pattern {
        PatternSource::Builtin(id) => id as u32,
        _ => 0,
    };
    w.u32(pattern_id);
    w.f64(model.config.params.r);
    w.f64(model.config.params.a);
    w.f64(model.config.params.b);
    w.u64(model.config.params.p as u64);
    w.u64(model.config.seed);
    w.f64(model.config.learning_rate);
    w.u64(model.config.epochs as u64);
    w.u8(match model.config.loss {
        Loss::SquaredError => 0,
        Loss::CrossEntropy => 1,
    });
    w.u64(model.config.classifier_shape.len() as u64);
    for &width in &model.config.classifier_shape {
        w.u64(width as u64);
    }
    for &idx in model.pattern.perm() {
        w.u16(idx as u16);
    }
    w.f64s(model.stats.sh_min());
    w.f64s(model.stats.sh_max());
    w.f64s(model.stats.usre());
    for layer in &model.layers {
        w.u64(layer.fan_in() as u64);
        w.u64(layer.fan_out() as u64);
        w.f64s(layer.weights());
    }
    w.u64(model.training_history.len() as u64);
    w.f64s(&model.training_history);
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.buf
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes, path)
}

pub fn model_from_bytes(bytes: &[u8], path: &Path) -> Result<Model> {
    if bytes.len() < MODEL_MAGIC.len() + 4 {
        return Err(Error::format(path, 0, "file too short to be a model"));
    }
    if &bytes[..8] != MODEL_MAGIC {
        return Err(Error::format(path, 0, "bad magic, not a LOGNNET1 model file"));
    }
    let body = &bytes[..bytes.len() - 4];
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let crc = crc32fast::hash(body);
    if crc != stored_crc {
        return Err(Error::format(
            path,
            (bytes.len() - 4) as u64,
            format!("checksum mismatch: stored 0x{stored_crc:08x}, computed 0x{crc:08x}"),
        ));
    }

    let mut r = ByteReader {
        bytes: body,
        offset: 8,
        path,
    };
    let pattern_id = r.u32("pattern id")?;
    let rr = r.f64("r")?;
    let a = r.f64("A")?;
    let b = r.f64("B")?;
    let p = r.u64("P")? as usize;
    let seed = r.u64("seed")?;
    let learning_rate = r.f64("learning rate")?;
    let epochs = r.u64("epochs")? as usize;
    let loss = match r.u8("loss tag")? {
        0 => Loss::SquaredError,
        1 => Loss::CrossEntropy,
        other => {
            return Err(Error::format(path, r.offset as u64, format!("unknown loss tag {other}")))
        }
    };
    let shape_len = r.u64("shape length")? as usize;
    if shape_len > 2 {
        return Err(Error::format(path, r.offset as u64, "classifier shape too deep"));
    }
    let mut classifier_shape = Vec::with_capacity(shape_len);
    for _ in 0..shape_len {
        classifier_shape.push(r.u64("shape width")? as usize);
    }
    let mut perm = Vec::with_capacity(IMAGE_PIXELS);
    for _ in 0..IMAGE_PIXELS {
        perm.push(r.u16("pattern entry")? as usize);
    }
    let pattern = Pattern::from_perm(perm)?;
    let sh_min = r.f64s(p, "sh_min")?;
    let sh_max = r.f64s(p, "sh_max")?;
    let usre = r.f64s(p, "usre")?;
    let stats = HiddenStats::from_parts(sh_min, sh_max, usre)?;
    let mut layers = Vec::with_capacity(shape_len);
    for _ in 0..shape_len {
        let fan_in = r.u64("layer fan_in")? as usize;
        let fan_out = r.u64("layer fan_out")? as usize;
        let w = r.f64s((fan_in + 1) * fan_out, "layer weights")?;
        layers.push(DenseLayer::from_weights(fan_in, fan_out, w)?);
    }
    let hist_len = r.u64("history length")? as usize;
    let training_history = r.f64s(hist_len, "history")?;
    if r.offset != body.len() {
        return Err(Error::format(
            path,
            r.offset as u64,
            format!("{} trailing bytes after model payload", body.len() - r.offset),
        ));
    }

    let params = ReservoirParams::new(rr, a, b, p)?;
    let pattern_source = if (1..=3).contains(&pattern_id) {
        PatternSource::Builtin(pattern_id as u8)
    } else {
        PatternSource::Embedded
    };
    let config = NetworkConfig {
        params,
        pattern: pattern_source,
        classifier_shape,
        learning_rate,
        epochs,
        seed,
        // not persisted: which algorithm runs inference is a runtime choice
        algorithm: Algorithm::Alg2,
        loss,
    };
    config.validate()?;
    Ok(Model {
        config,
        pattern,
        stats,
        layers,
        training_history,
    })
}

/// Human-readable dump of a model file.
pub fn model_to_text(model: &Model) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let cfg = &model.config;
    writeln!(s, "lognnet model").unwrap();
    writeln!(s, "shape {}", cfg.shape_string()).unwrap();
    writeln!(s, "r {:.17}", cfg.params.r).unwrap();
    writeln!(s, "A {:.17}", cfg.params.a).unwrap();
    writeln!(s, "B {:.17}", cfg.params.b).unwrap();
    writeln!(s, "pattern {}", cfg.pattern.describe()).unwrap();
    writeln!(s, "learning_rate {}", cfg.learning_rate).unwrap();
    writeln!(s, "epochs {}", cfg.epochs).unwrap();
    writeln!(s, "seed {}", cfg.seed).unwrap();
    writeln!(s, "loss {:?}", cfg.loss).unwrap();
    writeln!(s, "history {:?}", model.training_history).unwrap();
    writeln!(s, "pattern_perm {:?}", model.pattern.perm()).unwrap();
    writeln!(s, "sh_min {:?}", model.stats.sh_min()).unwrap();
    writeln!(s, "sh_max {:?}", model.stats.sh_max()).unwrap();
    writeln!(s, "usre {:?}", model.stats.usre()).unwrap();
    for (i, layer) in model.layers.iter().enumerate() {
        writeln!(s, "layer{} {}x{} {:?}", i, layer.fan_in() + 1, layer.fan_out(), layer.weights()).unwrap();
    }
    s
}

/// One grid point of an accuracy-vs-r sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub accuracy: f64,
    pub lyapunov: f64,
}

pub const SWEEP_CSV_HEADER: [&str; 3] = ["r", "accuracy", "lyapunov"];

/// Retrain from scratch at every r in the grid (seed derived from the
/// template seed and the grid index) and pair the final test accuracy with
/// the Lyapunov exponent at that r. Grid points are independent, so they
/// may run on several threads; results are deterministic either way.
pub fn sweep_r(
    template: &NetworkConfig,
    r_grid: &[f64],
    train_set: &Dataset,
    test_set: &Dataset,
    threads: usize,
) -> Result<Vec<SweepRow>> {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;

    for &r in r_grid {
        // fail fast on an invalid grid before any training starts
        ReservoirParams::new(r, template.params.a, template.params.b, template.params.p)?;
    }

    let threads = threads.max(1).min(r_grid.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SweepRow>>>> =
        Mutex::new((0..r_grid.len()).map(|_| None).collect());

    let run_point = |idx: usize| -> Result<SweepRow> {
        let r = r_grid[idx];
        let mut config = template.clone();
        config.params = ReservoirParams::new(r, template.params.a, template.params.b, template.params.p)?;
        config.seed = derive_seed(template.seed, idx as u64);
        let model = train(&config, train_set, test_set)?;
        Ok(SweepRow {
            r,
            accuracy: model.final_accuracy(),
            lyapunov: chaos::lyapunov_default(r),
        })
    };

    if threads == 1 {
        let mut rows = Vec::with_capacity(r_grid.len());
        for idx in 0..r_grid.len() {
            rows.push(run_point(idx)?);
        }
        return Ok(rows);
    }

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= r_grid.len() {
                    break;
                }
                let row = run_point(idx);
                results.lock().unwrap()[idx] = Some(row);
            });
        }
    });

    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every grid point visited"))
        .collect()
}
