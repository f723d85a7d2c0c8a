//! Acceptance suite: every reproduction target runs at its pinned
//! tolerance and prints one PASS/FAIL line. Run with
//! `cargo test --test acceptance -- --nocapture` to watch the lines as
//! they appear; the test fails at the end if any criterion failed.
//!
//! Needs the real MNIST files (see `common::data_dir`). The full suite
//! trains several networks and takes a few minutes single-threaded.

mod common;

use lognnet::chaos::{self, ReservoirParams};
use lognnet::classifier::{self, Loss};
use lognnet::mnist::Dataset;
use lognnet::network::{self, Algorithm, Model, NetworkConfig, PatternSource};
use lognnet::reservoir::{self, HiddenStats};
use lognnet::rng::Xorshift64Star;
use lognnet::tpattern::{Pattern, INPUT_LEN};
use lognnet::W1Matrix;

struct Outcome {
    name: &'static str,
    detail: String,
    pass: bool,
}

fn record(results: &mut Vec<Outcome>, name: &'static str, pass: bool, detail: String) {
    println!("criterion {name:<28} {}  {detail}", if pass { "PASS" } else { "FAIL" });
    results.push(Outcome { name, detail, pass });
}

fn default_config(p: usize, classifier_shape: Vec<usize>, epochs: usize) -> NetworkConfig {
    NetworkConfig {
        params: ReservoirParams::new(
            ReservoirParams::DEFAULT_R,
            ReservoirParams::DEFAULT_A,
            ReservoirParams::DEFAULT_B,
            p,
        )
        .unwrap(),
        pattern: PatternSource::Builtin(3),
        classifier_shape,
        learning_rate: 0.3,
        epochs,
        seed: 42,
        algorithm: Algorithm::Alg2,
        loss: Loss::SquaredError,
    }
}

fn criterion_memory(results: &mut Vec<Outcome>) {
    let rows: [(usize, Vec<usize>, Algorithm, usize); 5] = [
        (25, vec![10], Algorithm::Alg2, 4_180),
        (25, vec![10], Algorithm::Alg1, 1_044),
        (100, vec![10], Algorithm::Alg2, 7_180),
        (200, vec![10], Algorithm::Alg2, 11_180),
        (100, vec![60, 10], Algorithm::Alg2, 29_820),
    ];
    let mut bad = Vec::new();
    for (p, shape, algorithm, expected) in rows {
        let mut cfg = default_config(p, shape.clone(), 1);
        cfg.algorithm = algorithm;
        let got = network::memory_report(&cfg).bytes;
        if got != expected {
            bad.push(format!("784:{p}:{shape:?} alg{}: {got} != {expected}", algorithm.index()));
        }
    }
    record(
        results,
        "01-memory-accounting",
        bad.is_empty(),
        if bad.is_empty() {
            "all weight-array byte totals exact (tolerance 0)".into()
        } else {
            bad.join("; ")
        },
    );
}

fn criterion_accuracy(
    results: &mut Vec<Outcome>,
    name: &'static str,
    model: &Model,
    lo: f64,
    hi: f64,
) {
    let acc = model.final_accuracy();
    record(
        results,
        name,
        (lo..=hi).contains(&acc),
        format!("final test accuracy {acc:.2}% (needs {lo:.1}..{hi:.1})"),
    );
}

/// Bit-identical raw hidden sums and identical predictions across the
/// three algorithms, over 1000 seeded-random test images per configuration.
fn criterion_cross_algorithm(results: &mut Vec<Outcome>, train_set: &Dataset, test_set: &Dataset) {
    let mut rng = Xorshift64Star::new(2024);
    let picks: Vec<usize> = (0..1000).map(|_| (rng.next_u64() % test_set.len() as u64) as usize).collect();
    let pattern = Pattern::builtin(3).unwrap();

    let mut mismatches = Vec::new();
    let mut compared = 0usize;
    for &p in &[25usize, 100] {
        for &r in &[1.65f64, 1.885, 2.0] {
            let params = ReservoirParams::new(r, 0.3, 5.9, p).unwrap();
            let w1 = W1Matrix::build(&params);
            let mut scratch = vec![0.0; INPUT_LEN];

            // a functional (untrained) model for the prediction path
            let fit_inputs: Vec<_> = train_set.images()[..500]
                .iter()
                .map(|img| pattern.prepare_input(img))
                .collect();
            let stats = reservoir::fit_hidden_stats(&fit_inputs, |y| reservoir::project_alg3(y, &w1)).unwrap();
            let mut init_rng = Xorshift64Star::new(7);
            let layers = vec![classifier::DenseLayer::init(p, 10, &mut init_rng)];

            for &idx in &picks {
                let y = pattern.prepare_input(test_set.image(idx));
                let a1 = reservoir::project_alg1(&y, &params);
                let a2 = reservoir::project_alg2(&y, &params, &mut scratch);
                let a3 = reservoir::project_alg3(&y, &w1);
                if a1 != a2 || a2 != a3 {
                    mismatches.push(format!("raw sums differ at image {idx}, p={p}, r={r}"));
                    break;
                }
                let predictions: Vec<u8> = [&a1, &a2, &a3]
                    .iter()
                    .map(|raw| {
                        let hv = reservoir::normalize_hidden(raw, &stats);
                        classifier::predict(&classifier::forward(&hv, &layers))
                    })
                    .collect();
                if predictions[0] != predictions[1] || predictions[1] != predictions[2] {
                    mismatches.push(format!("predictions differ at image {idx}, p={p}, r={r}"));
                    break;
                }
                compared += 1;
            }
        }
    }
    record(
        results,
        "05-cross-algorithm-equality",
        mismatches.is_empty(),
        if mismatches.is_empty() {
            format!("{compared} image/config pairs bit-identical across algorithms 1, 2, 3")
        } else {
            mismatches.join("; ")
        },
    );
}

fn criterion_epoch1(results: &mut Vec<Outcome>, p25: &Model, p100: &Model) {
    let gap = |m: &Model| (m.final_accuracy() - m.training_history[0]).abs();
    let g25 = gap(p25);
    let g100 = gap(p100);
    record(
        results,
        "06-epoch1-proximity",
        g25 <= 5.0 && g100 <= 5.0,
        format!(
            "epoch-1 to final gap: P=25 {g25:.2} pp (epoch1 {:.2}%), P=100 {g100:.2} pp (epoch1 {:.2}%); needs <= 5 pp",
            p25.training_history[0], p100.training_history[0]
        ),
    );
}

fn criterion_lyapunov(results: &mut Vec<Outcome>) {
    let ln2 = std::f64::consts::LN_2;
    let full = chaos::lyapunov(2.0, chaos::DEFAULT_X0, chaos::DEFAULT_TRANSIENT, 1_000_000);
    let stable = chaos::lyapunov_default(0.5);
    let grid: Vec<f64> = (0..=60).map(|i| 1.4 + i as f64 * 0.01).collect();
    let positive = grid.iter().filter(|&&r| chaos::lyapunov_default(r) > 0.0).count();
    let pass = (full - ln2).abs() <= 0.01 && stable < 0.0 && positive * 2 > grid.len();
    record(
        results,
        "07-lyapunov-properties",
        pass,
        format!(
            "lambda(2.0) = {full:.5} (ln 2 +- 0.01), lambda(0.5) = {stable:.4} (< 0), {positive}/{} grid points positive",
            grid.len()
        ),
    );
}

fn criterion_accuracy_vs_r(results: &mut Vec<Outcome>, train_set: &Dataset, test_set: &Dataset) {
    let grid = [0.5, 0.75, 1.0, 1.25, 1.5, 1.65, 1.805, 1.885];
    let template = default_config(25, vec![10], 5);
    let rows = network::sweep_r(&template, &grid, train_set, test_set, 4).unwrap();

    let n = rows.len() as f64;
    let r_mean = rows.iter().map(|x| x.r).sum::<f64>() / n;
    let a_mean = rows.iter().map(|x| x.accuracy).sum::<f64>() / n;
    let slope = rows
        .iter()
        .map(|x| (x.r - r_mean) * (x.accuracy - a_mean))
        .sum::<f64>()
        / rows.iter().map(|x| (x.r - r_mean) * (x.r - r_mean)).sum::<f64>();
    let delta = rows.last().unwrap().accuracy - rows[0].accuracy;
    record(
        results,
        "08-accuracy-vs-r-trend",
        slope > 0.0 && delta >= 10.0,
        format!(
            "least-squares slope {slope:.2} pp per unit r (needs > 0), accuracy(1.885) - accuracy(0.5) = {delta:.2} pp (needs >= 10)"
        ),
    );
}

fn criterion_timing(results: &mut Vec<Outcome>, train_set: &Dataset, test_set: &Dataset) {
    let images = &test_set.images()[..40];
    let subset = train_set.truncated(2000);
    let mut rows = Vec::new();
    for &p in &[25usize, 45, 75, 100] {
        let cfg = default_config(p, vec![10], 1);
        let model = network::train(&cfg, &subset, &test_set.truncated(2)).unwrap();
        rows.push(lognnet::bench::time_all_algorithms(&model, images, 5));
    }
    let ordering = rows.iter().all(|row| row.t_alg1 > row.t_alg2 && row.t_alg2 > row.t_alg3);
    let ratios: Vec<f64> = rows.iter().map(|row| row.ratio_1_3()).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let summary: Vec<String> = rows
        .iter()
        .map(|row| {
            format!(
                "P={}: {:.2}/{:.3}/{:.3} ms (ratio13 {:.1})",
                row.p,
                row.t_alg1 * 1e3,
                row.t_alg2 * 1e3,
                row.t_alg3 * 1e3,
                row.ratio_1_3()
            )
        })
        .collect();
    record(
        results,
        "09-timing-order",
        ordering && increasing,
        format!("t1 > t2 > t3 {}; t1/t3 strictly increasing {}; {}", ordering, increasing, summary.join(", ")),
    );
}

fn criterion_property_suites(
    results: &mut Vec<Outcome>,
    train_set: &Dataset,
    test_set: &Dataset,
) {
    let mut failures = Vec::new();

    // pattern bijectivity for every builtin
    for id in 1..=3u8 {
        let p = Pattern::builtin(id).unwrap();
        let mut sorted = p.perm().to_vec();
        sorted.sort_unstable();
        if !sorted.into_iter().eq(0..784) {
            failures.push(format!("pattern {id} is not a bijection"));
        }
    }

    // input preparation invariants on real images
    let pattern = Pattern::builtin(3).unwrap();
    for img in &train_set.images()[..100] {
        let y = pattern.prepare_input(img);
        if y.y().len() != INPUT_LEN
            || y.y()[0] != 1.0
            || y.y()[1..].iter().any(|&v| !(0.0..=1.0).contains(&v))
        {
            failures.push("prepare_input invariant violated".into());
            break;
        }
    }

    // zero-mean normalization over the full training set at P = 25
    {
        let params = ReservoirParams::with_defaults(25).unwrap();
        let w1 = W1Matrix::build(&params);
        let mut raws = Vec::with_capacity(train_set.len() * 25);
        for img in train_set.images() {
            let y = pattern.prepare_input(img);
            raws.extend_from_slice(&reservoir::project_alg3(&y, &w1));
        }
        let stats = HiddenStats::from_raw_sums(25, &raws).unwrap();
        let mut means = vec![0.0f64; 25];
        for row in raws.chunks_exact(25) {
            let hv = reservoir::normalize_hidden(row, &stats);
            for (j, m) in means.iter_mut().enumerate() {
                *m += hv.values()[j + 1];
            }
        }
        let worst = means
            .iter()
            .map(|m| (m / train_set.len() as f64).abs())
            .fold(0.0f64, f64::max);
        if worst > 1e-9 {
            failures.push(format!("normalized training mean {worst:e} exceeds 1e-9"));
        }
    }

    // save/load evaluation identity on a small trained model
    {
        let cfg = default_config(25, vec![10], 2);
        let model = network::train(&cfg, train_set, &test_set.truncated(2000)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("acc.bin");
        network::save_model(&model, &path).unwrap();
        let loaded = network::load_model(&path).unwrap();
        let eval_set = test_set.truncated(2000);
        let before = network::evaluate(&model, &eval_set, Algorithm::Alg2);
        let after = network::evaluate(&loaded, &eval_set, Algorithm::Alg2);
        if before != after {
            failures.push(format!("reloaded model evaluates {after} != {before}"));
        }

        // end-to-end determinism: a second training run is bit-identical
        let again = network::train(&cfg, train_set, &test_set.truncated(2000)).unwrap();
        if network::model_bytes(&model) != network::model_bytes(&again) {
            failures.push("two identical training runs produced different models".into());
        }
    }

    // gradient check: analytic vs central differences on a toy stack
    {
        let mut rng = Xorshift64Star::new(5);
        let layers = vec![
            classifier::DenseLayer::init(3, 4, &mut rng),
            classifier::DenseLayer::init(4, 10, &mut rng),
        ];
        let stats = HiddenStats::from_parts(vec![-0.5; 3], vec![0.5; 3], vec![0.0; 3]).unwrap();
        let hv = reservoir::normalize_hidden(&[0.31, -0.22, 0.4], &stats);
        let label = 4u8;
        let loss_of = |layers: &[classifier::DenseLayer]| -> f64 {
            classifier::forward(&hv, layers)
                .values()
                .iter()
                .enumerate()
                .map(|(n, &o)| {
                    let t = if n == label as usize { 1.0 } else { 0.0 };
                    0.5 * (t - o) * (t - o)
                })
                .sum()
        };
        // recover the applied step from one tiny-lr update pair to keep the
        // check independent of internals, then compare against central
        // differences at 1e-6 relative
        let eps = 1e-5;
        let lr = 1.0;
        let mut stepped = layers.clone();
        classifier::train_epoch(&mut stepped, [(&hv, label)], lr, Loss::SquaredError).unwrap();
        for li in 0..layers.len() {
            for idx in 0..layers[li].weights().len() {
                let analytic = (stepped[li].weights()[idx] - layers[li].weights()[idx]) / lr;
                let mut plus = layers.clone();
                let mut minus = layers.clone();
                let wplus = plus[li].weights()[idx] + eps;
                let wminus = minus[li].weights()[idx] - eps;
                plus[li] = perturbed(&plus[li], idx, wplus);
                minus[li] = perturbed(&minus[li], idx, wminus);
                let numeric = -(loss_of(&plus) - loss_of(&minus)) / (2.0 * eps);
                let denom = numeric.abs().max(analytic.abs()).max(1e-4);
                if (analytic - numeric).abs() / denom > 1e-6 {
                    failures.push(format!(
                        "gradient mismatch layer {li} weight {idx}: {analytic} vs {numeric}"
                    ));
                }
            }
        }
    }

    record(
        results,
        "10-property-suites",
        failures.is_empty(),
        if failures.is_empty() {
            "bijectivity, input invariants, zero-mean stats, gradients, save/load identity, determinism".into()
        } else {
            failures.join("; ")
        },
    );
}

fn perturbed(layer: &classifier::DenseLayer, idx: usize, value: f64) -> classifier::DenseLayer {
    let mut w = layer.weights().to_vec();
    w[idx] = value;
    classifier::DenseLayer::from_weights(layer.fan_in(), layer.fan_out(), w).unwrap()
}

#[test]
fn acceptance() {
    let (train_set, test_set) = common::load_mnist();
    assert_eq!(train_set.len(), 60_000, "official training set size");
    assert_eq!(test_set.len(), 10_000, "official test set size");

    let mut results = Vec::new();

    criterion_memory(&mut results);

    let p25 = network::train(&default_config(25, vec![10], 20), &train_set, &test_set).unwrap();
    criterion_accuracy(&mut results, "02-accuracy-784:25:10", &p25, 77.8, 82.8);

    let p100 = network::train(&default_config(100, vec![10], 20), &train_set, &test_set).unwrap();
    criterion_accuracy(&mut results, "03-accuracy-784:100:10", &p100, 87.5, 91.5);

    let two_layer = network::train(&default_config(100, vec![60, 10], 20), &train_set, &test_set).unwrap();
    criterion_accuracy(&mut results, "04-accuracy-784:100:60:10", &two_layer, 94.5, 100.0);

    criterion_cross_algorithm(&mut results, &train_set, &test_set);
    criterion_epoch1(&mut results, &p25, &p100);
    criterion_lyapunov(&mut results);
    criterion_accuracy_vs_r(&mut results, &train_set, &test_set);
    criterion_timing(&mut results, &train_set, &test_set);
    criterion_property_suites(&mut results, &train_set, &test_set);

    let failed: Vec<&Outcome> = results.iter().filter(|o| !o.pass).collect();
    println!(
        "acceptance: {}/{} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    assert!(
        failed.is_empty(),
        "failed criteria: {}",
        failed
            .iter()
            .map(|o| format!("{} ({})", o.name, o.detail))
            .collect::<Vec<_>>()
            .join("; ")
    );
}
