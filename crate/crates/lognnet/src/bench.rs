//! Wall-clock timing of single-image inference for the three algorithms.
//!
//! Protocol: 10 untimed warm-up inferences, then `repetitions` timed passes
//! over the sample images; each pass yields a mean per-image time and the
//! reported figure is the median of those batch means, which resists
//! scheduler noise better than one long average. Predicted digits are
//! accumulated and handed to `black_box` so the work cannot be elided.
//! Measurement is strictly single-threaded. Absolute numbers are
//! hardware-specific; the meaningful outputs are the orderings and the
//! ratios against algorithm 3.

use std::hint::black_box;
use std::time::Instant;

use crate::mnist::RawImage;
use crate::network::{predict_image, Algorithm, InferenceContext, Model};

/// Result of one timing measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedRun {
    /// Median-of-means wall-clock seconds per image.
    pub mean_seconds: f64,
    /// Sum of all predicted digits across every timed pass; consuming it
    /// keeps the measured work observable.
    pub prediction_checksum: u64,
}

/// Mean per-image inference time for one `(model, algorithm)` pair.
pub fn time_per_image(
    model: &Model,
    algorithm: Algorithm,
    images: &[RawImage],
    repetitions: usize,
) -> TimedRun {
    assert!(!images.is_empty(), "need at least one sample image");
    assert!(repetitions >= 1);
    let mut ctx = InferenceContext::new(model, algorithm);

    let mut checksum = 0u64;
    for img in images.iter().cycle().take(10) {
        checksum += predict_image(model, &mut ctx, img) as u64;
    }

    let mut batch_means = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        for img in images {
            checksum += predict_image(model, &mut ctx, img) as u64;
        }
        let elapsed = start.elapsed().as_secs_f64();
        batch_means.push(elapsed / images.len() as f64);
    }
    black_box(checksum);

    batch_means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = batch_means.len() / 2;
    let median = if batch_means.len() % 2 == 1 {
        batch_means[mid]
    } else {
        (batch_means[mid - 1] + batch_means[mid]) / 2.0
    };
    TimedRun {
        mean_seconds: median,
        prediction_checksum: checksum,
    }
}

/// Timings of all three algorithms at one hidden width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub p: usize,
    pub samples: usize,
    pub t_alg1: f64,
    pub t_alg2: f64,
    pub t_alg3: f64,
}

impl TimingRow {
    pub fn ratio_1_3(&self) -> f64 {
        self.t_alg1 / self.t_alg3
    }

    pub fn ratio_2_3(&self) -> f64 {
        self.t_alg2 / self.t_alg3
    }
}

/// Measure one hidden width: every algorithm over the same images.
pub fn time_all_algorithms(model: &Model, images: &[RawImage], repetitions: usize) -> TimingRow {
    let t1 = time_per_image(model, Algorithm::Alg1, images, repetitions);
    let t2 = time_per_image(model, Algorithm::Alg2, images, repetitions);
    let t3 = time_per_image(model, Algorithm::Alg3, images, repetitions);
    debug_assert_eq!(t1.prediction_checksum, t2.prediction_checksum);
    debug_assert_eq!(t2.prediction_checksum, t3.prediction_checksum);
    TimingRow {
        p: model.config.params.p,
        samples: images.len(),
        t_alg1: t1.mean_seconds,
        t_alg2: t2.mean_seconds,
        t_alg3: t3.mean_seconds,
    }
}

/// Table with one column per hidden width and five metric rows: the three
/// per-image times (seconds) and the two ratios against algorithm 3.
pub fn ratio_report(rows: &[TimingRow]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["metric".to_string()];
    for row in rows {
        header.push(format!("p_{}", row.p));
    }
    let fmt = crate::csvout::fmt_f64;
    let metrics: [(&str, Box<dyn Fn(&TimingRow) -> f64>); 5] = [
        ("t_alg1_seconds", Box::new(|r| r.t_alg1)),
        ("t_alg2_seconds", Box::new(|r| r.t_alg2)),
        ("t_alg3_seconds", Box::new(|r| r.t_alg3)),
        ("t_alg1_over_t_alg3", Box::new(|r| r.ratio_1_3())),
        ("t_alg2_over_t_alg3", Box::new(|r| r.ratio_2_3())),
    ];
    let table = metrics
        .iter()
        .map(|(name, get)| {
            let mut line = vec![name.to_string()];
            line.extend(rows.iter().map(|r| fmt(get(r))));
            line
        })
        .collect();
    (header, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::ReservoirParams;
    use crate::classifier::Loss;
    use crate::mnist::{Dataset, IMAGE_PIXELS};
    use crate::network::{evaluate, train, NetworkConfig, PatternSource};
    use crate::rng::Xorshift64Star;

    fn tiny_model(p: usize) -> (Model, Dataset) {
        let mut rng = Xorshift64Star::new(123);
        let images: Vec<RawImage> = (0..40)
            .map(|_| {
                let mut px = [0u8; IMAGE_PIXELS];
                for b in px.iter_mut() {
                    *b = (rng.next_u64() & 0xff) as u8;
                }
                RawImage::new(px)
            })
            .collect();
        let labels: Vec<u8> = (0..40).map(|i| (i % 10) as u8).collect();
        let ds = Dataset::new(images, labels).unwrap();
        let cfg = NetworkConfig {
            params: ReservoirParams::new(1.885, 0.3, 5.9, p).unwrap(),
            pattern: PatternSource::Builtin(3),
            classifier_shape: vec![10],
            learning_rate: 0.3,
            epochs: 1,
            seed: 7,
            algorithm: Algorithm::Alg2,
            loss: Loss::SquaredError,
        };
        let model = train(&cfg, &ds, &ds).unwrap();
        (model, ds)
    }

    #[test]
    fn timing_does_not_disturb_predictions() {
        let (model, ds) = tiny_model(8);
        let before = evaluate(&model, &ds, Algorithm::Alg1);
        let row = time_all_algorithms(&model, ds.images(), 2);
        let after = evaluate(&model, &ds, Algorithm::Alg1);
        assert_eq!(before, after);
        assert!(row.t_alg1 > 0.0 && row.t_alg2 > 0.0 && row.t_alg3 > 0.0);
    }

    #[test]
    fn checksum_is_algorithm_independent() {
        let (model, ds) = tiny_model(8);
        let t1 = time_per_image(&model, Algorithm::Alg1, ds.images(), 2);
        let t3 = time_per_image(&model, Algorithm::Alg3, ds.images(), 2);
        assert_eq!(t1.prediction_checksum, t3.prediction_checksum);
    }

    #[test]
    fn repetition_count_roughly_self_consistent() {
        let (model, ds) = tiny_model(8);
        let single = time_per_image(&model, Algorithm::Alg2, ds.images(), 1).mean_seconds;
        let many = time_per_image(&model, Algorithm::Alg2, ds.images(), 10).mean_seconds;
        let ratio = single / many;
        // a loose noise bound; the two protocols measure the same quantity
        assert!(ratio > 0.1 && ratio < 10.0, "single {single}, many {many}");
    }

    #[test]
    fn report_shape_matches_grid() {
        let (model, ds) = tiny_model(4);
        let rows = vec![time_all_algorithms(&model, &ds.images()[..10], 2)];
        let (header, table) = ratio_report(&rows);
        assert_eq!(header, vec!["metric".to_string(), "p_4".to_string()]);
        assert_eq!(table.len(), 5);
        assert!(table.iter().all(|line| line.len() == 2));
    }
}
