//! Projection of an input vector through the reservoir and the hidden-layer
//! range normalization fitted on training data.
//!
//! The three projection functions implement the three storage strategies
//! for `W1`. They accumulate `sum += y[i] * w` with `i` ascending and
//! derive every weight through [`chaos::seed_row`] and
//! [`chaos::logistic_step`], so all three produce bit-identical sums; the
//! cross-algorithm tests assert exact `f64` equality.

use crate::chaos::{self, ReservoirParams, W1Matrix};
use crate::error::{Error, Result};
use crate::tpattern::{InputVector, INPUT_LEN};

/// Per-neuron min, max and mean offset of the weighted sum over the
/// fitting set. `usre[j]` is the mean of the range-normalized, -0.5-shifted
/// sum, so subtracting it makes the normalized training values average to
/// exactly zero.
///
/// A neuron whose weighted sum is constant over the fitting set cannot be
/// range-normalized; it carries no information about the input. Such
/// neurons are stored with `sh_min == sh_max` and normalize to a constant
/// 0, effectively dropping them from the feature set (superstable map
/// parameters such as r = 1 collapse late columns of `W1` to exact
/// constants, so a handful of dead neurons is a legitimate state there).
/// A fit where *every* neuron is degenerate is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStats {
    sh_min: Vec<f64>,
    sh_max: Vec<f64>,
    usre: Vec<f64>,
}

impl HiddenStats {
    /// Fit from cached raw sums, stored row-major (`rows * p` values).
    pub fn from_raw_sums(p: usize, raws: &[f64]) -> Result<Self> {
        if p == 0 || !raws.len().is_multiple_of(p) {
            return Err(Error::DimensionMismatch(format!(
                "raw sum buffer of {} values is not a multiple of width {p}",
                raws.len()
            )));
        }
        let n = raws.len() / p;
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "hidden statistics need at least 2 fitting inputs, got {n}"
            )));
        }
        let mut sh_min = vec![f64::INFINITY; p];
        let mut sh_max = vec![f64::NEG_INFINITY; p];
        for row in raws.chunks_exact(p) {
            for (j, &v) in row.iter().enumerate() {
                if v < sh_min[j] {
                    sh_min[j] = v;
                }
                if v > sh_max[j] {
                    sh_max[j] = v;
                }
            }
        }
        if sh_max.iter().zip(&sh_min).all(|(hi, lo)| hi - lo == 0.0) {
            return Err(Error::DegenerateNeuron {
                index: 1,
                value: sh_min[0],
            });
        }
        // second pass once min/max are final
        let mut usre = vec![0.0; p];
        for row in raws.chunks_exact(p) {
            for (j, &v) in row.iter().enumerate() {
                if sh_max[j] - sh_min[j] > 0.0 {
                    usre[j] += (v - sh_min[j]) / (sh_max[j] - sh_min[j]) - 0.5;
                }
            }
        }
        for u in usre.iter_mut() {
            *u /= n as f64;
        }
        Ok(Self { sh_min, sh_max, usre })
    }

    /// Indices (1-based) of neurons that were constant over the fitting set.
    pub fn degenerate_neurons(&self) -> Vec<usize> {
        (0..self.width())
            .filter(|&j| self.sh_max[j] - self.sh_min[j] == 0.0)
            .map(|j| j + 1)
            .collect()
    }

    pub fn width(&self) -> usize {
        self.sh_min.len()
    }

    pub fn sh_min(&self) -> &[f64] {
        &self.sh_min
    }

    pub fn sh_max(&self) -> &[f64] {
        &self.sh_max
    }

    pub fn usre(&self) -> &[f64] {
        &self.usre
    }

    /// Reassemble previously fitted statistics (used by model loading).
    pub fn from_parts(sh_min: Vec<f64>, sh_max: Vec<f64>, usre: Vec<f64>) -> Result<Self> {
        if sh_min.len() != sh_max.len() || sh_min.len() != usre.len() || sh_min.is_empty() {
            return Err(Error::DimensionMismatch(
                "hidden statistic arrays must be nonempty and equally sized".into(),
            ));
        }
        for j in 0..sh_min.len() {
            let range = sh_max[j] - sh_min[j];
            if !range.is_finite() || range < 0.0 || !usre[j].is_finite() {
                return Err(Error::DegenerateNeuron {
                    index: j + 1,
                    value: sh_min[j],
                });
            }
        }
        Ok(Self { sh_min, sh_max, usre })
    }
}

/// Hidden activations with the bias element at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenVector {
    sh: Vec<f64>,
}

impl HiddenVector {
    /// `sh[0]` is the bias and must be 1.
    pub fn values(&self) -> &[f64] {
        &self.sh
    }

    pub fn width(&self) -> usize {
        self.sh.len() - 1
    }
}

/// Algorithm 1: one weight scalar, every entry recomputed from its seed.
pub fn project_alg1(y: &InputVector, params: &ReservoirParams) -> Vec<f64> {
    let y = y.y();
    let mut raw = Vec::with_capacity(params.p);
    for j in 1..=params.p {
        let mut sum = 0.0;
        for (i, &yi) in y.iter().enumerate() {
            let mut w = chaos::seed_row(i, params.a, params.b);
            for _ in 1..j {
                w = chaos::logistic_step(w, params.r);
            }
            sum += yi * w;
        }
        raw.push(sum);
    }
    raw
}

/// Algorithm 2: one 785-element working row, re-seeded at the first hidden
/// neuron and advanced once per subsequent neuron. After the call the
/// scratch row holds column P of `W1`.
pub fn project_alg2(y: &InputVector, params: &ReservoirParams, scratch: &mut [f64]) -> Vec<f64> {
    assert_eq!(scratch.len(), INPUT_LEN, "scratch row must have {INPUT_LEN} elements");
    let y = y.y();
    let mut raw = Vec::with_capacity(params.p);
    for j in 1..=params.p {
        let mut sum = 0.0;
        if j == 1 {
            for (i, (&yi, w)) in y.iter().zip(scratch.iter_mut()).enumerate() {
                *w = chaos::seed_row(i, params.a, params.b);
                sum += yi * *w;
            }
        } else {
            for (&yi, w) in y.iter().zip(scratch.iter_mut()) {
                *w = chaos::logistic_step(*w, params.r);
                sum += yi * *w;
            }
        }
        raw.push(sum);
    }
    raw
}

/// Algorithm 3: the matrix is pre-filled, each hidden sum is a plain dot
/// product against a stored column.
pub fn project_alg3(y: &InputVector, w1: &W1Matrix) -> Vec<f64> {
    let y = y.y();
    let p = w1.hidden_width();
    let mut raw = Vec::with_capacity(p);
    for j in 1..=p {
        let mut sum = 0.0;
        for (&yi, &w) in y.iter().zip(w1.column(j)) {
            sum += yi * w;
        }
        raw.push(sum);
    }
    raw
}

/// Fit hidden statistics over a stream of inputs with a caller-chosen
/// projector. Needs at least two inputs whose raw sums differ per neuron.
pub fn fit_hidden_stats<F>(inputs: &[InputVector], mut projector: F) -> Result<HiddenStats>
where
    F: FnMut(&InputVector) -> Vec<f64>,
{
    if inputs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "hidden statistics need at least 2 fitting inputs, got {}",
            inputs.len()
        )));
    }
    let first = projector(&inputs[0]);
    let p = first.len();
    let mut raws = Vec::with_capacity(inputs.len() * p);
    raws.extend_from_slice(&first);
    for input in &inputs[1..] {
        let row = projector(input);
        if row.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "projector returned {} sums, expected {p}",
                row.len()
            )));
        }
        raws.extend_from_slice(&row);
    }
    HiddenStats::from_raw_sums(p, &raws)
}

/// Range normalization of a raw hidden sum:
/// `sh[j] = ((raw - min) / (max - min) - 0.5) - usre`, with the bias
/// element set to 1 at index 0. Test-time values may fall outside the
/// fitted range; no clamping is applied. Degenerate neurons (fitted range
/// zero) normalize to a constant 0.
pub fn normalize_hidden(raw: &[f64], stats: &HiddenStats) -> HiddenVector {
    assert_eq!(raw.len(), stats.width(), "raw sums do not match fitted width");
    let mut sh = Vec::with_capacity(raw.len() + 1);
    sh.push(1.0);
    for (j, &v) in raw.iter().enumerate() {
        let range = stats.sh_max[j] - stats.sh_min[j];
        if range > 0.0 {
            sh.push((v - stats.sh_min[j]) / range - 0.5 - stats.usre[j]);
        } else {
            sh.push(0.0);
        }
    }
    HiddenVector { sh }
}
