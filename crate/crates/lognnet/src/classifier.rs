//! The trainable output stack: one or two dense sigmoid layers trained by
//! per-sample backpropagation in stream order.
//!
//! Weight layout per layer: `(fan_in + 1) x fan_out`, row 0 multiplies the
//! bias. For multi-layer stacks the intermediate activation vector gets a
//! bias element prepended before feeding the next layer. The delta rule is
//! the classic one for squared error with sigmoid outputs,
//! `delta = (target - out) * out * (1 - out)`, applied as
//! `w += lr * input * delta`; a cross-entropy variant (`delta = target -
//! out`) is available behind [`Loss`].

use crate::error::{Error, Result};
use crate::reservoir::HiddenVector;
use crate::rng::Xorshift64Star;

pub const CLASSES: usize = 10;

/// Training loss variant. Squared error is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Loss {
    #[default]
    SquaredError,
    CrossEntropy,
}

/// A dense layer of `(fan_in + 1) x fan_out` weights, row 0 for the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    fan_in: usize,
    fan_out: usize,
    w: Vec<f64>,
}

impl DenseLayer {
    /// Initialize with i.i.d. uniform weights on (-0.5, 0.5), generated
    /// row by row (bias row first), each row left to right.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut Xorshift64Star) -> Self {
        assert!(fan_in >= 1 && fan_out >= 1);
        let w = (0..(fan_in + 1) * fan_out).map(|_| rng.next_symmetric()).collect();
        Self { fan_in, fan_out, w }
    }

    pub fn from_weights(fan_in: usize, fan_out: usize, w: Vec<f64>) -> Result<Self> {
        if w.len() != (fan_in + 1) * fan_out {
            return Err(Error::DimensionMismatch(format!(
                "layer {fan_in}+1 x {fan_out} needs {} weights, got {}",
                (fan_in + 1) * fan_out,
                w.len()
            )));
        }
        Ok(Self { fan_in, fan_out, w })
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn fan_out(&self) -> usize {
        self.fan_out
    }

    /// Weight multiplying input `i` (0 = bias) into output `n`.
    pub fn weight(&self, i: usize, n: usize) -> f64 {
        self.w[i * self.fan_out + n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// Number of stored elements, `(fan_in + 1) * fan_out`.
    pub fn element_count(&self) -> usize {
        self.w.len()
    }

    /// `z[n] = sum_i input[i] * w[i][n]` for an input that already carries
    /// its bias element at index 0.
    fn accumulate_z(&self, input: &[f64], z: &mut [f64]) {
        debug_assert_eq!(input.len(), self.fan_in + 1);
        debug_assert_eq!(z.len(), self.fan_out);
        z.fill(0.0);
        for (i, &x) in input.iter().enumerate() {
            let row = &self.w[i * self.fan_out..(i + 1) * self.fan_out];
            for (n, &w) in row.iter().enumerate() {
                z[n] += x * w;
            }
        }
    }
}

/// Final network outputs, each strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct OutputVector {
    s_out: Vec<f64>,
}

impl OutputVector {
    pub fn values(&self) -> &[f64] {
        &self.s_out
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Run the classifier stack. `hidden.values()[0]` is the bias; each further
/// layer gets a bias element prepended to the previous activations.
pub fn forward(hidden: &HiddenVector, layers: &[DenseLayer]) -> OutputVector {
    assert!(!layers.is_empty());
    let mut input = hidden.values().to_vec();
    for layer in layers {
        assert_eq!(
            input.len(),
            layer.fan_in() + 1,
            "layer expects {} inputs (with bias), got {}",
            layer.fan_in() + 1,
            input.len()
        );
        let mut z = vec![0.0; layer.fan_out()];
        layer.accumulate_z(&input, &mut z);
        let mut next = Vec::with_capacity(layer.fan_out() + 1);
        next.push(1.0);
        next.extend(z.iter().map(|&v| sigmoid(v)));
        input = next;
    }
    OutputVector {
        s_out: input[1..].to_vec(),
    }
}

/// Index of the largest output; ties go to the lowest index.
pub fn predict(output: &OutputVector) -> u8 {
    let mut best = 0usize;
    for (n, &v) in output.values().iter().enumerate() {
        if v > output.values()[best] {
            best = n;
        }
    }
    best as u8
}

/// Scratch buffers for the per-sample training step, sized once per epoch.
struct TrainScratch {
    /// Activations per layer, bias element prepended.
    acts: Vec<Vec<f64>>,
    /// Delta per layer output.
    deltas: Vec<Vec<f64>>,
}

impl TrainScratch {
    fn new(layers: &[DenseLayer]) -> Self {
        Self {
            acts: layers.iter().map(|l| vec![0.0; l.fan_out() + 1]).collect(),
            deltas: layers.iter().map(|l| vec![0.0; l.fan_out()]).collect(),
        }
    }
}

/// One pass of per-sample stochastic gradient descent in stream order.
/// Targets are one-hot; deltas for every layer are computed against the
/// pre-update weights, then all layers are updated.
pub fn train_epoch<'a, I>(
    layers: &mut [DenseLayer],
    samples: I,
    learning_rate: f64,
    loss: Loss,
) -> Result<()>
where
    I: IntoIterator<Item = (&'a HiddenVector, u8)>,
{
    assert!(!layers.is_empty());
    let mut scratch = TrainScratch::new(layers);
    for (hidden, label) in samples {
        train_step(layers, hidden.values(), label, learning_rate, loss, &mut scratch)?;
    }
    Ok(())
}

/// Forward pass plus delta computation, all against the current weights.
/// Fills `scratch.acts` (bias-prepended activations) and `scratch.deltas`.
fn forward_backward(
    layers: &[DenseLayer],
    input: &[f64],
    label: u8,
    loss: Loss,
    scratch: &mut TrainScratch,
) {
    let depth = layers.len();

    for li in 0..depth {
        // split borrow: activations of layer li are written from layer li - 1
        let (done, rest) = scratch.acts.split_at_mut(li);
        let prev: &[f64] = if li == 0 { input } else { &done[li - 1] };
        let act = &mut rest[0];
        act[0] = 1.0;
        let out = &mut act[1..];
        layers[li].accumulate_z(prev, out);
        for v in out.iter_mut() {
            *v = sigmoid(*v);
        }
    }

    let last = depth - 1;
    for n in 0..layers[last].fan_out() {
        let out = scratch.acts[last][n + 1];
        let target = if n == label as usize { 1.0 } else { 0.0 };
        scratch.deltas[last][n] = match loss {
            Loss::SquaredError => (target - out) * out * (1.0 - out),
            Loss::CrossEntropy => target - out,
        };
    }

    for li in (0..last).rev() {
        let next = &layers[li + 1];
        let (below, above) = scratch.deltas.split_at_mut(li + 1);
        let delta_next = &above[0];
        let delta_here = &mut below[li];
        for m in 0..layers[li].fan_out() {
            let mut back = 0.0;
            for (n, &d) in delta_next.iter().enumerate() {
                back += next.weight(m + 1, n) * d;
            }
            let a = scratch.acts[li][m + 1];
            delta_here[m] = back * a * (1.0 - a);
        }
    }
}

fn train_step(
    layers: &mut [DenseLayer],
    input: &[f64],
    label: u8,
    lr: f64,
    loss: Loss,
    scratch: &mut TrainScratch,
) -> Result<()> {
    forward_backward(layers, input, label, loss, scratch);

    // apply updates
    let depth = layers.len();
    for li in 0..depth {
        let fan_out = layers[li].fan_out();
        let delta = &scratch.deltas[li];
        let prev: &[f64] = if li == 0 { input } else { &scratch.acts[li - 1] };
        let mut finite = true;
        let w = &mut layers[li].w;
        for (i, &x) in prev.iter().enumerate() {
            let step = lr * x;
            let row = &mut w[i * fan_out..(i + 1) * fan_out];
            for (n, &d) in delta.iter().enumerate() {
                row[n] += step * d;
                finite &= row[n].is_finite();
            }
        }
        if !finite {
            return Err(Error::Diverged { layer: li });
        }
    }
    Ok(())
}
