//! Reservoir weight generation from the logistic map, plus chaos
//! diagnostics (Lyapunov exponent, bifurcation data).
//!
//! The working recurrence is `x_{p+1} = 1 - r * x_p^2`, which keeps orbits
//! inside `[1 - r, 1]` for `r` in (0, 2] and seeds in [-1, 1]. The seed row
//! is `W1[i][1] = A * sin((i / 784) * pi / B)` for input index `i` in
//! 0..=784, and column `p + 1` is the elementwise logistic step of column
//! `p`. Every entry therefore depends only on `(i, p, r, A, B)` and can be
//! recomputed on demand; [`weight_at`] and [`W1Matrix`] perform the exact
//! same floating-point sequence, so they agree to the bit.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mnist::IMAGE_PIXELS;
use crate::tpattern::INPUT_LEN;

/// Parameters defining the whole reservoir: logistic parameter `r`, seed
/// amplitude `a`, seed period divisor `b`, hidden width `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservoirParams {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub p: usize,
}

impl ReservoirParams {
    pub const DEFAULT_R: f64 = 1.885;
    pub const DEFAULT_A: f64 = 0.3;
    pub const DEFAULT_B: f64 = 5.9;

    pub fn new(r: f64, a: f64, b: f64, p: usize) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 || r > 2.0 {
            return Err(Error::InvalidParameter(format!(
                "logistic parameter r must be in (0, 2], got {r} (orbits would be unbounded)"
            )));
        }
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!("seed amplitude A must be finite, got {a}")));
        }
        if !b.is_finite() || b == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "seed divisor B must be finite and nonzero, got {b}"
            )));
        }
        if p == 0 {
            return Err(Error::InvalidParameter("hidden width P must be at least 1".into()));
        }
        Ok(Self { r, a, b, p })
    }

    pub fn with_defaults(p: usize) -> Result<Self> {
        Self::new(Self::DEFAULT_R, Self::DEFAULT_A, Self::DEFAULT_B, p)
    }
}

/// Seed value for input index `i`: `A * sin((i / 784) * pi / B)`.
#[inline]
pub fn seed_row(i: usize, a: f64, b: f64) -> f64 {
    a * ((i as f64 / IMAGE_PIXELS as f64) * PI / b).sin()
}

/// One logistic-map step, `1 - r * x^2`.
#[inline]
pub fn logistic_step(x: f64, r: f64) -> f64 {
    1.0 - r * x * x
}

/// Reservoir weight for input `i` and hidden column `p` (1-based): the
/// logistic step applied `p - 1` times to the seed.
#[inline]
pub fn weight_at(i: usize, p: usize, params: &ReservoirParams) -> f64 {
    debug_assert!(p >= 1);
    let mut x = seed_row(i, params.a, params.b);
    for _ in 1..p {
        x = logistic_step(x, params.r);
    }
    x
}

/// The fully materialized 785 x P reservoir matrix, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct W1Matrix {
    p: usize,
    cols: Vec<f64>,
}

impl W1Matrix {
    pub fn build(params: &ReservoirParams) -> Self {
        let p = params.p;
        let mut cols = vec![0.0; INPUT_LEN * p];
        for i in 0..INPUT_LEN {
            cols[i] = seed_row(i, params.a, params.b);
        }
        for j in 1..p {
            let (prev, rest) = cols.split_at_mut(j * INPUT_LEN);
            let prev = &prev[(j - 1) * INPUT_LEN..];
            for i in 0..INPUT_LEN {
                rest[i] = logistic_step(prev[i], params.r);
            }
        }
        Self { p, cols }
    }

    pub fn hidden_width(&self) -> usize {
        self.p
    }

    /// Entry for input `i`, hidden column `p` (1-based, matching [`weight_at`]).
    pub fn entry(&self, i: usize, p: usize) -> f64 {
        assert!(p >= 1 && p <= self.p, "column {p} out of 1..={}", self.p);
        self.cols[(p - 1) * INPUT_LEN + i]
    }

    /// Column `p` (1-based) as a 785-element slice.
    pub fn column(&self, p: usize) -> &[f64] {
        assert!(p >= 1 && p <= self.p, "column {p} out of 1..={}", self.p);
        &self.cols[(p - 1) * INPUT_LEN..p * INPUT_LEN]
    }
}

/// Materialize the full matrix (the storage behind inference algorithm 3).
pub fn materialize_w1(params: &ReservoirParams) -> W1Matrix {
    W1Matrix::build(params)
}

/// Alternative algebraic forms of the logistic map. Only `Shifted` drives
/// the reservoir; the others are available for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapVariant {
    /// `x -> 1 - r * x^2`, bounded on [-1, 1] for r in (0, 2].
    Shifted { r: f64 },
    /// `x -> a * x * (1 - x)`, bounded on [0, 1] for a in (0, 4].
    Classic { a: f64 },
    /// `x -> x^2 + c`, bounded for c in [-2, 0.25].
    Quadratic { c: f64 },
}

impl MapVariant {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            MapVariant::Shifted { r } => r.is_finite() && r > 0.0 && r <= 2.0,
            MapVariant::Classic { a } => a.is_finite() && a > 0.0 && a <= 4.0,
            MapVariant::Quadratic { c } => c.is_finite() && (-2.0..=0.25).contains(&c),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "map parameter outside the bounded range: {self:?}"
            )))
        }
    }

    #[inline]
    pub fn step(&self, x: f64) -> f64 {
        match *self {
            MapVariant::Shifted { r } => 1.0 - r * x * x,
            MapVariant::Classic { a } => a * x * (1.0 - x),
            MapVariant::Quadratic { c } => x * x + c,
        }
    }

    /// Derivative of the step with respect to x.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            MapVariant::Shifted { r } => -2.0 * r * x,
            MapVariant::Classic { a } => a * (1.0 - 2.0 * x),
            MapVariant::Quadratic { .. } => 2.0 * x,
        }
    }

    /// A generic orbit start well inside every variant's basin.
    fn default_x0(&self) -> f64 {
        match self {
            MapVariant::Classic { .. } => 0.37,
            _ => DEFAULT_X0,
        }
    }
}

pub const DEFAULT_X0: f64 = 0.1;
pub const DEFAULT_TRANSIENT: usize = 1_000;
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Lyapunov exponent estimate for an arbitrary map variant:
/// `(1 / samples) * sum of ln |f'(x_n)|` over the post-transient orbit.
/// Iterates where the derivative is exactly zero are skipped (for generic
/// parameters a measure-zero event; at superstable parameters, where the
/// cycle passes through the map's critical point, the skipping makes the
/// estimate finite instead of the mathematical -infinity).
pub fn lyapunov_map(map: MapVariant, x0: f64, transient: usize, samples: usize) -> f64 {
    let mut x = x0;
    for _ in 0..transient {
        x = map.step(x);
    }
    let mut sum = 0.0;
    for _ in 0..samples {
        let d = map.derivative(x);
        if d != 0.0 {
            sum += d.abs().ln();
        }
        x = map.step(x);
    }
    sum / samples as f64
}

/// Lyapunov exponent of the working map `x -> 1 - r * x^2`.
pub fn lyapunov(r: f64, x0: f64, transient: usize, samples: usize) -> f64 {
    lyapunov_map(MapVariant::Shifted { r }, x0, transient, samples)
}

/// [`lyapunov`] with the documented defaults (x0 = 0.1, transient = 1000,
/// samples = 100000).
pub fn lyapunov_default(r: f64) -> f64 {
    lyapunov(r, DEFAULT_X0, DEFAULT_TRANSIENT, DEFAULT_SAMPLES)
}

/// Post-transient orbit samples for each grid value of r, as (r, x) points
/// ready for scatter plotting.
pub fn bifurcation(r_grid: &[f64], transient: usize, samples: usize) -> Vec<(f64, f64)> {
    bifurcation_map(|r| MapVariant::Shifted { r }, r_grid, transient, samples)
}

fn bifurcation_map(
    make: impl Fn(f64) -> MapVariant,
    r_grid: &[f64],
    transient: usize,
    samples: usize,
) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(r_grid.len() * samples);
    for &r in r_grid {
        let map = make(r);
        let mut x = map.default_x0();
        for _ in 0..transient {
            x = map.step(x);
        }
        for _ in 0..samples {
            out.push((r, x));
            x = map.step(x);
        }
    }
    out
}
