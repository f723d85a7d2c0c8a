//! LogNNet: a feedforward MNIST classifier whose input-to-hidden weights are
//! not stored but regenerated on demand from the logistic map
//! `x_{p+1} = 1 - r * x_p^2`.
//!
//! The network is `784:P[:H]:10`. An image is flattened by a fixed
//! permutation (a T-pattern), normalized to `[0, 1]` and prefixed with a
//! bias element. The 785 x P reservoir matrix `W1` is defined entirely by
//! three scalars `(r, A, B)`: row seeds come from `A * sin((i/784) * pi/B)`
//! and successive columns are logistic-map iterates of the seed column.
//! Only the output classifier `W2` is trained (plain per-sample
//! backpropagation), which is what makes the weight storage tiny.
//!
//! Three interchangeable inference algorithms trade memory for CPU:
//!
//! * algorithm 1 keeps a single weight scalar and recomputes every entry
//!   from its seed,
//! * algorithm 2 keeps one 785-element row and advances it once per hidden
//!   neuron,
//! * algorithm 3 materializes the full 785 x P matrix.
//!
//! All three perform the identical floating-point operations in the same
//! order, so their hidden sums are bit-for-bit equal; [`bench`] measures the
//! speed gap and [`network::memory_report`] accounts for the storage gap.

pub mod bench;
pub mod chaos;
pub mod classifier;
pub mod csvout;
pub mod error;
pub mod mnist;
pub mod network;
pub mod reservoir;
pub mod rng;
pub mod tpattern;

pub use chaos::{MapVariant, ReservoirParams, W1Matrix};
pub use classifier::{DenseLayer, Loss, OutputVector};
pub use error::{Error, Result};
pub use mnist::{Dataset, RawImage};
pub use network::{Algorithm, MemoryReport, Model, NetworkConfig, PatternSource};
pub use reservoir::{HiddenStats, HiddenVector};
pub use tpattern::{InputVector, Pattern};
