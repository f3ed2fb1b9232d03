//! Classical simulation of linear combinations of quantum neural networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`state`], [`gate`], [`observable`], [`haar`] and [`rng`] form a dense
//!   statevector simulator with seeded, stream-addressable randomness.
//! - [`coefficient`] and [`model`] assemble the coefficient tree and the
//!   controlled k-local blocks into a single [`circuit::Circuit`].
//! - [`gradients`] provides parameter-shift, finite-difference and adjoint
//!   gradients plus Monte-Carlo gradient statistics.
//! - [`experiments`] runs the gradient-variance scans and the block-spectrum
//!   (group action) experiment.
//! - [`mnist`] loads IDX files and trains the 4-class classifier.

pub mod circuit;
pub mod coefficient;
pub mod error;
pub mod experiments;
pub mod gate;
pub mod gradients;
pub mod haar;
pub mod mnist;
pub mod model;
pub mod observable;
pub mod rng;
pub mod state;

pub use circuit::Circuit;
pub use coefficient::CoefficientLayer;
pub use error::{Error, Result};
pub use gate::{Control, GateOp, Instruction, ParamRef};
pub use gradients::{GradStats, Probe};
pub use model::{Architecture, BlockKind, LcqnnModel, ParamId};
pub use observable::Observable;
pub use rng::RngStream;
pub use state::StateVector;

pub use num_complex::Complex64 as C64;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;
