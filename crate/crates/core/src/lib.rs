//! Quantum operations, their time-reversal transforms and symmetries.
//!
//! Maps are finite-dimensional and stored as Choi matrices. The modules
//! build on each other in this order:
//!
//! - [`matrix`]: dense complex linear algebra, partial traces, Haar sampling.
//! - [`states`]: density matrices, fidelity, conditioning, purification.
//! - [`operations`]: CP maps, quantum operations, Kraus forms, instruments.
//! - [`tsqt`]: the time-symmetric subset of operations and instruments.
//! - [`reversal`]: double transpose, scaled adjoint/transpose reversals,
//!   Petz and Crooks reversals.
//! - [`symmetry`]: state and operation symmetries, their decomposition, and
//!   the numeric no-go search.

pub mod error;
pub mod matrix;
pub mod operations;
pub mod reversal;
pub mod states;
pub mod symmetry;
pub mod tolerance;
pub mod tsqt;

pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
pub use operations::{CpMap, Instrument, KrausForm, QuantumOperation};
pub use states::DensityMatrix;
pub use tolerance::Tolerances;
