//! Monte Carlo realization of wave mechanics from ensembles of localized
//! field configurations (solitons).
//!
//! The crate is organized by experiment:
//!
//! * [`soliton`]: soliton profiles, field normalization, lattice sums that
//!   rebuild a de Broglie plane wave, and a plane-wave fitter.
//! * [`ensemble`]: the N-trial stochastic wave function, its coarse-grained
//!   density and operator expectation values.
//! * [`phase_qubits`]: center matching, random trial phases and dichotomic
//!   signal correlations.
//! * [`wiener`]: Brownian paths and the stochastic transform of a function
//!   on `[0, 1]`.
//! * [`diffraction`]: single-slit landing statistics from a monotone
//!   transport of the transverse probability measure.
//! * [`stats`]: counter-based random streams and goodness-of-fit tests.
//!
//! Natural units are used throughout (`hbar = c = 1`).

pub mod diffraction;
pub mod ensemble;
mod error;
mod grid;
pub mod phase_qubits;
pub mod soliton;
pub mod spectral;
pub mod stats;
pub mod wiener;

pub use ensemble::{CenterDistribution, CoarseGrainSpec, ObservableGenerator, StochasticWaveFunction, Trial};
pub use error::{Error, Result};
pub use grid::Grid1D;
pub use num_complex::Complex64;
pub use phase_qubits::{DichotomicConfig, Etalon, MatchResult, PhaseSource, RandomPhase};
pub use soliton::{FieldPair, PlaneWaveParams, SolitonProfile};
pub use stats::{RngStream, TestReport};
