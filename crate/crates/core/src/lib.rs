//! Real-time simulation of Auger decay slowed down by repeated π-pulse
//! "measurements".
//!
//! The model is two bound two-electron states |1⟩ = |v₁v₂⟩ and
//! |2⟩ = |v₁v₃⟩, each coupled to its own discretized continuum
//! (|1⟩ ↔ S, |2⟩ ↔ P), with a laser coupling |1⟩ ↔ |2⟩. The pieces:
//!
//! - [`units`]: atomic units and the eV / fs / TW·cm⁻² boundary.
//! - [`model`]: level scheme, continuum grids and the arrowhead Hamiltonian.
//! - [`drive`]: π-pulse trains, continuous drive and the rotating-wave variant.
//! - [`propagator`]: Lanczos short-time propagation plus a dense oracle.
//! - [`observables`]: populations, lifetimes, lineshapes, peaks and scans.
//! - [`entanglement`]: two-mode concurrence between continuum modes.
//! - [`simulation`]: a full scenario description and its execution.
//!
//! All quantities are Hartree atomic units unless a name says otherwise.

use thiserror::Error;

pub mod drive;
pub mod entanglement;
pub mod model;
pub mod observables;
pub mod propagator;
pub mod simulation;
pub mod units;

pub use num_complex::Complex64 as C64;

pub use drive::{DriveMode, DriveParams, Envelope, PulseSchedule};
pub use entanglement::ConcurrenceMatrix;
pub use model::{ContinuumGrid, Hamiltonian, LevelScheme, Region};
pub use observables::{LifetimeFit, ObservableTrace};
pub use propagator::{PropagationConfig, StateVector};
pub use simulation::{GridSpec, Scenario};
pub use units::{Dimension, Quantity, Unit};

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        expected: units::Dimension,
        found: units::Dimension,
    },
    #[error("unknown unit suffix `{suffix}`")]
    UnknownUnit { suffix: String },
    #[error("malformed quantity `{text}`")]
    MalformedQuantity { text: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("resolution check failed: {0}")]
    Resolution(String),
    #[error("Krylov step did not converge at t = {time} after {subdivisions} subdivisions (residual {residual:e})")]
    NonConvergence {
        time: f64,
        subdivisions: usize,
        residual: f64,
    },
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
