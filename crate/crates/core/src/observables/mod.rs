//! Populations, lifetimes, spectra and peak diagnostics.

mod fit;
mod scan;
mod spectrum;

pub use fit::{fit_decay, fit_lifetime, FitMethod, LifetimeFit, MIN_R_SQUARED};
pub use scan::{scan, zeno_phase_scan, ScanAxis, ScanRow, ScanTable, ZenoVerdict};
pub use spectrum::{
    find_peaks, fit_lorentzian, lineshape, stark_splittings, LorentzianFit, Peak, RegionSpectrum,
    Spectrum, StarkDiagnostic, DEFAULT_NOISE_FLOOR,
};

use serde::Serialize;

use crate::drive::DriveMode;
use crate::model::Hamiltonian;
use crate::propagator::StateVector;

/// Orbital occupations of the two active electrons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitalPopulations {
    pub n_c: f64,
    pub n_v1: f64,
    pub n_v2: f64,
    pub n_v3: f64,
}

impl OrbitalPopulations {
    /// n_c + n_v1 + n_v2 + n_v3 + Σ n_εk; 2 for a normalized state.
    pub fn electron_count(&self) -> f64 {
        // Σ_k n_εk equals n_c since every |k⟩ = |ε_k c⟩ holds one of each.
        self.n_c + self.n_v1 + self.n_v2 + self.n_v3 + self.n_c
    }
}

/// With |1⟩ = |v₁v₂⟩, |2⟩ = |v₁v₃⟩ and |k⟩ = |ε_k c⟩.
pub fn orbital_populations(psi: &StateVector) -> OrbitalPopulations {
    let p1 = psi.a1().norm_sqr();
    let p2 = psi.a2().norm_sqr();
    let n_c = psi.continuum().iter().map(|b| b.norm_sqr()).sum();
    OrbitalPopulations {
        n_c,
        n_v1: p1 + p2,
        n_v2: p1,
        n_v3: p2,
    }
}

/// Occupations n_εk = |b_k|² of every continuum mode (S then P).
pub fn continuum_populations(psi: &StateVector) -> Vec<f64> {
    psi.continuum().iter().map(|b| b.norm_sqr()).collect()
}

/// A(ε_k, t) for all modes at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSnapshot {
    pub time: f64,
    pub populations: Vec<f64>,
}

/// Time series recorded during a propagation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableTrace {
    pub mode: DriveMode,
    pub times: Vec<f64>,
    pub n_c: Vec<f64>,
    pub n_v1: Vec<f64>,
    pub n_v2: Vec<f64>,
    pub n_v3: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p_bound: Vec<f64>,
    /// Sample sits at t = 0 or at the end of a measurement cycle.
    pub cycle_boundary: Vec<bool>,
    pub spectra: Vec<SpectrumSnapshot>,
    /// Kinetic energies of the continuum modes, S then P.
    pub mode_energies: Vec<f64>,
    pub n_s: usize,
    pub n_p: usize,
    pub max_norm_drift: f64,
    pub max_sum_rule_error: f64,
}

impl ObservableTrace {
    pub fn new(h: &Hamiltonian, mode: DriveMode) -> Self {
        Self {
            mode,
            times: Vec::new(),
            n_c: Vec::new(),
            n_v1: Vec::new(),
            n_v2: Vec::new(),
            n_v3: Vec::new(),
            p1: Vec::new(),
            p2: Vec::new(),
            p_bound: Vec::new(),
            cycle_boundary: Vec::new(),
            spectra: Vec::new(),
            mode_energies: h.mode_energies().to_vec(),
            n_s: h.n_s(),
            n_p: h.n_p(),
            max_norm_drift: 0.0,
            max_sum_rule_error: 0.0,
        }
    }

    pub fn record(&mut self, t: f64, psi: &StateVector, cycle_boundary: bool) {
        let pops = orbital_populations(psi);
        let norm = psi.norm_sqr();
        self.times.push(t);
        self.n_c.push(pops.n_c);
        self.n_v1.push(pops.n_v1);
        self.n_v2.push(pops.n_v2);
        self.n_v3.push(pops.n_v3);
        self.p1.push(pops.n_v2);
        self.p2.push(pops.n_v3);
        self.p_bound.push(pops.n_v1);
        self.cycle_boundary.push(cycle_boundary);
        self.max_norm_drift = self.max_norm_drift.max((norm - 1.0).abs());
        self.max_sum_rule_error = self
            .max_sum_rule_error
            .max((pops.electron_count() - 2.0).abs());
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn spectrum_at(&self, t: f64) -> Option<&SpectrumSnapshot> {
        self.spectra
            .iter()
            .find(|s| (s.time - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// (t, P_bound) pairs used for lifetime extraction: cycle ends for a
    /// pulsed drive, every sample otherwise.
    pub fn envelope(&self) -> (Vec<f64>, Vec<f64>) {
        let pulsed = self.mode.is_pulsed();
        self.times
            .iter()
            .zip(&self.p_bound)
            .zip(&self.cycle_boundary)
            .filter(|(_, &c)| !pulsed || c)
            .map(|((&t, &p), _)| (t, p))
            .unzip()
    }
}
