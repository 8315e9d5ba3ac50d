//! Effective Hamiltonian for two autoionizing states and their continua.
//!
//! Basis order is fixed throughout the crate:
//!
//! ```text
//! index 0            |1⟩ = |v₁v₂⟩
//! index 1            |2⟩ = |v₁v₃⟩
//! 2 .. 2+N_S         |ε_k c⟩, k ∈ S   (coupled to |1⟩)
//! 2+N_S .. 2+N_S+N_P |ε_k c⟩, k ∈ P   (coupled to |2⟩)
//! ```
//!
//! The continua are uniform energy grids; the density of states is folded
//! into the per-bin couplings, so every bin carries weight
//! m_k² = M² ρ(ε_k) dε / ρ(ε_A) and the golden-rule width at ε_A is 2πM².

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::{Error, Result, C64};

/// Index of |1⟩ in the state vector.
pub const STATE_1: usize = 0;
/// Index of |2⟩ in the state vector.
pub const STATE_2: usize = 1;
/// First continuum index.
pub const CONTINUUM_START: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    /// s-symmetry continuum fed by |1⟩.
    S,
    /// p-symmetry continuum fed by |2⟩.
    P,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::S => "S",
            Region::P => "P",
        }
    }
}

/// Bound-state energies, core level and target lifetimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelScheme {
    pub e1: f64,
    pub e2: f64,
    pub eps_c: f64,
    pub tau1: f64,
    /// `f64::INFINITY` for a stable |2⟩.
    pub tau2: f64,
}

impl LevelScheme {
    pub fn new(e1: f64, e2: f64, eps_c: f64, tau1: f64, tau2: f64) -> Result<Self> {
        let levels = Self {
            e1,
            e2,
            eps_c,
            tau1,
            tau2,
        };
        levels.validate()?;
        Ok(levels)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau1 > 0.0) || self.tau1.is_infinite() {
            return Err(Error::InvalidInput(format!(
                "tau1 must be positive and finite, got {}",
                self.tau1
            )));
        }
        if !(self.tau2 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tau2 must be positive or infinite, got {}",
                self.tau2
            )));
        }
        if !(self.eps_auger1() > 0.0) || !(self.eps_auger2() > 0.0) {
            return Err(Error::InvalidInput(format!(
                "Auger energies must be positive (E1 - eps_c = {}, E2 - eps_c = {})",
                self.eps_auger1(),
                self.eps_auger2()
            )));
        }
        Ok(())
    }

    /// Δ = E₂ − E₁.
    pub fn delta(&self) -> f64 {
        self.e2 - self.e1
    }

    /// Kinetic energy of an electron emitted from |1⟩.
    pub fn eps_auger1(&self) -> f64 {
        self.e1 - self.eps_c
    }

    pub fn eps_auger2(&self) -> f64 {
        self.e2 - self.eps_c
    }

    pub fn tau(&self, region: Region) -> f64 {
        match region {
            Region::S => self.tau1,
            Region::P => self.tau2,
        }
    }

    pub fn eps_auger(&self, region: Region) -> f64 {
        match region {
            Region::S => self.eps_auger1(),
            Region::P => self.eps_auger2(),
        }
    }
}

/// Exponent n of the continuum density ρ(ε) ∝ ε^{(n−2)/2}; n = 1 is the
/// free-electron 1/√ε law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct DensityExponent(u8);

impl DensityExponent {
    pub const INVERSE_SQRT: DensityExponent = DensityExponent(1);

    pub fn new(n: u8) -> Result<Self> {
        if (1..=3).contains(&n) {
            Ok(Self(n))
        } else {
            Err(Error::InvalidInput(format!(
                "density exponent must be 1, 2 or 3, got {n}"
            )))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Unnormalized ρ(ε).
    pub fn density(self, eps: f64) -> f64 {
        match self.0 {
            1 => 1.0 / eps.sqrt(),
            2 => 1.0,
            _ => eps.sqrt(),
        }
    }
}

/// Golden-rule coupling M for a lifetime τ: 1/τ = 2π M² ρ(ε_A).
///
/// `tau = ∞` gives `M = 0`.
pub fn lifetime_to_coupling(tau: f64, rho_at_eps_a: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lifetime must be positive, got {tau}"
        )));
    }
    if !(rho_at_eps_a > 0.0) || rho_at_eps_a.is_infinite() {
        return Err(Error::InvalidInput(format!(
            "density of states must be positive and finite, got {rho_at_eps_a}"
        )));
    }
    if tau.is_infinite() {
        return Ok(0.0);
    }
    Ok((1.0 / (2.0 * PI * tau * rho_at_eps_a)).sqrt())
}

/// One discretized continuum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuumGrid {
    pub region: Region,
    /// ε_A the window is centered on.
    pub center: f64,
    pub half_width: f64,
    pub spacing: f64,
    pub exponent: DensityExponent,
    /// Fano coupling M (grid independent).
    pub fano_coupling: f64,
    /// Kinetic energies ε_k, strictly increasing.
    pub energies: Vec<f64>,
    /// Per-bin couplings m_k.
    pub couplings: Vec<f64>,
}

impl ContinuumGrid {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Recurrence time 2π/dε of the discretized continuum.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// Golden-rule width 2π m_k²/dε of bin `k`.
    pub fn local_width(&self, k: usize) -> f64 {
        2.0 * PI * self.couplings[k].powi(2) / self.spacing
    }
}

/// Uniform grid on [ε_A − W, ε_A + W] with Fano couplings scaled by √ρ(ε_k).
///
/// The density is normalized to ρ(ε_A) = 1, so the width at the window
/// center is exactly 1/τ whatever the exponent.
pub fn build_grid(
    region: Region,
    eps_a: f64,
    half_width: f64,
    points: usize,
    exponent: DensityExponent,
    tau: f64,
) -> Result<ContinuumGrid> {
    if points < 3 {
        return Err(Error::InvalidInput(format!(
            "continuum needs at least 3 points, got {points}"
        )));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidInput(format!(
            "window half-width must be positive, got {half_width}"
        )));
    }
    if !(eps_a - half_width > 0.0) {
        return Err(Error::InvalidInput(format!(
            "{} window [{}, {}] reaches the continuum threshold",
            region.name(),
            eps_a - half_width,
            eps_a + half_width
        )));
    }
    let fano = lifetime_to_coupling(tau, 1.0)?;
    let spacing = 2.0 * half_width / (points - 1) as f64;
    let lo = eps_a - half_width;
    let rho_center = exponent.density(eps_a);
    let energies: Vec<f64> = (0..points).map(|k| lo + k as f64 * spacing).collect();
    let couplings = energies
        .iter()
        .map(|&e| fano * (exponent.density(e) * spacing / rho_center).sqrt())
        .collect();
    Ok(ContinuumGrid {
        region,
        center: eps_a,
        half_width,
        spacing,
        exponent,
        fano_coupling: fano,
        energies,
        couplings,
    })
}

/// Hermitian arrowhead Hamiltonian with one time-dependent slot on |1⟩↔|2⟩.
///
/// Diagonal energies are stored relative to `reference_energy` (E₁ in the
/// lab frame), which only changes the global phase of the state. A rotating
/// frame shifts |2⟩ and the P continuum by `frame_shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    diagonal: Vec<f64>,
    couplings: Vec<f64>,
    kinetic: Vec<f64>,
    n_s: usize,
    n_p: usize,
    reference_energy: f64,
    frame_shift: f64,
}

impl Hamiltonian {
    /// Builds H₀ from a level scheme and the two continua. Continuum level
    /// energies are E_k = ε_c + ε_k.
    pub fn assemble(
        levels: &LevelScheme,
        grid_s: &ContinuumGrid,
        grid_p: &ContinuumGrid,
    ) -> Result<Self> {
        levels.validate()?;
        if grid_s.region != Region::S || grid_p.region != Region::P {
            return Err(Error::InvalidInput(
                "grids must be passed in (S, P) order".into(),
            ));
        }
        for (grid, eps_a) in [(grid_s, levels.eps_auger1()), (grid_p, levels.eps_auger2())] {
            if (grid.center - eps_a).abs() > 1e-12 * eps_a.abs().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "{} grid centered at {} but the Auger energy is {}",
                    grid.region.name(),
                    grid.center,
                    eps_a
                )));
            }
        }
        let reference = levels.e1;
        let n_s = grid_s.len();
        let n_p = grid_p.len();
        let dim = CONTINUUM_START + n_s + n_p;
        let mut diagonal = Vec::with_capacity(dim);
        let mut couplings = Vec::with_capacity(dim);
        let mut kinetic = Vec::with_capacity(n_s + n_p);
        diagonal.push(levels.e1 - reference);
        diagonal.push(levels.e2 - reference);
        couplings.extend([0.0, 0.0]);
        for grid in [grid_s, grid_p] {
            for (&e, &m) in grid.energies.iter().zip(&grid.couplings) {
                diagonal.push(levels.eps_c + e - reference);
                couplings.push(m);
                kinetic.push(e);
            }
        }
        Ok(Self {
            diagonal,
            couplings,
            kinetic,
            n_s,
            n_p,
            reference_energy: reference,
            frame_shift: 0.0,
        })
    }

    /// Same operator in a frame rotating at `shift` for |2⟩ and the P
    /// continuum: their diagonal entries drop by `shift`.
    pub fn rotating_frame(&self, shift: f64) -> Self {
        let mut h = self.clone();
        h.diagonal[STATE_2] -= shift;
        let p_start = CONTINUUM_START + self.n_s;
        for d in &mut h.diagonal[p_start..] {
            *d -= shift;
        }
        h.frame_shift += shift;
        h
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn reference_energy(&self) -> f64 {
        self.reference_energy
    }

    pub fn frame_shift(&self) -> f64 {
        self.frame_shift
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Static bound–continuum couplings m_k, indexed like the continuum
    /// part of the state (S then P).
    pub fn continuum_couplings(&self) -> &[f64] {
        &self.couplings[CONTINUUM_START..]
    }

    /// Kinetic energies of all continuum modes, S then P.
    pub fn mode_energies(&self) -> &[f64] {
        &self.kinetic
    }

    pub fn region_of_mode(&self, mode: usize) -> Region {
        if mode < self.n_s {
            Region::S
        } else {
            Region::P
        }
    }

    /// y = H(g) x, where g = ⟨2|H|1⟩ is the drive coupling. O(dim).
    pub fn apply(&self, drive: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        let s = CONTINUUM_START..CONTINUUM_START + self.n_s;
        let p = CONTINUUM_START + self.n_s..self.dim();
        let x1 = x[STATE_1];
        let x2 = x[STATE_2];

        let mut acc1 = C64::new(self.diagonal[STATE_1], 0.0) * x1 + drive.conj() * x2;
        let mut acc2 = drive * x1 + C64::new(self.diagonal[STATE_2], 0.0) * x2;

        for i in s {
            let m = self.couplings[i];
            acc1 += m * x[i];
            y[i] = self.diagonal[i] * x[i] + m * x1;
        }
        for i in p {
            let m = self.couplings[i];
            acc2 += m * x[i];
            y[i] = self.diagonal[i] * x[i] + m * x2;
        }
        y[STATE_1] = acc1;
        y[STATE_2] = acc2;
    }

    /// Dense matrix for oracles and small checks.
    pub fn to_dense(&self, drive: C64) -> DMatrix<C64> {
        let n = self.dim();
        let mut h = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for i in 0..n {
            h[(i, i)] = C64::new(self.diagonal[i], 0.0);
        }
        h[(STATE_2, STATE_1)] = drive;
        h[(STATE_1, STATE_2)] = drive.conj();
        for i in CONTINUUM_START..n {
            let bound = if i < CONTINUUM_START + self.n_s {
                STATE_1
            } else {
                STATE_2
            };
            h[(i, bound)] = C64::new(self.couplings[i], 0.0);
            h[(bound, i)] = C64::new(self.couplings[i], 0.0);
        }
        h
    }

    /// ⟨ψ|H(g)|ψ⟩ (real for normalized or unnormalized ψ).
    pub fn expectation(&self, drive: C64, psi: &[C64]) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply(drive, psi, &mut y);
        psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    /// The run would produce wrong dynamics.
    Error,
    /// Results remain usable but a resolution target is missed.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionIssue {
    pub severity: Severity,
    pub bound: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionReport {
    pub region: Region,
    pub recurrence_time: f64,
    pub simulation_time: f64,
    pub safety: f64,
    /// Grid points per golden-rule linewidth (∞ for an uncoupled continuum).
    pub points_per_linewidth: f64,
    pub issues: Vec<ResolutionIssue>,
}

impl ResolutionReport {
    /// No error-level issue.
    pub fn passes(&self) -> bool {
        self.issues.iter().all(|i| i.severity != Severity::Error)
    }
}

/// Minimum number of grid points per linewidth.
pub const POINTS_PER_LINEWIDTH: f64 = 10.0;

/// Checks the recurrence bound `T_sim · safety < 2π/dε` (error) and the
/// linewidth resolution `dε < (1/τ)/10` (warning).
pub fn validate_resolution(
    grid: &ContinuumGrid,
    simulation_time: f64,
    tau: f64,
    safety: f64,
) -> ResolutionReport {
    let recurrence = grid.recurrence_time();
    let linewidth = 1.0 / tau;
    let points = linewidth / grid.spacing;
    let mut issues = Vec::new();
    if !(simulation_time * safety < recurrence) {
        issues.push(ResolutionIssue {
            severity: Severity::Error,
            bound: "recurrence",
            message: format!(
                "{} continuum: simulation time {:.4} fs x safety {} reaches the recurrence time {:.4} fs",
                grid.region.name(),
                crate::units::to_fs(simulation_time),
                safety,
                crate::units::to_fs(recurrence),
            ),
        });
    }
    if tau.is_finite() && !(points > POINTS_PER_LINEWIDTH) {
        issues.push(ResolutionIssue {
            severity: Severity::Warning,
            bound: "linewidth",
            message: format!(
                "{} continuum: {:.2} points per linewidth (< {})",
                grid.region.name(),
                points,
                POINTS_PER_LINEWIDTH
            ),
        });
    }
    ResolutionReport {
        region: grid.region,
        recurrence_time: recurrence,
        simulation_time,
        safety,
        points_per_linewidth: points,
        issues,
    }
}
