//! A complete run description and its execution.

use serde::Serialize;

use crate::drive::{build_schedule, DriveMode, DriveParams, PulseSchedule};
use crate::model::{
    build_grid, validate_resolution, ContinuumGrid, DensityExponent, Hamiltonian, LevelScheme,
    Region, ResolutionReport,
};
use crate::observables::{fit_lifetime, LifetimeFit};
use crate::propagator::{propagate, Propagation, PropagationConfig, StateVector};
use crate::units::ev;
use crate::{Error, Result};

/// Continuum discretization shared by both regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Window half-width W; `None` picks max(15/τ_min, 5Ω, 2 eV).
    pub half_width: Option<f64>,
    pub points: usize,
    pub exponent: DensityExponent,
    /// Required ratio of recurrence time to simulated time.
    pub safety: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: None,
            points: 801,
            exponent: DensityExponent::INVERSE_SQRT,
            safety: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub levels: LevelScheme,
    pub grid: GridSpec,
    pub drive: DriveParams,
    pub propagation: PropagationConfig,
}

/// Everything assembled from a scenario, ready to propagate.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid_s: ContinuumGrid,
    pub grid_p: ContinuumGrid,
    /// In the frame the drive expects.
    pub hamiltonian: Hamiltonian,
    pub schedule: PulseSchedule,
    pub resolution: Vec<ResolutionReport>,
}

#[derive(Debug)]
pub struct Outcome {
    pub setup: Setup,
    pub propagation: Propagation,
    pub fit: Result<LifetimeFit>,
}

impl Scenario {
    /// Rabi energy that actually drives the system (0 when the drive is off).
    pub fn active_rabi(&self) -> f64 {
        if self.drive.mode == DriveMode::Off {
            0.0
        } else {
            self.drive.rabi
        }
    }

    pub fn half_width(&self) -> f64 {
        self.grid.half_width.unwrap_or_else(|| {
            let tau_min = self.levels.tau1.min(self.levels.tau2);
            (15.0 / tau_min).max(5.0 * self.active_rabi()).max(ev(2.0))
        })
    }

    pub fn build(&self) -> Result<Setup> {
        self.levels.validate()?;
        if !(self.grid.safety >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "recurrence safety factor must be at least 1, got {}",
                self.grid.safety
            )));
        }
        let w = self.half_width();
        let grid_s = build_grid(
            Region::S,
            self.levels.eps_auger1(),
            w,
            self.grid.points,
            self.grid.exponent,
            self.levels.tau1,
        )?;
        let grid_p = build_grid(
            Region::P,
            self.levels.eps_auger2(),
            w,
            self.grid.points,
            self.grid.exponent,
            self.levels.tau2,
        )?;
        let schedule = build_schedule(self.drive, self.propagation.t_total)?;
        let h0 = Hamiltonian::assemble(&self.levels, &grid_s, &grid_p)?;
        let hamiltonian = match schedule.frame_shift() {
            s if s != 0.0 => h0.rotating_frame(s),
            _ => h0,
        };
        let resolution = [(&grid_s, self.levels.tau1), (&grid_p, self.levels.tau2)]
            .into_iter()
            .map(|(g, tau)| validate_resolution(g, self.propagation.t_total, tau, self.grid.safety))
            .collect();
        Ok(Setup {
            grid_s,
            grid_p,
            hamiltonian,
            schedule,
            resolution,
        })
    }

    /// Builds, checks the recurrence bound, propagates from |1⟩ and fits the
    /// effective lifetime.
    pub fn run(&self) -> Result<Outcome> {
        let setup = self.build()?;
        let failures: Vec<String> = setup
            .resolution
            .iter()
            .filter(|r| !r.passes())
            .flat_map(|r| r.issues.iter().map(|i| i.message.clone()))
            .collect();
        if !failures.is_empty() {
            return Err(Error::Resolution(failures.join("; ")));
        }
        let psi0 = StateVector::initial(&setup.hamiltonian);
        let propagation = propagate(
            &psi0,
            &setup.hamiltonian,
            &setup.schedule,
            &self.propagation,
        )?;
        let fit = fit_lifetime(&propagation.trace);
        Ok(Outcome {
            setup,
            propagation,
            fit,
        })
    }
}
