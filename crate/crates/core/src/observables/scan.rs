use rayon::prelude::*;
use serde::Serialize;

use super::LifetimeFit;
use crate::drive::DriveMode;
use crate::simulation::Scenario;
use crate::units::rabi_from_intensity;
use crate::{Error, Result};

/// Parameter varied across a scan. Values are in atomic units (Ha² for
/// `RabiSquared`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ScanAxis {
    RabiSquared,
    Intensity { dipole: f64 },
    MeasurementTime,
    Delay,
    Photon,
}

impl ScanAxis {
    pub fn name(&self) -> &'static str {
        match self {
            ScanAxis::RabiSquared => "Omega2",
            ScanAxis::Intensity { .. } => "intensity",
            ScanAxis::MeasurementTime => "t_m",
            ScanAxis::Delay => "dt_delay",
            ScanAxis::Photon => "omega",
        }
    }

    /// Copy of `base` with this axis set to `value`. A zero Rabi energy
    /// switches the drive off.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        match *self {
            ScanAxis::RabiSquared => {
                if value < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "Omega² must be non-negative, got {value}"
                    )));
                }
                s.drive.rabi = value.sqrt();
            }
            ScanAxis::Intensity { dipole } => {
                s.drive.rabi = rabi_from_intensity(value, dipole)?;
            }
            ScanAxis::MeasurementTime => s.drive.t_m = value,
            ScanAxis::Delay => s.drive.dt_delay = value,
            ScanAxis::Photon => {
                s.drive.photon = value;
                s.drive.detuning = value - s.levels.delta();
            }
        }
        if s.drive.rabi == 0.0 {
            s.drive.mode = DriveMode::Off;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub value: f64,
    pub fit: std::result::Result<LifetimeFit, String>,
}

impl ScanRow {
    pub fn tau_eff(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.tau_eff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub axis: ScanAxis,
    pub rows: Vec<ScanRow>,
}

/// Zeno / anti-Zeno classification of a scan against the unperturbed τ₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZenoVerdict {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Some point decays faster than τ₁(1 − tolerance).
    pub anti_zeno: bool,
    /// Some point decays slower than τ₁(1 + tolerance).
    pub zeno: bool,
}

impl ScanTable {
    pub fn taus(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(ScanRow::tau_eff).collect()
    }

    pub fn verdict(&self, tau1: f64, tolerance: f64) -> ZenoVerdict {
        let ratios: Vec<f64> = self
            .rows
            .iter()
            .filter_map(ScanRow::tau_eff)
            .map(|t| t / tau1)
            .collect();
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ZenoVerdict {
            min_ratio,
            max_ratio,
            anti_zeno: min_ratio < 1.0 - tolerance,
            zeno: max_ratio > 1.0 + tolerance,
        }
    }
}

/// Runs `base` once per value, in parallel on the current rayon pool. A
/// failing point is recorded in its row and does not stop the scan.
pub fn scan(base: &Scenario, axis: ScanAxis, values: &[f64]) -> Result<ScanTable> {
    if values.is_empty() {
        return Err(Error::InvalidInput("scan needs at least one value".into()));
    }
    let rows = values
        .par_iter()
        .map(|&value| {
            let fit = axis
                .apply(base, value)
                .and_then(|s| s.run())
                .and_then(|o| o.fit)
                .map_err(|e| e.to_string());
            ScanRow { value, fit }
        })
        .collect();
    Ok(ScanTable { axis, rows })
}

/// Effective lifetime across ≥ 3 values of one protocol parameter.
pub fn zeno_phase_scan(base: &Scenario, axis: ScanAxis, values: &[f64]) -> Result<ScanTable> {
    if values.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "a Zeno phase scan needs at least 3 points, got {}",
            values.len()
        )));
    }
    scan(base, axis, values)
}
