use serde::Serialize;

use super::ObservableTrace;
use crate::{Error, Result};

/// Below this r² a log-linear fit is flagged as non-exponential.
pub const MIN_R_SQUARED: f64 = 0.98;

/// Fraction of the trace (start, end) used for the log-linear fit.
pub const FIT_WINDOW: (f64, f64) = (0.2, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FitMethod {
    LogLinearEnvelope,
    OneOverE,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeFit {
    /// −1/slope of ln P_bound over the fit window.
    pub tau_eff: f64,
    /// First time P_bound crosses 1/e, if it does within the trace.
    pub tau_one_over_e: Option<f64>,
    pub fit_window: [f64; 2],
    pub r_squared: f64,
    pub samples: usize,
    pub method: FitMethod,
    /// r² ≥ [`MIN_R_SQUARED`].
    pub accepted: bool,
}

/// Log-linear fit of `p(t)` on [0.2·T, 0.9·T] with T the last time, plus
/// the 1/e crossing (log-interpolated between samples).
pub fn fit_decay(times: &[f64], p: &[f64]) -> Result<LifetimeFit> {
    if times.len() != p.len() {
        return Err(Error::Fit("times and populations differ in length".into()));
    }
    let t_end = times.last().copied().unwrap_or(0.0);
    if !(t_end > 0.0) {
        return Err(Error::Fit("trace has no extent in time".into()));
    }
    let lo = FIT_WINDOW.0 * t_end;
    let hi = FIT_WINDOW.1 * t_end;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(p)
        .filter(|(&t, &y)| t >= lo && t <= hi && y > 0.0)
        .map(|(&t, &y)| (t, y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} positive samples in the fit window [{lo}, {hi}]",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Fit(format!(
            "population does not decay (slope {slope})"
        )));
    }
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };

    Ok(LifetimeFit {
        tau_eff: -1.0 / slope,
        tau_one_over_e: one_over_e_crossing(times, p),
        fit_window: [lo, hi],
        r_squared,
        samples: pts.len(),
        method: FitMethod::LogLinearEnvelope,
        accepted: r_squared >= MIN_R_SQUARED,
    })
}

fn one_over_e_crossing(times: &[f64], p: &[f64]) -> Option<f64> {
    let target = (-1.0f64).exp();
    let idx = p.iter().position(|&y| y <= target)?;
    if idx == 0 {
        return Some(times[0]);
    }
    let (t0, t1) = (times[idx - 1], times[idx]);
    let (y0, y1) = (p[idx - 1], p[idx]);
    if y1 > 0.0 && y0 > 0.0 && y0 != y1 {
        let f = (target.ln() - y0.ln()) / (y1.ln() - y0.ln());
        Some(t0 + f * (t1 - t0))
    } else {
        Some(t1)
    }
}

/// Effective lifetime of the bound-state population of a trace: the
/// cycle-end envelope when pulsed, every sample otherwise.
pub fn fit_lifetime(trace: &ObservableTrace) -> Result<LifetimeFit> {
    let (t, p) = trace.envelope();
    fit_decay(&t, &p)
}
