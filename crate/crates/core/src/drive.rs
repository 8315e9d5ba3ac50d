//! Laser coupling between |1⟩ and |2⟩.
//!
//! The full field is H₁(t) = Ω f(t) sin(ωt) (|2⟩⟨1| + h.c.) with a square
//! envelope f. In the rotating-wave modes the Hamiltonian is moved to a
//! frame rotating at Δ = E₂ − E₁ for |2⟩ and the P continuum, and the
//! coupling becomes (Ω/2) f(t) e^{−iδt} with δ = ω − Δ.
//!
//! A measurement cycle is `[π-pulse][t_m][π-pulse][Δt]`, t_π = π/Ω.

use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DriveMode {
    Off,
    Pulsed,
    Continuous,
    RwaPulsed,
    RwaContinuous,
}

impl DriveMode {
    pub fn is_rwa(self) -> bool {
        matches!(self, DriveMode::RwaPulsed | DriveMode::RwaContinuous)
    }

    pub fn is_pulsed(self) -> bool {
        matches!(self, DriveMode::Pulsed | DriveMode::RwaPulsed)
    }

    pub fn name(self) -> &'static str {
        match self {
            DriveMode::Off => "off",
            DriveMode::Pulsed => "pulsed",
            DriveMode::Continuous => "continuous",
            DriveMode::RwaPulsed => "rwa_pulsed",
            DriveMode::RwaContinuous => "rwa_continuous",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "off" => DriveMode::Off,
            "pulsed" => DriveMode::Pulsed,
            "continuous" => DriveMode::Continuous,
            "rwa_pulsed" => DriveMode::RwaPulsed,
            "rwa_continuous" => DriveMode::RwaContinuous,
            other => return Err(Error::InvalidInput(format!("unknown drive mode `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Envelope {
    Square,
    /// sin² ramps of the given duration at both edges of every window.
    CosineRamp {
        ramp: f64,
    },
}

/// Everything needed to lay out the drive, before windows are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveParams {
    pub mode: DriveMode,
    /// ħΩ.
    pub rabi: f64,
    /// ħω.
    pub photon: f64,
    /// δ = ω − Δ.
    pub detuning: f64,
    pub t_m: f64,
    pub dt_delay: f64,
    pub envelope: Envelope,
    /// Restart the carrier phase at every pulse instead of using absolute time.
    pub phase_reset: bool,
}

impl DriveParams {
    pub fn off() -> Self {
        Self {
            mode: DriveMode::Off,
            rabi: 0.0,
            photon: 0.0,
            detuning: 0.0,
            t_m: 0.0,
            dt_delay: 0.0,
            envelope: Envelope::Square,
            phase_reset: false,
        }
    }

    /// Energy splitting Δ the drive is tuned against.
    pub fn transition(&self) -> f64 {
        self.photon - self.detuning
    }
}

/// Half-open interval [start, end) where the envelope is on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSchedule {
    pub params: DriveParams,
    /// π/Ω, or 0 when the drive is off.
    pub t_pi: f64,
    pub t_total: f64,
    pub windows: Vec<Window>,
    /// Ends of completed measurement cycles (pulsed modes only).
    pub cycle_ends: Vec<f64>,
}

impl PulseSchedule {
    pub fn mode(&self) -> DriveMode {
        self.params.mode
    }

    /// 2·t_π + t_m + Δt.
    pub fn cycle_period(&self) -> f64 {
        2.0 * self.t_pi + self.params.t_m + self.params.dt_delay
    }

    pub fn is_active(&self) -> bool {
        self.params.mode != DriveMode::Off
    }

    /// Total time the envelope is on.
    pub fn on_time(&self) -> f64 {
        self.windows.iter().map(Window::duration).sum()
    }

    /// Window containing `t`, if any.
    pub fn window_at(&self, t: f64) -> Option<&Window> {
        let idx = self.windows.partition_point(|w| w.end <= t);
        self.windows.get(idx).filter(|w| w.contains(t))
    }

    /// Every time at which the envelope switches.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = Vec::with_capacity(2 * self.windows.len());
        for w in &self.windows {
            edges.push(w.start);
            edges.push(w.end);
            if let Envelope::CosineRamp { ramp } = self.params.envelope {
                let r = ramp.min(w.duration() / 2.0);
                edges.push(w.start + r);
                edges.push(w.end - r);
            }
        }
        edges
    }

    fn envelope_at(&self, w: &Window, t: f64) -> f64 {
        match self.params.envelope {
            Envelope::Square => 1.0,
            Envelope::CosineRamp { ramp } => {
                let r = ramp.min(w.duration() / 2.0);
                if r <= 0.0 {
                    return 1.0;
                }
                let x = ((t - w.start).min(w.end - t) / r).clamp(0.0, 1.0);
                (0.5 * PI * x).sin().powi(2)
            }
        }
    }

    /// The ⟨2|H|1⟩ element at time `t`.
    pub fn coupling_at(&self, t: f64) -> C64 {
        if t < 0.0 || !self.is_active() {
            return C64::new(0.0, 0.0);
        }
        let Some(w) = self.window_at(t) else {
            return C64::new(0.0, 0.0);
        };
        let f = self.envelope_at(w, t);
        let phase_time = if self.params.phase_reset {
            t - w.start
        } else {
            t
        };
        let p = &self.params;
        if p.mode.is_rwa() {
            C64::from_polar(0.5 * p.rabi * f, -p.detuning * phase_time)
        } else {
            C64::new(p.rabi * f * (p.photon * phase_time).sin(), 0.0)
        }
    }

    /// Energy shift of |2⟩ and the P continuum in the frame this schedule
    /// expects (Δ for the RWA modes, 0 otherwise).
    pub fn frame_shift(&self) -> f64 {
        if self.params.mode.is_rwa() {
            self.params.transition()
        } else {
            0.0
        }
    }
}

/// Resolves the pulse windows up to `t_total`.
///
/// Pulsed modes repeat `[π][t_m][π][Δt]` until `t_total` (the last window is
/// clipped); continuous modes have the single window [0, t_total).
pub fn build_schedule(params: DriveParams, t_total: f64) -> Result<PulseSchedule> {
    if !(t_total > 0.0) {
        return Err(Error::InvalidInput(format!(
            "total time must be positive, got {t_total}"
        )));
    }
    if params.mode == DriveMode::Off {
        return Ok(PulseSchedule {
            params,
            t_pi: 0.0,
            t_total,
            windows: Vec::new(),
            cycle_ends: Vec::new(),
        });
    }
    if !(params.rabi > 0.0) || params.rabi.is_infinite() {
        return Err(Error::InvalidInput(format!(
            "drive mode {} needs a positive Rabi energy, got {}",
            params.mode.name(),
            params.rabi
        )));
    }
    if !params.mode.is_rwa() && !(params.photon > 0.0) {
        return Err(Error::InvalidInput(format!(
            "full-field drive needs a positive photon energy, got {}",
            params.photon
        )));
    }
    if params.t_m < 0.0 || params.dt_delay < 0.0 {
        return Err(Error::InvalidInput(
            "t_m and dt_delay must be non-negative".into(),
        ));
    }
    if let Envelope::CosineRamp { ramp } = params.envelope {
        if !(ramp >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ramp must be non-negative, got {ramp}"
            )));
        }
    }
    let t_pi = PI / params.rabi;
    let mut windows = Vec::new();
    let mut cycle_ends = Vec::new();
    if params.mode.is_pulsed() {
        let period = 2.0 * t_pi + params.t_m + params.dt_delay;
        let mut cycle = 0usize;
        loop {
            let start = cycle as f64 * period;
            if start >= t_total {
                break;
            }
            let first = Window {
                start,
                end: start + t_pi,
            };
            let second_start = start + t_pi + params.t_m;
            let second = Window {
                start: second_start,
                end: second_start + t_pi,
            };
            for w in [first, second] {
                if w.start < t_total {
                    windows.push(Window {
                        start: w.start,
                        end: w.end.min(t_total),
                    });
                }
            }
            let end = start + period;
            if end <= t_total * (1.0 + 1e-14) {
                cycle_ends.push(end);
            }
            cycle += 1;
        }
    } else {
        windows.push(Window {
            start: 0.0,
            end: t_total,
        });
    }
    Ok(PulseSchedule {
        params,
        t_pi,
        t_total,
        windows,
        cycle_ends,
    })
}

/// P₂ after a single π-pulse on the bare two-level system (no decay),
/// starting from |1⟩.
pub fn pi_pulse_transfer_check(
    mode: DriveMode,
    rabi: f64,
    photon: f64,
    detuning: f64,
) -> Result<f64> {
    use crate::model::{build_grid, DensityExponent, Hamiltonian, LevelScheme, Region};
    use crate::propagator::{propagate, PropagationConfig, StateVector};

    if mode == DriveMode::Off {
        return Err(Error::InvalidInput(
            "π-pulse check needs an active drive".into(),
        ));
    }
    let delta = photon - detuning;
    let e1 = 1.0;
    // The lifetimes only set the couplings; both grids are built uncoupled.
    let levels = LevelScheme::new(e1, e1 + delta, 0.5, 1.0, f64::INFINITY)?;
    let grid = |region, eps| {
        build_grid(
            region,
            eps,
            0.1,
            3,
            DensityExponent::INVERSE_SQRT,
            f64::INFINITY,
        )
    };
    let gs = grid(Region::S, levels.eps_auger1())?;
    let gp = grid(Region::P, levels.eps_auger2())?;
    let params = DriveParams {
        mode,
        rabi,
        photon,
        detuning,
        ..DriveParams::off()
    };
    let t_pi = PI / rabi;
    let schedule = build_schedule(params, t_pi)?;
    let h = Hamiltonian::assemble(&levels, &gs, &gp)?.rotating_frame(schedule.frame_shift());
    let config = PropagationConfig::new(t_pi, t_pi);
    let run = propagate(&StateVector::initial(&h), &h, &schedule, &config)?;
    Ok(run.final_state.a2().norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ev, fs, to_fs};
    use proptest::prelude::*;

    fn pulsed(rabi: f64, t_m: f64, dt_delay: f64) -> DriveParams {
        DriveParams {
            mode: DriveMode::Pulsed,
            rabi,
            photon: ev(2.5),
            detuning: 0.0,
            t_m,
            dt_delay,
            envelope: Envelope::Square,
            phase_reset: false,
        }
    }

    #[test]
    fn resonant_rwa_pi_pulse_transfers_fully() {
        let p2 = pi_pulse_transfer_check(DriveMode::RwaPulsed, ev(0.3), ev(2.5), 0.0).unwrap();
        assert!((p2 - 1.0).abs() < 1e-6, "{p2}");
    }

    #[test]
    fn detuned_rwa_pi_pulse_matches_rabi_formula() {
        let omega = ev(0.3);
        let p2 = pi_pulse_transfer_check(DriveMode::RwaPulsed, omega, ev(2.5), omega).unwrap();
        // Ω²/(Ω² + δ²) sin²(√(Ω² + δ²) t_π / 2) with δ = Ω
        let exact = 0.5 * (PI * 2f64.sqrt() / 2.0).sin().powi(2);
        assert!((p2 - exact).abs() < 1e-4, "{p2} vs {exact}");
    }

    #[test]
    fn full_field_pi_pulse_in_weak_coupling() {
        let p2 = pi_pulse_transfer_check(DriveMode::Pulsed, ev(0.1), ev(10.0), 0.0).unwrap();
        assert!((p2 - 1.0).abs() < 1e-3, "{p2}");
    }

    #[test]
    fn pi_pulse_duration_for_li_weak_field() {
        let s = build_schedule(pulsed(ev(0.3), fs(0.32), 0.0), fs(100.0)).unwrap();
        assert!((to_fs(s.t_pi) - 6.893).abs() < 5e-4, "{}", to_fs(s.t_pi));
        assert!((to_fs(s.cycle_period()) - 14.106).abs() < 1e-3);
    }

    #[test]
    fn continuous_is_one_window() {
        let mut p = pulsed(ev(0.3), 0.0, 0.0);
        p.mode = DriveMode::Continuous;
        let s = build_schedule(p, 50.0).unwrap();
        assert_eq!(
            s.windows,
            vec![Window {
                start: 0.0,
                end: 50.0
            }]
        );
        assert!(s.cycle_ends.is_empty());
    }

    #[test]
    fn off_has_no_windows() {
        let s = build_schedule(DriveParams::off(), 50.0).unwrap();
        assert!(s.windows.is_empty());
        assert_eq!(s.coupling_at(10.0), C64::new(0.0, 0.0));
    }

    #[test]
    fn zero_rabi_with_active_mode_rejected() {
        assert!(build_schedule(pulsed(0.0, 1.0, 0.0), 10.0).is_err());
        assert!(build_schedule(pulsed(0.1, 1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn coupling_values() {
        let mut p = pulsed(0.02, 0.0, 0.0);
        p.mode = DriveMode::Continuous;
        p.photon = 0.1;
        let s = build_schedule(p, 1000.0).unwrap();
        assert_eq!(s.coupling_at(-1.0), C64::new(0.0, 0.0));
        let t = (PI / 2.0) / 0.1;
        assert!((s.coupling_at(t).re - 0.02).abs() < 1e-15);
        p.mode = DriveMode::RwaContinuous;
        p.detuning = 0.003;
        let s = build_schedule(p, 1000.0).unwrap();
        for t in [0.0, 3.7, 512.0] {
            assert!((s.coupling_at(t).norm() - 0.01).abs() < 1e-15);
        }
        assert!((s.frame_shift() - 0.097).abs() < 1e-15);
    }

    #[test]
    fn coupling_zero_between_pulses() {
        let s = build_schedule(pulsed(0.1, 5.0, 7.0), 200.0).unwrap();
        let gap = s.t_pi + 2.5;
        assert_eq!(s.coupling_at(gap), C64::new(0.0, 0.0));
        let delay = 2.0 * s.t_pi + 5.0 + 3.0;
        assert_eq!(s.coupling_at(delay), C64::new(0.0, 0.0));
    }

    #[test]
    fn phase_reset_restarts_carrier() {
        let mut p = pulsed(0.1, 3.0, 0.0);
        p.phase_reset = true;
        let s = build_schedule(p, 200.0).unwrap();
        let w = s.windows[1];
        let a = s.coupling_at(w.start + 1.0);
        let b = s.coupling_at(s.windows[0].start + 1.0);
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn cosine_ramp_is_smooth_at_edges() {
        let mut p = pulsed(0.1, 0.0, 0.0);
        p.mode = DriveMode::RwaPulsed;
        p.envelope = Envelope::CosineRamp { ramp: 2.0 };
        let s = build_schedule(p, 100.0).unwrap();
        assert!(s.coupling_at(0.0).norm() < 1e-15);
        assert!((s.coupling_at(1.0).norm() - 0.05 * 0.5).abs() < 1e-15);
        assert!((s.coupling_at(10.0).norm() - 0.05).abs() < 1e-15);
        assert!(s.edges().contains(&2.0));
    }

    proptest! {
        #[test]
        fn windows_sorted_and_on_time_exact(
            rabi in 0.005f64..0.1, t_m in 0.0f64..20.0, dt in 0.0f64..20.0, cycles in 1usize..20
        ) {
            let p = pulsed(rabi, t_m, dt);
            let period = 2.0 * PI / rabi + t_m + dt;
            let s = build_schedule(p, cycles as f64 * period).unwrap();
            prop_assert_eq!(s.cycle_ends.len(), cycles);
            for pair in s.windows.windows(2) {
                prop_assert!(pair[0].end <= pair[1].start);
            }
            let expected = 2.0 * cycles as f64 * s.t_pi;
            prop_assert!((s.on_time() - expected).abs() <= 1e-9 * expected);
            prop_assert!((s.cycle_period() - period).abs() < 1e-9 * period);
        }
    }
}
