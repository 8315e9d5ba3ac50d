use zeno_core::drive::build_schedule;
use zeno_core::model::DensityExponent;
use zeno_core::propagator::{propagate, StateVector};
use zeno_core::units::{ev, fs};
use zeno_core::*;

fn scenario(tau1_fs: f64, tau2_fs: f64, points: usize, t_fs: f64) -> Scenario {
    Scenario {
        levels: LevelScheme::new(ev(40.0), ev(50.0), ev(5.0), fs(tau1_fs), fs(tau2_fs)).unwrap(),
        grid: GridSpec {
            half_width: Some(ev(2.0)),
            points,
            exponent: DensityExponent::new(1).unwrap(),
            safety: 1.5,
        },
        drive: DriveParams::off(),
        propagation: PropagationConfig::new(fs(t_fs), fs(0.5)),
    }
}

fn pulsed(s: &mut Scenario, mode: DriveMode, rabi_ev: f64) {
    s.drive = DriveParams {
        mode,
        rabi: ev(rabi_ev),
        photon: s.levels.delta(),
        detuning: 0.0,
        t_m: fs(0.32),
        dt_delay: 0.0,
        envelope: Envelope::Square,
        phase_reset: false,
    };
}

#[test]
fn field_free_decay_follows_golden_rule() {
    let out = scenario(20.0, 60.0, 801, 60.0).run().unwrap();
    let fit = out.fit.unwrap();
    let rel = (fit.tau_eff / fs(20.0) - 1.0).abs();
    assert!(rel < 0.03, "tau_eff = {} fs", units::to_fs(fit.tau_eff));
    assert!(fit.r_squared > 0.999);
}

#[test]
fn lifetime_is_insensitive_to_density_exponent() {
    let taus: Vec<f64> = (1..=3)
        .map(|n| {
            let mut s = scenario(20.0, 60.0, 601, 50.0);
            s.grid.exponent = DensityExponent::new(n).unwrap();
            s.run().unwrap().fit.unwrap().tau_eff
        })
        .collect();
    let max = taus.iter().cloned().fold(f64::MIN, f64::max);
    let min = taus.iter().cloned().fold(f64::MAX, f64::min);
    assert!((max - min) / min < 0.03, "{taus:?}");
}

#[test]
fn field_free_run_conserves_energy_and_leaves_p_empty() {
    let s = scenario(20.0, 60.0, 201, 30.0);
    let setup = s.build().unwrap();
    let h = &setup.hamiltonian;
    let psi0 = StateVector::initial(h);
    let e0 = h.expectation(C64::new(0.0, 0.0), &psi0.amplitudes);
    let prop = propagate(&psi0, h, &setup.schedule, &s.propagation).unwrap();
    let e1 = h.expectation(C64::new(0.0, 0.0), &prop.final_state.amplitudes);
    assert!((e1 - e0).abs() < 1e-10 * e0.abs().max(1.0), "{e0} -> {e1}");
    let n_s = h.n_s();
    assert!(prop.final_state.amplitudes[2 + n_s..]
        .iter()
        .all(|z| z.norm() == 0.0));
    assert_eq!(prop.final_state.a2().norm(), 0.0);
    assert!(prop.trace.max_norm_drift < 1e-10);
}

#[test]
fn rotating_wave_agrees_with_full_field_for_weak_drive() {
    // Ω/ω = 0.005 and no decay channel open on the time scale of one cycle.
    let run = |mode| {
        let mut s = scenario(1e7, 1e7, 21, 0.0);
        pulsed(&mut s, mode, 0.05);
        let sched = build_schedule(s.drive, 1.0).unwrap();
        s.propagation = PropagationConfig::new(sched.cycle_period(), fs(0.5));
        s.grid.safety = 1.0;
        s.grid.half_width = Some(ev(0.05));
        let setup = s.build().unwrap();
        let psi0 = StateVector::initial(&setup.hamiltonian);
        propagate(&psi0, &setup.hamiltonian, &setup.schedule, &s.propagation).unwrap()
    };
    let rwa = run(DriveMode::RwaPulsed);
    let full = run(DriveMode::Pulsed);
    assert_eq!(rwa.trace.times.len(), full.trace.times.len());
    let worst = rwa
        .trace
        .p2
        .iter()
        .zip(&full.trace.p2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 2e-2, "max |ΔP₂| = {worst}");
    let mid = rwa.trace.p2.iter().cloned().fold(0.0, f64::max);
    assert!(mid > 0.99, "peak P₂ = {mid}");
}

#[test]
fn halving_the_step_changes_populations_below_1e6() {
    let run = |dt_fs: f64| {
        let mut s = scenario(20.0, 60.0, 81, 0.0);
        s.grid.half_width = Some(ev(1.0));
        pulsed(&mut s, DriveMode::Pulsed, 0.3);
        s.drive.photon = s.levels.delta();
        s.propagation = PropagationConfig::new(fs(6.0), fs(0.5));
        s.propagation.dt_max = Some(fs(dt_fs));
        let setup = s.build().unwrap();
        let psi0 = StateVector::initial(&setup.hamiltonian);
        propagate(&psi0, &setup.hamiltonian, &setup.schedule, &s.propagation).unwrap()
    };
    let coarse = run(0.0004);
    let fine = run(0.0002);
    let worst = coarse
        .final_state
        .amplitudes
        .iter()
        .zip(&fine.final_state.amplitudes)
        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "max |ΔP| = {worst:e}");
}
