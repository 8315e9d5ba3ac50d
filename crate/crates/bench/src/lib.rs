//! Fixtures shared by the benchmarks in `benches/`.

use zeno_core::drive::build_schedule;
use zeno_core::model::{build_grid, DensityExponent, Hamiltonian, LevelScheme, Region};
use zeno_core::units::{ev, fs};
use zeno_core::{DriveMode, DriveParams, Envelope, PulseSchedule};

/// Li-like levels with `points` modes per continuum and a 5.1 TW/cm²-strength
/// pulse train.
pub fn li_system(points: usize) -> (Hamiltonian, PulseSchedule) {
    let levels = LevelScheme::new(ev(56.36), ev(58.86), ev(5.39), fs(17.6), fs(174.0)).unwrap();
    let grid = |region, eps, tau| {
        build_grid(
            region,
            eps,
            ev(2.0),
            points,
            DensityExponent::INVERSE_SQRT,
            tau,
        )
        .unwrap()
    };
    let gs = grid(Region::S, levels.eps_auger1(), levels.tau1);
    let gp = grid(Region::P, levels.eps_auger2(), levels.tau2);
    let h = Hamiltonian::assemble(&levels, &gs, &gp).unwrap();
    let drive = DriveParams {
        mode: DriveMode::Pulsed,
        rabi: ev(0.3),
        photon: levels.delta(),
        detuning: 0.0,
        t_m: fs(0.32),
        dt_delay: 0.0,
        envelope: Envelope::Square,
        phase_reset: false,
    };
    let schedule = build_schedule(drive, fs(100.0)).unwrap();
    (h, schedule)
}
