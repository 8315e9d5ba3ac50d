//! Named parameter sets, written in the config language itself.

use crate::config::RawConfig;

pub const NAMES: [&str; 5] = ["li", "li_plus", "fig3_circles", "fig3_squares", "fig4"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "li" => "Li 1s2s² ↔ 1s2s2p, π-pulse train at 2.5 eV, 5.1 TW/cm²",
        "li_plus" => "hollow Li⁺ 2s² ↔ 2s2p, π-pulse train at 4.1 eV",
        "fig3_circles" => "model system τ₁ = 100 fs, τ₂ = ∞, ħω = 10 eV",
        "fig3_squares" => "model system τ₁ = 100 fs, τ₂ = 300 fs, ħω = 10 eV",
        "fig4" => "model system τ₁ = 100 fs, τ₂ = 300 fs, 210 TW/cm², concurrence snapshots",
        _ => return None,
    })
}

const LI: &str = "
model.E1 = 56.36 eV
model.E2 = 58.86 eV
model.eps_c = 5.39 eV
model.tau1 = 17.6 fs
model.tau2 = 174 fs
grid.half_width = auto
grid.points = 801
grid.exponent = 1
drive.mode = pulsed
drive.intensity = 5.1 TWcm2
drive.t_m = 0.32 fs
drive.dt_delay = 0 fs
propagation.T_total = 100 fs
propagation.sample_stride = 0.25 fs
";

const LI_PLUS: &str = "
model.E1 = 146.2 eV
model.E2 = 150.3 eV
model.eps_c = 75.64 eV
model.tau1 = 3.3 fs
model.tau2 = 8.5 fs
grid.half_width = auto
grid.points = auto
grid.exponent = 1
drive.mode = pulsed
drive.Omega = 1 eV
drive.t_m = 0.32 fs
drive.dt_delay = 0 fs
propagation.T_total = 25 fs
propagation.sample_stride = 0.05 fs
";

const FIG3_CIRCLES: &str = "
model.E1 = 40 eV
model.E2 = 50 eV
model.eps_c = 5 eV
model.tau1 = 100 fs
model.tau2 = inf
grid.half_width = 4 eV
grid.points = auto
grid.exponent = 1
drive.mode = pulsed
drive.Omega = 1 eV
drive.t_m = 0.32 fs
drive.dt_delay = 0 fs
propagation.T_total = 500 fs
propagation.sample_stride = 2 fs
";

const FIG3_SQUARES_DIFF: &str = "
model.tau2 = 300 fs
";

const FIG4_DIFF: &str = "
model.tau2 = 300 fs
drive.intensity = 210 TWcm2
propagation.T_total = 380 fs
propagation.spectrum_snapshot_times = 12 fs, 380 fs
output.concurrence_times = 12 fs, 380 fs
output.concurrence_floor = 1e-4
";

/// Fully written-out key/value set of a preset.
pub fn raw(name: &str) -> Option<RawConfig> {
    let parse = |text: &str| {
        RawConfig::parse(text)
            .expect("presets are well formed")
            .forget_lines()
    };
    let layered = |base: &str, diff: &str| {
        let mut r = parse(base);
        r.layer(&parse(diff));
        r
    };
    Some(match name {
        "li" => parse(LI),
        "li_plus" => parse(LI_PLUS),
        "fig3_circles" => parse(FIG3_CIRCLES),
        "fig3_squares" => layered(FIG3_CIRCLES, FIG3_SQUARES_DIFF),
        "fig4" => layered(FIG3_CIRCLES, FIG4_DIFF),
        _ => return None,
    })
}
