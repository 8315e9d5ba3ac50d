//! `run` and `sweep`.

use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;

use zeno_core::entanglement::concurrence_matrix;
use zeno_core::model::Region;
use zeno_core::observables::{fit_lifetime, lineshape, stark_splittings, LifetimeFit, ScanAxis};
use zeno_core::propagator::{propagate, Propagation, StateVector};
use zeno_core::simulation::Setup;
use zeno_core::units::{ev, fs, to_ev, to_fs, tw_cm2, Dimension, Quantity, HARTREE_EV};

use crate::config::{ConfigError, ConfigErrors, RunConfig};
use crate::output::{fmt_f64, write_json, Csv};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub tau_eff_envelope_fs: f64,
    pub tau_eff_1e_fs: Option<f64>,
    pub r_squared: f64,
    pub accepted: bool,
    pub fit_window_fs: [f64; 2],
    pub samples: usize,
}

impl From<&LifetimeFit> for FitSummary {
    fn from(f: &LifetimeFit) -> Self {
        Self {
            tau_eff_envelope_fs: to_fs(f.tau_eff),
            tau_eff_1e_fs: f.tau_one_over_e.map(to_fs),
            r_squared: f.r_squared,
            accepted: f.accepted,
            fit_window_fs: [to_fs(f.fit_window[0]), to_fs(f.fit_window[1])],
            samples: f.samples,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PeakSummary {
    pub position_ev: f64,
    pub height_per_ev: f64,
    pub prominence_per_ev: f64,
    pub width_ev: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionPeaks {
    pub region: Region,
    pub peaks: Vec<PeakSummary>,
    pub splittings_ev: Vec<f64>,
    pub dominant_splitting_ev: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub t_fs: f64,
    pub continuum_population: f64,
    pub regions: Vec<RegionPeaks>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub region: Region,
    pub half_width_ev: f64,
    pub points: usize,
    pub spacing_ev: f64,
    pub recurrence_time_fs: f64,
    pub points_per_linewidth: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub preset: Option<String>,
    pub mode: &'static str,
    pub rabi_ev: f64,
    pub photon_ev: f64,
    pub detuning_ev: f64,
    pub t_pi_fs: f64,
    pub cycle_period_fs: f64,
    pub t_total_fs: f64,
    pub fit: Option<FitSummary>,
    pub fit_error: Option<String>,
    pub final_p1: f64,
    pub final_p2: f64,
    pub final_p_bound: f64,
    pub max_norm_drift: f64,
    pub max_sum_rule_error: f64,
    pub steps: usize,
    pub matvecs: usize,
    pub dt_fs: f64,
    pub grids: Vec<GridSummary>,
    pub spectra: Vec<SpectrumSummary>,
}

impl RunSummary {
    pub fn fit_accepted(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.accepted)
    }
}

/// Everything a run produces, before it is written anywhere.
pub struct RunResult {
    pub setup: Setup,
    pub propagation: Propagation,
    pub fit: Result<LifetimeFit, String>,
    pub summary: RunSummary,
}

/// Builds the setup and rejects a recurrence-unsafe grid as a config error.
pub fn prepare(config: &RunConfig) -> Result<Setup, ConfigErrors> {
    let setup = config.scenario.build().map_err(|e| ConfigError {
        key: "model".into(),
        line: None,
        message: e.to_string(),
    })?;
    let errors: Vec<ConfigError> = setup
        .resolution
        .iter()
        .filter(|r| !r.passes())
        .flat_map(|r| r.issues.iter())
        .filter(|i| i.severity == zeno_core::model::Severity::Error)
        .map(|i| ConfigError {
            key: "grid.points".into(),
            line: None,
            message: i.message.clone(),
        })
        .collect();
    if errors.is_empty() {
        Ok(setup)
    } else {
        Err(ConfigErrors(errors))
    }
}

pub fn execute(config: &RunConfig) -> anyhow::Result<RunResult> {
    let setup = prepare(config)?;
    let psi0 = StateVector::initial(&setup.hamiltonian);
    let propagation = propagate(
        &psi0,
        &setup.hamiltonian,
        &setup.schedule,
        &config.scenario.propagation,
    )?;
    let fit = fit_lifetime(&propagation.trace).map_err(|e| e.to_string());
    let summary = summarize(config, &setup, &propagation, &fit)?;
    Ok(RunResult {
        setup,
        propagation,
        fit,
        summary,
    })
}

fn summarize(
    config: &RunConfig,
    setup: &Setup,
    propagation: &Propagation,
    fit: &Result<LifetimeFit, String>,
) -> anyhow::Result<RunSummary> {
    let s = &config.scenario;
    let trace = &propagation.trace;
    let mut spectra = Vec::new();
    for snap in &trace.spectra {
        let spectrum = lineshape(trace, snap.time)?;
        let regions = stark_splittings(&spectrum, config.output.noise_floor)
            .into_iter()
            .map(|d| RegionPeaks {
                region: d.region,
                peaks: d
                    .peaks
                    .iter()
                    .map(|p| PeakSummary {
                        position_ev: to_ev(p.position),
                        height_per_ev: p.height / HARTREE_EV,
                        prominence_per_ev: p.prominence / HARTREE_EV,
                        width_ev: to_ev(p.width),
                    })
                    .collect(),
                splittings_ev: d.splittings.iter().map(|&x| to_ev(x)).collect(),
                dominant_splitting_ev: d.dominant_splitting.map(to_ev),
            })
            .collect();
        spectra.push(SpectrumSummary {
            t_fs: to_fs(snap.time),
            continuum_population: spectrum.total(),
            regions,
        });
    }
    let grids = [&setup.grid_s, &setup.grid_p]
        .into_iter()
        .zip(&setup.resolution)
        .map(|(g, r)| GridSummary {
            region: g.region,
            half_width_ev: to_ev(g.half_width),
            points: g.len(),
            spacing_ev: to_ev(g.spacing),
            recurrence_time_fs: to_fs(g.recurrence_time()),
            points_per_linewidth: r.points_per_linewidth,
            warnings: r.issues.iter().map(|i| i.message.clone()).collect(),
        })
        .collect();
    let last = &propagation.final_state;
    let (p1, p2) = (last.a1().norm_sqr(), last.a2().norm_sqr());
    Ok(RunSummary {
        preset: config.preset.clone(),
        mode: s.drive.mode.name(),
        rabi_ev: to_ev(s.active_rabi()),
        photon_ev: to_ev(s.drive.photon),
        detuning_ev: to_ev(s.drive.detuning),
        t_pi_fs: to_fs(setup.schedule.t_pi),
        cycle_period_fs: to_fs(setup.schedule.cycle_period()),
        t_total_fs: to_fs(s.propagation.t_total),
        fit: fit.as_ref().ok().map(FitSummary::from),
        fit_error: fit.as_ref().err().cloned(),
        final_p1: p1,
        final_p2: p2,
        final_p_bound: p1 + p2,
        max_norm_drift: trace.max_norm_drift,
        max_sum_rule_error: trace.max_sum_rule_error,
        steps: propagation.steps,
        matvecs: propagation.matvecs,
        dt_fs: to_fs(propagation.dt_used),
        grids,
        spectra,
    })
}

pub fn trace_csv(result: &RunResult) -> Csv {
    let t = &result.propagation.trace;
    let mut csv = Csv::new(&[
        "t_fs",
        "n_c",
        "n_v1",
        "n_v2",
        "n_v3",
        "P1",
        "P2",
        "P_bound",
        "cycle_boundary",
    ]);
    for i in 0..t.len() {
        csv.row(&[
            fmt_f64(to_fs(t.times[i])),
            fmt_f64(t.n_c[i]),
            fmt_f64(t.n_v1[i]),
            fmt_f64(t.n_v2[i]),
            fmt_f64(t.n_v3[i]),
            fmt_f64(t.p1[i]),
            fmt_f64(t.p2[i]),
            fmt_f64(t.p_bound[i]),
            (t.cycle_boundary[i] as u8).to_string(),
        ]);
    }
    csv
}

pub fn spectrum_csv(result: &RunResult) -> anyhow::Result<Csv> {
    let trace = &result.propagation.trace;
    let mut csv = Csv::new(&["t_fs", "region", "eps_ev", "A", "A_per_ev"]);
    for snap in &trace.spectra {
        let spectrum = lineshape(trace, snap.time)?;
        for r in &spectrum.regions {
            for k in 0..r.energies.len() {
                csv.row(&[
                    fmt_f64(to_fs(snap.time)),
                    r.region.name().to_string(),
                    fmt_f64(to_ev(r.energies[k])),
                    fmt_f64(r.population[k]),
                    fmt_f64(r.density[k] / HARTREE_EV),
                ]);
            }
        }
    }
    Ok(csv)
}

#[derive(Serialize)]
struct ConcurrenceHeader {
    t_fs: f64,
    modes: usize,
    n_s: usize,
    n_p: usize,
    floor: f64,
    entries: usize,
    max_s_s: f64,
    max_p_p: f64,
    max_s_p: f64,
    columns: [&'static str; 5],
}

#[derive(Serialize)]
struct Provenance {
    program: &'static str,
    version: &'static str,
    determinism: &'static str,
    preset: Option<String>,
    config_file: &'static str,
}

fn write_concurrence(
    dir: &Path,
    idx: usize,
    psi: &StateVector,
    result: &RunResult,
    floor: f64,
) -> anyhow::Result<()> {
    let energies = result.setup.hamiltonian.mode_energies();
    let m = concurrence_matrix(psi, energies)?;
    let n_s = m.n_s;
    let n = m.dim();
    let mut csv = Csv::new(&["region_k", "eps_k_ev", "region_kp", "eps_kp_ev", "C"]);
    let region = |k: usize| if k < n_s { "S" } else { "P" };
    let mut entries = 0;
    for (k, kp, c) in m.triplets(floor) {
        entries += 1;
        csv.row(&[
            region(k).into(),
            fmt_f64(to_ev(energies[k])),
            region(kp).into(),
            fmt_f64(to_ev(energies[kp])),
            fmt_f64(c),
        ]);
    }
    csv.write(&dir.join(format!("concurrence_{idx}.csv")))?;
    write_json(
        &dir.join(format!("concurrence_{idx}.json")),
        &ConcurrenceHeader {
            t_fs: to_fs(m.time),
            modes: n,
            n_s,
            n_p: n - n_s,
            floor,
            entries,
            max_s_s: m.block_max(0..n_s, 0..n_s),
            max_p_p: m.block_max(n_s..n, n_s..n),
            max_s_p: m.block_max(0..n_s, n_s..n),
            columns: ["region_k", "eps_k_ev", "region_kp", "eps_kp_ev", "C"],
        },
    )
}

/// Writes every artifact of a run into `dir`.
pub fn write_outputs(dir: &Path, config: &RunConfig, result: &RunResult) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.expanded"), config.echo())?;
    trace_csv(result).write(&dir.join("trace.csv"))?;
    spectrum_csv(result)?.write(&dir.join("spectrum.csv"))?;
    write_json(&dir.join("summary.json"), &result.summary)?;
    for (i, psi) in result.propagation.states.iter().enumerate() {
        write_concurrence(dir, i, psi, result, config.output.concurrence_floor)?;
    }
    write_json(
        &dir.join("provenance.json"),
        &Provenance {
            program: "zeno",
            version: VERSION,
            determinism: "no random numbers are drawn; every output is a deterministic function of config.expanded",
            preset: config.preset.clone(),
            config_file: "config.expanded",
        },
    )
}

/// Named sweep axes.
pub fn parse_axis(name: &str, dipole: f64) -> anyhow::Result<ScanAxis> {
    Ok(match name {
        "Omega2" => ScanAxis::RabiSquared,
        "intensity" => ScanAxis::Intensity { dipole },
        "t_m" => ScanAxis::MeasurementTime,
        "dt_delay" => ScanAxis::Delay,
        "omega" => ScanAxis::Photon,
        other => anyhow::bail!(
            "unknown sweep axis `{other}` (expected Omega2, intensity, t_m, dt_delay or omega)"
        ),
    })
}

/// Parses one sweep value. Bare numbers are in eV² (Omega2), TW/cm²
/// (intensity), fs (t_m, dt_delay) or eV (omega).
pub fn parse_axis_value(axis: ScanAxis, text: &str) -> anyhow::Result<f64> {
    let text = text.trim();
    let bare = text.parse::<f64>().ok();
    Ok(match axis {
        ScanAxis::RabiSquared => {
            let v = bare
                .or_else(|| text.strip_suffix("eV2").and_then(|n| n.trim().parse().ok()))
                .ok_or_else(|| anyhow::anyhow!("malformed Omega2 value `{text}`"))?;
            v / (HARTREE_EV * HARTREE_EV)
        }
        ScanAxis::Intensity { .. } => match bare {
            Some(v) => tw_cm2(v),
            None => Quantity::parse(text, Dimension::Intensity)?.to_atomic(),
        },
        ScanAxis::MeasurementTime | ScanAxis::Delay => match bare {
            Some(v) => fs(v),
            None => Quantity::parse(text, Dimension::Time)?.to_atomic(),
        },
        ScanAxis::Photon => match bare {
            Some(v) => ev(v),
            None => Quantity::parse(text, Dimension::Energy)?.to_atomic(),
        },
    })
}

/// Axis value in the units of the sweep table.
pub fn display_value(axis: ScanAxis, value: f64) -> f64 {
    match axis {
        ScanAxis::RabiSquared => value * HARTREE_EV * HARTREE_EV,
        ScanAxis::Intensity { .. } => value / tw_cm2(1.0),
        ScanAxis::MeasurementTime | ScanAxis::Delay => to_fs(value),
        ScanAxis::Photon => to_ev(value),
    }
}

pub fn point_config(base: &RunConfig, axis: ScanAxis, value: f64) -> anyhow::Result<RunConfig> {
    let mut cfg = base.clone();
    cfg.scenario = axis.apply(&base.scenario, value)?;
    cfg.intensity = match axis {
        ScanAxis::Intensity { .. } => Some(value),
        ScanAxis::RabiSquared => None,
        _ => base.intensity,
    };
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<RunSummary, String>,
}

/// One run per value on a pool of `workers` threads, each written to
/// `out/point_NNN`. The grid of the base config is shared by all points.
pub fn sweep(
    base: &RunConfig,
    axis: ScanAxis,
    values: &[f64],
    out: Option<&Path>,
    workers: usize,
) -> anyhow::Result<Vec<SweepRow>> {
    anyhow::ensure!(!values.is_empty(), "sweep needs at least one value");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let rows = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &value)| {
                let outcome = (|| -> anyhow::Result<RunSummary> {
                    let cfg = point_config(base, axis, value)?;
                    let result = execute(&cfg)?;
                    if let Some(dir) = out {
                        write_outputs(&dir.join(format!("point_{i:03}")), &cfg, &result)?;
                    }
                    Ok(result.summary)
                })()
                .map_err(|e| format!("{e:#}").replace('\n', " "));
                SweepRow { value, outcome }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows)
}

pub fn sweep_csv(axis: ScanAxis, rows: &[SweepRow]) -> Csv {
    let mut csv = Csv::new(&[
        axis.name(),
        "tau_eff_envelope_fs",
        "tau_eff_1e_fs",
        "r_squared",
        "accepted",
        "error",
    ]);
    for row in rows {
        let v = fmt_f64(display_value(axis, row.value));
        let empty = String::new;
        match &row.outcome {
            Ok(s) => match (&s.fit, &s.fit_error) {
                (Some(f), _) => csv.row(&[
                    v,
                    fmt_f64(f.tau_eff_envelope_fs),
                    f.tau_eff_1e_fs.map(fmt_f64).unwrap_or_default(),
                    fmt_f64(f.r_squared),
                    f.accepted.to_string(),
                    empty(),
                ]),
                (None, e) => csv.row(&[
                    v,
                    empty(),
                    empty(),
                    empty(),
                    "false".into(),
                    e.clone().unwrap_or_else(|| "no fit".into()),
                ]),
            },
            Err(e) => csv.row(&[v, empty(), empty(), empty(), "false".into(), e.clone()]),
        }
    }
    csv
}
