use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use super::ObservableTrace;
use crate::model::Region;
use crate::{Error, Result};

/// Peaks whose prominence is below this fraction of the global maximum
/// density are ignored.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSpectrum {
    pub region: Region,
    pub energies: Vec<f64>,
    /// A(ε_k, t) = |b_k|².
    pub population: Vec<f64>,
    /// A(ε_k, t)/dε.
    pub density: Vec<f64>,
    pub spacing: f64,
}

impl RegionSpectrum {
    pub fn total(&self) -> f64 {
        self.population.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub time: f64,
    /// S then P.
    pub regions: Vec<RegionSpectrum>,
}

impl Spectrum {
    pub fn region(&self, region: Region) -> &RegionSpectrum {
        self.regions
            .iter()
            .find(|r| r.region == region)
            .expect("spectrum always holds both regions")
    }

    pub fn total(&self) -> f64 {
        self.regions.iter().map(RegionSpectrum::total).sum()
    }

    fn max_density(&self) -> f64 {
        self.regions
            .iter()
            .flat_map(|r| r.density.iter().copied())
            .fold(0.0, f64::max)
    }
}

fn spacing_of(energies: &[f64]) -> f64 {
    match energies {
        [a, .., b] => (b - a) / (energies.len() - 1) as f64,
        _ => 0.0,
    }
}

/// Continuum occupations at a snapshot time, split by region.
pub fn lineshape(trace: &ObservableTrace, t: f64) -> Result<Spectrum> {
    let snap = trace
        .spectrum_at(t)
        .ok_or_else(|| Error::InvalidInput(format!("no spectrum snapshot at t = {t}")))?;
    let split = trace.n_s;
    let mut regions = Vec::with_capacity(2);
    for (region, range) in [
        (Region::S, 0..split),
        (Region::P, split..trace.n_s + trace.n_p),
    ] {
        let energies = trace.mode_energies[range.clone()].to_vec();
        let population = snap.populations[range].to_vec();
        let spacing = spacing_of(&energies);
        let density = if spacing > 0.0 {
            population.iter().map(|a| a / spacing).collect()
        } else {
            population.clone()
        };
        regions.push(RegionSpectrum {
            region,
            energies,
            population,
            density,
            spacing,
        });
    }
    Ok(Spectrum {
        time: snap.time,
        regions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub region: Region,
    /// Sub-bin position from a parabola through the three top points.
    pub position: f64,
    pub height: f64,
    /// Height above the higher of the two valleys separating the peak from
    /// taller ground (or the spectrum edge).
    pub prominence: f64,
    /// FWHM estimated from the parabola's curvature (Lorentzian profile).
    pub width: f64,
    pub index: usize,
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let h = y[i];
    let mut left = h;
    for &v in y[..i].iter().rev() {
        if v > h {
            break;
        }
        left = left.min(v);
    }
    let mut right = h;
    for &v in &y[i + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    h - left.max(right)
}

/// Local maxima of the density whose prominence exceeds `noise_floor` ×
/// (global maximum). Finite-time ringing produces shallow maxima in the
/// tails; the prominence test keeps them out.
pub fn find_peaks(spectrum: &Spectrum, noise_floor: f64) -> Vec<Peak> {
    let threshold = noise_floor * spectrum.max_density();
    let mut peaks = Vec::new();
    if !(threshold > 0.0) {
        return peaks;
    }
    for r in &spectrum.regions {
        let y = &r.density;
        for i in 1..y.len().saturating_sub(1) {
            if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
                continue;
            }
            let prom = prominence(y, i);
            if prom < threshold {
                continue;
            }
            let (ym, y0, yp) = (y[i - 1], y[i], y[i + 1]);
            let curv = ym - 2.0 * y0 + yp;
            let (offset, height, width) = if curv < 0.0 {
                let off = 0.5 * (ym - yp) / curv;
                let h = y0 - 0.25 * (ym - yp) * off;
                let a = curv / (2.0 * r.spacing * r.spacing);
                (off, h, 2.0 * (-h / a).sqrt())
            } else {
                (0.0, y0, f64::NAN)
            };
            peaks.push(Peak {
                region: r.region,
                position: r.energies[i] + offset * r.spacing,
                height,
                prominence: prom,
                width,
                index: i,
            });
        }
    }
    peaks
}

/// Peak structure of one region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarkDiagnostic {
    pub region: Region,
    pub peaks: Vec<Peak>,
    /// Distances between neighboring peaks, in energy order.
    pub splittings: Vec<f64>,
    /// Distance between the two highest peaks.
    pub dominant_splitting: Option<f64>,
}

pub fn stark_splittings(spectrum: &Spectrum, noise_floor: f64) -> Vec<StarkDiagnostic> {
    let peaks = find_peaks(spectrum, noise_floor);
    [Region::S, Region::P]
        .into_iter()
        .map(|region| {
            let own: Vec<Peak> = peaks
                .iter()
                .copied()
                .filter(|p| p.region == region)
                .collect();
            let splittings = own
                .windows(2)
                .map(|w| w[1].position - w[0].position)
                .collect();
            let mut by_height = own.clone();
            by_height.sort_by(|a, b| b.height.total_cmp(&a.height));
            let dominant_splitting = match by_height.as_slice() {
                [a, b, ..] => Some((a.position - b.position).abs()),
                _ => None,
            };
            StarkDiagnostic {
                region,
                peaks: own,
                splittings,
                dominant_splitting,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub samples: usize,
}

fn lorentzian(x: f64, p: &Vector3<f64>) -> f64 {
    let (a, x0, g) = (p[0], p[1], p[2]);
    a * g * g / ((x - x0).powi(2) + g * g)
}

/// Levenberg–Marquardt fit of A γ² / ((ε − ε₀)² + γ²) to the points
/// within ±`span` FWHM of the highest point (FWHM from the half-maximum
/// crossings). r² is computed over the same points.
pub fn fit_lorentzian(energies: &[f64], density: &[f64], span: f64) -> Result<LorentzianFit> {
    if energies.len() != density.len() || energies.len() < 5 {
        return Err(Error::Fit("need at least 5 matching points".into()));
    }
    let (imax, &ymax) = density
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    if !(ymax > 0.0) {
        return Err(Error::Fit("spectrum is empty".into()));
    }
    let half = 0.5 * ymax;
    let left = (0..imax).rev().find(|&i| density[i] < half).unwrap_or(0);
    let right = (imax..density.len())
        .find(|&i| density[i] < half)
        .unwrap_or(density.len() - 1);
    let fwhm0 = (energies[right] - energies[left]).max(energies[1] - energies[0]);
    let lo = energies[imax] - span * fwhm0;
    let hi = energies[imax] + span * fwhm0;
    let pts: Vec<(f64, f64)> = energies
        .iter()
        .zip(density)
        .filter(|(&e, _)| e >= lo && e <= hi)
        .map(|(&e, &y)| (e, y))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit("too few points around the peak".into()));
    }

    let mut p = Vector3::new(ymax, energies[imax], 0.5 * fwhm0);
    let sse = |p: &Vector3<f64>| -> f64 {
        pts.iter()
            .map(|&(x, y)| (y - lorentzian(x, p)).powi(2))
            .sum()
    };
    let mut cost = sse(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for &(x, y) in &pts {
            let (a, x0, g) = (p[0], p[1], p[2]);
            let d = (x - x0).powi(2) + g * g;
            let f = a * g * g / d;
            let j = Vector3::new(
                g * g / d,
                2.0 * a * g * g * (x - x0) / (d * d),
                2.0 * a * g * (x - x0).powi(2) / (d * d),
            );
            jtj += j * j.transpose();
            jtr += j * (y - f);
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut m = jtj;
            for k in 0..3 {
                m[(k, k)] *= 1.0 + lambda;
            }
            let Some(delta) = m.lu().solve(&jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + delta;
            let c = sse(&trial);
            if c < cost && trial[2] > 0.0 {
                let rel = (cost - c) / cost.max(f64::MIN_POSITIVE);
                p = trial;
                cost = c;
                lambda = (lambda * 0.3).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let mean = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|q| (q.1 - mean).powi(2)).sum();
    Ok(LorentzianFit {
        center: p[1],
        fwhm: 2.0 * p[2],
        amplitude: p[0],
        r_squared: 1.0 - cost / ss_tot,
        samples: pts.len(),
    })
}
