//! Pairwise mode entanglement of the continuum.
//!
//! For two continuum modes k, k' the reduced state in the occupation basis
//! {|00⟩, |01⟩, |10⟩, |11⟩} (first digit = mode k) is obtained by tracing out
//! every other mode and the bound states. Its Wootters concurrence is the
//! entry C_{kk'}. The model never holds more than one continuum electron,
//! so for a pure state
//!
//! ```text
//! ρ = |φ⟩⟨φ| + (1 − |b_k|² − |b_k'|²) |00⟩⟨00|,   φ = b_k |10⟩ + b_k' |01⟩
//! ```
//!
//! and C_{kk'} = 2 |b_k| |b_k'|. [`concurrence_matrix`] uses that closed form;
//! [`two_mode_concurrence`] goes through the full Wootters construction.

use nalgebra::{DMatrix, Matrix4, SymmetricEigen};
use serde::Serialize;

use crate::propagator::StateVector;
use crate::{Error, Result, C64};

/// Eigenvalues of ρ below this are treated as exact zeros.
const RANK_CUTOFF: f64 = 1e-14;

/// Default floor for emitted matrices (log-scale plots).
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Reduced two-mode density matrix of modes `k` and `kp` (continuum
/// indices, S then P).
pub fn reduced_two_mode_density(psi: &StateVector, k: usize, kp: usize) -> Result<Matrix4<C64>> {
    let b = psi.continuum();
    if k == kp {
        return Err(Error::InvalidInput(
            "concurrence needs two distinct modes".into(),
        ));
    }
    if k >= b.len() || kp >= b.len() {
        return Err(Error::InvalidInput(format!(
            "mode index out of range ({k}, {kp}) for {} modes",
            b.len()
        )));
    }
    let (bk, bkp) = (b[k], b[kp]);
    let rest = psi.norm_sqr() - bk.norm_sqr() - bkp.norm_sqr();
    let zero = C64::new(0.0, 0.0);
    let mut rho = Matrix4::from_element(zero);
    // index: 0 = |00⟩, 1 = |01⟩ (k' occupied), 2 = |10⟩ (k occupied), 3 = |11⟩
    rho[(0, 0)] = C64::new(rest.max(0.0), 0.0);
    rho[(1, 1)] = C64::new(bkp.norm_sqr(), 0.0);
    rho[(2, 2)] = C64::new(bk.norm_sqr(), 0.0);
    rho[(2, 1)] = bk * bkp.conj();
    rho[(1, 2)] = bkp * bk.conj();
    Ok(rho)
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// λᵢ are the singular values of τ = Vᵀ (σ_y⊗σ_y) V, where the columns of V
/// are the subnormalized eigenvectors √pᵢ|ψᵢ⟩ of ρ; they coincide with the
/// square roots of the eigenvalues of ρ ρ̃.
pub fn wootters_concurrence(rho: &Matrix4<C64>) -> f64 {
    let eig = SymmetricEigen::new(*rho);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let cols: Vec<usize> = (0..4)
        .filter(|&i| eig.eigenvalues[i] > RANK_CUTOFF * scale.max(1e-300))
        .collect();
    if cols.is_empty() {
        return 0.0;
    }
    let r = cols.len();
    let mut v = DMatrix::from_element(4, r, C64::new(0.0, 0.0));
    for (c, &i) in cols.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        for row in 0..4 {
            v[(row, c)] = eig.eigenvectors[(row, i)] * s;
        }
    }
    let i = C64::new(0.0, 1.0);
    let sy = nalgebra::Matrix2::new(C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0));
    let yy = sy.kronecker(&sy);
    let yy = DMatrix::from_iterator(4, 4, yy.iter().cloned());
    let tau = v.transpose() * yy * &v;
    let mut lambda: Vec<f64> = tau.singular_values().iter().cloned().collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    lambda.resize(4, 0.0);
    (lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0)
}

/// C_{kk'} through the reduced density matrix and the Wootters
/// eigenvalue construction.
pub fn two_mode_concurrence(psi: &StateVector, k: usize, kp: usize) -> Result<f64> {
    let rho = reduced_two_mode_density(psi, k, kp)?;
    Ok(wootters_concurrence(&rho))
}

/// Closed form 2|b_k||b_k'| (valid for the single-continuum-electron
/// states of this model).
pub fn closed_form_concurrence(psi: &StateVector, k: usize, kp: usize) -> f64 {
    let b = psi.continuum();
    if k == kp {
        return 0.0;
    }
    2.0 * b[k].norm() * b[kp].norm()
}

/// Symmetric matrix of pairwise mode concurrences, zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcurrenceMatrix {
    pub time: f64,
    /// Mode energies, S then P.
    pub energies: Vec<f64>,
    pub n_s: usize,
    values: Vec<f64>,
}

impl ConcurrenceMatrix {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn get(&self, k: usize, kp: usize) -> f64 {
        self.values[k * self.dim() + kp]
    }

    /// Largest entry with both modes in the given index ranges.
    pub fn block_max(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> f64 {
        let mut m = 0.0f64;
        for r in rows {
            for c in cols.clone() {
                m = m.max(self.get(r, c));
            }
        }
        m
    }

    /// Upper-triangle entries ≥ `floor` as (k, k', C).
    pub fn triplets(&self, floor: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.dim();
        (0..n).flat_map(move |r| {
            (r + 1..n).filter_map(move |c| {
                let v = self.get(r, c);
                (v >= floor).then_some((r, c, v))
            })
        })
    }
}

/// Full matrix from the closed form. Cost O(N²) in the number of modes.
pub fn concurrence_matrix(psi: &StateVector, energies: &[f64]) -> Result<ConcurrenceMatrix> {
    let b = psi.continuum();
    if energies.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "{} mode energies for {} continuum amplitudes",
            energies.len(),
            b.len()
        )));
    }
    let n = b.len();
    let mag: Vec<f64> = b.iter().map(|z| z.norm()).collect();
    let mut values = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            if r != c {
                values[r * n + c] = 2.0 * mag[r] * mag[c];
            }
        }
    }
    Ok(ConcurrenceMatrix {
        time: psi.time,
        energies: energies.to_vec(),
        n_s: psi.n_s(),
        values,
    })
}
