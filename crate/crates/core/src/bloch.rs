//! Floquet-Bloch spectrum of `-d^2/dx^2 + V(x)` with 1-periodic `V`.
//!
//! A Bloch wave at quasimomentum `k` is written `e^{ikx} sum_m p_m e^{2 pi i m x}`.
//! Truncating to `|m| <= M` turns the eigenvalue problem into a dense real
//! symmetric matrix with diagonal `(2 pi m + k)^2` and off-diagonal entries
//! `V_{|m-m'|}/2`. Because the matrix is real, the coefficient vectors are real too.
//!
//! Eigenvalues returned by [`solve_bands_at_k`] are polished by a Rayleigh quotient.
//! The diagonal grows like `m^2`, so a plain dense solver loses absolute accuracy
//! on the low bands proportional to the largest diagonal entry. The quotient of the
//! computed vector recovers them to working precision relative to their own size.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::potential::PeriodicPotential;

/// Plane-wave truncation `|m| <= M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierCutoff(usize);

impl FourierCutoff {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("Fourier cutoff must be positive".into()));
        }
        Ok(Self(m))
    }

    pub fn m(self) -> usize {
        self.0
    }

    pub fn dim(self) -> usize {
        2 * self.0 + 1
    }

    /// Fourier index stored at vector position `pos`.
    pub fn index(self, pos: usize) -> i64 {
        pos as i64 - self.0 as i64
    }

    pub fn position(self, m: i64) -> Option<usize> {
        let p = m + self.0 as i64;
        (0..self.dim() as i64).contains(&p).then_some(p as usize)
    }

    /// The truncation must resolve the potential with some room to spare.
    pub fn require_for(self, pot: &PeriodicPotential) -> Result<()> {
        let required = pot.max_index() + 2;
        if self.0 < required {
            return Err(Error::CutoffTooSmall { cutoff: self.0, required });
        }
        Ok(())
    }
}

/// Add `scale * pot` couplings to a plane-wave matrix.
pub fn add_potential_coupling(mat: &mut DMatrix<f64>, pot: &PeriodicPotential, scale: f64) {
    let n = mat.nrows();
    for &(d, a) in pot.terms() {
        let c = 0.5 * a * scale;
        for i in 0..n.saturating_sub(d) {
            mat[(i, i + d)] += c;
            mat[(i + d, i)] += c;
        }
    }
}

pub fn assemble_fb_matrix(pot: &PeriodicPotential, k: f64, cut: FourierCutoff) -> Result<DMatrix<f64>> {
    cut.require_for(pot)?;
    let n = cut.dim();
    let mut mat = DMatrix::zeros(n, n);
    for i in 0..n {
        let q = 2.0 * PI * cut.index(i) as f64 + k;
        mat[(i, i)] = q * q;
    }
    add_potential_coupling(&mut mat, pot, 1.0);
    Ok(mat)
}

#[derive(Debug, Clone)]
pub struct BlochSolution {
    pub k: f64,
    pub cutoff: FourierCutoff,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `n` is the unit coefficient vector of band `n`.
    pub eigenvectors: DMatrix<f64>,
}

impl BlochSolution {
    pub fn coefficients(&self, band: usize) -> Vec<f64> {
        self.eigenvectors.column(band).iter().copied().collect()
    }
}

/// Dense symmetric eigendecomposition, ascending, with Rayleigh-quotient polish,
/// re-orthonormalised clusters and a residual check.
pub(crate) fn sorted_symmetric_eigen(mat: &DMatrix<f64>, k: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = mat.nrows();
    let eig = SymmetricEigen::new(mat.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(src));
    }
    let mut vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    // Modified Gram-Schmidt inside clusters of numerically repeated eigenvalues.
    let scale = vals.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[end - 1]).abs() <= 1e-9 * scale {
            end += 1;
        }
        for j in start..end {
            for i in start..j {
                let d = vecs.column(i).dot(&vecs.column(j));
                let ci = vecs.column(i).clone_owned();
                let mut cj = vecs.column_mut(j);
                cj.axpy(-d, &ci, 1.0);
            }
            let nrm = vecs.column(j).norm();
            vecs.column_mut(j).scale_mut(1.0 / nrm);
        }
        start = end;
    }

    let mut worst = 0.0_f64;
    for j in 0..n {
        let v = vecs.column(j);
        let av: DVector<f64> = mat * v;
        let lambda = v.dot(&av);
        vals[j] = lambda;
        let r = (&av - v * lambda).amax();
        worst = worst.max(r / (1.0 + lambda.abs()));
    }
    if worst > 1e-10 || vals.iter().any(|v| !v.is_finite()) {
        let min_abs = vals.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())).max(f64::MIN_POSITIVE);
        return Err(Error::EigenNonConvergence { k, residual: worst, condition: scale / min_abs });
    }
    // Polishing can swap members of near-degenerate pairs by a few ulps.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = DMatrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        sorted_vecs.set_column(j, &vecs.column(src));
    }
    Ok((sorted_vals, sorted_vecs))
}

pub fn solve_bands_at_k(pot: &PeriodicPotential, k: f64, cut: FourierCutoff) -> Result<BlochSolution> {
    if !k.is_finite() {
        return Err(Error::InvalidParameter(format!("quasimomentum {k} is not finite")));
    }
    let mat = assemble_fb_matrix(pot, k, cut)?;
    let (eigenvalues, eigenvectors) = sorted_symmetric_eigen(&mat, k)?;
    Ok(BlochSolution { k, cutoff: cut, eigenvalues, eigenvectors })
}

/// Eigenvalues only, ascending. Used by sweeps where vectors are not needed.
pub(crate) fn symmetric_eigenvalues(mat: DMatrix<f64>, k: f64) -> Result<Vec<f64>> {
    let mut vals: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence { k, residual: f64::NAN, condition: f64::NAN });
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Lowest `n_bands` band values over a quasimomentum grid.
#[derive(Debug, Clone)]
pub struct BandSweep {
    pub k_grid: Vec<f64>,
    /// `bands[i][n]` is `mu_{n+1}(k_grid[i])`.
    pub bands: Vec<Vec<f64>>,
}

impl BandSweep {
    /// Largest `|mu_n(k) - mu_n(2 pi - k)|` over grid pairs mirrored about `pi`.
    /// `None` when the grid has no mirrored pair.
    pub fn max_reflection_defect(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (i, &k) in self.k_grid.iter().enumerate() {
            let target = 2.0 * PI - k;
            if let Some(j) = self.k_grid.iter().position(|&q| (q - target).abs() <= 1e-12) {
                for (a, b) in self.bands[i].iter().zip(&self.bands[j]) {
                    let d = (a - b).abs() / (1.0 + a.abs());
                    worst = Some(worst.map_or(d, |w: f64| w.max(d)));
                }
            }
        }
        worst
    }
}

pub fn band_sweep(
    pot: &PeriodicPotential,
    k_grid: &[f64],
    cut: FourierCutoff,
    n_bands: usize,
) -> Result<BandSweep> {
    if n_bands == 0 || n_bands > cut.dim() {
        return Err(Error::InvalidParameter(format!(
            "n_bands = {n_bands} must lie in 1..={}",
            cut.dim()
        )));
    }
    cut.require_for(pot)?;
    let bands = k_grid
        .par_iter()
        .map(|&k| {
            let mat = assemble_fb_matrix(pot, k, cut)?;
            let mut vals = symmetric_eigenvalues(mat, k)?;
            vals.truncate(n_bands);
            Ok(vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BandSweep { k_grid: k_grid.to_vec(), bands })
}

/// `e^{ikx} sum_m p_m e^{2 pi i m x}` at each point of `x_grid`.
pub fn bloch_wave_eval(coeffs: &[f64], k: f64, cut: FourierCutoff, x_grid: &[f64]) -> Result<Vec<Complex64>> {
    if coeffs.len() != cut.dim() {
        return Err(Error::ShapeMismatch(format!(
            "coefficient vector has length {}, cutoff needs {}",
            coeffs.len(),
            cut.dim()
        )));
    }
    Ok(x_grid
        .iter()
        .map(|&x| {
            let mut s = Complex64::new(0.0, 0.0);
            for (pos, &p) in coeffs.iter().enumerate() {
                if p != 0.0 {
                    let phase = (2.0 * PI * cut.index(pos) as f64 + k) * x;
                    s += p * Complex64::cis(phase);
                }
            }
            s
        })
        .collect())
}

/// `int_0^1 conj(f) g dx` by the periodic trapezoid rule on `n` equispaced samples
/// `x_j = j / n`.
pub fn cell_inner_product(f: &[Complex64], g: &[Complex64]) -> Result<Complex64> {
    if f.len() != g.len() || f.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "cell samples have lengths {} and {}",
            f.len(),
            g.len()
        )));
    }
    let s: Complex64 = f.iter().zip(g).map(|(a, b)| a.conj() * b).sum();
    Ok(s / f.len() as f64)
}
