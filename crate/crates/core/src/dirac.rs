//! Dirac points at the edge of the Brillouin zone and their effective coefficients.
//!
//! When `V` only has even Fourier indices it also has period 1/2. At `k = pi` the
//! plane-wave matrix then splits into an even-index and an odd-index block that are
//! isospectral, so every band value there is doubly degenerate. The even-block
//! eigenvector `g1` and its partner `g2` (with `q_n = p_{-n-1}`, i.e.
//! `Phi_2(x) = Phi_1(-x)`) span the eigenspace.
//!
//! The odd-index perturbation `W` couples the two, and together with the group
//! velocity and the quartic overlaps this yields the coefficients of the effective
//! Dirac system:
//!
//! * `c_sharp  = -2 sum_m (2 pi m + pi) p_m^2`
//! * `theta_sharp = <g1, W g2>`
//! * `beta1 = int |g1|^4`, `beta2 = int g1^4` (real for real coefficients)

use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

use crate::bloch::{
    add_potential_coupling, assemble_fb_matrix, solve_bands_at_k, sorted_symmetric_eigen,
    symmetric_eigenvalues, FourierCutoff,
};
use crate::error::{Error, Result};
use crate::potential::{ParityClass, PeriodicPotential};

/// Relative tolerance deciding that two band values at `k = pi` coincide.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Even/odd-index decomposition of a plane-wave matrix.
#[derive(Debug, Clone)]
pub struct ParityBlocks {
    pub even: DMatrix<f64>,
    pub odd: DMatrix<f64>,
    pub even_positions: Vec<usize>,
    pub odd_positions: Vec<usize>,
    /// Largest `|A[i, j]|` with `i` even-index and `j` odd-index. Zero for an even-index `V`.
    pub cross_coupling: f64,
}

pub fn parity_block_split(mat: &DMatrix<f64>, cut: FourierCutoff) -> ParityBlocks {
    let (even_positions, odd_positions): (Vec<usize>, Vec<usize>) =
        (0..cut.dim()).partition(|&p| cut.index(p).rem_euclid(2) == 0);
    let take = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| mat[(rows[i], cols[j])])
    };
    let cross = take(&even_positions, &odd_positions);
    ParityBlocks {
        even: take(&even_positions, &even_positions),
        odd: take(&odd_positions, &odd_positions),
        cross_coupling: cross.amax(),
        even_positions,
        odd_positions,
    }
}

/// A band crossing at `k = pi` with its Bloch basis.
#[derive(Debug, Clone)]
pub struct DiracPoint {
    /// Which crossing, counted from the bottom: the j-th even-block eigenvalue.
    pub crossing: usize,
    /// One-based global band indices `(n*, n* + 1)`.
    pub band_pair: (usize, usize),
    pub mu_star: f64,
    pub cutoff: FourierCutoff,
    /// Real unit coefficients of `g1`, supported on even indices, largest entry positive.
    pub g1: Vec<f64>,
    /// `q_n = p_{-n-1}`, supported on odd indices.
    pub g2: Vec<f64>,
    pub potential_v: PeriodicPotential,
}

fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `q_n = p_{-n-1}` on the same cutoff. The entry `p_M` has no partner and is dropped.
pub fn partner_coefficients(g1: &[f64], cut: FourierCutoff) -> Vec<f64> {
    (0..cut.dim())
        .map(|pos| cut.position(-cut.index(pos) - 1).map_or(0.0, |src| g1[src]))
        .collect()
}

pub fn find_dirac_point(pot: &PeriodicPotential, cut: FourierCutoff, crossing: usize) -> Result<DiracPoint> {
    if pot.parity() != ParityClass::EvenIndex {
        return Err(Error::InvalidPotential("the lattice potential must have even indices only".into()));
    }
    if crossing == 0 {
        return Err(Error::InvalidParameter("crossing index is one-based".into()));
    }
    let mat = assemble_fb_matrix(pot, PI, cut)?;
    let blocks = parity_block_split(&mat, cut);
    if blocks.cross_coupling != 0.0 {
        return Err(Error::CheckFailed(format!(
            "parity blocks couple with strength {:e}",
            blocks.cross_coupling
        )));
    }
    let (even_vals, even_vecs) = sorted_symmetric_eigen(&blocks.even, PI)?;
    let odd_vals = symmetric_eigenvalues(blocks.odd.clone(), PI)?;
    let j = crossing - 1;
    if j >= even_vals.len() {
        return Err(Error::NoCrossing(format!("crossing {crossing} exceeds the resolved spectrum")));
    }
    let mu_star = even_vals[j];
    let tol = DEGENERACY_TOL * (1.0 + mu_star.abs());
    if (j > 0 && (even_vals[j - 1] - mu_star).abs() <= tol)
        || (j + 1 < even_vals.len() && (even_vals[j + 1] - mu_star).abs() <= tol)
    {
        return Err(Error::DegenerateCrossing(format!(
            "even-index block has a repeated eigenvalue near {mu_star}; the Bloch basis is ambiguous"
        )));
    }
    let partner = odd_vals
        .iter()
        .map(|&v| (v - mu_star).abs())
        .fold(f64::INFINITY, f64::min);
    if partner > tol {
        return Err(Error::NoCrossing(format!(
            "no odd-index eigenvalue matches {mu_star} (closest distance {partner:e})"
        )));
    }

    let mut g1 = vec![0.0; cut.dim()];
    for (i, &pos) in blocks.even_positions.iter().enumerate() {
        g1[pos] = even_vecs[(i, j)];
    }
    normalize_sign(&mut g1);
    let g2 = partner_coefficients(&g1, cut);

    let below = even_vals.iter().chain(&odd_vals).filter(|&&v| v < mu_star - tol).count();
    Ok(DiracPoint {
        crossing,
        band_pair: (below + 1, below + 2),
        mu_star,
        cutoff: cut,
        g1,
        g2,
        potential_v: pot.clone(),
    })
}

fn quasi_momenta(cut: FourierCutoff) -> impl Iterator<Item = (usize, f64)> {
    (0..cut.dim()).map(move |pos| (pos, 2.0 * PI * cut.index(pos) as f64 + PI))
}

/// `c_sharp` from `g1`. Errors when it vanishes (no linear crossing).
pub fn compute_c_sharp(point: &DiracPoint) -> Result<f64> {
    let c = -2.0 * quasi_momenta(point.cutoff).map(|(pos, q)| q * point.g1[pos] * point.g1[pos]).sum::<f64>();
    if c.abs() < 1e-8 {
        return Err(Error::DegenerateCrossing(format!("c_sharp = {c:e} vanishes")));
    }
    Ok(c)
}

/// The same coefficient read off `g2`: `2 sum_n (2 pi n + pi) q_n^2`.
pub fn c_sharp_from_g2(point: &DiracPoint) -> f64 {
    2.0 * quasi_momenta(point.cutoff).map(|(pos, q)| q * point.g2[pos] * point.g2[pos]).sum::<f64>()
}

/// Centred-difference slopes of the two straight branches through the crossing:
/// `(mu_{n*}(pi+h) - mu_{n*+1}(pi-h)) / 2h` and `(mu_{n*+1}(pi+h) - mu_{n*}(pi-h)) / 2h`.
/// For a conical crossing these are `-|c_sharp|` and `+|c_sharp|`.
pub fn band_slope_oracle(point: &DiracPoint, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::InvalidParameter(format!("slope step {h} must lie in (0, 0.5)")));
    }
    let lo = solve_bands_at_k(&point.potential_v, PI - h, point.cutoff)?.eigenvalues;
    let hi = solve_bands_at_k(&point.potential_v, PI + h, point.cutoff)?.eigenvalues;
    let (a, b) = (point.band_pair.0 - 1, point.band_pair.1 - 1);
    Ok(((hi[a] - lo[b]) / (2.0 * h), (hi[b] - lo[a]) / (2.0 * h)))
}

/// The branch through `g1`: the same even-index-block eigenvalue at any `k`.
/// The blocks decouple for every `k`, so this is a smooth function with slope
/// `-c_sharp` at `pi`.
pub fn even_branch_eigenvalue(point: &DiracPoint, k: f64) -> Result<f64> {
    let mat = assemble_fb_matrix(&point.potential_v, k, point.cutoff)?;
    let blocks = parity_block_split(&mat, point.cutoff);
    let (vals, _) = sorted_symmetric_eigen(&blocks.even, k)?;
    Ok(vals[point.crossing - 1])
}

/// `<g1, W g2>` from the coupling matrix of `W` in coefficient space.
pub fn compute_theta_sharp(point: &DiracPoint, pot_w: &PeriodicPotential) -> Result<f64> {
    if pot_w.parity() != ParityClass::OddIndex {
        return Err(Error::InvalidPotential("the perturbation must have odd indices only".into()));
    }
    point.cutoff.require_for(pot_w)?;
    let n = point.cutoff.dim();
    let mut coupling = DMatrix::zeros(n, n);
    add_potential_coupling(&mut coupling, pot_w, 1.0);
    let wq = &coupling * nalgebra::DVector::from_column_slice(&point.g2);
    let theta: f64 = wq.iter().zip(&point.g1).map(|(a, b)| a * b).sum();
    if theta.abs() < 1e-10 * (1.0 + pot_w.sup_bound()) {
        return Err(Error::GapNotOpen(format!(
            "theta_sharp = {theta:e}: the perturbation does not couple the degenerate pair"
        )));
    }
    Ok(theta)
}

/// Default quadrature size for the quartic overlaps.
pub fn default_beta_quadrature(cut: FourierCutoff) -> usize {
    2048.max(8 * cut.m() + 8)
}

/// `(beta1, beta2, imag beta2)` by trapezoid quadrature over one cell.
pub fn compute_betas(point: &DiracPoint, n_quad: usize) -> Result<(f64, f64, f64)> {
    let needed = 8 * point.cutoff.m() + 8;
    if n_quad < needed {
        return Err(Error::InvalidParameter(format!(
            "{n_quad} quadrature points cannot integrate quartic products exactly; need {needed}"
        )));
    }
    let xs: Vec<f64> = (0..n_quad).map(|j| j as f64 / n_quad as f64).collect();
    let g = crate::bloch::bloch_wave_eval(&point.g1, PI, point.cutoff, &xs)?;
    let mut b1 = 0.0;
    let mut b2 = num_complex::Complex64::new(0.0, 0.0);
    for z in &g {
        let z2 = z * z;
        b1 += z.norm_sqr() * z.norm_sqr();
        b2 += z2 * z2;
    }
    let n = n_quad as f64;
    Ok((b1 / n, b2.re / n, b2.im / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveCoefficients {
    pub c_sharp: f64,
    pub theta_sharp: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// A certified crossing together with the perturbation that opens it.
#[derive(Debug, Clone)]
pub struct DiracPointData {
    pub point: DiracPoint,
    pub potential_w: PeriodicPotential,
    pub coefficients: EffectiveCoefficients,
}

impl DiracPointData {
    pub fn compute(
        pot_v: &PeriodicPotential,
        pot_w: &PeriodicPotential,
        cut: FourierCutoff,
        crossing: usize,
    ) -> Result<Self> {
        let point = find_dirac_point(pot_v, cut, crossing)?;
        let c_sharp = compute_c_sharp(&point)?;
        let theta_sharp = compute_theta_sharp(&point, pot_w)?;
        let (beta1, beta2, beta2_im) = compute_betas(&point, default_beta_quadrature(cut))?;
        if beta2_im.abs() > 1e-10 {
            return Err(Error::CheckFailed(format!("beta2 has imaginary part {beta2_im:e}")));
        }
        if beta2.abs() > beta1 * (1.0 + 1e-12) {
            return Err(Error::CheckFailed(format!("|beta2| = {} exceeds beta1 = {beta1}", beta2.abs())));
        }
        Ok(Self {
            point,
            potential_w: pot_w.clone(),
            coefficients: EffectiveCoefficients { c_sharp, theta_sharp, beta1, beta2 },
        })
    }

    pub fn mu_star(&self) -> f64 {
        self.point.mu_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapViolation {
    pub k: f64,
    pub band_index: usize,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub delta: f64,
    pub a: f64,
    /// `(mu* - a delta |theta|, mu* + a delta |theta|)`.
    pub interval: (f64, f64),
    pub violations: Vec<GapViolation>,
    pub n_k: usize,
    /// Half the splitting of the two perturbed eigenvalues at `k = pi` nearest `mu*`.
    pub half_gap_measured: f64,
    pub half_gap_predicted: f64,
}

impl GapReport {
    pub fn is_open(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn half_gap_relative_error(&self) -> f64 {
        (self.half_gap_measured - self.half_gap_predicted).abs() / self.half_gap_predicted
    }
}

/// Quasimomenta in `[0, 2 pi]`: 401 points clustered quadratically around `pi`
/// (spacing about `1e-6` at the centre) plus a uniform 65-point global grid.
pub fn default_gap_k_grid() -> Vec<f64> {
    let width = 0.25;
    let mut ks: Vec<f64> = (0..=400)
        .map(|j| {
            let t = -1.0 + j as f64 / 200.0;
            PI + width * t * t.abs()
        })
        .collect();
    ks.extend((0..=64).map(|j| 2.0 * PI * j as f64 / 64.0));
    ks.sort_by(f64::total_cmp);
    ks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    ks
}

fn perturbed_matrix(data: &DiracPointData, delta: f64, k: f64) -> Result<DMatrix<f64>> {
    let mut mat = assemble_fb_matrix(&data.point.potential_v, k, data.point.cutoff)?;
    add_potential_coupling(&mut mat, &data.potential_w, delta);
    Ok(mat)
}

/// Half the splitting of the two eigenvalues of `H_delta(pi)` nearest `mu*`.
pub fn half_gap_at_pi(data: &DiracPointData, delta: f64) -> Result<f64> {
    let vals = symmetric_eigenvalues(perturbed_matrix(data, delta, PI)?, PI)?;
    let mu = data.point.mu_star;
    let mut near: Vec<f64> = vals;
    near.sort_by(|a, b| (a - mu).abs().total_cmp(&(b - mu).abs()));
    Ok((near[0] - near[1]).abs() / 2.0)
}

/// Sweep `V + delta W` over `k_grid` and list every band value inside the
/// candidate gap. Membership is decided with a slack of `1e-10 (1 + |mu*|)`, the
/// resolution of the eigensolver, so a degenerate interval at `delta = 0` still
/// catches the crossing itself.
pub fn verify_gap_opening(data: &DiracPointData, delta: f64, a: f64, k_grid: &[f64]) -> Result<GapReport> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be non-negative")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("a = {a} must lie in (0, 1)")));
    }
    use rayon::prelude::*;
    let mu = data.point.mu_star;
    let width = a * delta * data.coefficients.theta_sharp.abs();
    let slack = 1e-10 * (1.0 + mu.abs());
    let per_k = k_grid
        .par_iter()
        .map(|&k| {
            let vals = symmetric_eigenvalues(perturbed_matrix(data, delta, k)?, k)?;
            Ok(vals
                .iter()
                .enumerate()
                .filter(|(_, &v)| (v - mu).abs() <= width + slack)
                .map(|(n, &v)| GapViolation { k, band_index: n + 1, mu: v })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport {
        delta,
        a,
        interval: (mu - width, mu + width),
        violations: per_k.into_iter().flatten().collect(),
        n_k: k_grid.len(),
        half_gap_measured: half_gap_at_pi(data, delta)?,
        half_gap_predicted: delta * data.coefficients.theta_sharp.abs(),
    })
}
