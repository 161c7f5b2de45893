//! Two-scale approximation of NLS standing waves bifurcating from a Dirac point.
//!
//! With `y = delta x` and `mu_delta = mu* + delta mu_sharp`, the ansatz is
//!
//! ```text
//! u_delta(x) = sqrt(delta) [ U0(x, delta x) + delta U1(x, delta x) ]
//! U0 = Psi_-(y) g1(x) + Psi_+(y) g2(x) = 2 Re(Psi_-(y) g1(x))
//! ```
//!
//! `U1` solves `(-d_x^2 + V - mu*) U1 = G1` where
//! `G1 = 2 d_x d_y U0 - W U0 + mu_sharp U0 + U0^3`. The forcing is a sum of ten
//! separable terms `f_j(x) g_j(y)`, so `U1` is assembled from ten cell problems
//! solved once. The cell problems are solvable exactly when `G1` is orthogonal to
//! `g1` and `g2` for every `y`, which is the Dirac system for `Psi`.
//!
//! Functions of the fast variable are pseudo-periodic at `k = pi` and are stored
//! as coefficients `c_m` of `e^{i pi x} sum_m c_m e^{2 pi i m x}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::bloch::{assemble_fb_matrix, solve_bands_at_k, FourierCutoff};
use crate::dirac::DiracPointData;
use crate::error::{Error, Result};
use crate::nld::SpinorProfile;
use crate::potential::PeriodicPotential;

fn cplx(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// `<a, b> = sum conj(a_m) b_m`, equal to the cell integral of `conj(A) B`.
pub fn coeff_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn coeff_derivative(c: &[Complex64], cut: FourierCutoff) -> Vec<Complex64> {
    c.iter()
        .enumerate()
        .map(|(pos, &z)| z * Complex64::new(0.0, 2.0 * PI * cut.index(pos) as f64 + PI))
        .collect()
}

/// Coefficients of `W(x) F(x)`.
pub fn coeff_multiply_potential(pot: &PeriodicPotential, c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for &(d, a) in pot.terms() {
        for i in 0..n {
            if i >= d {
                out[i] += c[i - d] * (0.5 * a);
            }
            if i + d < n {
                out[i] += c[i + d] * (0.5 * a);
            }
        }
    }
    out
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `A B C` for three pseudo-periodic functions. The product
/// carries `e^{3 i pi x} = e^{i pi x} e^{2 pi i x}`, hence the index shift by one.
/// Truncated back to the cutoff.
pub fn coeff_triple_product(a: &[Complex64], b: &[Complex64], c: &[Complex64], cut: FourierCutoff) -> Vec<Complex64> {
    let m = cut.m() as i64;
    let abc = convolve(&convolve(a, b), c);
    // abc[k] has Fourier index k - 3M; shifted index is k - 3M + 1.
    (0..cut.dim())
        .map(|pos| {
            let k = cut.index(pos) - 1 + 3 * m;
            abc[k as usize]
        })
        .collect()
}

/// A pseudo-periodic function ready for pointwise evaluation.
#[derive(Debug, Clone)]
pub struct BlochSeries {
    lo: i64,
    coeffs: Vec<Complex64>,
}

impl BlochSeries {
    pub fn new(c: &[Complex64], cut: FourierCutoff) -> Self {
        let first = c.iter().position(|z| z.norm() > 0.0);
        let last = c.iter().rposition(|z| z.norm() > 0.0);
        match (first, last) {
            (Some(f), Some(l)) => Self { lo: cut.index(f), coeffs: c[f..=l].to_vec() },
            _ => Self { lo: 0, coeffs: Vec::new() },
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if self.coeffs.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let step = Complex64::cis(2.0 * PI * x);
        let mut w = Complex64::cis((2.0 * PI * self.lo as f64 + PI) * x);
        let mut s = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            s += c * w;
            w *= step;
        }
        s
    }
}

/// Slow-variable factor of a forcing term, as a function of `Psi_-` and `Psi_-'`
/// (`Psi_+` is the conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YFactor {
    DPsiMinus,
    DPsiPlus,
    PsiMinus,
    PsiPlus,
    PsiMinus3,
    PsiMinus2PsiPlus,
    PsiMinusPsiPlus2,
    PsiPlus3,
}

impl YFactor {
    pub fn eval(self, pm: Complex64, dpm: Complex64) -> Complex64 {
        let pp = pm.conj();
        match self {
            YFactor::DPsiMinus => dpm,
            YFactor::DPsiPlus => dpm.conj(),
            YFactor::PsiMinus => pm,
            YFactor::PsiPlus => pp,
            YFactor::PsiMinus3 => pm * pm * pm,
            YFactor::PsiMinus2PsiPlus => pm * pm * pp,
            YFactor::PsiMinusPsiPlus2 => pm * pp * pp,
            YFactor::PsiPlus3 => pp * pp * pp,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForcingTerm {
    pub x_coeffs: Vec<Complex64>,
    pub y_factor: YFactor,
    /// `y_factor` on the profile grid.
    pub y_samples: Vec<Complex64>,
}

/// `G1 = sum_j f_j(x) g_j(y)`.
#[derive(Debug, Clone)]
pub struct SeparableForcing {
    pub cutoff: FourierCutoff,
    pub terms: Vec<ForcingTerm>,
}

fn profile_y_samples(profile: &SpinorProfile, f: YFactor) -> Vec<Complex64> {
    (0..profile.len()).map(|i| f.eval(profile.psi_minus(i), profile.dpsi_minus(i))).collect()
}

/// The ten separable terms of `G1`, sampled on the profile grid. The stored
/// profile derivatives are used as `Psi_-'`.
pub fn build_g1(data: &DiracPointData, profile: &SpinorProfile) -> Result<SeparableForcing> {
    let cut = data.point.cutoff;
    let g1 = cplx(&data.point.g1);
    let g2 = cplx(&data.point.g2);
    let mu_sharp = profile.params.mu_sharp;
    let w = &data.potential_w;
    let scale = |v: Vec<Complex64>, s: f64| v.into_iter().map(|z| z * s).collect::<Vec<_>>();
    let specs: Vec<(Vec<Complex64>, YFactor)> = vec![
        (scale(coeff_derivative(&g1, cut), 2.0), YFactor::DPsiMinus),
        (scale(coeff_derivative(&g2, cut), 2.0), YFactor::DPsiPlus),
        (scale(coeff_multiply_potential(w, &g1), -1.0), YFactor::PsiMinus),
        (scale(coeff_multiply_potential(w, &g2), -1.0), YFactor::PsiPlus),
        (scale(g1.clone(), mu_sharp), YFactor::PsiMinus),
        (scale(g2.clone(), mu_sharp), YFactor::PsiPlus),
        (coeff_triple_product(&g1, &g1, &g1, cut), YFactor::PsiMinus3),
        (scale(coeff_triple_product(&g1, &g1, &g2, cut), 3.0), YFactor::PsiMinus2PsiPlus),
        (scale(coeff_triple_product(&g1, &g2, &g2, cut), 3.0), YFactor::PsiMinusPsiPlus2),
        (coeff_triple_product(&g2, &g2, &g2, cut), YFactor::PsiPlus3),
    ];
    Ok(SeparableForcing {
        cutoff: cut,
        terms: specs
            .into_iter()
            .map(|(x_coeffs, y_factor)| ForcingTerm {
                y_samples: profile_y_samples(profile, y_factor),
                x_coeffs,
                y_factor,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolvabilityReport {
    /// `max_y |<g1, G1(., y)>|`.
    pub projection_g1: f64,
    /// `max_y |<g2, G1(., y)>|`.
    pub projection_g2: f64,
    /// `max_y sum_j |g_j(y)| |<g1, f_j>|`, the size the individual terms reach.
    pub term_scale: f64,
}

impl SolvabilityReport {
    pub fn relative(&self) -> f64 {
        self.projection_g1.max(self.projection_g2) / self.term_scale.max(f64::MIN_POSITIVE)
    }
}

/// Projections of the forcing onto the kernel `{g1, g2}` at every profile sample.
pub fn solvability_check(forcing: &SeparableForcing, data: &DiracPointData) -> SolvabilityReport {
    let g1 = cplx(&data.point.g1);
    let g2 = cplx(&data.point.g2);
    let c1: Vec<Complex64> = forcing.terms.iter().map(|t| coeff_inner(&g1, &t.x_coeffs)).collect();
    let c2: Vec<Complex64> = forcing.terms.iter().map(|t| coeff_inner(&g2, &t.x_coeffs)).collect();
    let n = forcing.terms.first().map_or(0, |t| t.y_samples.len());
    let mut rep = SolvabilityReport { projection_g1: 0.0, projection_g2: 0.0, term_scale: 0.0 };
    for i in 0..n {
        let mut p1 = Complex64::new(0.0, 0.0);
        let mut p2 = Complex64::new(0.0, 0.0);
        let mut sc = 0.0;
        for (j, t) in forcing.terms.iter().enumerate() {
            p1 += c1[j] * t.y_samples[i];
            p2 += c2[j] * t.y_samples[i];
            sc += (c1[j] * t.y_samples[i]).norm();
        }
        rep.projection_g1 = rep.projection_g1.max(p1.norm());
        rep.projection_g2 = rep.projection_g2.max(p2.norm());
        rep.term_scale = rep.term_scale.max(sc);
    }
    rep
}

/// The ten cell solutions `w_j`, each orthogonal to `g1` and `g2`, with
/// `(A - mu*) w_j = P_perp f_j`. Then `U1(x, y) = sum_j g_j(y) w_j(x)`.
#[derive(Debug, Clone)]
pub struct U1Solution {
    pub cutoff: FourierCutoff,
    pub x_solutions: Vec<Vec<Complex64>>,
    pub y_factors: Vec<YFactor>,
    /// `max_j max(|<g1, w_j>|, |<g2, w_j>|) / max_j ||w_j||`.
    pub kernel_projection: f64,
    /// `max_j ||(A - mu*) w_j - P_perp f_j|| / max_j ||P_perp f_j||`.
    pub solve_residual: f64,
    /// Distance from `mu*` to the nearest other band value at `k = pi`.
    pub spectral_gap: f64,
}

impl U1Solution {
    /// Coefficients of `U1(., y)` for a given `(Psi_-, Psi_-')`.
    pub fn coefficients_at(&self, pm: Complex64, dpm: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cutoff.dim()];
        for (w, f) in self.x_solutions.iter().zip(&self.y_factors) {
            let g = f.eval(pm, dpm);
            for (o, &c) in out.iter_mut().zip(w) {
                *o += g * c;
            }
        }
        out
    }
}

fn project_out(v: &[Complex64], basis: &[&[Complex64]]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    for b in basis {
        let c = coeff_inner(b, &out);
        for (o, &bb) in out.iter_mut().zip(*b) {
            *o -= c * bb;
        }
    }
    out
}

pub fn solve_u1(forcing: &SeparableForcing, data: &DiracPointData) -> Result<U1Solution> {
    let cut = data.point.cutoff;
    if forcing.cutoff != cut {
        return Err(Error::ShapeMismatch("forcing and Dirac data use different cutoffs".into()));
    }
    let mu = data.point.mu_star;
    let spectrum = solve_bands_at_k(&data.point.potential_v, PI, cut)?.eigenvalues;
    let mut dist: Vec<f64> = spectrum.iter().map(|&e| (e - mu).abs()).collect();
    dist.sort_by(f64::total_cmp);
    let spectral_gap = dist[2];
    if spectral_gap < 1e-6 * (1.0 + mu.abs()) {
        return Err(Error::Singular(format!(
            "a third band value lies within {spectral_gap:e} of mu* = {mu}; the cell problem is not Fredholm"
        )));
    }

    let a = assemble_fb_matrix(&data.point.potential_v, PI, cut)?;
    let n = cut.dim();
    let (g1r, g2r) = (&data.point.g1, &data.point.g2);
    let mut shifted = a.clone();
    for i in 0..n {
        shifted[(i, i)] -= mu;
        for j in 0..n {
            shifted[(i, j)] += g1r[i] * g1r[j] + g2r[i] * g2r[j];
        }
    }
    let lu = shifted.lu();
    let g1 = cplx(g1r);
    let g2 = cplx(g2r);
    let nt = forcing.terms.len();
    let mut rhs = DMatrix::zeros(n, 2 * nt);
    let mut projected = Vec::with_capacity(nt);
    for (j, t) in forcing.terms.iter().enumerate() {
        let f = project_out(&t.x_coeffs, &[&g1, &g2]);
        for i in 0..n {
            rhs[(i, 2 * j)] = f[i].re;
            rhs[(i, 2 * j + 1)] = f[i].im;
        }
        projected.push(f);
    }
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("cell operator restricted to the kernel complement is singular".into()))?;

    let mut x_solutions = Vec::with_capacity(nt);
    let mut a_mu = a;
    for i in 0..n {
        a_mu[(i, i)] -= mu;
    }
    // Terms along the kernel (the mu_sharp terms) project to round-off, so both
    // diagnostics are measured against the largest term rather than per term.
    let (mut kern, mut res, mut w_scale, mut f_scale) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (j, f) in projected.iter().enumerate() {
        let w: Vec<Complex64> = (0..n).map(|i| Complex64::new(sol[(i, 2 * j)], sol[(i, 2 * j + 1)])).collect();
        w_scale = w_scale.max(coeff_inner(&w, &w).re.sqrt());
        f_scale = f_scale.max(coeff_inner(f, f).re.sqrt());
        kern = kern.max(coeff_inner(&g1, &w).norm().max(coeff_inner(&g2, &w).norm()));
        let re = &a_mu * sol.column(2 * j);
        let im = &a_mu * sol.column(2 * j + 1);
        let r: f64 = (0..n)
            .map(|i| (Complex64::new(re[i], im[i]) - f[i]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        res = res.max(r);
        x_solutions.push(w);
    }
    let kernel_projection = if w_scale > 0.0 { kern / w_scale } else { 0.0 };
    let solve_residual = if f_scale > 0.0 { res / f_scale } else { 0.0 };
    Ok(U1Solution {
        cutoff: cut,
        x_solutions,
        y_factors: forcing.terms.iter().map(|t| t.y_factor).collect(),
        kernel_projection,
        solve_residual,
        spectral_gap,
    })
}

/// Uniform grid `x_i = x0 + i h`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl UniformGrid {
    /// `[-L, L]` with spacing `h`.
    pub fn symmetric(half_length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_length > 0.0) {
            return Err(Error::InvalidParameter("grid spacing and half-length must be positive".into()));
        }
        let cells = (half_length / h).round();
        if (cells * h - half_length).abs() > 1e-9 * half_length {
            return Err(Error::InvalidParameter(format!(
                "half-length {half_length} is not a multiple of h = {h}"
            )));
        }
        Ok(Self { x0: -half_length, h, n: 2 * cells as usize + 1 })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// `Some((n_cell, phase))` when every point is `phase + l h` with `n_cell h = 1`.
    fn cell_structure(&self) -> Option<(usize, f64)> {
        let nc = (1.0 / self.h).round();
        if nc < 1.0 || (nc * self.h - 1.0).abs() > 1e-12 {
            return None;
        }
        let l0 = (self.x0 / self.h).round();
        let phase = self.x0 - l0 * self.h;
        Some((nc as usize, phase))
    }
}

/// Values of a pseudo-periodic series on a grid, using one cell table and
/// `F(x + q) = (-1)^q F(x)` when the grid is commensurate with the period.
fn sample_series(series: &BlochSeries, grid: &UniformGrid) -> Vec<Complex64> {
    match grid.cell_structure() {
        Some((nc, phase)) => {
            let table: Vec<Complex64> = (0..nc).map(|c| series.eval(phase + c as f64 * grid.h)).collect();
            let l0 = ((grid.x0 - phase) / grid.h).round() as i64;
            (0..grid.n)
                .map(|i| {
                    let l = l0 + i as i64;
                    let q = l.div_euclid(nc as i64);
                    let c = l.rem_euclid(nc as i64) as usize;
                    if q % 2 == 0 {
                        table[c]
                    } else {
                        -table[c]
                    }
                })
                .collect()
        }
        None => (0..grid.n).into_par_iter().map(|i| series.eval(grid.x(i))).collect(),
    }
}

fn sample_periodic(pot: &PeriodicPotential, grid: &UniformGrid) -> Vec<f64> {
    match grid.cell_structure() {
        Some((nc, phase)) => {
            let table: Vec<f64> = (0..nc).map(|c| pot.eval(phase + c as f64 * grid.h)).collect();
            let l0 = ((grid.x0 - phase) / grid.h).round() as i64;
            (0..grid.n).map(|i| table[(l0 + i as i64).rem_euclid(nc as i64) as usize]).collect()
        }
        None => (0..grid.n).map(|i| pot.eval(grid.x(i))).collect(),
    }
}

/// The ansatz sampled on a uniform grid, with its two components kept separately.
#[derive(Debug, Clone)]
pub struct TwoScaleField {
    pub delta: f64,
    pub grid: UniformGrid,
    pub with_u1: bool,
    /// `U0(x_i, delta x_i)`.
    pub u0: Vec<f64>,
    /// `U1(x_i, delta x_i)`, present when requested.
    pub u1: Option<Vec<f64>>,
    /// `sqrt(delta) (U0 + delta U1)`.
    pub samples: Vec<f64>,
}

/// Ingredients of the ansatz that do not depend on `delta`.
#[derive(Debug, Clone)]
pub struct Ansatz<'a> {
    pub data: &'a DiracPointData,
    pub profile: &'a SpinorProfile,
    pub forcing: SeparableForcing,
    pub u1: U1Solution,
}

impl<'a> Ansatz<'a> {
    pub fn new(data: &'a DiracPointData, profile: &'a SpinorProfile) -> Result<Self> {
        let forcing = build_g1(data, profile)?;
        let u1 = solve_u1(&forcing, data)?;
        Ok(Self { data, profile, forcing, u1 })
    }

    pub fn mu_delta(&self, delta: f64) -> f64 {
        self.data.point.mu_star + delta * self.profile.params.mu_sharp
    }

    /// Smallest half-length on which the field has decayed below `1e-8`.
    pub fn default_half_length(&self, delta: f64) -> f64 {
        let lambda = self.profile.params.decay_rate();
        let peak = 2.0 * self.profile.peak_amplitude() * delta.sqrt();
        let by_decay = ((peak / 1e-8).ln().max(10.0) / (delta * lambda)).ceil();
        let by_profile = (self.profile.y_max / delta).floor();
        by_decay.min(by_profile).max(1.0)
    }

    /// Sample the ansatz on `grid`.
    pub fn sample(&self, delta: f64, grid: &UniformGrid, with_u1: bool) -> Result<TwoScaleField> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must be positive")));
        }
        let lambda = self.profile.params.decay_rate();
        let half = (grid.x0.abs()).max(grid.x(grid.n - 1).abs());
        if half < 10.0 / (delta * lambda) {
            return Err(Error::InvalidParameter(format!(
                "domain half-length {half} is below ten soliton widths ({})",
                10.0 / (delta * lambda)
            )));
        }
        let cut = self.data.point.cutoff;
        let g1 = sample_series(&BlochSeries::new(&cplx(&self.data.point.g1), cut), grid);
        let g2 = sample_series(&BlochSeries::new(&cplx(&self.data.point.g2), cut), grid);
        let w_tabs: Vec<Vec<Complex64>> = if with_u1 {
            self.u1.x_solutions.iter().map(|w| sample_series(&BlochSeries::new(w, cut), grid)).collect()
        } else {
            Vec::new()
        };
        let factors = &self.u1.y_factors;
        let pairs: Vec<(f64, f64)> = (0..grid.n)
            .into_par_iter()
            .map(|i| {
                let s = self.profile.eval(delta * grid.x(i));
                let pm = Complex64::new(s[0], s[1]) * 0.5;
                let dpm = Complex64::new(s[2], s[3]) * 0.5;
                let u0 = (pm * g1[i] + pm.conj() * g2[i]).re;
                let u1 = if with_u1 {
                    factors.iter().zip(&w_tabs).map(|(f, w)| (f.eval(pm, dpm) * w[i]).re).sum()
                } else {
                    0.0
                };
                (u0, u1)
            })
            .collect();
        let sd = delta.sqrt();
        let u0: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let samples = pairs.iter().map(|p| sd * (p.0 + delta * p.1)).collect();
        let u1 = with_u1.then(|| pairs.iter().map(|p| p.1).collect());
        Ok(TwoScaleField { delta, grid: *grid, with_u1, u0, u1, samples })
    }
}

/// Pointwise NLS residual `-u'' + (V + delta W - mu_delta) u - u^3` with a
/// 4th-order stencil; the five points at each end are set to zero.
pub fn residual_field(field: &TwoScaleField, data: &DiracPointData, mu_delta: f64) -> Vec<f64> {
    let g = &field.grid;
    let u = &field.samples;
    let v = sample_periodic(&data.point.potential_v, g);
    let w = sample_periodic(&data.potential_w, g);
    let inv = 1.0 / (12.0 * g.h * g.h);
    let mut r = vec![0.0; g.n];
    for i in 5..g.n.saturating_sub(5) {
        let lap = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) * inv;
        r[i] = -lap + (v[i] + field.delta * w[i] - mu_delta) * u[i] - u[i] * u[i] * u[i];
    }
    r
}

/// Discrete `L^2` norm `sqrt(h sum r_i^2)` of [`residual_field`].
pub fn residual_norm(field: &TwoScaleField, data: &DiracPointData, mu_delta: f64) -> f64 {
    let r = residual_field(field, data, mu_delta);
    (field.grid.h * r.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

/// Least-squares slope of `log y` against `log x`.
pub fn fitted_order(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (sx, sy) = (lx.iter().sum::<f64>(), ly.iter().sum::<f64>());
    let sxx: f64 = lx.iter().map(|x| x * x).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
