//! Newton refinement of the two-scale ansatz into a discrete NLS standing wave.
//!
//! The unknown lives on the half-line grid `x_i = (i + 1/2) h`, `i < N`. Even or
//! odd symmetry about `x = 0` supplies the ghost values `u_{-1} = s u_0`,
//! `u_{-2} = s u_1` with `s = +-1`, which keeps the finite-difference matrix
//! symmetric. Beyond `x = N h` the field is zero. The Jacobian is symmetric but
//! indefinite (the frequency sits inside a spectral gap), so systems are solved
//! by banded LU with partial pivoting.

use serde::Serialize;

use crate::dirac::{DiracPointData, GapReport};
use crate::error::{Error, Result};
use crate::multiscale::{Ansatz, UniformGrid};
use crate::potential::PeriodicPotential;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FdOrder {
    Second,
    Fourth,
}

/// Cell-centred grid `x_i = (i + 1/2) h` on `[0, n h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfLineGrid {
    pub h: f64,
    pub n: usize,
}

impl HalfLineGrid {
    pub fn new(half_length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_length > 0.0) {
            return Err(Error::InvalidParameter("grid spacing and length must be positive".into()));
        }
        let n = (half_length / h).round();
        if (n * h - half_length).abs() > 1e-9 * half_length {
            return Err(Error::InvalidParameter(format!(
                "length {half_length} is not a multiple of h = {h}"
            )));
        }
        Ok(Self { h, n: n as usize })
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn as_uniform(&self) -> UniformGrid {
        UniformGrid { x0: 0.5 * self.h, h: self.h, n: self.n }
    }
}

/// Symmetric pentadiagonal matrix: `diag[i]`, `off1[i] = A[i][i+1]`, `off2[i] = A[i][i+2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedOperator {
    pub diag: Vec<f64>,
    pub off1: Vec<f64>,
    pub off2: Vec<f64>,
}

impl BandedOperator {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * u[i];
                if i + 1 < n {
                    s += self.off1[i] * u[i + 1];
                }
                if i + 2 < n {
                    s += self.off2[i] * u[i + 2];
                }
                if i >= 1 {
                    s += self.off1[i - 1] * u[i - 1];
                }
                if i >= 2 {
                    s += self.off2[i - 2] * u[i - 2];
                }
                s
            })
            .collect()
    }

    /// `self + diag(d)`.
    pub fn with_diagonal_shift(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (a, b) in out.diag.iter_mut().zip(d) {
            *a += b;
        }
        out
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i].abs();
                if i + 1 < n {
                    r += self.off1[i].abs();
                }
                if i + 2 < n {
                    r += self.off2[i].abs();
                }
                if i >= 1 {
                    r += self.off1[i - 1].abs();
                }
                if i >= 2 {
                    r += self.off2[i - 2].abs();
                }
                r
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues below `s`, from the signs of an `LDL^T` factorisation
    /// of `A - s I` (Sylvester's law of inertia). Zero pivots are nudged.
    pub fn count_below(&self, s: f64) -> usize {
        let n = self.len();
        let tiny = f64::EPSILON * self.gershgorin_radius().max(1.0);
        let mut d = vec![0.0; n];
        // l1[i] = L[i][i-1], l2[i] = L[i][i-2].
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        let mut neg = 0;
        for i in 0..n {
            let mut di = self.diag[i] - s;
            if i >= 2 {
                l2[i] = self.off2[i - 2] / d[i - 2];
                di -= l2[i] * l2[i] * d[i - 2];
            }
            if i >= 1 {
                let mut a = self.off1[i - 1];
                if i >= 2 {
                    a -= l2[i] * d[i - 2] * l1[i - 1];
                }
                l1[i] = a / d[i - 1];
                di -= l1[i] * l1[i] * d[i - 1];
            }
            if di.abs() < tiny {
                di = if di < 0.0 { -tiny } else { tiny };
            }
            if di < 0.0 {
                neg += 1;
            }
            d[i] = di;
        }
        neg
    }

    /// `(min |lambda|, number of negative eigenvalues)` by bisection on inertia counts.
    pub fn min_abs_eigenvalue(&self) -> (f64, usize) {
        let r = self.gershgorin_radius() * 1.01 + 1.0;
        let n0 = self.count_below(0.0);
        let n = self.len();
        let bisect = |mut lo: f64, mut hi: f64, target: usize| {
            // Smallest s with count_below(s) >= target lies in (lo, hi].
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.count_below(mid) >= target {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-10 * lo.abs().max(hi.abs()) {
                    break;
                }
            }
            0.5 * (lo + hi)
        };
        let pos = (n0 < n).then(|| bisect(0.0, r, n0 + 1));
        let neg = (n0 > 0).then(|| -bisect(-r, 0.0, n0));
        let m = match (pos, neg) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => 0.0,
        };
        (m, n0)
    }
}

/// `H_delta - mu_delta = -d^2/dx^2 + V + delta W - mu_delta` on the half-line grid.
pub fn discretize_operator(
    pot_v: &PeriodicPotential,
    pot_w: &PeriodicPotential,
    delta: f64,
    mu_delta: f64,
    grid: &HalfLineGrid,
    parity: Parity,
    order: FdOrder,
) -> BandedOperator {
    let n = grid.n;
    let s = parity.sign();
    let h2 = grid.h * grid.h;
    let mut diag: Vec<f64> = (0..n)
        .map(|i| {
            let x = grid.x(i);
            pot_v.eval(x) + delta * pot_w.eval(x) - mu_delta
        })
        .collect();
    let mut off1 = vec![0.0; n];
    let mut off2 = vec![0.0; n];
    match order {
        FdOrder::Second => {
            for i in 0..n {
                diag[i] += 2.0 / h2;
                off1[i] = -1.0 / h2;
            }
            diag[0] -= s / h2;
        }
        FdOrder::Fourth => {
            let c = 1.0 / (12.0 * h2);
            for i in 0..n {
                diag[i] += 30.0 * c;
                off1[i] = -16.0 * c;
                off2[i] = c;
            }
            // Ghosts u_{-1} = s u_0 and u_{-2} = s u_1.
            diag[0] -= 16.0 * s * c;
            off1[0] += s * c;
        }
    }
    if n >= 1 {
        off1[n - 1] = 0.0;
    }
    for v in off2.iter_mut().skip(n.saturating_sub(2)) {
        *v = 0.0;
    }
    BandedOperator { diag, off1, off2 }
}

/// Dense-band LU with partial pivoting for a pentadiagonal matrix.
struct BandLu {
    n: usize,
    /// Row `i` holds columns `i - 2 ..= i + 4`.
    rows: Vec<[f64; 7]>,
    piv: Vec<usize>,
    mult: Vec<[f64; 2]>,
}

const KL: usize = 2;
const KU: usize = 4;

impl BandLu {
    fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j + KL - i]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i][j + KL - i] = v;
    }

    fn factor(a: &BandedOperator) -> Result<Self> {
        let n = a.len();
        let mut lu = BandLu { n, rows: vec![[0.0; 7]; n], piv: vec![0; n], mult: vec![[0.0; 2]; n] };
        for i in 0..n {
            lu.set(i, i, a.diag[i]);
            if i + 1 < n {
                lu.set(i, i + 1, a.off1[i]);
                lu.set(i + 1, i, a.off1[i]);
            }
            if i + 2 < n {
                lu.set(i, i + 2, a.off2[i]);
                lu.set(i + 2, i, a.off2[i]);
            }
        }
        let scale = a.gershgorin_radius().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last = (k + KL).min(n - 1);
            let mut p = k;
            for i in k + 1..=last {
                if lu.get(i, k).abs() > lu.get(p, k).abs() {
                    p = i;
                }
            }
            lu.piv[k] = p;
            let jmax = (k + KL + KU - KL).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let t = lu.get(k, j);
                    let q = if j + KL >= p && j <= p + KU { lu.get(p, j) } else { 0.0 };
                    lu.set(k, j, q);
                    if j + KL >= p && j <= p + KU {
                        lu.set(p, j, t);
                    }
                }
            }
            let pivot = lu.get(k, k);
            if pivot.abs() <= 1e-300 * scale || !pivot.is_finite() {
                return Err(Error::Singular(format!("zero pivot at row {k}")));
            }
            for i in k + 1..=last {
                let l = lu.get(i, k) / pivot;
                lu.mult[k][i - k - 1] = l;
                lu.set(i, k, 0.0);
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let v = lu.get(i, j) - l * lu.get(k, j);
                        lu.set(i, j, v);
                    }
                }
            }
        }
        Ok(lu)
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            for i in k + 1..=(k + KL).min(n - 1) {
                b[i] -= self.mult[k][i - k - 1] * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + KU).min(n - 1) {
                s -= self.get(k, j) * b[j];
            }
            b[k] = s / self.get(k, k);
        }
    }
}

/// Solve `A x = b` for a symmetric pentadiagonal `A`.
pub fn banded_solve(a: &BandedOperator, b: &[f64]) -> Result<Vec<f64>> {
    let lu = BandLu::factor(a)?;
    let mut x = b.to_vec();
    lu.solve(&mut x);
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub damping: f64,
    pub order: FdOrder,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { max_iters: 25, tol: 1e-10, damping: 1.0, order: FdOrder::Fourth }
    }
}

#[derive(Debug, Clone)]
pub struct SolitonField {
    pub delta: f64,
    pub mu_delta: f64,
    pub parity: Parity,
    pub grid: HalfLineGrid,
    pub samples: Vec<f64>,
    /// Number of Newton updates applied.
    pub iterations: usize,
    /// Residual norm before each update and after the last one.
    pub residual_history: Vec<f64>,
    pub final_residual: f64,
    /// `min |lambda|` of the Jacobian at the solution.
    pub jacobian_min_abs_eig: f64,
    pub jacobian_negative_count: usize,
}

/// Full-line `L^2` norm of a half-line grid function with either parity.
pub fn full_line_norm(h: f64, v: &[f64]) -> f64 {
    (2.0 * h * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
}

fn nls_residual(op: &BandedOperator, u: &[f64]) -> Vec<f64> {
    op.matvec(u).iter().zip(u).map(|(a, &x)| a - x * x * x).collect()
}

/// Newton's method for `(H_delta - mu_delta) u - u^3 = 0` from `initial`.
pub fn newton_solve(
    op: &BandedOperator,
    grid: &HalfLineGrid,
    initial: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, usize, Vec<f64>)> {
    if initial.len() != op.len() || grid.n != op.len() {
        return Err(Error::ShapeMismatch(format!(
            "initial guess has {} samples, operator has {}",
            initial.len(),
            op.len()
        )));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping {} must lie in (0, 1]", cfg.damping)));
    }
    let mut u = initial.to_vec();
    let mut history = Vec::new();
    let r0 = full_line_norm(grid.h, &nls_residual(op, &u));
    for it in 0..=cfg.max_iters {
        let f = nls_residual(op, &u);
        let res = full_line_norm(grid.h, &f);
        history.push(res);
        if !res.is_finite() || res > 1e6 * r0.max(1e-300) {
            return Err(Error::NewtonDivergence { iters: it, history });
        }
        if res <= cfg.tol {
            let norm = full_line_norm(grid.h, &u);
            let reference = full_line_norm(grid.h, initial);
            if norm <= 0.5 * reference || norm < 1e-12 {
                return Err(Error::TrivialSolution { norm });
            }
            return Ok((u, it, history));
        }
        if it == cfg.max_iters {
            break;
        }
        let shift: Vec<f64> = u.iter().map(|x| -3.0 * x * x).collect();
        let jac = op.with_diagonal_shift(&shift);
        let mut step: Vec<f64> = f.iter().map(|x| -x).collect();
        BandLu::factor(&jac)?.solve(&mut step);
        for (a, d) in u.iter_mut().zip(&step) {
            *a += cfg.damping * d;
        }
    }
    Err(Error::NewtonDivergence { iters: cfg.max_iters, history })
}

/// Build the discrete problem for `delta` and refine `U0 + delta U1` by Newton.
pub fn solve_soliton(ansatz: &Ansatz, delta: f64, h: f64, cfg: &NewtonConfig) -> Result<SolitonField> {
    let data = ansatz.data;
    let grid = HalfLineGrid::new(ansatz.default_half_length(delta), h)?;
    if (1.0 / h - (1.0 / h).round()).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("1/h = {} must be an integer", 1.0 / h)));
    }
    let parity = if ansatz.profile.params.u_is_even() { Parity::Even } else { Parity::Odd };
    let mu_delta = ansatz.mu_delta(delta);
    let initial = ansatz.sample(delta, &grid.as_uniform(), true)?.samples;
    let op = discretize_operator(&data.point.potential_v, &data.potential_w, delta, mu_delta, &grid, parity, cfg.order);
    let (samples, iterations, residual_history) = newton_solve(&op, &grid, &initial, cfg)?;
    let shift: Vec<f64> = samples.iter().map(|x| -3.0 * x * x).collect();
    let (jacobian_min_abs_eig, jacobian_negative_count) = op.with_diagonal_shift(&shift).min_abs_eigenvalue();
    Ok(SolitonField {
        delta,
        mu_delta,
        parity,
        grid,
        final_residual: *residual_history.last().unwrap_or(&f64::NAN),
        samples,
        iterations,
        residual_history,
        jacobian_min_abs_eig,
        jacobian_negative_count,
    })
}

/// `(L^2, H^2)` distance between the Newton solution and `sqrt(delta) U0`.
/// The discrete `H^2` norm is `sqrt(||e||^2 + ||D_h^2 e||^2)`.
pub fn error_vs_ansatz(sol: &SolitonField, ansatz: &Ansatz) -> Result<(f64, f64)> {
    let reference = ansatz.sample(sol.delta, &sol.grid.as_uniform(), false)?.samples;
    let e: Vec<f64> = sol.samples.iter().zip(&reference).map(|(a, b)| a - b).collect();
    let n = e.len();
    let s = sol.parity.sign();
    let h2 = sol.grid.h * sol.grid.h;
    let lap: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i == 0 { s * e[0] } else { e[i - 1] };
            let right = if i + 1 < n { e[i + 1] } else { 0.0 };
            (left - 2.0 * e[i] + right) / h2
        })
        .collect();
    let l2 = full_line_norm(sol.grid.h, &e);
    let d2 = full_line_norm(sol.grid.h, &lap);
    Ok((l2, (l2 * l2 + d2 * d2).sqrt()))
}

/// Whether `mu_delta = mu* + delta mu_sharp` lies strictly inside the certified
/// window `|mu_delta - mu*| < a delta |theta|`. A supplied gap report must match
/// `delta` and `a` and show no band inside.
pub fn frequency_window_check(
    data: &DiracPointData,
    mu_sharp: f64,
    delta: f64,
    a: f64,
    gap: Option<&GapReport>,
) -> bool {
    let theta = data.coefficients.theta_sharp.abs();
    if !(delta > 0.0) || !(a > 0.0 && a < 1.0) || mu_sharp.abs() >= a * theta {
        return false;
    }
    match gap {
        Some(g) => g.delta == delta && g.a == a && g.is_open(),
        None => true,
    }
}
