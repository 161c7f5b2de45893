//! The effective nonlinear Dirac system and its homoclinic soliton.
//!
//! Writing the spinor as `Psi = (Psi_-, Psi_+) = ((u + iv)/2, (u - iv)/2)` reduces
//! the stationary system to a planar Hamiltonian flow
//!
//! ```text
//! c u' =  H_v,   c v' = -H_u,
//! H = (b/4)(u^4 + v^4) + (a/2) u^2 v^2 + (mu/2)(u^2 + v^2) + (theta/2)(v^2 - u^2)
//! ```
//!
//! with `a = 3(beta1 - beta2)/4` and `b = (3 beta1 + beta2)/4`. The origin is a
//! saddle with rate `sqrt(theta^2 - mu^2)/|c|` and the soliton is the homoclinic
//! loop on the zero level set. For `theta > 0` it passes through
//! `(sqrt(2(theta - mu)/b), 0)` at `y = 0`, `u` is even and `v` odd; for
//! `theta < 0` the roles of `u` and `v` swap.
//!
//! # Integration
//!
//! Forward integration from the turning point leaves the loop at the saddle's
//! unstable rate, so the orbit is instead traced backwards from the far tail:
//! start a tiny distance along the stable eigenvector and integrate in reverse
//! time until the symmetry axis is crossed. The crossing time fixes the
//! translation. A second pass lands on a uniform grid and the other half follows
//! by parity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::dirac::EffectiveCoefficients;
use crate::error::{Error, Result};
use crate::ode::{dopri5_step, Dopri5};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NldParams {
    pub c_sharp: f64,
    pub theta_sharp: f64,
    pub mu_sharp: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl NldParams {
    pub fn new(c_sharp: f64, theta_sharp: f64, mu_sharp: f64, beta1: f64, beta2: f64) -> Result<Self> {
        let p = Self { c_sharp, theta_sharp, mu_sharp, beta1, beta2 };
        p.validate()?;
        Ok(p)
    }

    pub fn from_coefficients(coeffs: &EffectiveCoefficients, mu_sharp: f64) -> Result<Self> {
        Self::new(coeffs.c_sharp, coeffs.theta_sharp, mu_sharp, coeffs.beta1, coeffs.beta2)
    }

    /// `c = theta = beta1 = 1`, `beta2 = mu = 0`.
    pub fn canonical() -> Self {
        Self { c_sharp: 1.0, theta_sharp: 1.0, mu_sharp: 0.0, beta1: 1.0, beta2: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.c_sharp, self.theta_sharp, self.mu_sharp, self.beta1, self.beta2];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Dirac coefficient".into()));
        }
        if self.c_sharp == 0.0 {
            return Err(Error::InvalidParameter("c_sharp must be nonzero".into()));
        }
        if self.theta_sharp == 0.0 {
            return Err(Error::InvalidParameter("theta_sharp must be nonzero".into()));
        }
        if self.mu_sharp.abs() >= self.theta_sharp.abs() {
            return Err(Error::InvalidParameter(format!(
                "|mu_sharp| = {} must be below |theta_sharp| = {}",
                self.mu_sharp.abs(),
                self.theta_sharp.abs()
            )));
        }
        if self.beta1 <= 0.0 || self.beta2.abs() > self.beta1 {
            return Err(Error::InvalidParameter(format!(
                "need beta1 > 0 and |beta2| <= beta1, got beta1 = {}, beta2 = {}",
                self.beta1, self.beta2
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        0.75 * (self.beta1 - self.beta2)
    }

    pub fn b(&self) -> f64 {
        0.25 * (3.0 * self.beta1 + self.beta2)
    }

    /// Spatial decay rate of the soliton, `sqrt(theta^2 - mu^2) / |c|`.
    pub fn decay_rate(&self) -> f64 {
        (self.theta_sharp.powi(2) - self.mu_sharp.powi(2)).sqrt() / self.c_sharp.abs()
    }

    /// `u` is the even component when `theta > 0`.
    pub fn u_is_even(&self) -> bool {
        self.theta_sharp > 0.0
    }
}

pub fn hamiltonian(p: &NldParams, u: f64, v: f64) -> f64 {
    let (u2, v2) = (u * u, v * v);
    0.25 * p.b() * (u2 * u2 + v2 * v2)
        + 0.5 * p.a() * u2 * v2
        + 0.5 * p.mu_sharp * (u2 + v2)
        + 0.5 * p.theta_sharp * (v2 - u2)
}

/// `(u', v')` of the reduced system.
pub fn vector_field(p: &NldParams, u: f64, v: f64) -> (f64, f64) {
    let (a, b, th, mu) = (p.a(), p.b(), p.theta_sharp, p.mu_sharp);
    let du = (th * v + mu * v + a * u * u * v + b * v * v * v) / p.c_sharp;
    let dv = (th * u - mu * u - b * u * u * u - a * v * v * u) / p.c_sharp;
    (du, dv)
}

/// Rate of change of the polar angle of `(u, v)`. Its sign is `-sign(c_sharp)`
/// away from the origin, so orbits wind monotonically.
pub fn polar_angle_derivative(p: &NldParams, u: f64, v: f64) -> f64 {
    let r2 = u * u + v * v;
    let num = 0.5 * p.b() * (u.powi(4) + v.powi(4)) + p.a() * u * u * v * v;
    -num / (p.c_sharp * r2)
}

/// The turning point of the loop, on the axis of the even component.
pub fn initial_condition(p: &NldParams) -> (f64, f64) {
    let th = p.theta_sharp;
    if th > 0.0 {
        ((2.0 * (th - p.mu_sharp) / p.b()).sqrt(), 0.0)
    } else {
        (0.0, (2.0 * (-th - p.mu_sharp) / p.b()).sqrt())
    }
}

/// Fixed points: the origin and the symmetric pair on the axis of the even
/// component, where `H = -(|theta| - mu)^2 / (4b)`.
pub fn equilibria(p: &NldParams) -> Vec<(f64, f64)> {
    let th = p.theta_sharp;
    let r = ((th.abs() - p.mu_sharp) / p.b()).sqrt();
    if th > 0.0 {
        vec![(0.0, 0.0), (r, 0.0), (-r, 0.0)]
    } else {
        vec![(0.0, 0.0), (0.0, r), (0.0, -r)]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HomoclinicOptions {
    /// Half-length of the sampled window. `None` means 20 decay lengths.
    pub y_max: Option<f64>,
    /// Tolerance on the Hamiltonian drift; the integrator runs a hundred times tighter.
    pub tol: f64,
    /// Samples on `[0, y_max]` (the full grid has `2n + 1`).
    pub points_per_side: usize,
}

impl Default for HomoclinicOptions {
    fn default() -> Self {
        Self { y_max: None, tol: 1e-10, points_per_side: 4000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NldDiagnostics {
    pub decay_rate_fit: f64,
    pub decay_rate_predicted: f64,
    pub h_drift_max: f64,
    /// Mismatch between the two halves on the overlap past `y = 0`.
    pub parity_defect: f64,
    /// Distance of the computed turning point from the analytic one.
    pub shooting_defect: f64,
    /// Largest `|u|, |v|` at `|y| = y_max`, relative to the peak.
    pub tail_amplitude: f64,
}

/// Samples of the soliton on the uniform grid `y_i = -y_max + i dy`.
#[derive(Debug, Clone)]
pub struct SpinorProfile {
    pub params: NldParams,
    pub y_max: f64,
    pub dy: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Derivatives from the vector field at each sample.
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub hamiltonian: Vec<f64>,
    pub diagnostics: NldDiagnostics,
}

impl SpinorProfile {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn psi_minus(&self, i: usize) -> Complex64 {
        Complex64::new(self.u[i], self.v[i]) * 0.5
    }

    pub fn dpsi_minus(&self, i: usize) -> Complex64 {
        Complex64::new(self.du[i], self.dv[i]) * 0.5
    }

    /// `(u, v, u', v')` at any `y` by cubic Hermite interpolation; zero outside the window.
    pub fn eval(&self, y: f64) -> [f64; 4] {
        let s = (y + self.y_max) / self.dy;
        let n = self.y.len();
        if !(s >= 0.0) || s > (n - 1) as f64 {
            return [0.0; 4];
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        let h = self.dy;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        let herm = |f: &[f64], df: &[f64]| {
            (
                h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1],
                d00 * f[i] + d10 * df[i] + d01 * f[i + 1] + d11 * df[i + 1],
            )
        };
        let (u, du) = herm(&self.u, &self.du);
        let (v, dv) = herm(&self.v, &self.dv);
        [u, v, du, dv]
    }

    /// A profile with every sample zero, used as a degenerate input.
    pub fn zeros(params: NldParams, y_max: f64, points_per_side: usize) -> Self {
        let n = 2 * points_per_side + 1;
        let dy = y_max / points_per_side as f64;
        let y: Vec<f64> = (0..n).map(|i| -y_max + i as f64 * dy).collect();
        Self {
            params,
            y_max,
            dy,
            y,
            u: vec![0.0; n],
            v: vec![0.0; n],
            du: vec![0.0; n],
            dv: vec![0.0; n],
            hamiltonian: vec![0.0; n],
            diagnostics: NldDiagnostics {
                decay_rate_fit: 0.0,
                decay_rate_predicted: params.decay_rate(),
                h_drift_max: 0.0,
                parity_defect: 0.0,
                shooting_defect: 0.0,
                tail_amplitude: 0.0,
            },
        }
    }

    /// `max |Psi_-|`.
    pub fn peak_amplitude(&self) -> f64 {
        (0..self.len()).map(|i| self.psi_minus(i).norm()).fold(0.0, f64::max)
    }
}

/// The coordinate that vanishes at the turning point (the odd component).
fn odd_component(p: &NldParams, z: &[f64; 2]) -> f64 {
    if p.u_is_even() {
        z[1]
    } else {
        z[0]
    }
}

pub fn integrate_homoclinic(p: &NldParams, opts: &HomoclinicOptions) -> Result<SpinorProfile> {
    p.validate()?;
    let lambda = p.decay_rate();
    let y_max = opts.y_max.unwrap_or(20.0 / lambda);
    if !(y_max * lambda >= 10.0) {
        return Err(Error::InvalidParameter(format!(
            "y_max = {y_max} covers fewer than 10 decay lengths ({:.3})",
            1.0 / lambda
        )));
    }
    if opts.points_per_side < 16 {
        return Err(Error::InvalidParameter("need at least 16 points per side".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let (u0, v0) = initial_condition(p);
    let r0 = u0.hypot(v0);

    // Stable direction of the saddle, oriented towards the turning point.
    let mut e = [1.0, -lambda * p.c_sharp / (p.theta_sharp + p.mu_sharp)];
    let en = e[0].hypot(e[1]);
    e = [e[0] / en, e[1] / en];
    let flip = if p.u_is_even() { e[0] < 0.0 } else { e[1] < 0.0 };
    if flip {
        e = [-e[0], -e[1]];
    }

    let rev = |z: &[f64; 2]| {
        let (du, dv) = vector_field(p, z[0], z[1]);
        [-du, -dv]
    };
    let rtol = (opts.tol * 1e-2).clamp(1e-14, 1e-6);
    let mut eps = r0 * (-lambda * (y_max + 1.0)).exp();
    let solver = Dopri5::new(rtol, eps * rtol * 1e-2);
    let h0 = 1e-2 / lambda;

    // First pass: find the reverse time T at which the odd component vanishes.
    let mut turning = None;
    for _attempt in 0..8 {
        let t_cross = find_axis_crossing(p, &solver, &rev, [eps * e[0], eps * e[1]], h0, 4.0 * y_max + 50.0 / lambda)?;
        if t_cross >= y_max {
            turning = Some(t_cross);
            break;
        }
        eps *= (-lambda * (y_max + 1.0 - t_cross)).exp();
    }
    let t_turn = turning.ok_or_else(|| Error::Integration("could not place the tail beyond y_max".into()))?;
    let solver = Dopri5::new(rtol, eps * rtol * 1e-2);

    // Second pass: land on y_j = j dy for j = n, ..., -overlap.
    let n = opts.points_per_side;
    let dy = y_max / n as f64;
    let overlap = (n / 8).max(2);
    let mut z = [eps * e[0], eps * e[1]];
    let mut s = 0.0;
    let mut h = h0;
    let mut samples = Vec::with_capacity(n + overlap + 1);
    for j in (-(overlap as i64)..=n as i64).rev() {
        let target = t_turn - j as f64 * dy;
        let (zn, hn, _) = solver.integrate(&rev, s, z, target, h)?;
        z = zn;
        s = target;
        h = hn;
        samples.push(z);
    }
    // samples[k] sits at y = (n - k) dy.
    let at = |j: i64| samples[(n as i64 - j) as usize];
    let even_u = p.u_is_even();
    let mirror = |z: [f64; 2]| if even_u { [z[0], -z[1]] } else { [-z[0], z[1]] };

    let mut parity_defect = 0.0_f64;
    for j in 1..=overlap as i64 {
        let m = mirror(at(j));
        let raw = at(-j);
        parity_defect = parity_defect.max((raw[0] - m[0]).abs().max((raw[1] - m[1]).abs()) / r0);
    }
    let mut centre = at(0);
    let shooting_defect = (centre[0] - u0).abs().max((centre[1] - v0).abs()) / r0;
    if even_u {
        centre[1] = 0.0;
    } else {
        centre[0] = 0.0;
    }

    let total = 2 * n + 1;
    let mut u = Vec::with_capacity(total);
    let mut v = Vec::with_capacity(total);
    for i in 0..total {
        let j = i as i64 - n as i64;
        let zj = match j.cmp(&0) {
            std::cmp::Ordering::Less => mirror(at(-j)),
            std::cmp::Ordering::Equal => centre,
            std::cmp::Ordering::Greater => at(j),
        };
        u.push(zj[0]);
        v.push(zj[1]);
    }
    let y: Vec<f64> = (0..total).map(|i| (i as f64 - n as f64) * dy).collect();
    let (du, dv): (Vec<f64>, Vec<f64>) = u.iter().zip(&v).map(|(&a, &b)| vector_field(p, a, b)).unzip();
    let ham: Vec<f64> = u.iter().zip(&v).map(|(&a, &b)| hamiltonian(p, a, b)).collect();
    let h_scale = 0.25 * p.b() * r0.powi(4);
    let h_drift_max = ham.iter().fold(0.0_f64, |m, x| m.max(x.abs())) / h_scale;
    if h_drift_max > 100.0 * opts.tol {
        return Err(Error::Integration(format!(
            "Hamiltonian drift {h_drift_max:e} exceeds {:e}; tighten the tolerance",
            100.0 * opts.tol
        )));
    }
    let tail_amplitude = u[total - 1].abs().max(v[total - 1].abs()) / r0;
    if tail_amplitude > 1e-4 {
        return Err(Error::InvalidParameter(format!(
            "profile has not decayed at y_max = {y_max} (relative amplitude {tail_amplitude:e})"
        )));
    }

    // Least-squares slope of log r over 0.5 y_max <= y <= 0.9 y_max.
    let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in n..total {
        if y[i] >= 0.5 * y_max && y[i] <= 0.9 * y_max {
            let lr = u[i].hypot(v[i]).ln();
            sx += y[i];
            sy += lr;
            sxx += y[i] * y[i];
            sxy += y[i] * lr;
            cnt += 1.0;
        }
    }
    let slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

    Ok(SpinorProfile {
        params: *p,
        y_max,
        dy,
        y,
        u,
        v,
        du,
        dv,
        hamiltonian: ham,
        diagnostics: NldDiagnostics {
            decay_rate_fit: -slope,
            decay_rate_predicted: lambda,
            h_drift_max,
            parity_defect,
            shooting_defect,
            tail_amplitude,
        },
    })
}

/// Reverse-time length from `z0` to the first sign change of the odd component.
fn find_axis_crossing<F>(p: &NldParams, solver: &Dopri5, rev: &F, z0: [f64; 2], h0: f64, s_limit: f64) -> Result<f64>
where
    F: Fn(&[f64; 2]) -> [f64; 2],
{
    let sign0 = odd_component(p, &z0).signum();
    let mut z = z0;
    let mut s = 0.0;
    let mut h = h0;
    while s < s_limit {
        let (taken, zn, hn) = solver.adaptive_step(rev, &z, h)?;
        if odd_component(p, &zn).signum() != sign0 {
            // Bisection on the length of a single step from z.
            let g = |t: f64| odd_component(p, &dopri5_step(rev, &z, t).0);
            let (mut a, mut b) = (0.0, taken);
            let ga = odd_component(p, &z);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if c <= a || c >= b {
                    break;
                }
                if g(c).signum() == ga.signum() {
                    a = c;
                } else {
                    b = c;
                }
            }
            return Ok(s + 0.5 * (a + b));
        }
        z = zn;
        s += taken;
        h = hn;
    }
    Err(Error::Integration("orbit did not return to the symmetry axis".into()))
}

/// 4th-order centred first derivative with zero padding beyond both ends.
fn centred_derivative(f: &[Complex64], dy: f64) -> Vec<Complex64> {
    let n = f.len();
    let get = |i: i64| if i < 0 || i >= n as i64 { Complex64::new(0.0, 0.0) } else { f[i as usize] };
    (0..n as i64)
        .map(|i| (get(i - 2) - get(i - 1) * 8.0 + get(i + 1) * 8.0 - get(i + 2)) / (12.0 * dy))
        .collect()
}

/// Linearisation of the Dirac system about the soliton on a uniform symmetric grid:
///
/// ```text
/// D0 eta = i c sigma3 eta' + theta sigma1 eta - mu eta - M eta
/// M = [[6 b1 |P|^2, 3(b1 P^2 + b2 conj(P)^2)], [3(b1 conj(P)^2 + b2 P^2), 6 b1 |P|^2]]
/// ```
///
/// with `P = Psi_-`. Derivatives use a 4th-order centred stencil with zero padding.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub params: NldParams,
    pub dy: f64,
    pub y: Vec<f64>,
    pub psi_minus: Vec<Complex64>,
}

impl LinearizedOperator {
    /// Resample `profile` on `2 * points_per_side + 1` points over `[-y_max, y_max]`.
    pub fn from_profile(profile: &SpinorProfile, points_per_side: usize) -> Self {
        let n = 2 * points_per_side + 1;
        let dy = profile.y_max / points_per_side as f64;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 - points_per_side as f64) * dy).collect();
        let psi_minus = y
            .iter()
            .map(|&yy| {
                let s = profile.eval(yy);
                Complex64::new(s[0], s[1]) * 0.5
            })
            .collect();
        Self { params: profile.params, dy, y, psi_minus }
    }

    /// On the profile's own grid, no interpolation.
    pub fn on_profile_grid(profile: &SpinorProfile) -> Self {
        Self {
            params: profile.params,
            dy: profile.dy,
            y: profile.y.clone(),
            psi_minus: (0..profile.len()).map(|i| profile.psi_minus(i)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn apply(&self, eta: &[[Complex64; 2]]) -> Result<Vec<[Complex64; 2]>> {
        if eta.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "perturbation has {} samples, operator grid has {}",
                eta.len(),
                self.len()
            )));
        }
        let p = &self.params;
        let (b1, b2) = (p.beta1, p.beta2);
        let i = Complex64::i();
        let em: Vec<Complex64> = eta.iter().map(|e| e[0]).collect();
        let ep: Vec<Complex64> = eta.iter().map(|e| e[1]).collect();
        let dem = centred_derivative(&em, self.dy);
        let dep = centred_derivative(&ep, self.dy);
        Ok((0..self.len())
            .map(|j| {
                let ps = self.psi_minus[j];
                let d = 6.0 * b1 * ps.norm_sqr();
                let off = (ps * ps * b1 + ps.conj() * ps.conj() * b2) * 3.0;
                let off_c = (ps.conj() * ps.conj() * b1 + ps * ps * b2) * 3.0;
                let r1 = i * p.c_sharp * dem[j] + p.theta_sharp * ep[j] - p.mu_sharp * em[j] - d * em[j] - off * ep[j];
                let r2 = -i * p.c_sharp * dep[j] + p.theta_sharp * em[j] - p.mu_sharp * ep[j] - off_c * em[j] - d * ep[j];
                [r1, r2]
            })
            .collect())
    }

    /// Matrix of `(s, t) -> (sigma, tau)` on the conjugation-symmetric subspace
    /// `eta = ((s + it)/2, (s - it)/2)`, where `D0 eta = ((sigma + i tau)/2, c.c.)`.
    /// Columns and rows are ordered `[s_0..s_N, t_0..t_N]`. Norm ratios equal those
    /// of `D0` itself.
    pub fn real_matrix(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let mut mat = DMatrix::zeros(2 * n, 2 * n);
        let mut eta = vec![[Complex64::new(0.0, 0.0); 2]; n];
        for col in 0..2 * n {
            let (j, unit) = if col < n { (col, Complex64::new(0.5, 0.0)) } else { (col - n, Complex64::new(0.0, 0.5)) };
            eta[j] = [unit, unit.conj()];
            let out = self.apply(&eta)?;
            // The stencil and the local terms touch at most rows j-2..=j+2.
            for r in j.saturating_sub(2)..(j + 3).min(n) {
                let z = out[r][0] * 2.0;
                mat[(r, col)] = z.re;
                mat[(r + n, col)] = z.im;
            }
            eta[j] = [Complex64::new(0.0, 0.0); 2];
        }
        Ok(mat)
    }

    /// Orthonormal basis (as columns of a `2N x dim` matrix) of the parity
    /// subspace `Y` holding the soliton itself: even `s`, odd `t` when
    /// `theta > 0`, and the other way round when `theta < 0`.
    pub fn parity_subspace_basis(&self) -> DMatrix<f64> {
        let n = self.len();
        let half = n / 2;
        let s_even = self.params.u_is_even();
        let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (block, even) in [(0, s_even), (n, !s_even)] {
            if even {
                cols.push(vec![(block + half, 1.0)]);
            }
            for m in 1..=half {
                let sign = if even { 1.0 } else { -1.0 };
                cols.push(vec![(block + half + m, r), (block + half - m, sign * r)]);
            }
        }
        let mut q = DMatrix::zeros(2 * n, cols.len());
        for (c, entries) in cols.iter().enumerate() {
            for &(row, val) in entries {
                q[(row, c)] = val;
            }
        }
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReport {
    pub sigma_min_unrestricted: f64,
    pub sigma_min_restricted: f64,
    pub sigma_max: f64,
    /// `||D0 Psi'|| / ||Psi'||` on the profile grid.
    pub translation_mode_residual: f64,
}

/// Smallest singular values of the discretised `D0` with and without the parity
/// restriction. The full operator has a near-zero singular value from the
/// translation mode `Psi'`; on the parity subspace it is absent.
pub fn kernel_check(profile: &SpinorProfile, points_per_side: usize) -> Result<KernelReport> {
    let fine = LinearizedOperator::on_profile_grid(profile);
    let mode: Vec<[Complex64; 2]> = (0..profile.len())
        .map(|i| {
            let d = profile.dpsi_minus(i);
            [d, d.conj()]
        })
        .collect();
    let image = fine.apply(&mode)?;
    let nrm = |v: &[[Complex64; 2]]| v.iter().map(|e| e[0].norm_sqr() + e[1].norm_sqr()).sum::<f64>().sqrt();
    let translation_mode_residual = nrm(&image) / nrm(&mode);

    let op = LinearizedOperator::from_profile(profile, points_per_side);
    let full = op.real_matrix()?;
    let sv_full = full.clone().singular_values();
    let restricted = &full * op.parity_subspace_basis();
    let sv_res = restricted.singular_values();
    let min = |sv: &nalgebra::DVector<f64>| sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(KernelReport {
        sigma_min_unrestricted: min(&sv_full),
        sigma_min_restricted: min(&sv_res),
        sigma_max: sv_full.max(),
        translation_mode_residual,
    })
}
