use dirac_soliton::nld::*;
use dirac_soliton::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn opts(pps: usize) -> HomoclinicOptions {
    HomoclinicOptions { points_per_side: pps, ..Default::default() }
}

/// For `beta2 = 0` the quartic is `b r^4 / 4` and the zero level is
/// `r^2 = 2 (theta cos 2 phi - mu) / b`, with `phi' = -(theta cos 2 phi - mu) / c`.
/// Integrating gives `tan phi = -(w / (theta + mu)) tanh(w y / c)`, `w = sqrt(theta^2 - mu^2)`.
fn exact_isotropic(p: &NldParams, y: f64) -> (f64, f64) {
    let (th, mu, c) = (p.theta_sharp, p.mu_sharp, p.c_sharp);
    let w = (th * th - mu * mu).sqrt();
    let phi = (-(w / (th + mu)) * (w * y / c).tanh()).atan();
    let r = (2.0 * (th * (2.0 * phi).cos() - mu) / p.b()).sqrt();
    (r * phi.cos(), r * phi.sin())
}

#[test]
fn isotropic_soliton_matches_closed_form() {
    for p in [
        NldParams::canonical(),
        NldParams::new(2.0, 1.5, 0.4, 0.8, 0.0).unwrap(),
        NldParams::new(-1.3, 0.7, -0.3, 1.2, 0.0).unwrap(),
    ] {
        let prof = integrate_homoclinic(&p, &opts(2000)).unwrap();
        let peak = prof.peak_amplitude() * 2.0;
        let mut worst: f64 = 0.0;
        for i in 0..prof.len() {
            let (u, v) = exact_isotropic(&p, prof.y[i]);
            worst = worst.max((prof.u[i] - u).abs()).max((prof.v[i] - v).abs());
        }
        assert!(worst < 1e-8 * peak, "{p:?}: max deviation {worst:e}");
    }
}

#[test]
fn canonical_soliton_is_a_sech_root() {
    // c = theta = 1, mu = 0, beta1 = 1: r^2 = (8/3) sech(2y).
    let prof = integrate_homoclinic(&NldParams::canonical(), &opts(2000)).unwrap();
    for i in (0..prof.len()).step_by(97) {
        let r2 = prof.u[i].powi(2) + prof.v[i].powi(2);
        let expected = 8.0 / 3.0 / (2.0 * prof.y[i]).cosh();
        assert!((r2 - expected).abs() < 1e-8, "y = {}: {r2} vs {expected}", prof.y[i]);
    }
}

#[test]
fn turning_point_is_on_the_zero_level() {
    for p in [NldParams::canonical(), NldParams::new(-0.8, -0.5, 0.2, 1.0, -0.4).unwrap()] {
        let (u, v) = initial_condition(&p);
        assert!(hamiltonian(&p, u, v).abs() < 1e-14);
        if p.u_is_even() {
            assert_eq!(v, 0.0);
        } else {
            assert_eq!(u, 0.0);
        }
    }
}

#[test]
fn equilibria_are_fixed_points_with_the_stated_energy() {
    let p = NldParams::new(-0.8, 0.5, 0.2, 1.0, -0.4).unwrap();
    let eq = equilibria(&p);
    assert_eq!(eq[0], (0.0, 0.0));
    for &(u, v) in &eq {
        let (du, dv) = vector_field(&p, u, v);
        assert!(du.abs() < 1e-14 && dv.abs() < 1e-14);
    }
    let expected = -(p.theta_sharp.abs() - p.mu_sharp).powi(2) / (4.0 * p.b());
    for &(u, v) in &eq[1..] {
        assert!((hamiltonian(&p, u, v) - expected).abs() < 1e-14);
    }
}

#[test]
fn profile_has_the_right_parity_and_decay() {
    for theta in [0.37, -0.37] {
        for frac in [0.0, 0.3, 0.6] {
            let p = NldParams::new(-5.9, theta, frac * theta.abs(), 1.05, -0.49).unwrap();
            let prof = integrate_homoclinic(&p, &HomoclinicOptions::default()).unwrap();
            let n = prof.len();
            let (even, odd) = if p.u_is_even() { (&prof.u, &prof.v) } else { (&prof.v, &prof.u) };
            for i in 0..n {
                assert!((even[i] - even[n - 1 - i]).abs() < 1e-9);
                assert!((odd[i] + odd[n - 1 - i]).abs() < 1e-9);
            }
            let d = prof.diagnostics;
            assert!((d.decay_rate_fit - p.decay_rate()).abs() <= 0.02 * p.decay_rate());
            assert!(d.h_drift_max <= 1e-9);
            let scale = p.b() * initial_condition(&p).0.max(initial_condition(&p).1).powi(4);
            assert!(prof.hamiltonian.iter().all(|h| h.abs() <= 1e-9 * scale));
        }
    }
}

#[test]
fn orbit_winds_monotonically() {
    let p = NldParams::new(1.4, 0.6, -0.2, 1.0, 0.5).unwrap();
    let prof = integrate_homoclinic(&p, &opts(1000)).unwrap();
    let sign = -p.c_sharp.signum();
    for i in 0..prof.len() {
        if prof.u[i].hypot(prof.v[i]) > 1e-12 {
            assert!(polar_angle_derivative(&p, prof.u[i], prof.v[i]) * sign > 0.0);
        }
    }
}

#[test]
fn hermite_eval_reproduces_samples() {
    let prof = integrate_homoclinic(&NldParams::canonical(), &opts(400)).unwrap();
    for i in (0..prof.len()).step_by(37) {
        let s = prof.eval(prof.y[i]);
        assert!((s[0] - prof.u[i]).abs() < 1e-14 && (s[1] - prof.v[i]).abs() < 1e-14);
    }
    assert_eq!(prof.eval(prof.y_max + 1.0), [0.0; 4]);
    let mid = 0.5 * (prof.y[10] + prof.y[11]);
    let (u, v) = exact_isotropic(&prof.params, mid);
    let s = prof.eval(mid);
    assert!((s[0] - u).abs() < 1e-7 && (s[1] - v).abs() < 1e-7);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(matches!(NldParams::new(1.0, 0.5, 0.5, 1.0, 0.0), Err(Error::InvalidParameter(_))));
    assert!(NldParams::new(1.0, 0.5, -0.7, 1.0, 0.0).is_err());
    assert!(NldParams::new(1.0, 0.5, 0.0, 0.4, 0.5).is_err());
    assert!(NldParams::new(0.0, 0.5, 0.0, 1.0, 0.0).is_err());
    assert!(NldParams::new(1.0, f64::NAN, 0.0, 1.0, 0.0).is_err());
    let p = NldParams::canonical();
    let short = HomoclinicOptions { y_max: Some(5.0), ..Default::default() };
    assert!(integrate_homoclinic(&p, &short).is_err());
    assert!(integrate_homoclinic(&p, &opts(8)).is_err());
}

#[test]
fn translation_mode_is_in_the_kernel() {
    let p = NldParams::new(-5.944, 0.3743, 0.0, 1.0538, -0.4896).unwrap();
    let prof = integrate_homoclinic(&p, &HomoclinicOptions::default()).unwrap();
    let r = kernel_check(&prof, 200).unwrap();
    assert!(r.translation_mode_residual <= 1e-6, "{}", r.translation_mode_residual);
    assert!(r.sigma_min_restricted > 10.0 * r.sigma_min_unrestricted);
    assert!(r.sigma_max >= r.sigma_min_restricted);
}

fn linearization(p: NldParams) -> (LinearizedOperator, DMatrix<f64>) {
    let prof = integrate_homoclinic(&p, &opts(1000)).unwrap();
    let op = LinearizedOperator::from_profile(&prof, 40);
    let m = op.real_matrix().unwrap();
    (op, m)
}

#[test]
fn linearization_preserves_the_parity_subspace() {
    for p in [NldParams::canonical(), NldParams::new(1.0, -1.0, 0.3, 1.0, 0.4).unwrap()] {
        let (op, m) = linearization(p);
        let q = op.parity_subspace_basis();
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::identity(q.ncols(), q.ncols())).amax() < 1e-14);
        let image = &m * &q;
        let leak = &image - &q * (q.transpose() * &image);
        assert!(leak.amax() < 1e-12 * m.amax(), "{}", leak.amax());
    }
}

#[test]
fn linearization_is_self_adjoint_up_to_the_stencil() {
    // i c d/dy is Hermitian and the potential part is Hermitian pointwise, so the
    // real form is symmetric once the centred stencil is antisymmetric.
    let (_, m) = linearization(NldParams::new(-2.0, 0.8, 0.1, 1.0, -0.3).unwrap());
    assert!((&m - m.transpose()).amax() < 1e-12 * m.amax());
}

#[test]
fn apply_rejects_mismatched_input() {
    let (op, _) = linearization(NldParams::canonical());
    assert!(op.apply(&[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn vector_field_is_hamiltonian(
        c in prop_oneof![-3.0..-0.2f64, 0.2..3.0f64],
        th in prop_oneof![-2.0..-0.1f64, 0.1..2.0f64],
        mu_frac in -0.9..0.9f64,
        b1 in 0.1..2.0f64,
        b2_frac in -1.0..1.0f64,
        u in -2.0..2.0f64,
        v in -2.0..2.0f64,
    ) {
        let p = NldParams::new(c, th, mu_frac * th.abs(), b1, b2_frac * b1).unwrap();
        let e = 1e-5;
        let hu = (hamiltonian(&p, u + e, v) - hamiltonian(&p, u - e, v)) / (2.0 * e);
        let hv = (hamiltonian(&p, u, v + e) - hamiltonian(&p, u, v - e)) / (2.0 * e);
        let (du, dv) = vector_field(&p, u, v);
        let scale = 1.0 + hu.abs() + hv.abs();
        prop_assert!((c * du - hv).abs() < 1e-7 * scale);
        prop_assert!((c * dv + hu).abs() < 1e-7 * scale);
    }

    #[test]
    fn energy_is_conserved_along_the_orbit(
        c in prop_oneof![-3.0..-0.3f64, 0.3..3.0f64],
        th in prop_oneof![-1.5..-0.2f64, 0.2..1.5f64],
        mu_frac in -0.7..0.7f64,
        b1 in 0.3..2.0f64,
        b2_frac in -1.0..1.0f64,
    ) {
        let p = NldParams::new(c, th, mu_frac * th.abs(), b1, b2_frac * b1).unwrap();
        let prof = integrate_homoclinic(&p, &opts(600)).unwrap();
        prop_assert!(prof.diagnostics.h_drift_max <= 1e-9);
        prop_assert!(prof.diagnostics.parity_defect <= 1e-9);
        prop_assert!((prof.diagnostics.decay_rate_fit / p.decay_rate() - 1.0).abs() <= 0.02);
    }
}
