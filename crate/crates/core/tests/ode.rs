use dirac_soliton::ode::{dopri5_step, Dopri5};

fn oscillator(y: &[f64; 2]) -> [f64; 2] {
    [y[1], -y[0]]
}

#[test]
fn single_step_is_fifth_order() {
    // Global error of one step scales as h^6.
    let err = |h: f64| {
        let (y, _) = dopri5_step(&oscillator, &[1.0, 0.0], h);
        (y[0] - h.cos()).abs().max((y[1] + h.sin()).abs())
    };
    let rate = (err(0.2) / err(0.1)).log2();
    assert!((rate - 6.0).abs() < 0.3, "{rate}");
}

#[test]
fn error_estimate_tracks_the_true_error() {
    let (y, e) = dopri5_step(&|y: &[f64; 1]| [y[0]], &[1.0], 0.1);
    let true_err = (y[0] - 0.1f64.exp()).abs();
    assert!(e[0].abs() > true_err && e[0].abs() < 1e4 * true_err.max(1e-17));
}

#[test]
fn adaptive_integration_meets_the_tolerance() {
    let solver = Dopri5::new(1e-11, 1e-13);
    let t = 20.0;
    let (y, _, steps) = solver.integrate(&oscillator, 0.0, [1.0, 0.0], t, 0.1).unwrap();
    assert!((y[0] - t.cos()).abs() < 1e-9 && (y[1] + t.sin()).abs() < 1e-9);
    assert!(steps > 10);
    let (back, _, _) = solver.integrate(&oscillator, t, y, 0.0, 0.1).unwrap();
    assert!((back[0] - 1.0).abs() < 1e-9 && back[1].abs() < 1e-9);
}

#[test]
fn step_budget_is_enforced() {
    let solver = Dopri5 { max_steps: 3, ..Dopri5::new(1e-12, 1e-14) };
    assert!(solver.integrate(&oscillator, 0.0, [1.0, 0.0], 50.0, 0.01).is_err());
}
