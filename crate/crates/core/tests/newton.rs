use dirac_soliton::bloch::FourierCutoff;
use dirac_soliton::dirac::{default_gap_k_grid, verify_gap_opening, DiracPointData};
use dirac_soliton::newton::*;
use dirac_soliton::potential::{ParityClass, PeriodicPotential};
use dirac_soliton::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn dense(a: &BandedOperator) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => a.diag[i],
        1 => a.off1[i.min(j)],
        2 => a.off2[i.min(j)],
        _ => 0.0,
    })
}

fn banded_strategy(n: usize) -> impl Strategy<Value = BandedOperator> {
    (
        proptest::collection::vec(-3.0..3.0f64, n),
        proptest::collection::vec(-1.0..1.0f64, n),
        proptest::collection::vec(-1.0..1.0f64, n),
    )
        .prop_map(move |(diag, mut off1, mut off2)| {
            off1[n - 1] = 0.0;
            off2[n - 2] = 0.0;
            off2[n - 1] = 0.0;
            BandedOperator { diag, off1, off2 }
        })
}

fn free_pair() -> (PeriodicPotential, PeriodicPotential) {
    (PeriodicPotential::zero(ParityClass::EvenIndex), PeriodicPotential::zero(ParityClass::OddIndex))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn banded_solve_matches_dense_lu(a in banded_strategy(12), b in proptest::collection::vec(-1.0..1.0f64, 12)) {
        let m = dense(&a);
        prop_assume!(m.clone().svd(false, false).singular_values.min() > 1e-3);
        let x = banded_solve(&a, &b).unwrap();
        let reference = m.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        for i in 0..12 {
            prop_assert!((x[i] - reference[i]).abs() < 1e-9 * (1.0 + reference.amax()));
        }
    }

    #[test]
    fn matvec_matches_dense(a in banded_strategy(9), u in proptest::collection::vec(-1.0..1.0f64, 9)) {
        let y = a.matvec(&u);
        let r = dense(&a) * DVector::from_column_slice(&u);
        for i in 0..9 {
            prop_assert!((y[i] - r[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn inertia_counts_match_dense_eigenvalues(a in banded_strategy(15), s in -3.0..3.0f64) {
        let eig = dense(&a).symmetric_eigenvalues();
        prop_assume!(eig.iter().all(|e| (e - s).abs() > 1e-8));
        let expected = eig.iter().filter(|&&e| e < s).count();
        prop_assert_eq!(a.count_below(s), expected);
    }

    #[test]
    fn min_abs_eigenvalue_matches_dense(a in banded_strategy(15)) {
        let eig = dense(&a).symmetric_eigenvalues();
        let expected = eig.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(expected > 1e-6);
        let (m, neg) = a.min_abs_eigenvalue();
        prop_assert!((m - expected).abs() <= 1e-8 * (1.0 + expected));
        prop_assert_eq!(neg, eig.iter().filter(|&&e| e < 0.0).count());
    }
}

#[test]
fn singular_system_is_reported() {
    let a = BandedOperator { diag: vec![0.0; 4], off1: vec![0.0; 4], off2: vec![0.0; 4] };
    assert!(matches!(banded_solve(&a, &[1.0; 4]), Err(Error::Singular(_))));
}

/// Max error of the discrete `-u''` on `exp(-x^2)` (even) or `x exp(-x^2)` (odd).
fn laplacian_error(h: f64, parity: Parity, order: FdOrder) -> f64 {
    let (v, w) = free_pair();
    let grid = HalfLineGrid::new(8.0, h).unwrap();
    let op = discretize_operator(&v, &w, 0.0, 0.0, &grid, parity, order);
    let (f, minus_f2): (Vec<f64>, Vec<f64>) = (0..grid.n)
        .map(|i| {
            let x = grid.x(i);
            let g = (-x * x).exp();
            match parity {
                Parity::Even => (g, (2.0 - 4.0 * x * x) * g),
                Parity::Odd => (x * g, (6.0 * x - 4.0 * x * x * x) * g),
            }
        })
        .unzip();
    op.matvec(&f).iter().zip(&minus_f2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn stencils_converge_at_their_order_through_the_ghosts() {
    for parity in [Parity::Even, Parity::Odd] {
        for (order, p) in [(FdOrder::Second, 2.0), (FdOrder::Fourth, 4.0)] {
            let e1 = laplacian_error(1.0 / 16.0, parity, order);
            let e2 = laplacian_error(1.0 / 32.0, parity, order);
            let rate = (e1 / e2).log2();
            assert!((rate - p).abs() < 0.3, "{parity:?} {order:?}: rate {rate}");
        }
    }
}

#[test]
fn newton_recovers_the_constant_coefficient_soliton() {
    // -u'' + k^2 u - u^3 = 0 has u = sqrt(2) k sech(k x).
    let (v, w) = free_pair();
    let k = 1.0;
    let grid = HalfLineGrid::new(30.0, 1.0 / 32.0).unwrap();
    let op = discretize_operator(&v, &w, 0.0, -k * k, &grid, Parity::Even, FdOrder::Fourth);
    let exact: Vec<f64> = (0..grid.n).map(|i| 2f64.sqrt() * k / (k * grid.x(i)).cosh()).collect();
    let guess: Vec<f64> = (0..grid.n).map(|i| 1.1 * 2f64.sqrt() / (0.9 * grid.x(i)).cosh()).collect();
    let (u, iters, history) = newton_solve(&op, &grid, &guess, &NewtonConfig::default()).unwrap();
    assert!(iters <= 8, "{history:?}");
    assert!(history.last().unwrap() <= &1e-10);
    let err = u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5, "{err}");
    // The even restriction of -d^2 + 1 - 3 u^2 has exactly one negative eigenvalue.
    let shift: Vec<f64> = u.iter().map(|x| -3.0 * x * x).collect();
    let (min, neg) = op.with_diagonal_shift(&shift).min_abs_eigenvalue();
    assert_eq!(neg, 1);
    assert!(min > 0.1);
}

#[test]
fn zero_guess_is_rejected_as_trivial() {
    let (v, w) = free_pair();
    let grid = HalfLineGrid::new(10.0, 0.125).unwrap();
    let op = discretize_operator(&v, &w, 0.0, -1.0, &grid, Parity::Even, FdOrder::Fourth);
    let err = newton_solve(&op, &grid, &vec![0.0; grid.n], &NewtonConfig::default()).unwrap_err();
    assert!(matches!(err, Error::TrivialSolution { .. }));
    assert!(newton_solve(&op, &grid, &[1.0], &NewtonConfig::default()).is_err());
    let bad = NewtonConfig { damping: 0.0, ..Default::default() };
    assert!(newton_solve(&op, &grid, &vec![1.0; grid.n], &bad).is_err());
}

#[test]
fn half_line_grid_is_cell_centred() {
    let g = HalfLineGrid::new(2.0, 0.25).unwrap();
    assert_eq!(g.n, 8);
    assert_eq!(g.x(0), 0.125);
    assert!(HalfLineGrid::new(2.1, 0.25).is_err());
    assert!(HalfLineGrid::new(2.0, -0.25).is_err());
    assert_eq!(full_line_norm(0.5, &[1.0, 1.0]), 2f64.sqrt());
}

#[test]
fn frequency_window() {
    let v = PeriodicPotential::cosine(2, 20.0).unwrap();
    let w = PeriodicPotential::cosine(1, 1.0).unwrap();
    let data = DiracPointData::compute(&v, &w, FourierCutoff::new(32).unwrap(), 1).unwrap();
    let th = data.coefficients.theta_sharp.abs();
    let (delta, a) = (0.05, 0.9);
    assert!(frequency_window_check(&data, 0.0, delta, a, None));
    assert!(!frequency_window_check(&data, a * th, delta, a, None));
    assert!(!frequency_window_check(&data, -a * th, delta, a, None));
    let gap = verify_gap_opening(&data, delta, a, &default_gap_k_grid()).unwrap();
    assert!(frequency_window_check(&data, 0.5 * a * th, delta, a, Some(&gap)));
    assert!(!frequency_window_check(&data, 0.5 * a * th, 0.1, a, Some(&gap)));
    assert!(!frequency_window_check(&data, 0.0, 0.0, a, None));
}
