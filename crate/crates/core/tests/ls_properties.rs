//! Least-squares estimator: oracle equivalence against an SVD
//! pseudoinverse of the explicit design matrix, plus the invariance
//! properties of the affine fit.

use dvlaccel::least_squares::estimate_acceleration;
use dvlaccel::rng::SeededRng;
use dvlaccel::types::{BodyVelocitySample, VelocityWindow};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn make_window(ts: &[f64], vs: &[[f64; 3]]) -> VelocityWindow {
    let samples = ts
        .iter()
        .zip(vs)
        .map(|(&t, &v)| BodyVelocitySample::new(t, v).unwrap())
        .collect();
    VelocityWindow::new(samples).unwrap()
}

fn random_window(rng: &mut SeededRng) -> VelocityWindow {
    let n = 2 + rng.index_below(39);
    let mut t = rng.uniform_in(0.0, 100.0);
    let mut ts = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        ts.push(t);
        t += rng.uniform_in(0.05, 2.0);
        vs.push([
            rng.uniform_in(-5.0, 5.0),
            rng.uniform_in(-5.0, 5.0),
            rng.uniform_in(-5.0, 5.0),
        ]);
    }
    make_window(&ts, &vs)
}

/// Solves the same per-axis fit through the n×2 design matrix `[1, Δ_i]`
/// and its SVD pseudoinverse; returns the slope row.
fn pseudoinverse_slope(window: &VelocityWindow) -> [f64; 3] {
    let n = window.len();
    let t0 = window.first().t;
    let design = DMatrix::from_fn(n, 2, |row, col| {
        if col == 0 {
            1.0
        } else {
            window.samples()[row].t - t0
        }
    });
    let pinv = design
        .pseudo_inverse(1e-13)
        .expect("pseudoinverse of a full-rank design matrix");
    let mut slope = [0.0; 3];
    for axis in 0..3 {
        let v = DMatrix::from_fn(n, 1, |row, _| window.samples()[row].v[axis]);
        let solution = &pinv * v;
        slope[axis] = solution[(1, 0)];
    }
    slope
}

#[test]
fn closed_form_matches_pseudoinverse_oracle() {
    let mut rng = SeededRng::new(2024);
    for case in 0..100 {
        let window = random_window(&mut rng);
        let closed = estimate_acceleration(&window).unwrap();
        let oracle = pseudoinverse_slope(&window);
        for axis in 0..3 {
            let diff = (closed.a[axis] - oracle[axis]).abs();
            assert!(
                diff < 1e-9,
                "case {case} axis {axis}: closed {} vs oracle {} (diff {diff:e})",
                closed.a[axis],
                oracle[axis]
            );
        }
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()) + 1e-12
}

fn window_strategy() -> impl Strategy<Value = VelocityWindow> {
    (2usize..30, any::<u64>()).prop_map(|(n, seed)| {
        let mut rng = SeededRng::new(seed);
        let mut t = rng.uniform_in(0.0, 50.0);
        let mut ts = Vec::with_capacity(n);
        let mut vs = Vec::with_capacity(n);
        for _ in 0..n {
            ts.push(t);
            t += rng.uniform_in(0.1, 1.5);
            vs.push([
                rng.uniform_in(-4.0, 4.0),
                rng.uniform_in(-4.0, 4.0),
                rng.uniform_in(-4.0, 4.0),
            ]);
        }
        make_window(&ts, &vs)
    })
}

proptest! {
    #[test]
    fn offset_invariance(window in window_strategy(), c in -10.0f64..10.0) {
        let base = estimate_acceleration(&window).unwrap();
        let shifted = make_window(
            &window.samples().iter().map(|s| s.t).collect::<Vec<_>>(),
            &window.samples().iter().map(|s| [s.v[0] + c, s.v[1] + c, s.v[2] + c]).collect::<Vec<_>>(),
        );
        let est = estimate_acceleration(&shifted).unwrap();
        for axis in 0..3 {
            prop_assert!(rel_close(est.a[axis], base.a[axis], 1e-9));
        }
    }

    #[test]
    fn scale_equivariance(window in window_strategy(), s in -5.0f64..5.0) {
        let base = estimate_acceleration(&window).unwrap();
        let scaled = make_window(
            &window.samples().iter().map(|x| x.t).collect::<Vec<_>>(),
            &window.samples().iter().map(|x| [s * x.v[0], s * x.v[1], s * x.v[2]]).collect::<Vec<_>>(),
        );
        let est = estimate_acceleration(&scaled).unwrap();
        for axis in 0..3 {
            prop_assert!(rel_close(est.a[axis], s * base.a[axis], 1e-9));
        }
    }

    #[test]
    fn time_shift_invariance(window in window_strategy(), dt in -100.0f64..100.0) {
        let base = estimate_acceleration(&window).unwrap();
        let shifted = make_window(
            &window.samples().iter().map(|s| s.t + dt).collect::<Vec<_>>(),
            &window.samples().iter().map(|s| s.v).collect::<Vec<_>>(),
        );
        let est = estimate_acceleration(&shifted).unwrap();
        for axis in 0..3 {
            prop_assert!(rel_close(est.a[axis], base.a[axis], 1e-9));
        }
    }

    #[test]
    fn time_scale_equivariance(window in window_strategy(), k in 0.1f64..10.0) {
        let base = estimate_acceleration(&window).unwrap();
        let scaled = make_window(
            &window.samples().iter().map(|s| s.t * k).collect::<Vec<_>>(),
            &window.samples().iter().map(|s| s.v).collect::<Vec<_>>(),
        );
        let est = estimate_acceleration(&scaled).unwrap();
        for axis in 0..3 {
            prop_assert!(rel_close(est.a[axis], base.a[axis] / k, 1e-9));
        }
    }

    #[test]
    fn exact_affine_velocity_recovered(
        v0 in proptest::array::uniform3(-5.0f64..5.0),
        slope in proptest::array::uniform3(-1.0f64..1.0),
        n in 2usize..30,
    ) {
        let ts: Vec<f64> = (0..n).map(|k| k as f64).collect();
        let vs: Vec<[f64; 3]> = ts
            .iter()
            .map(|&d| [v0[0] + slope[0] * d, v0[1] + slope[1] * d, v0[2] + slope[2] * d])
            .collect();
        let est = estimate_acceleration(&make_window(&ts, &vs)).unwrap();
        for axis in 0..3 {
            prop_assert!((est.a[axis] - slope[axis]).abs() <= 1e-9);
        }
    }
}
