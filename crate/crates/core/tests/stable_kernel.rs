mod common;

use approx::assert_relative_eq;
use fracshe::quad::Tolerance;
use fracshe::stable::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cauchy(x: f64, t: f64) -> f64 {
    t / (PI * (x * x + t * t))
}

#[test]
fn cauchy_values() {
    let p = StableParams::new(1, 1.0).unwrap();
    assert_relative_eq!(eval_gamma(&p, &[0.0], 1.0).unwrap(), 1.0 / PI, max_relative = 1e-15);
    assert_relative_eq!(eval_gamma(&p, &[1.0], 1.0).unwrap(), 0.5 / PI, max_relative = 1e-15);
    assert_relative_eq!(p.c_const(), 1.0 / PI, max_relative = 1e-15);
}

#[test]
fn fourier_route_matches_closed_form_on_log_grid() {
    let p = StableParams::new(1, 1.0).unwrap();
    let xs = log_grid(-3.0, 3.0, 16);
    let xs: Vec<f64> = xs.into_iter().take(100).collect();
    assert!(xs.len() >= 96);
    for &x in &xs {
        let v = eval_gamma_with(&p, &[x], 1.0, Route::Fourier).unwrap();
        assert_relative_eq!(v, cauchy(x, 1.0), max_relative = 1e-8);
    }
}

#[test]
fn real_axis_oracle_other_orders() {
    for theta in [0.5, 1.5] {
        let p = StableParams::new(1, theta).unwrap();
        for x in [0.0, 0.3, 1.0, 2.5] {
            let v = eval_gamma(&p, &[x], 1.0).unwrap();
            let o = common::cosine_transform(x, 1.0, theta);
            assert_relative_eq!(v, o, max_relative = 1e-5);
        }
    }
}

#[test]
fn far_field_matches_leading_tail() {
    // Γ(x,1) |x|^{1+θ} → Γ(1+θ) sin(πθ/2)/π
    for theta in [0.5, 1.0, 1.5] {
        let p = StableParams::new(1, theta).unwrap();
        // q = x^{-θ} = 1e-6 keeps the next tail term below the tolerance
        let x = 10f64.powf(6.0 / theta);
        let lead = statrs::function::gamma::gamma(1.0 + theta) * (0.5 * PI * theta).sin() / PI;
        let v = eval_gamma(&p, &[x], 1.0).unwrap() * x.powf(1.0 + theta);
        assert_relative_eq!(v, lead, max_relative = 1e-3);
    }
}

#[test]
fn envelope_examples() {
    let p = StableParams::new(1, 1.0).unwrap();
    assert_relative_eq!(eval_envelope(&p, &[0.0], 2.0).unwrap(), 0.5);
    assert_relative_eq!(eval_envelope(&p, &[10.0], 1.0).unwrap(), 0.01);
    for t in [0.1, 1.0, 7.0] {
        assert_relative_eq!(eval_envelope(&p, &[t], t).unwrap(), 1.0 / t, max_relative = 1e-14);
    }
}

#[test]
fn rejects_nonpositive_time() {
    let p = StableParams::new(1, 1.0).unwrap();
    assert!(eval_gamma(&p, &[0.0], 0.0).is_err());
    assert!(eval_envelope(&p, &[0.0], -1.0).is_err());
}

#[test]
fn unit_mass() {
    let tol = Tolerance { abs: 1e-12, rel: 1e-10, max_intervals: 4000 };
    for (theta, lim) in [(1.0, 1e-6), (0.5, 1e-4), (1.5, 1e-4)] {
        let p = StableParams::new(1, theta).unwrap();
        for t in [0.01, 1.0, 10.0] {
            let m = total_mass(&p, t, tol).unwrap();
            assert!((m - 1.0).abs() <= lim, "θ={theta} t={t} mass={m}");
        }
    }
}

#[test]
fn diagnostics_report() {
    let p = StableParams::new(1, 1.0).unwrap();
    let d = kernel_diagnostics(&p, &[0.1, 1.0, 10.0], Tolerance::default()).unwrap();
    assert!(!d.incomplete);
    for r in &d.rows {
        assert!((r.mass - 1.0).abs() < 1e-6);
        assert!(r.max_residual < 1e-12);
    }
    assert!(d.fit.c1 > 0.0 && d.fit.ratio() < 10.0);
}

#[test]
fn free_semigroup() {
    let p = StableParams::new(1, 1.5).unwrap();
    let (t, s, x, y) = (0.3, 0.5, 0.2, -0.4);
    let tol = Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 4000 };
    let f = |z: f64| eval_gamma(&p, &[x - z], t).unwrap() * eval_gamma(&p, &[z - y], s).unwrap();
    let pts: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
    let core = fracshe::quad::integrate_pts(f, -10.0, 10.0, &pts, tol).unwrap().value;
    // beyond |z| = 10 both factors follow their tails
    let lead = statrs::function::gamma::gamma(2.5) * (0.75 * PI).sin() / PI;
    let tail = 2.0 * lead * lead * t * s / (4.0 * 10f64.powf(4.0));
    let lhs = core + tail;
    let rhs = eval_gamma(&p, &[x - y], t + s).unwrap();
    assert_relative_eq!(lhs, rhs, max_relative = 1e-5);
}

#[test]
fn envelope_fit_four_decades() {
    let xs = log_grid(-2.0, 2.0, 8);
    for theta in [0.5, 1.0, 1.5] {
        let p = StableParams::new(1, theta).unwrap();
        let fit = fit_envelope(&p, &xs, &xs).unwrap();
        assert!(fit.ratio() <= 1e3, "θ={theta} ratio {}", fit.ratio());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonnegative_and_even(x in -50.0f64..50.0, t in 0.01f64..10.0, theta in 0.4f64..1.8) {
        let p = StableParams::new(1, theta).unwrap();
        let a = eval_gamma(&p, &[x], t).unwrap();
        let b = eval_gamma(&p, &[-x], t).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn self_similar(x in 0.0f64..20.0, t in 0.05f64..20.0, theta in 0.5f64..1.5) {
        let p = StableParams::new(1, theta).unwrap();
        let lhs = eval_gamma(&p, &[x], t).unwrap();
        let rhs = t.powf(-1.0 / theta) * eval_gamma(&p, &[x * t.powf(-1.0 / theta)], 1.0).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
    }

    #[test]
    fn bracketed_by_fit(x in 0.01f64..100.0, t in 0.01f64..100.0, theta in 0.5f64..1.5) {
        let p = StableParams::new(1, theta).unwrap();
        let grid = log_grid(-2.5, 2.5, 6);
        let fit = fit_envelope(&p, &grid, &grid).unwrap();
        // the fit is a sample; allow the residual between sample nodes
        let v = eval_bracketed(&p, &[x], t, &fit).unwrap();
        prop_assert!(v.envelope_low <= v.envelope_high);
        prop_assert!(v.value >= 0.9 * v.envelope_low && v.value <= 1.1 * v.envelope_high);
    }
}
