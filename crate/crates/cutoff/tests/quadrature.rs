use cutoff::quadrature::*;
use cutoff::specfun::{bessel_i0, elliptic_k, log_minus_ei};
use proptest::prelude::*;
use std::f64::consts::PI;

fn spec(tol: f64) -> QuadSpec<f64> {
    QuadSpec::with_tol(tol, tol)
}

#[test]
fn exponential_integral_tail() {
    let s = spec(1e-13).with_tail(TailCutoff::Envelope {
        scale: 1.0,
        rate: 1.0,
        from: 0.0,
    });
    let r = integrate_halfline(|u: f64| (-(1.0 + u)).exp() / (1.0 + u), &s).unwrap();
    assert!((r.value - log_minus_ei(1.0).unwrap()).abs() < 1e-11);
    assert!((r.value - 0.219_383_934_395_520_27).abs() < 1e-11);
}

#[test]
fn bessel_generating_integral() {
    let r = integrate_interval(|t: f64| (2.0 * t.cos()).exp(), -PI, PI, &spec(1e-13)).unwrap();
    assert!((r.value / (2.0 * PI) - 2.279_585_302_336_067_3).abs() < 1e-12);
    assert!((r.value / (2.0 * PI) - bessel_i0(2.0).unwrap()).abs() < 1e-12);
}

#[test]
fn squared_bessel_laplace_transform() {
    let s = spec(1e-12).with_tail(TailCutoff::Envelope {
        scale: 1.0,
        rate: 0.4,
        from: 0.0,
    });
    let r = integrate_halfline(|x: f64| (-x).exp() * bessel_i0(0.3 * x).unwrap().powi(2), &s).unwrap();
    assert!((r.value - 2.0 / PI * elliptic_k(0.6).unwrap()).abs() < 1e-9);
}

#[test]
fn error_estimate_covers_polynomials() {
    // Degree up to 19 is integrated exactly by the embedded Gauss rule.
    for deg in 0..=19 {
        let exact = (3f64.powi(deg + 1) - (-1f64).powi(deg + 1)) / (deg + 1) as f64;
        let r = integrate_interval(|t: f64| t.powi(deg), -1.0, 3.0, &spec(1e-10)).unwrap();
        assert!((r.value - exact).abs() <= r.error, "degree {deg}: {r:?} vs {exact}");
        assert_eq!(r.subdivisions, 1);
    }
}

#[test]
fn tighter_tolerance_never_reports_larger_error() {
    let fs: Vec<Box<dyn Fn(f64) -> f64>> = vec![
        Box::new(|t: f64| t.sqrt()),
        Box::new(|t: f64| (10.0 * t).sin().powi(2) * (-t).exp()),
        Box::new(|t: f64| 1.0 / (1e-3 + (t - 0.3).powi(2))),
    ];
    for f in &fs {
        let mut last = f64::INFINITY;
        let mut tol = 1e-3;
        while tol > 1e-13 {
            let r = integrate_interval(f, 0.0, 1.0, &spec(tol)).unwrap();
            assert!(r.error <= last, "tol {tol}: {} > {last}", r.error);
            last = r.error;
            tol /= 2.0;
        }
    }
}

#[test]
fn circular_flag_matches_general_integration() {
    let cases: Vec<Box<dyn Fn(f64, f64) -> f64>> = vec![
        Box::new(|r: f64, _| (-r * r).exp()),
        Box::new(|r: f64, _| (-r).exp() * (1.0 + r * r).recip()),
        Box::new(|r: f64, _| r * r * (-0.5 * r * r).exp()),
    ];
    let s = spec(1e-12).with_tail(TailCutoff::Envelope {
        scale: 4.0,
        rate: 1.0,
        from: 4.0,
    });
    for g in &cases {
        let a = integrate_radial_complex(g, Symmetry::Circular, &s).unwrap();
        let b = integrate_radial_complex(g, Symmetry::General, &s).unwrap();
        assert!((a.value - b.value).abs() <= 1e-9, "{} vs {}", a.value, b.value);
    }
}

#[test]
fn non_symmetric_integrand_in_polar_form() {
    // Gaussian centred at (1, 0): density integrates to 1.
    let g = |r: f64, t: f64| {
        let (x, y) = (r * t.cos() - 1.0, r * t.sin());
        (-(x * x + y * y)).exp() / PI
    };
    let s = spec(1e-11).with_tail(TailCutoff::Envelope {
        scale: 3.0,
        rate: 1.0,
        from: 6.0,
    });
    let r = integrate_radial_complex(g, Symmetry::General, &s).unwrap();
    assert!((r.value - 1.0).abs() < 1e-9);
}

proptest! {
    #[test]
    fn quadratic_exact(a in -5.0f64..5.0, w in 0.1f64..10.0, c0 in -3.0f64..3.0, c2 in -3.0f64..3.0) {
        let b = a + w;
        let exact = c0 * (b - a) + c2 * (b.powi(3) - a.powi(3)) / 3.0;
        let r = integrate_interval(|t| c0 + c2 * t * t, a, b, &spec(1e-12)).unwrap();
        prop_assert!((r.value - exact).abs() <= r.error.max(1e-12 * exact.abs()));
    }

    #[test]
    fn exponential_rate(lambda in 0.05f64..50.0) {
        let s = spec(1e-12).with_tail(TailCutoff::Envelope { scale: 1.0, rate: lambda, from: 0.0 });
        let r = integrate_halfline(|t: f64| (-lambda * t).exp(), &s).unwrap();
        prop_assert!((r.value * lambda - 1.0).abs() < 1e-10);
    }
}
