//! Ricean bounds and constants. Reference values frozen from mpmath at 40
//! digits; kernel and ℓ integrals cross-checked by independent quadrature.

use cutoff::quadrature::{integrate_interval, QuadSpec};
use cutoff::ricean::*;
use cutoff::specfun::EULER_GAMMA;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn params(d: f64, sigma2: f64, power: f64) -> RiceanParams {
    RiceanParams::new(d, sigma2, power, ConstraintKind::Average).unwrap()
}

// Phase-averaged kernel without additive noise.
fn kernel_noise_free(x: f64, xp: f64, d: f64) -> f64 {
    let (s, sp) = (x * x, xp * xp);
    let spec = QuadSpec::with_tol(1e-14, 1e-13);
    integrate_interval(
        |phi: f64| (-d * d * (s + sp - 2.0 * x * xp * phi.cos()) / (2.0 * (s + sp))).exp(),
        0.0,
        PI,
        &spec,
    )
    .unwrap()
    .value
        / PI
        * 2.0
        * x
        * xp
        / (s + sp)
}

#[test]
fn kernel_matches_plane_quadrature() {
    let spec = QuadSpec::with_tol(1e-13, 1e-12).with_max_subdivisions(8000);
    let cases = [
        (1.0, 2.0, 0.0, 1.0, 1.0),
        (0.5, 0.5, 1.0, 0.5, 2.0),
        (3.0, 1.0, 2.0, 2.0, 0.0),
        (2.0, 4.0, 0.7, 1.0, 1.5),
        (0.0, 1.5, 0.0, 0.3, 3.0),
    ];
    for (x, xp, phi, sigma2, d) in cases {
        let p = params(d, sigma2, 10.0);
        let closed = bhattacharyya_kernel_at_phase(x, xp, phi, &p).unwrap();
        let quad = bhattacharyya_kernel_by_quadrature(x, xp, phi, &p, &spec).unwrap();
        assert!((closed - quad).abs() < 1e-8, "{x} {xp} {phi}: {closed} vs {quad}");
    }
    let b = bhattacharyya_kernel_at_phase(1.0, 2.0, 0.0, &params(1.0, 1.0, 10.0)).unwrap();
    assert!((b - 0.841_222_579_563_515_53).abs() < 1e-15);
}

#[test]
fn averaged_kernel_is_the_phase_average() {
    let spec = QuadSpec::with_tol(1e-14, 1e-13);
    for (x, xp, d) in [(1.0, 2.0, 1.0), (5.0, 4.0, 3.0), (30.0, 31.0, 2.0)] {
        let p = params(d, 1.0, 10.0);
        let avg = integrate_interval(
            |phi: f64| bhattacharyya_kernel_at_phase(x, xp, phi, &p).unwrap(),
            0.0,
            TAU,
            &spec,
        )
        .unwrap()
        .value
            / TAU;
        let k = bhattacharyya_kernel(x, xp, &p).unwrap();
        assert!((avg - k).abs() < 1e-12 * k.max(1e-300), "{avg} vs {k}");
    }
}

#[test]
fn kernel_without_specular_component() {
    let p = params(0.0, 2.0, 10.0);
    for phi in [0.0, 1.0, 3.0] {
        let b = bhattacharyya_kernel_at_phase(1.0, 3.0, phi, &p).unwrap();
        assert!((b - 2.0 * (3.0f64 * 11.0).sqrt() / 14.0).abs() < 1e-15);
    }
}

#[test]
fn pairwise_exponent_examples() {
    let p = params(0.0, 1.0, 100.0);
    assert_eq!(e0_pairwise(&AmplitudeLaw::point_mass(4.0).unwrap(), &p).unwrap(), 0.0);
    let law = AmplitudeLaw::discrete(vec![1.0, 3.0], vec![0.5, 0.5]).unwrap();
    let b13 = 2.0 * 20f64.sqrt() / 12.0;
    let want = -(0.25 * (2.0 + 2.0 * b13)).ln();
    assert!((e0_pairwise(&law, &p).unwrap() - want).abs() < 1e-15);

    let e = 1e8f64;
    let firm = (e / e.ln()).ln().ln() - TAU.ln();
    let v = e0_pairwise(&AmplitudeLaw::log_uniform(e).unwrap(), &params(0.0, 1.0, e)).unwrap();
    assert!(v >= firm && v <= firm + 0.2, "{v} vs {firm}");

    let peak = RiceanParams::new(0.0, 1.0, 5.0, ConstraintKind::Peak).unwrap();
    assert!(e0_pairwise(&law, &peak).is_err());
    let avg = RiceanParams::new(0.0, 1.0, 5.0, ConstraintKind::Average).unwrap();
    assert!(e0_pairwise(&law, &avg).is_ok());
}

#[test]
fn noise_gap_examples() {
    let p = params(0.0, 1.0, 1e8);
    let x = 1e8f64.ln().sqrt();
    let g = noise_gap_bound(x, &p).unwrap();
    assert!((g - (1.0 + 1.0 / 1e8f64.ln()).ln()).abs() < 1e-15);
    assert!((g - 0.052_865).abs() < 1e-6);
    assert!(noise_gap_bound(x, &params(1.0, 1e-300, 1e8)).unwrap() < 1e-290);
    for d in [0.0, 1.0, 3.0] {
        let p = params(d, 1.0, 1e8);
        for xm in [10.0, 100.0, 1000.0] {
            let g = noise_gap_bound(xm, &p).unwrap();
            assert!(g * xm * xm <= (d * d + 1.0) * 1.0 * 1.0001, "d {d} x {xm}");
        }
    }
}

#[test]
fn lower_bound_examples() {
    let p = params(0.0, 1.0, 1e8);
    let lb = lower_bound_r0(&p).unwrap();
    assert!(lb.value >= 0.8570);
    let e = 1e8f64;
    let exact = (e / e.ln()).ln().ln() - TAU.ln() - (1.0 + 1.0 / e.ln()).ln();
    assert!((lb.closed_form - exact).abs() < 1e-14);
    for e in [1e6, 1e8, 1e10] {
        for d in [0.0, 1.0] {
            let lb = lower_bound_r0(&params(d, 1.0, e)).unwrap();
            assert!(lb.numerical.unwrap() >= lb.closed_form - 1e-6);
        }
    }
    assert!(matches!(
        lower_bound_r0(&params(0.0, 1.0, 1.0)),
        Err(RiceanError::PowerTooSmall { .. })
    ));
}

#[test]
fn ell_closed_form_and_quadrature() {
    let p = params(0.0, 2.0, 10.0);
    for x in [0.0, 1.0, 7.0] {
        let s: f64 = x * x + 2.0;
        let want = (PI / 2.0).sqrt() * (30.0f64 * s / (30.0 + s)).sqrt();
        assert!((ell_closed_form(x, 30.0, &p).unwrap() - want).abs() < 1e-14);
    }
    let p = params(1.0, 1.0, 10.0);
    let closed = ell_closed_form(1.0, 10.0, &p).unwrap();
    let quad = ell_by_quadrature(1.0, 0.0, 10.0, 0.0, &p).unwrap();
    assert!((closed - quad).abs() < 1e-8);
    assert!((closed - 1.800_531_082_775_165_2).abs() < 1e-13);
    for (x, beta, d) in [(10.0, 1e4, 2.0), (100.0, 1e6, 3.0), (0.3, 5.0, 0.5)] {
        let p = params(d, 1.0, 10.0);
        let a = ell_closed_form(x, beta, &p).unwrap();
        let b = ell_by_quadrature(x, 0.0, beta, 0.0, &p).unwrap();
        assert!((a - b).abs() <= 1e-9 * a, "{x}: {a} vs {b}");
    }
}

#[test]
fn psi_lower_bound_direction() {
    let p = params(1.0, 10.0, 1e4);
    let odp = OutputDensityParams::new(0.02, 100.0, 0.05, 100.0).unwrap();
    for x in [0.1, 1.0, 10.0, 100.0] {
        let lower = psi(x, &odp, &p).unwrap();
        let direct = psi_direct(x, &odp, &p).unwrap();
        assert!(lower > 0.0 && direct >= lower, "x {x}: {direct} < {lower}");
        // The prefactor identity: ψ = prefactor · ℓ(x; α, β, δ).
        let ell = ell_by_quadrature(x, odp.alpha, odp.beta, odp.delta, &p).unwrap();
        let via_ell = psi_prefactor(x, &odp, &p).unwrap() * ell;
        assert!((via_ell - direct).abs() <= 1e-8 * direct, "x {x}: {via_ell} vs {direct}");
    }
    // With σ² = 1 the same (δ, m₁) violates the positivity condition.
    let bad = params(1.0, 1.0, 1e4);
    assert!(matches!(psi(1.0, &odp, &bad), Err(RiceanError::FactorNotPositive { .. })));
}

#[test]
fn upper_bound_examples() {
    let p = params(0.0, 1.0, 1e8);
    // m₁δ = 100 makes the factor negative.
    let odp = OutputDensityParams::schedule(1e8, 0.01, 1e4).unwrap();
    assert!(matches!(upper_bound_r0_with(&p, &odp), Err(RiceanError::FactorNotPositive { .. })));
    let odp = OutputDensityParams::schedule(1e8, 0.01, 100.0).unwrap();
    let ub = upper_bound_r0_with(&p, &odp).unwrap();
    assert!(ub >= lower_bound_r0(&p).unwrap().value);
    let auto = upper_bound_r0(&p, &DeltaM1Grid::default()).unwrap();
    assert!(auto.value <= ub && auto.value >= lower_bound_r0(&p).unwrap().value);
    assert_eq!(upper_bound_r0(&p, &DeltaM1Grid::coarse()).unwrap().odp.m1, 100.0);
}

// Limit of the fixed-(δ, m₁) upper bound minus log log(E/σ²).
fn upper_limit(d: f64, sigma2: f64, delta: f64, m1: f64) -> f64 {
    let sigma = sigma2.sqrt();
    let root = (m1 * delta).sqrt();
    let i0 = cutoff::specfun::bessel_i0(d * root / (2.0 * sigma)).unwrap();
    ((m1 + 1.0) / m1).ln() - 2.0 * (1.0 - root * i0 / (PI * sigma2 / 2.0).sqrt()).ln()
        + ((1.0 - (-delta).exp()) / delta).ln()
        + asymptotic_constant_no_si(d).unwrap()
}

#[test]
fn upper_bound_approaches_its_limit() {
    let (delta, m1) = (1e-4, 100.0);
    for d in [0.0, 1.0] {
        let mut last = f64::INFINITY;
        for e in [1e4, 1e6, 1e8, 1e10, 1e12, 1e14, 1e16, 1e100, 1e300] {
            let p = params(d, 1.0, e);
            let odp = OutputDensityParams::schedule(e, delta, m1).unwrap();
            let v = upper_bound_r0_with(&p, &odp).unwrap() - e.ln().ln();
            assert!(v < last, "d {d} E {e}: {v} !< {last}");
            last = v;
        }
        let lim = upper_limit(d, 1.0, delta, m1);
        assert!(last >= lim && last - lim < 0.05, "d {d}: {last} vs {lim}");
    }
}

#[test]
fn asymptotic_constants() {
    assert!((asymptotic_constant_no_si(0.0).unwrap() + 1.837_877_066_409_345_5).abs() < 1e-15);
    assert!((capacity_constant(0.0, 1.0).unwrap() + 1.577_215_7).abs() < 1e-7);
    let gap0 = capacity_constant(0.0, 1.0).unwrap() - asymptotic_constant_no_si(0.0).unwrap();
    assert!((gap0 - (TAU.ln() - 1.0 - EULER_GAMMA)).abs() < 1e-15);
    assert!((gap0 - 0.260_661).abs() < 1e-6);
    let gap30 = capacity_constant(30.0, 1.0).unwrap() - asymptotic_constant_no_si(30.0).unwrap();
    assert!((gap30 - LARGE_D_GAP).abs() < 0.01);
    let want_c = (4.0f64).ln() - 1.0 - EULER_GAMMA;
    assert!((capacity_constant(0.0, 0.25).unwrap() - want_c).abs() < 1e-15);

    // (d, cut-off constant, capacity constant)
    let frozen = [
        (1.0, -1.369_005_837_036_107_6, -0.780_616_065_604_479_73),
        (2.0, -0.309_705_783_423_702_78, 0.390_073_713_529_739_53),
        (4.0, 1.312_177_342_559_735_9, 1.772_588_728_880_268_5),
        (30.0, 5.414_986_810_446_330_8, 5.802_394_763_324_310_8),
    ];
    for (d, r0, cap) in frozen {
        assert!((asymptotic_constant_no_si(d).unwrap() - r0).abs() < 1e-12, "d {d}");
        assert!((capacity_constant(d, 1.0).unwrap() - cap).abs() < 1e-12, "d {d}");
    }
    // Both constants grow with d; their difference rises from 0.26 to a
    // maximum near d = 2 and falls back towards log(4/e).
    let gaps: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|&d| capacity_constant(d, 1.0).unwrap() - asymptotic_constant_no_si(d).unwrap())
        .collect();
    assert!(gaps[0] < gaps[1] && gaps[1] < gaps[2] && gaps[2] > gaps[3] && gaps[3] > LARGE_D_GAP);
    let mut last = f64::NEG_INFINITY;
    for i in 0..=100 {
        let c = asymptotic_constant_no_si(i as f64 * 0.1).unwrap();
        assert!(c > last);
        last = c;
    }
}

#[test]
fn large_specular_components_stay_finite() {
    for d in [100.0, 1e3, 1e4] {
        let gap = capacity_constant(d, 1.0).unwrap() - asymptotic_constant_no_si(d).unwrap();
        assert!((gap - LARGE_D_GAP).abs() < 1e-3, "d {d}: {gap}");
    }
}

#[test]
fn amplitude_integral_below_annulus_bound() {
    for d in [0.0, 1.0, 2.0] {
        for e in [1e4, 1e8] {
            let v = amplitude_double_integral(d, e).unwrap();
            let b = amplitude_double_integral_bound(d, e).unwrap();
            assert!(v > 0.0 && v <= b, "d {d} E {e}: {v} > {b}");
        }
    }
}

#[test]
fn bracket_curve_examples() {
    let snrs = [1e6, 1e8, 1e10, 1e12, 1e14];
    let c = bracket_curve(0.0, 1.0, ConstraintKind::Average, &snrs, &DeltaM1Grid::default()).unwrap();
    for pt in &c.points {
        assert!(pt.lower_bound <= pt.upper_bound + 1e-9);
    }
    for w in c.points.windows(2) {
        assert!(w[1].upper_bound - w[1].lower_bound <= w[0].upper_bound - w[0].lower_bound);
    }
    let last = c.points.last().unwrap();
    assert!((last.lower_bound - 1e14f64.ln().ln() + TAU.ln()).abs() < 0.35);
    assert!(bracket_curve(0.0, 1.0, ConstraintKind::Peak, &[1e8, 1e6], &DeltaM1Grid::default()).is_err());
    assert!(bracket_curve(2.0, 1.0, ConstraintKind::Peak, &[1e8], &DeltaM1Grid::coarse()).is_err());
}

#[test]
fn closed_form_lower_bound_increases_toward_constant() {
    for d in [0.0, 1.0, 2.0] {
        let c = asymptotic_constant_no_si(d).unwrap();
        let mut last = f64::NEG_INFINITY;
        for snr in [1e6, 1e8, 1e10, 1e12, 1e14] {
            let v = lower_bound_r0_closed_form(&params(d, 1.0, snr)).unwrap() - snr.ln().ln();
            assert!(v > last && v < c);
            last = v;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_in_unit_interval(x in 0.0f64..50.0, xp in 0.0f64..50.0, d in 0.0f64..5.0, s2 in 0.01f64..10.0, phi in 0.0f64..6.3) {
        let p = params(d, s2, 10.0);
        let b = bhattacharyya_kernel_at_phase(x, xp, phi, &p).unwrap();
        let avg = bhattacharyya_kernel(x, xp, &p).unwrap();
        prop_assert!(b > 0.0 && b <= 1.0 + 1e-15);
        prop_assert!(avg > 0.0 && avg <= 1.0 + 1e-15);
        if (x - xp).abs() > 1e-3 {
            prop_assert!(b < 1.0);
        }
    }

    #[test]
    fn pairwise_exponent_nonnegative(radii in proptest::collection::vec(0.0f64..20.0, 1..6), d in 0.0f64..3.0, seed in 0u64..1000) {
        let n = radii.len();
        let weights: Vec<f64> = (0..n).map(|i| 1.0 + ((seed + i as u64 * 7) % 5) as f64).collect();
        let total: f64 = weights.iter().sum();
        let law = AmplitudeLaw::discrete(radii, weights.iter().map(|w| w / total).collect()).unwrap();
        let p = RiceanParams::new(d, 1.0, 1e6, ConstraintKind::Peak).unwrap();
        prop_assert!(e0_pairwise(&law, &p).unwrap() >= -1e-15);
    }

    #[test]
    fn noise_removal_bound_holds(radii in proptest::collection::vec(1.0f64..30.0, 1..5), d in 0.0f64..3.0, s2 in 0.01f64..4.0) {
        let n = radii.len();
        let law = AmplitudeLaw::discrete(radii.clone(), vec![1.0 / n as f64; n]).unwrap();
        let p = RiceanParams::new(d, s2, 1e6, ConstraintKind::Peak).unwrap();
        let noisy = e0_pairwise(&law, &p).unwrap();
        let mut clean = 0.0;
        for &a in &radii {
            for &b in &radii {
                clean += kernel_noise_free(a, b, d) / (n * n) as f64;
            }
        }
        let clean = -clean.ln();
        let xmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(noisy >= clean - noise_gap_bound(xmin, &p).unwrap() - 1e-12);
    }

    #[test]
    fn sandwich(d in 0.0f64..2.0, log_snr in 6.0f64..14.0, s2 in 0.5f64..2.0) {
        let p = RiceanParams::from_snr(d, s2, 10f64.powf(log_snr), ConstraintKind::Peak).unwrap();
        let lo = lower_bound_r0(&p).unwrap().value;
        let hi = upper_bound_r0(&p, &DeltaM1Grid::default()).unwrap().value;
        prop_assert!(lo <= hi + 1e-9);
    }
}
