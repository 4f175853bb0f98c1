//! Adaptive Gauss-Kronrod integration on intervals, the half-line and the
//! complex plane in polar coordinates.
//!
//! The workhorse is a 10/21-point Gauss-Kronrod pair with global adaptive
//! bisection: the interval with the largest error estimate is split until
//! the summed estimate meets the tolerance. Nodes are interior, so
//! integrable endpoint singularities such as `t^{-1/2}` at 0 are handled by
//! repeated bisection toward the singular end.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_059,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_114,
    0.562_757_134_668_604_683_339_000_099_272,
    0.433_395_394_129_247_190_799_265_943_165,
    0.294_392_862_701_460_198_131_126_603_103,
    0.148_874_338_981_631_210_884_826_001_129,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_244,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_325,
    0.123_491_976_262_065_851_077_208_048_700,
    0.134_709_217_311_473_325_928_054_001_771,
    0.142_775_938_577_060_080_797_094_273_138,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_389,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_657,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// How a half-line integral is truncated to a finite interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailCutoff<T> {
    /// The caller asserts `|f(t)| <= scale * exp(-rate * t)` for `t >= from`.
    /// The truncation point is chosen so that the tail bound is below half
    /// the absolute tolerance.
    Envelope { scale: T, rate: T, from: T },
    /// Integrate over `[0, at]`; the caller vouches for the neglected tail.
    At(T),
}

/// Tolerances and limits for one integration call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSpec<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
    pub tail_cutoff_policy: TailCutoff<T>,
}

impl<T: Real> Default for QuadSpec<T> {
    fn default() -> Self {
        let tol = T::c(1e-11).max(T::epsilon() * T::c(64.0));
        QuadSpec {
            abs_tol: tol,
            rel_tol: tol,
            max_subdivisions: 2000,
            tail_cutoff_policy: TailCutoff::Envelope {
                scale: T::one(),
                rate: T::one(),
                from: T::zero(),
            },
        }
    }
}

impl<T: Real> QuadSpec<T> {
    pub fn with_tol(abs_tol: T, rel_tol: T) -> Self {
        QuadSpec {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_tail(mut self, tail: TailCutoff<T>) -> Self {
        self.tail_cutoff_policy = tail;
        self
    }

    pub fn with_max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n;
        self
    }

    fn validate(&self) -> Result<(), QuadError<T>> {
        if !(self.abs_tol >= T::zero() && self.rel_tol >= T::zero()) {
            return Err(QuadError::InvalidSpec("tolerances must be non-negative"));
        }
        if self.abs_tol <= T::zero() && self.rel_tol <= T::zero() {
            return Err(QuadError::InvalidSpec(
                "at least one of abs_tol and rel_tol must be positive",
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(QuadError::InvalidSpec("max_subdivisions must be at least 1"));
        }
        Ok(())
    }

    fn target(&self, value: T) -> T {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// An integral estimate with its error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
    pub subdivisions: usize,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum QuadError<T: Real> {
    #[error("tolerance not reached within the subdivision limit: best estimate {} with error {}", best.value, best.error)]
    Accuracy { best: QuadResult<T> },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: T, b: T },
    #[error("integrand is not finite at t = {at}")]
    NonFinite { at: T },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(&'static str),
}

impl<T: Real> QuadError<T> {
    /// Best available estimate, if the failure produced one.
    pub fn best(&self) -> Option<QuadResult<T>> {
        match self {
            QuadError::Accuracy { best } => Some(*best),
            _ => None,
        }
    }
}

/// Whether a planar integrand depends on the angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// `g(r, θ)` does not depend on θ; only the radial integral is computed.
    Circular,
    General,
}

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Segment<T> {}

impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by position so the order is total.
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Result<Segment<T>, QuadError<T>> {
    let half = T::c(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let eval = |x: T| -> Result<T, QuadError<T>> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { at: x })
        }
    };

    let fc = eval(center)?;
    let mut resk = T::c(WGK[10]) * fc;
    let mut resg = T::zero();
    let mut resabs = resk.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = hl * T::c(XGK[j]);
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::c(WGK[j]);
        resk = resk + w * (f1 + f2);
        resabs = resabs + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg = resg + T::c(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = resk * half;
    let mut resasc = T::c(WGK[10]) * (fc - mean).abs();
    for j in 0..10 {
        resasc = resasc + T::c(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let ahl = hl.abs();
    let value = resk * hl;
    resabs = resabs * ahl;
    resasc = resasc * ahl;
    let mut error = ((resk - resg) * hl).abs();
    if resasc != T::zero() && error != T::zero() {
        let ratio = (T::c(200.0) * error / resasc).powf(T::c(1.5));
        error = resasc * ratio.min(T::one());
    }
    let floor = T::c(50.0) * T::epsilon() * resabs;
    if floor > T::min_positive_value() {
        error = error.max(floor);
    }
    Ok(Segment { a, b, value, error })
}

fn adaptive<T: Real, F: Fn(T) -> T>(
    f: &F,
    breaks: &[T],
    spec: &QuadSpec<T>,
) -> Result<QuadResult<T>, QuadError<T>> {
    spec.validate()?;
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        heap.push(kronrod(f, w[0], w[1])?);
        evaluations += 21;
    }
    let totals = |heap: &BinaryHeap<Segment<T>>| {
        heap.iter().fold((T::zero(), T::zero()), |(v, e), s| (v + s.value, e + s.error))
    };
    let mut subdivisions = heap.len();
    loop {
        let (value, error) = totals(&heap);
        let done = QuadResult {
            value,
            error,
            evaluations,
            subdivisions,
        };
        if error <= spec.target(value) {
            return Ok(done);
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(QuadError::Accuracy { best: done });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = T::c(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // The interval can no longer be split in this precision.
            heap.push(worst);
            return Err(QuadError::Accuracy { best: done });
        }
        heap.push(kronrod(f, worst.a, mid)?);
        heap.push(kronrod(f, mid, worst.b)?);
        evaluations += 42;
        subdivisions += 1;
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate_interval<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    spec: &QuadSpec<T>,
) -> Result<QuadResult<T>, QuadError<T>> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadError::InvalidInterval { a, b });
    }
    adaptive(&f, &[a, b], spec)
}

/// Integrates `f` over `[a, b]` with user breakpoints (sorted, interior).
pub fn integrate_with_breaks<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    interior: &[T],
    spec: &QuadSpec<T>,
) -> Result<QuadResult<T>, QuadError<T>> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let mut breaks = vec![a];
    breaks.extend(interior.iter().copied().filter(|&t| t > a && t < b));
    breaks.push(b);
    breaks.dedup();
    adaptive(&f, &breaks, spec)
}

/// Truncation point of the half-line implied by `spec.tail_cutoff_policy`.
pub fn halfline_cutoff<T: Real>(spec: &QuadSpec<T>) -> T {
    match spec.tail_cutoff_policy {
        TailCutoff::At(at) => at,
        TailCutoff::Envelope { scale, rate, from } => {
            let tol = if spec.abs_tol > T::zero() {
                spec.abs_tol
            } else {
                T::epsilon()
            };
            let two = T::c(2.0);
            let l = (two * scale / (rate * tol)).ln() / rate;
            l.max(from).max(T::zero())
        }
    }
}

/// Integrates `f` over `[0, ∞)`, truncating where `spec.tail_cutoff_policy` allows.
///
/// The finite part starts from a geometric partition refining toward 0, so
/// mass concentrated near the origin is not missed by the first rule.
pub fn integrate_halfline<T: Real, F: Fn(T) -> T>(
    f: F,
    spec: &QuadSpec<T>,
) -> Result<QuadResult<T>, QuadError<T>> {
    let l = halfline_cutoff(spec);
    if !(l > T::zero()) || !l.is_finite() {
        return Err(QuadError::InvalidInterval { a: T::zero(), b: l });
    }
    let mut breaks: Vec<T> = (0..=12).rev().map(|j| l / T::c(2.0).powi(j)).collect();
    breaks.insert(0, T::zero());
    adaptive(&f, &breaks, spec)
}

/// Computes `∫₀^{2π} ∫₀^∞ g(r, θ) r dr dθ`.
///
/// With [`Symmetry::Circular`] the angle is never sampled and the result is
/// `2π ∫ g(r, 0) r dr`. Otherwise the radial integral is nested inside an
/// angular one; the radial truncation follows `spec.tail_cutoff_policy`.
pub fn integrate_radial_complex<T: Real, G: Fn(T, T) -> T>(
    g: G,
    symmetry: Symmetry,
    spec: &QuadSpec<T>,
) -> Result<QuadResult<T>, QuadError<T>> {
    let two_pi = T::TAU();
    match symmetry {
        Symmetry::Circular => {
            let inner = QuadSpec {
                abs_tol: spec.abs_tol / two_pi,
                ..*spec
            };
            let r = integrate_halfline(|rho| g(rho, T::zero()) * rho, &inner)?;
            Ok(QuadResult {
                value: r.value * two_pi,
                error: r.error * two_pi,
                ..r
            })
        }
        Symmetry::General => {
            let inner = QuadSpec {
                abs_tol: spec.abs_tol / (T::c(4.0) * two_pi),
                rel_tol: spec.rel_tol / T::c(4.0),
                ..*spec
            };
            let failure = std::cell::Cell::new(None);
            let evals = std::cell::Cell::new(0usize);
            let inner_err = std::cell::Cell::new(T::zero());
            let radial = |theta: T| -> T {
                match integrate_halfline(|rho| g(rho, theta) * rho, &inner) {
                    Ok(r) => {
                        evals.set(evals.get() + r.evaluations);
                        inner_err.set(inner_err.get().max(r.error));
                        r.value
                    }
                    Err(e) => {
                        failure.set(Some(e));
                        T::nan()
                    }
                }
            };
            let outer = QuadSpec {
                abs_tol: spec.abs_tol / T::c(2.0),
                rel_tol: spec.rel_tol / T::c(2.0),
                ..*spec
            };
            let res = integrate_interval(radial, T::zero(), two_pi, &outer);
            if let Some(e) = failure.take() {
                return Err(e);
            }
            let r = res?;
            Ok(QuadResult {
                value: r.value,
                error: r.error + two_pi * inner_err.get(),
                evaluations: evals.get(),
                subdivisions: r.subdivisions,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadSpec<f64> {
        QuadSpec::with_tol(1e-12, 1e-12)
    }

    #[test]
    fn constant_on_unit_interval() {
        let r = integrate_interval(|_| 1.0, 0.0, 1.0, &spec()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_sqrt_endpoint_singularity() {
        let r = integrate_interval(|t: f64| t.powf(-0.5), 0.0, 1.0, &QuadSpec::with_tol(1e-10, 1e-10))
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn exponential_on_halfline() {
        let r = integrate_halfline(|t: f64| (-t).exp(), &spec()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn fixed_cutoff_is_honoured() {
        let s = spec().with_tail(TailCutoff::At(2.0));
        let r = integrate_halfline(|_| 1.0, &s).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(
            integrate_interval(|t: f64| t, 1.0, 0.0, &spec()),
            Err(QuadError::InvalidInterval { .. })
        ));
        assert!(matches!(
            integrate_interval(|t: f64| 1.0 / t, 0.0, 1.0, &QuadSpec::with_tol(0.0, 0.0)),
            Err(QuadError::InvalidSpec(_))
        ));
        assert!(matches!(
            integrate_interval(|_: f64| f64::NAN, 0.0, 1.0, &spec()),
            Err(QuadError::NonFinite { .. })
        ));
    }

    #[test]
    fn subdivision_cap_reports_best_estimate() {
        let s = QuadSpec::with_tol(1e-15, 0.0).with_max_subdivisions(2);
        let err = integrate_interval(|t: f64| t.powf(-0.5), 0.0, 1.0, &s).unwrap_err();
        let best = err.best().unwrap();
        assert!((best.value - 2.0).abs() < 0.5);
    }

    #[test]
    fn single_precision_runs() {
        let r = integrate_interval(|t: f32| t * t, 0.0, 3.0, &QuadSpec::default()).unwrap();
        assert!((r.value - 9.0).abs() < 1e-4);
    }

    #[test]
    fn gaussian_density_over_plane() {
        let g = |r: f64, _t: f64| (-r * r).exp() / std::f64::consts::PI;
        let sym = integrate_radial_complex(g, Symmetry::Circular, &spec()).unwrap();
        assert!((sym.value - 1.0).abs() < 1e-11);
        let gen = integrate_radial_complex(g, Symmetry::General, &QuadSpec::with_tol(1e-11, 1e-11))
            .unwrap();
        assert!((gen.value - sym.value).abs() < 1e-9);
    }
}
