//! Cut-off rate of the non-coherent Ricean fading channel `Y = Hx + Z`,
//! `H ~ 𝒩_ℂ(d, 1)`, `Z ~ 𝒩_ℂ(0, σ²)`: finite-power lower and upper bounds,
//! the high-SNR constants, and the curves bracketing `R₀` against SNR.
//!
//! Everything here is `f64`: the bounds are differences of quantities of
//! order `log log SNR` and are compared at the `1e-8` level.

use std::f64::consts::{LN_2, PI, TAU};

use serde::Serialize;
use thiserror::Error;

use crate::dmc::ProbVec;
use crate::quadrature::{
    integrate_interval, integrate_radial_complex, QuadError, QuadSpec, Symmetry, TailCutoff,
};
use crate::specfun::{self, SpecFunError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiceanError {
    #[error("{what} must be {expected}, got {value}")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("power {power} too small: the log-uniform law needs log log(E / log E) >= 0, i.e. E > 1")]
    PowerTooSmall { power: f64 },
    #[error(
        "lower-bound factor a(alpha, beta, delta, m1) = {value} is not positive for \
         delta = {delta}, m1 = {m1}: need sqrt(m1 delta) I0(d sqrt(m1 delta) / (2 sigma)) \
         < sqrt(pi beta sigma^2 / (2 (beta + sigma^2)))"
    )]
    FactorNotPositive { delta: f64, m1: f64, value: f64 },
    #[error("no (delta, m1) pair on the grid gives a positive lower-bound factor a(alpha, beta, delta, m1)")]
    NoFeasibleGridPoint,
    #[error("amplitude law is infeasible: {0}")]
    InfeasibleLaw(String),
    #[error("grid {0} must be nonempty and strictly ascending")]
    BadGrid(&'static str),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

impl From<QuadError<f64>> for RiceanError {
    fn from(e: QuadError<f64>) -> Self {
        RiceanError::Quadrature(e.to_string())
    }
}

fn check(what: &'static str, value: f64, ok: bool, expected: &'static str) -> Result<f64, RiceanError> {
    if ok && value.is_finite() {
        Ok(value)
    } else {
        Err(RiceanError::Domain {
            what,
            value,
            expected,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Peak,
    Average,
}

/// Channel and constraint. `d` is the (real, non-negative) specular
/// component, `sigma2` the noise variance, `power` the allowed `E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiceanParams {
    d: f64,
    sigma2: f64,
    power: f64,
    constraint_kind: ConstraintKind,
}

impl RiceanParams {
    pub fn new(d: f64, sigma2: f64, power: f64, constraint_kind: ConstraintKind) -> Result<Self, RiceanError> {
        check("d", d, d >= 0.0, "finite and >= 0")?;
        check("sigma2", sigma2, sigma2 > 0.0, "finite and > 0")?;
        check("power", power, power > 0.0, "finite and > 0")?;
        Ok(RiceanParams {
            d,
            sigma2,
            power,
            constraint_kind,
        })
    }

    /// Parameters for `SNR = E / σ²`.
    pub fn from_snr(d: f64, sigma2: f64, snr: f64, constraint_kind: ConstraintKind) -> Result<Self, RiceanError> {
        check("snr", snr, snr > 0.0, "finite and > 0")?;
        Self::new(d, sigma2, snr * sigma2, constraint_kind)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn constraint_kind(&self) -> ConstraintKind {
        self.constraint_kind
    }

    pub fn snr(&self) -> f64 {
        self.power / self.sigma2
    }

    pub fn with_power(self, power: f64) -> Result<Self, RiceanError> {
        Self::new(self.d, self.sigma2, power, self.constraint_kind)
    }

    fn check_power(&self) -> Result<(), RiceanError> {
        // E / log E ≥ e holds for every E > 1, where log E > 0 as well.
        if self.power > 1.0 && (self.power / self.power.ln()).ln() >= 1.0 {
            Ok(())
        } else {
            Err(RiceanError::PowerTooSmall { power: self.power })
        }
    }
}

/// Parameters `(α, β, δ, m₁)` of the output density
/// `f_R(y) ∝ (|y|²+δ)^{α−1} e^{−(|y|²+δ)/β}` and of the lower-bound factor
/// `a(α, β, δ, m₁)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutputDensityParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub m1: f64,
}

impl OutputDensityParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, m1: f64) -> Result<Self, RiceanError> {
        check("alpha", alpha, alpha > 0.0, "finite and > 0")?;
        check("beta", beta, beta > 0.0, "finite and > 0")?;
        check("delta", delta, delta > 0.0 && delta < 1.0, "in (0, 1)")?;
        check("m1", m1, m1 > 0.0, "finite and > 0")?;
        Ok(OutputDensityParams { alpha, beta, delta, m1 })
    }

    /// `β = E log E`, `α = δ / log β`.
    pub fn schedule(power: f64, delta: f64, m1: f64) -> Result<Self, RiceanError> {
        check("power", power, power > 1.0, "> 1")?;
        let beta = power * power.ln();
        Self::new(delta / beta.ln(), beta, delta, m1)
    }

    /// `a(α, β, δ, m₁)`; the bound built on it is vacuous unless positive.
    pub fn factor(&self, params: &RiceanParams) -> Result<f64, RiceanError> {
        Ok(self.log_factor_parts(params)?.0)
    }

    // (a, log a) with log a computed from its factors.
    fn log_factor_parts(&self, params: &RiceanParams) -> Result<(f64, f64), RiceanError> {
        let sigma = params.sigma();
        let root = (self.m1 * self.delta).sqrt();
        let i0 = specfun::bessel_i0(params.d * root / (2.0 * sigma))?;
        let denom = (PI * self.beta * params.sigma2 / (2.0 * (self.beta + params.sigma2))).sqrt();
        let inner = 1.0 - root * i0 / denom;
        let pre = self.delta.powf(0.5 * self.alpha) * (self.m1 / (self.m1 + 1.0)).sqrt();
        let a = pre * inner;
        if !(inner > 0.0) {
            return Err(RiceanError::FactorNotPositive {
                delta: self.delta,
                m1: self.m1,
                value: a,
            });
        }
        let log_a = 0.5 * self.alpha * self.delta.ln() + 0.5 * (self.m1 / (self.m1 + 1.0)).ln() + inner.ln();
        Ok((a, log_a))
    }
}

/// Candidate `(δ, m₁)` pairs searched by [`upper_bound_r0`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaM1Grid {
    pub deltas: Vec<f64>,
    pub m1s: Vec<f64>,
}

impl DeltaM1Grid {
    pub fn new(deltas: Vec<f64>, m1s: Vec<f64>) -> Result<Self, RiceanError> {
        if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(RiceanError::BadGrid("delta"));
        }
        if m1s.is_empty() || m1s.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(RiceanError::BadGrid("m1"));
        }
        Ok(DeltaM1Grid { deltas, m1s })
    }

    /// The coarse grid `δ ∈ {0.2, 0.1, 0.05, 0.02, 0.01}`, `m₁ ∈ {10², 10³, 10⁴}`.
    /// Every pair has `m₁δ ≥ 1`, where the factor `a` is small or negative.
    pub fn coarse() -> Self {
        DeltaM1Grid {
            deltas: vec![0.2, 0.1, 0.05, 0.02, 0.01],
            m1s: vec![1e2, 1e3, 1e4],
        }
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.deltas
            .iter()
            .flat_map(move |&d| self.m1s.iter().map(move |&m| (d, m)))
    }
}

impl Default for DeltaM1Grid {
    /// The coarse grid extended by `δ ∈ {10⁻³, …, 10⁻⁶}` so that pairs with
    /// `m₁δ < 1` exist.
    fn default() -> Self {
        let mut g = Self::coarse();
        g.deltas.extend([1e-3, 1e-4, 1e-5, 1e-6]);
        g
    }
}

/// Law of the input amplitude `|X|`; the phase is uniform and independent.
#[derive(Clone, Debug, PartialEq)]
pub enum AmplitudeLaw {
    /// `log |X|²` uniform on `[log lo, log hi]`.
    LogUniform { lo: f64, hi: f64 },
    Discrete { radii: Vec<f64>, weights: ProbVec<f64> },
}

impl AmplitudeLaw {
    /// `log |X|² ~ U(log log E, log E)`.
    pub fn log_uniform(power: f64) -> Result<Self, RiceanError> {
        if !(power > 1.0) || !power.is_finite() {
            return Err(RiceanError::PowerTooSmall { power });
        }
        Ok(AmplitudeLaw::LogUniform {
            lo: power.ln(),
            hi: power,
        })
    }

    pub fn discrete(radii: Vec<f64>, weights: Vec<f64>) -> Result<Self, RiceanError> {
        if radii.len() != weights.len() || radii.is_empty() {
            return Err(RiceanError::InfeasibleLaw(format!(
                "{} radii for {} weights",
                radii.len(),
                weights.len()
            )));
        }
        if let Some(&r) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(RiceanError::InfeasibleLaw(format!("radius {r} is not a finite amplitude")));
        }
        let weights = ProbVec::new(weights).map_err(|e| RiceanError::InfeasibleLaw(e.to_string()))?;
        Ok(AmplitudeLaw::Discrete { radii, weights })
    }

    pub fn point_mass(radius: f64) -> Result<Self, RiceanError> {
        Self::discrete(vec![radius], vec![1.0])
    }

    pub fn mean_power(&self) -> f64 {
        match self {
            AmplitudeLaw::LogUniform { lo, hi } => (hi - lo) / (hi / lo).ln(),
            AmplitudeLaw::Discrete { radii, weights } => {
                radii.iter().zip(weights.as_slice()).map(|(r, w)| w * r * r).sum()
            }
        }
    }

    pub fn peak_power(&self) -> f64 {
        match self {
            AmplitudeLaw::LogUniform { hi, .. } => *hi,
            AmplitudeLaw::Discrete { radii, weights } => radii
                .iter()
                .zip(weights.as_slice())
                .filter(|(_, &w)| w > 0.0)
                .map(|(r, _)| r * r)
                .fold(0.0, f64::max),
        }
    }

    pub fn min_radius(&self) -> f64 {
        match self {
            AmplitudeLaw::LogUniform { lo, .. } => lo.sqrt(),
            AmplitudeLaw::Discrete { radii, weights } => radii
                .iter()
                .zip(weights.as_slice())
                .filter(|(_, &w)| w > 0.0)
                .map(|(&r, _)| r)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Checks the law against the power constraint of `params`.
    pub fn check_feasible(&self, params: &RiceanParams) -> Result<(), RiceanError> {
        let slack = 1.0 + 1e-12;
        let (used, kind) = match params.constraint_kind {
            ConstraintKind::Peak => (self.peak_power(), "peak"),
            ConstraintKind::Average => (self.mean_power(), "average"),
        };
        if used <= params.power * slack {
            Ok(())
        } else {
            Err(RiceanError::InfeasibleLaw(format!(
                "{kind} power {used} exceeds the allowed {}",
                params.power
            )))
        }
    }
}

/// `R₀` bounds at one SNR with the parameters that produced them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundPoint {
    pub snr: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub asymptote: f64,
    pub delta: f64,
    pub m1: f64,
}

/// Bounds along an SNR grid for one channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentCurve {
    pub d: f64,
    pub sigma2: f64,
    pub points: Vec<BoundPoint>,
}

// s = |x|² etc. The phase-averaged kernel, with the exponential of the
// Bessel argument divided out:
// B̄ = 2√((s+σ²)(s′+σ²))/S · exp(−d²(|x|−|x′|)²/(2S)) · e^{−z} I₀(z),
// S = s+s′+2σ², z = d²|x||x′|/S.
fn kernel_avg(x: f64, xp: f64, d2: f64, sigma2: f64) -> Result<f64, RiceanError> {
    let (s, sp) = (x * x, xp * xp);
    let big = s + sp + 2.0 * sigma2;
    let base = 2.0 * ((s + sigma2) * (sp + sigma2)).sqrt() / big;
    if d2 == 0.0 {
        return Ok(base);
    }
    let z = d2 * x * xp / big;
    let diff = x - xp;
    Ok(base * (-d2 * diff * diff / (2.0 * big) + specfun::log_bessel_i0_scaled(z)?).exp())
}

/// `B(x, x′; σ) = ∫ √(w(y|x) w(y|x′)) dμ(y)` averaged over a uniform
/// relative phase between the inputs of amplitudes `x` and `xp`.
pub fn bhattacharyya_kernel(x: f64, xp: f64, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x", x, x >= 0.0, ">= 0")?;
    check("xp", xp, xp >= 0.0, ">= 0")?;
    kernel_avg(x, xp, params.d * params.d, params.sigma2)
}

/// The kernel for inputs `x` and `xp·e^{iφ}`.
pub fn bhattacharyya_kernel_at_phase(x: f64, xp: f64, phi: f64, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x", x, x >= 0.0, ">= 0")?;
    check("xp", xp, xp >= 0.0, ">= 0")?;
    check("phi", phi, true, "finite")?;
    let (s, sp) = (x * x, xp * xp);
    let big = s + sp + 2.0 * params.sigma2;
    let dist2 = (s + sp - 2.0 * x * xp * phi.cos()).max(0.0);
    let d2 = params.d * params.d;
    Ok(2.0 * ((s + params.sigma2) * (sp + params.sigma2)).sqrt() / big * (-d2 * dist2 / (2.0 * big)).exp())
}

/// The channel density `w(y|x) = exp(−|y − d x|²/(|x|²+σ²)) / (π(|x|²+σ²))`
/// for complex `y = (re, im)` and `x = (re, im)`.
pub fn channel_density(y: (f64, f64), x: (f64, f64), params: &RiceanParams) -> f64 {
    let s = x.0 * x.0 + x.1 * x.1 + params.sigma2;
    let (dr, di) = (y.0 - params.d * x.0, y.1 - params.d * x.1);
    (-(dr * dr + di * di) / s).exp() / (PI * s)
}

/// The kernel integral evaluated by two-dimensional quadrature over the
/// output plane, for inputs `x` and `xp·e^{iφ}`.
pub fn bhattacharyya_kernel_by_quadrature(
    x: f64,
    xp: f64,
    phi: f64,
    params: &RiceanParams,
    spec: &QuadSpec<f64>,
) -> Result<f64, RiceanError> {
    let xa = (x, 0.0);
    let xb = (xp * phi.cos(), xp * phi.sin());
    let s = x.max(xp).powi(2) + params.sigma2;
    let reach = params.d * x.max(xp) + 12.0 * s.sqrt();
    let spec = spec.clone().with_tail(TailCutoff::At(reach));
    let g = |r: f64, t: f64| {
        let y = (r * t.cos(), r * t.sin());
        (channel_density(y, xa, params) * channel_density(y, xb, params)).sqrt()
    };
    Ok(integrate_radial_complex(g, Symmetry::General, &spec)?.value)
}

fn log_uniform_spec() -> QuadSpec<f64> {
    QuadSpec::with_tol(1e-12, 1e-11).with_max_subdivisions(4000)
}

/// `E₀(1, Q, 0) = −log ∫∫ B(x, x′) dQ(x′) dQ(x)` for a circularly
/// symmetric input law with amplitude law `q`.
pub fn e0_pairwise(q: &AmplitudeLaw, params: &RiceanParams) -> Result<f64, RiceanError> {
    q.check_feasible(params)?;
    let d2 = params.d * params.d;
    match q {
        AmplitudeLaw::Discrete { radii, weights } => {
            let w = weights.as_slice();
            let mut total = 0.0;
            for (i, &xi) in radii.iter().enumerate() {
                for (j, &xj) in radii.iter().enumerate() {
                    if w[i] > 0.0 && w[j] > 0.0 {
                        total += w[i] * w[j] * kernel_avg(xi, xj, d2, params.sigma2)?;
                    }
                }
            }
            Ok(-total.ln())
        }
        AmplitudeLaw::LogUniform { lo, hi } => {
            let (a, b) = (lo.ln(), hi.ln());
            if !(b > a) {
                return Err(RiceanError::InfeasibleLaw(format!("empty support [{lo}, {hi}]")));
            }
            let spec = log_uniform_spec();
            let failure = std::cell::RefCell::new(None);
            let kern = |u: f64, v: f64| match kernel_avg((0.5 * u).exp(), (0.5 * v).exp(), d2, params.sigma2) {
                Ok(k) => k,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            };
            // The kernel is symmetric: twice the integral over v < u.
            let outer = |u: f64| {
                if u <= a {
                    return 0.0;
                }
                match integrate_interval(|v| kern(u, v), a, u, &spec) {
                    Ok(r) => r.value,
                    Err(e) => {
                        failure
                            .borrow_mut()
                            .get_or_insert(RiceanError::from(e));
                        0.0
                    }
                }
            };
            let total = integrate_interval(outer, a, b, &spec)?.value;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(-(2.0 * total / ((b - a) * (b - a))).ln())
        }
    }
}

/// The explicit supremum in the noise-removal step, evaluated at
/// `|x| = |x′| = x_min`: `log(1 + σ²/x_min²) + d²σ²/(x_min² + σ²)`.
pub fn noise_gap_bound(x_min: f64, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x_min", x_min, x_min > 0.0, "finite and > 0")?;
    let s = x_min * x_min;
    Ok((params.sigma2 / s).ln_1p() + params.d * params.d * params.sigma2 / (s + params.sigma2))
}

/// `|d|²/2 − 2 log I₀(|d|²/4)`, computed without cancellation.
fn specular_term(d: f64) -> Result<f64, RiceanError> {
    Ok(-2.0 * specfun::log_bessel_i0_scaled(0.25 * d * d)?)
}

/// `log log(E/log E) + |d|²/2 − log 2π − 2 log I₀(|d|²/4)`, the noise-free
/// exponent bound for the log-uniform law.
pub fn noise_free_bound(params: &RiceanParams) -> Result<f64, RiceanError> {
    params.check_power()?;
    let e = params.power;
    Ok((e / e.ln()).ln().ln() + specular_term(params.d)? - TAU.ln())
}

/// Both routes to a lower bound on `R₀(E)` from the log-uniform law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub value: f64,
    /// Noise-free bound minus [`noise_gap_bound`] at `x_min = √(log E)`.
    pub closed_form: f64,
    /// [`e0_pairwise`] of the law with the noise kept, when requested.
    pub numerical: Option<f64>,
}

/// Closed-form lower bound on `R₀(E)`, valid under both constraint kinds.
pub fn lower_bound_r0_closed_form(params: &RiceanParams) -> Result<f64, RiceanError> {
    params.check_power()?;
    Ok(noise_free_bound(params)? - noise_gap_bound(params.power.ln().sqrt(), params)?)
}

/// The larger of the closed-form bound and the exponent of the log-uniform
/// law evaluated by quadrature.
pub fn lower_bound_r0(params: &RiceanParams) -> Result<LowerBound, RiceanError> {
    let closed_form = lower_bound_r0_closed_form(params)?;
    let law = AmplitudeLaw::log_uniform(params.power)?;
    let numerical = e0_pairwise(&law, params)?;
    Ok(LowerBound {
        value: closed_form.max(numerical),
        closed_form,
        numerical: Some(numerical),
    })
}

// z = β d² x² / (4 (x²+σ²)(β+x²+σ²)).
fn ell_z(x: f64, beta: f64, params: &RiceanParams) -> f64 {
    let s = x * x + params.sigma2;
    beta * params.d * params.d * x * x / (4.0 * s * (beta + s))
}

/// `ℓ(x; α = 0, β, δ = 0)` in closed form:
/// `√(π/2) √(β(x²+σ²)/(β+x²+σ²)) e^z I₀(z)`.
pub fn ell_closed_form(x: f64, beta: f64, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x", x, x >= 0.0, ">= 0")?;
    check("beta", beta, beta > 0.0, "> 0")?;
    let s = x * x + params.sigma2;
    let z = ell_z(x, beta, params);
    Ok((0.5 * PI).sqrt() * (beta * s / (beta + s)).sqrt() * (2.0 * z + specfun::log_bessel_i0_scaled(z)?).exp())
}

/// `ℓ(x; α, β, δ) = ∫₀^∞ e^{−ρ²(β+x²+σ²)/(2β(x²+σ²))} ρ (ρ²+δ)^{(α−1)/2}
/// I₀(|d| x ρ/(x²+σ²)) dρ` by quadrature. `alpha = delta = 0` is allowed.
pub fn ell_by_quadrature(x: f64, alpha: f64, beta: f64, delta: f64, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x", x, x >= 0.0, ">= 0")?;
    check("alpha", alpha, alpha >= 0.0, ">= 0")?;
    check("beta", beta, beta > 0.0, "> 0")?;
    check("delta", delta, delta >= 0.0, ">= 0")?;
    let s = x * x + params.sigma2;
    let c = (beta + s) / (2.0 * beta * s);
    let b = params.d * x / s;
    let failure = std::cell::RefCell::new(None);
    let f = |r: f64| {
        let power = if r == 0.0 && delta == 0.0 {
            // ρ (ρ²)^{(α−1)/2} → 0 for α > 0 and → 1 for α = 0.
            if alpha == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            r * (r * r + delta).powf(0.5 * (alpha - 1.0))
        };
        let arg = b * r;
        match specfun::log_bessel_i0_scaled(arg) {
            Ok(l) => power * (-c * r * r + arg + l).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    // The integrand peaks near b/(2c) and decays like a Gaussian of width
    // 1/√(2c) beyond it.
    let peak = b / (2.0 * c);
    let reach = peak + 12.0 / c.sqrt();
    let mut breaks = vec![delta.sqrt().min(reach * 0.5), peak];
    breaks.retain(|&p| p > 0.0 && p < reach);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let spec = QuadSpec::with_tol(1e-14, 1e-12).with_max_subdivisions(4000);
    let r = crate::quadrature::integrate_with_breaks(f, 0.0, reach, &breaks, &spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    Ok(r.value)
}

/// `a(α, β, δ, m₁) · ℓ(x; 0, β, 0)`, a lower bound on `ℓ(x; α, β, δ)`.
pub fn ell_lower(x: f64, odp: &OutputDensityParams, params: &RiceanParams) -> Result<f64, RiceanError> {
    Ok(odp.factor(params)? * ell_closed_form(x, odp.beta, params)?)
}

/// The factor in front of `ℓ` in `ψ(x) = ∫ √(w(y|x) f_R(y)) dμ(y)`:
/// `2 e^{−δ/(2β)} e^{−d²x²/(2(x²+σ²))} / (√Γ(α, δ/β) β^{α/2} √(x²+σ²))`.
pub fn psi_prefactor(x: f64, odp: &OutputDensityParams, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x", x, x >= 0.0, ">= 0")?;
    let s = x * x + params.sigma2;
    let gamma = specfun::inc_gamma(odp.alpha, odp.delta / odp.beta)?;
    Ok(2.0 * (-odp.delta / (2.0 * odp.beta) - params.d * params.d * x * x / (2.0 * s)).exp()
        / (gamma.sqrt() * odp.beta.powf(0.5 * odp.alpha) * s.sqrt()))
}

/// Certified lower bound on `ψ(x)`.
pub fn psi(x: f64, odp: &OutputDensityParams, params: &RiceanParams) -> Result<f64, RiceanError> {
    Ok(psi_prefactor(x, odp, params)? * ell_lower(x, odp, params)?)
}

/// The output density `f_R(y)` at `|y|² = r2`.
pub fn output_density(r2: f64, odp: &OutputDensityParams) -> Result<f64, RiceanError> {
    let gamma = specfun::inc_gamma(odp.alpha, odp.delta / odp.beta)?;
    let t = r2 + odp.delta;
    Ok(((odp.alpha - 1.0) * t.ln() - t / odp.beta - odp.alpha * odp.beta.ln()).exp() / (PI * gamma))
}

/// `ψ(x)` by two-dimensional quadrature of its defining integral.
pub fn psi_direct(x: f64, odp: &OutputDensityParams, params: &RiceanParams) -> Result<f64, RiceanError> {
    check("x", x, x >= 0.0, ">= 0")?;
    let gamma = specfun::inc_gamma(odp.alpha, odp.delta / odp.beta)?;
    let log_norm = -(PI * gamma).ln() - odp.alpha * odp.beta.ln();
    let s = x * x + params.sigma2;
    let reach = params.d * x + 12.0 * s.sqrt();
    let spec = QuadSpec::with_tol(1e-13, 1e-11)
        .with_max_subdivisions(4000)
        .with_tail(TailCutoff::At(reach));
    let g = |r: f64, t: f64| {
        let y = (r * t.cos(), r * t.sin());
        let t2 = r * r + odp.delta;
        let log_f = log_norm + (odp.alpha - 1.0) * t2.ln() - t2 / odp.beta;
        (0.5 * (channel_density(y, (x, 0.0), params).ln() + log_f)).exp()
    };
    Ok(integrate_radial_complex(g, Symmetry::General, &spec)?.value)
}

/// Upper bound on `R₀(E)` with its output-density parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UpperBound {
    pub value: f64,
    pub odp: OutputDensityParams,
}

/// The closed-form upper bound on `R₀(E)` for fixed `(α, β, δ, m₁)`:
/// `δ/β − 2 log a + α log β + log Γ(α, δ/β) + log(1 + (E+σ²)/β)
///  + (1 − β/(β+E+σ²)) d² + d²/2 − 2 log I₀(d²/4) − log 2π`.
///
/// Valid under the average constraint and therefore under the peak one.
pub fn upper_bound_r0_with(params: &RiceanParams, odp: &OutputDensityParams) -> Result<f64, RiceanError> {
    let (_, log_a) = odp.log_factor_parts(params)?;
    let (e, s2, d2) = (params.power, params.sigma2, params.d * params.d);
    let beta = odp.beta;
    let gamma = specfun::inc_gamma(odp.alpha, odp.delta / beta)?;
    Ok(odp.delta / beta - 2.0 * log_a
        + odp.alpha * beta.ln()
        + gamma.ln()
        + ((e + s2) / beta).ln_1p()
        + (e + s2) / (beta + e + s2) * d2
        + specular_term(params.d)?
        - TAU.ln())
}

/// The upper bound minimised over `grid` with `β = E log E`, `α = δ/log β`.
/// Pairs where the factor `a` is not positive are skipped.
pub fn upper_bound_r0(params: &RiceanParams, grid: &DeltaM1Grid) -> Result<UpperBound, RiceanError> {
    params.check_power()?;
    let mut best: Option<UpperBound> = None;
    for (delta, m1) in grid.pairs() {
        let odp = OutputDensityParams::schedule(params.power, delta, m1)?;
        match upper_bound_r0_with(params, &odp) {
            Ok(v) => {
                if best.map_or(true, |b| v < b.value) {
                    best = Some(UpperBound { value: v, odp });
                }
            }
            Err(RiceanError::FactorNotPositive { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(RiceanError::NoFeasibleGridPoint)
}

/// `|d|²/2 − log 2π − 2 log I₀(|d|²/4)`, the constant in
/// `R₀ = log log SNR + const + o(1)`.
pub fn asymptotic_constant_no_si(d: f64) -> Result<f64, RiceanError> {
    check("d", d, d >= 0.0, "finite and >= 0")?;
    Ok(specular_term(d)? - TAU.ln())
}

/// `log|d|² − Ei(−|d|²) − 1 + log(1/ε²)`, the constant in the capacity
/// expansion, with value `−γ − 1 + log(1/ε²)` at `d = 0`.
pub fn capacity_constant(d: f64, eps2: f64) -> Result<f64, RiceanError> {
    check("d", d, d >= 0.0, "finite and >= 0")?;
    check("eps2", eps2, eps2 > 0.0 && eps2 <= 1.0, "in (0, 1]")?;
    Ok(specfun::log_minus_ei(d * d)? - 1.0 - eps2.ln())
}

/// The two-dimensional amplitude integral over `[√(log E), √E]²` of
/// `I₀(d² ρ ρ′/(ρ²+ρ′²)) / (ρ²+ρ′²)`, by quadrature in log-radius.
pub fn amplitude_double_integral(d: f64, power: f64) -> Result<f64, RiceanError> {
    check("power", power, power > 1.0, "> 1")?;
    let (a, b) = (0.5 * power.ln().ln(), 0.5 * power.ln());
    let d2 = d * d;
    let failure = std::cell::RefCell::new(None);
    // With ρ = e^u: dρ dρ′/(ρ²+ρ′²) = du dv / (2 cosh(u − v)).
    let f = |u: f64, v: f64| {
        let c = (u - v).cosh();
        match specfun::log_bessel_i0(0.5 * d2 / c) {
            Ok(l) => l.exp() / (2.0 * c),
            Err(e) => {
                failure.borrow_mut().get_or_insert(RiceanError::from(e));
                0.0
            }
        }
    };
    let spec = log_uniform_spec();
    let outer = |u: f64| match integrate_interval(|v| f(u, v), a, u, &spec) {
        Ok(r) => r.value,
        Err(e) => {
            failure.borrow_mut().get_or_insert(RiceanError::from(e));
            0.0
        }
    };
    let r = integrate_interval(outer, a, b, &spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(2.0 * r.value)
}

/// `(π/2) I₀²(d²/4) log √(E / log E)`, the bound on
/// [`amplitude_double_integral`] from enlarging the domain to an annulus.
pub fn amplitude_double_integral_bound(d: f64, power: f64) -> Result<f64, RiceanError> {
    check("power", power, power > 1.0, "> 1")?;
    let i0 = specfun::bessel_i0(0.25 * d * d)?;
    Ok(0.5 * PI * i0 * i0 * 0.5 * (power / power.ln()).ln())
}

fn check_ascending(name: &'static str, grid: &[f64]) -> Result<(), RiceanError> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|v| !v.is_finite()) {
        Err(RiceanError::BadGrid(name))
    } else {
        Ok(())
    }
}

/// Lower and upper bounds and the asymptote `log log SNR + const` along an
/// ascending SNR grid.
pub fn bracket_curve(
    d: f64,
    sigma2: f64,
    constraint_kind: ConstraintKind,
    snr_grid: &[f64],
    grid: &DeltaM1Grid,
) -> Result<ExponentCurve, RiceanError> {
    check_ascending("snr", snr_grid)?;
    let constant = asymptotic_constant_no_si(d)?;
    let points = snr_grid
        .iter()
        .map(|&snr| {
            let params = RiceanParams::from_snr(d, sigma2, snr, constraint_kind)?;
            let lower = lower_bound_r0(&params)?;
            let upper = upper_bound_r0(&params, grid)?;
            Ok(BoundPoint {
                snr,
                lower_bound: lower.value,
                upper_bound: upper.value,
                asymptote: snr.ln().ln() + constant,
                delta: upper.odp.delta,
                m1: upper.odp.m1,
            })
        })
        .collect::<Result<Vec<_>, RiceanError>>()?;
    Ok(ExponentCurve { d, sigma2, points })
}

/// `log(4/e)`, the limit of the capacity-minus-cut-off-rate constant as the
/// specular component grows.
pub const LARGE_D_GAP: f64 = 2.0 * LN_2 - 1.0;

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: f64) -> RiceanParams {
        RiceanParams::new(d, 1.0, 1e8, ConstraintKind::Average).unwrap()
    }

    #[test]
    fn kernel_is_one_on_diagonal() {
        for d in [0.0, 1.0, 5.0] {
            assert!((bhattacharyya_kernel_at_phase(3.0, 3.0, 0.0, &p(d)).unwrap() - 1.0).abs() < 1e-15);
        }
        // Averaging over the relative phase only loses once d > 0.
        assert!((bhattacharyya_kernel(3.0, 3.0, &p(0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(bhattacharyya_kernel(3.0, 3.0, &p(1.0)).unwrap() < 1.0);
    }

    #[test]
    fn rayleigh_constants() {
        assert!((asymptotic_constant_no_si(0.0).unwrap() + TAU.ln()).abs() < 1e-15);
        let c = capacity_constant(0.0, 1.0).unwrap();
        assert!((c + 1.0 + crate::specfun::EULER_GAMMA).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RiceanParams::new(-1.0, 1.0, 10.0, ConstraintKind::Peak).is_err());
        assert!(RiceanParams::new(0.0, 0.0, 10.0, ConstraintKind::Peak).is_err());
        assert!(OutputDensityParams::new(0.1, 1.0, 1.0, 1.0).is_err());
        let small = RiceanParams::new(0.0, 1.0, 0.5, ConstraintKind::Peak).unwrap();
        assert!(matches!(lower_bound_r0_closed_form(&small), Err(RiceanError::PowerTooSmall { .. })));
    }

    #[test]
    fn coarse_grid_is_infeasible_at_d2() {
        let e = upper_bound_r0(&p(2.0), &DeltaM1Grid::coarse()).unwrap_err();
        assert_eq!(e, RiceanError::NoFeasibleGridPoint);
        assert!(upper_bound_r0(&p(2.0), &DeltaM1Grid::default()).is_ok());
    }
}
