//! Rayleigh fading (`d = 0`) with partial receiver side information `S`.
//! Given `S = s` the fading is `𝒩_ℂ(d̂_s, ε²)` with `d̂_s ~ 𝒩_ℂ(0, 1 − ε²)`,
//! so every quantity here is an average over `u = |d̂_s|²`, exponential
//! with mean `1 − ε²`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::quadrature::{integrate_halfline, QuadSpec, TailCutoff};
use crate::ricean::{
    asymptotic_constant_no_si, capacity_constant, lower_bound_r0_closed_form, upper_bound_r0,
    ConstraintKind, DeltaM1Grid, RiceanError, RiceanParams,
};
use crate::specfun;

fn check_eps2(eps2: f64) -> Result<f64, RiceanError> {
    if eps2 > 0.0 && eps2 <= 1.0 {
        Ok(eps2)
    } else {
        Err(RiceanError::Domain {
            what: "eps2",
            value: eps2,
            expected: "in (0, 1]",
        })
    }
}

/// Conditional fading variance `ε²`, noise variance and power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SideInfoParams {
    eps2: f64,
    sigma2: f64,
    power: f64,
}

impl SideInfoParams {
    pub fn new(eps2: f64, sigma2: f64, power: f64) -> Result<Self, RiceanError> {
        check_eps2(eps2)?;
        // Validates sigma2 and power with the same rules as the channel.
        RiceanParams::new(0.0, sigma2, power, ConstraintKind::Average)?;
        Ok(SideInfoParams { eps2, sigma2, power })
    }

    pub fn from_snr(eps2: f64, sigma2: f64, snr: f64) -> Result<Self, RiceanError> {
        Self::new(eps2, sigma2, snr * sigma2)
    }

    pub fn eps2(&self) -> f64 {
        self.eps2
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn snr(&self) -> f64 {
        self.power / self.sigma2
    }

    /// The channel given `|d̂_s|² = u`.
    pub fn conditional(&self, u: f64) -> Result<ConditionalRicean, RiceanError> {
        ConditionalRicean::new(u.max(0.0).sqrt(), self.eps2, self.sigma2)
    }
}

/// The channel given `S = s`: fading `𝒩_ℂ(d̂, ε²)`, noise `σ²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionalRicean {
    dhat: f64,
    eps2: f64,
    sigma2: f64,
}

impl ConditionalRicean {
    pub fn new(dhat: f64, eps2: f64, sigma2: f64) -> Result<Self, RiceanError> {
        if !(dhat >= 0.0 && dhat.is_finite()) {
            return Err(RiceanError::Domain {
                what: "dhat",
                value: dhat,
                expected: "finite and >= 0",
            });
        }
        check_eps2(eps2)?;
        RiceanParams::new(0.0, sigma2, 1.0, ConstraintKind::Average)?;
        Ok(ConditionalRicean { dhat, eps2, sigma2 })
    }

    pub fn dhat(&self) -> f64 {
        self.dhat
    }

    /// Writing `H = ε H′` turns the channel into a unit-variance Ricean one
    /// with specular component `|d̂|/ε` and input power `ε² E`.
    pub fn normalized(&self, power: f64) -> Result<RiceanParams, RiceanError> {
        RiceanParams::new(
            self.dhat / self.eps2.sqrt(),
            self.sigma2,
            self.eps2 * power,
            ConstraintKind::Average,
        )
    }
}

/// `|d̂|²/(2ε²) − log 2π − 2 log I₀(|d̂|²/(4ε²))`, the high-SNR constant of
/// the conditional channel.
pub fn conditional_constant(c: &ConditionalRicean) -> Result<f64, RiceanError> {
    asymptotic_constant_no_si(c.dhat / c.eps2.sqrt())
}

/// `log(1/ε²) − log K(√(1 − ε⁴)) − log 4`.
pub fn asymptotic_constant_si(eps2: f64) -> Result<f64, RiceanError> {
    check_eps2(eps2)?;
    // K(√(1−ε⁴)) from its complementary modulus ε², accurate as ε² → 0.
    let k = specfun::elliptic_k_complement(eps2)?;
    Ok(-eps2.ln() - k.ln() - 4f64.ln())
}

/// `log(1/ε²) − log log(4/ε²) − log 4`, the small-`ε²` form of
/// [`asymptotic_constant_si`].
pub fn asymptotic_constant_si_small(eps2: f64) -> Result<f64, RiceanError> {
    check_eps2(eps2)?;
    Ok(-eps2.ln() - (4.0 / eps2).ln().ln() - 4f64.ln())
}

fn default_spec() -> QuadSpec<f64> {
    QuadSpec::with_tol(1e-13, 1e-12)
        .with_max_subdivisions(4000)
        .with_tail(TailCutoff::Envelope {
            scale: TAU,
            rate: 1.0,
            from: 0.0,
        })
}

// −log E[e^{−h(u)}] for u exponential with mean 1 − ε², integrating in
// t = u/(1 − ε²) so the weight is e^{−t}. The tail policy in `spec` should
// describe e^{−t}·(bound on e^{−h}).
fn expect_exp_neg<F>(eps2: f64, h: F, spec: &QuadSpec<f64>) -> Result<f64, RiceanError>
where
    F: Fn(f64) -> Result<f64, RiceanError>,
{
    let mean = 1.0 - eps2;
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64| match h(t * mean) {
        Ok(v) => (-t - v).exp(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let r = integrate_halfline(f, spec)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(-r.value.ln())
}

/// The side-information constant as the average
/// `−log ∫ f(u) · 2π e^{−u/(2ε²)} I₀(u/(4ε²))² du` over `u = |d̂_s|²`.
pub fn si_constant_by_integration(eps2: f64, spec: &QuadSpec<f64>) -> Result<f64, RiceanError> {
    check_eps2(eps2)?;
    if eps2 == 1.0 {
        return Ok(-TAU.ln());
    }
    // e^{−u/(2ε²)} I₀(u/(4ε²))² = (e^{−z} I₀(z))², z = u/(4ε²).
    expect_exp_neg(
        eps2,
        |u| Ok(-TAU.ln() - 2.0 * specfun::log_bessel_i0_scaled(u / (4.0 * eps2))?),
        spec,
    )
}

/// [`si_constant_by_integration`] with a default tolerance of `1e-12`.
pub fn si_constant_by_integration_default(eps2: f64) -> Result<f64, RiceanError> {
    si_constant_by_integration(eps2, &default_spec())
}

/// Upper bound on `R₀(E | S)`: the per-realisation upper bound of the
/// conditional channel inside `−log E[exp(−R₀(E | S = s))]`.
pub fn si_upper_bound_finite(params: &SideInfoParams, grid: &DeltaM1Grid) -> Result<f64, RiceanError> {
    let at = |u: f64| -> Result<f64, RiceanError> {
        let ch = params.conditional(u)?.normalized(params.power)?;
        match upper_bound_r0(&ch, grid) {
            Ok(b) => Ok(b.value),
            // No usable output density: the trivial bound R₀ ≤ ∞.
            Err(RiceanError::NoFeasibleGridPoint) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    };
    if params.eps2 == 1.0 {
        return at(0.0);
    }
    // e^{−U(u)} ≤ e^{−U(0)}·(bounded growth), so weight e^{−t} bounds the tail.
    let scale = (-at(0.0)?).exp().max(1e-300);
    let spec = QuadSpec::with_tol(1e-12 * scale, 1e-10)
        .with_max_subdivisions(4000)
        .with_tail(TailCutoff::Envelope {
            scale,
            rate: 1.0,
            from: 0.0,
        });
    expect_exp_neg(params.eps2, at, &spec)
}

/// Lower bound on `R₀(E | S)` from one log-uniform input law used for every
/// realisation, each conditional exponent bounded in closed form.
pub fn si_lower_bound_finite(params: &SideInfoParams) -> Result<f64, RiceanError> {
    let at = |u: f64| lower_bound_r0_closed_form(&params.conditional(u)?.normalized(params.power)?);
    if params.eps2 == 1.0 {
        return at(0.0);
    }
    // The conditional bound grows with u, so e^{−L(u)} ≤ e^{−L(0)}.
    let scale = (-at(0.0)?).exp();
    let spec = QuadSpec::with_tol(1e-12 * scale, 1e-10)
        .with_max_subdivisions(4000)
        .with_tail(TailCutoff::Envelope {
            scale,
            rate: 1.0,
            from: 0.0,
        });
    expect_exp_neg(params.eps2, at, &spec)
}

/// One row of the side-information curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SideInfoPoint {
    pub eps2: f64,
    pub snr: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub asymptote: f64,
    pub capacity_constant: f64,
}

/// Bounds and asymptote `log log SNR + const(ε²)` for every `(ε², SNR)` in
/// the two grids, `ε²` outermost.
pub fn si_curve(
    eps2_grid: &[f64],
    snr_grid: &[f64],
    sigma2: f64,
    grid: &DeltaM1Grid,
) -> Result<Vec<SideInfoPoint>, RiceanError> {
    for (name, g) in [("eps2", eps2_grid), ("snr", snr_grid)] {
        if g.is_empty() || g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RiceanError::BadGrid(name));
        }
    }
    let mut out = Vec::with_capacity(eps2_grid.len() * snr_grid.len());
    for &eps2 in eps2_grid {
        let constant = asymptotic_constant_si(eps2)?;
        let cap = capacity_constant(0.0, eps2)?;
        for &snr in snr_grid {
            let p = SideInfoParams::from_snr(eps2, sigma2, snr)?;
            out.push(SideInfoPoint {
                eps2,
                snr,
                lower_bound: si_lower_bound_finite(&p)?,
                upper_bound: si_upper_bound_finite(&p, grid)?,
                asymptote: snr.ln().ln() + constant,
                capacity_constant: cap,
            });
        }
    }
    Ok(out)
}
