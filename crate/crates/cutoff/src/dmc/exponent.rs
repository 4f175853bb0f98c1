//! Closed-form evaluations of the exponent functions for a fixed input law
//! and the inner minimisations of the dual form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ConditionalLaw, CostSpec, Dmc, DmcError, ProbVec};
use crate::scalar::Real;

// Mean cost within this distance of the budget counts as meeting it.
pub(crate) const BUDGET_SLACK: f64 = 1e-9;

pub(crate) fn check_rho<T: Real>(rho: T) -> Result<(), DmcError> {
    if rho >= T::zero() && rho.is_finite() {
        Ok(())
    } else {
        Err(DmcError::BadRho(rho.as_f64()))
    }
}

/// Per-input exponents `t_x = r (g(x) − Υ)`, or all zero without a cost.
pub(crate) fn tilt_exponents<T: Real>(n: usize, cost: Option<&CostSpec<T>>, r: T) -> Vec<T> {
    match cost {
        Some(c) if r != T::zero() => c.cost().iter().map(|&g| r * (g - c.budget())).collect(),
        _ => vec![T::zero(); n],
    }
}

/// The tilted channel `v(x, y) = e^{t_x − m} W(y|x)^{1/(1+ρ)}`, scaled by
/// `e^{−m}` with `m = max_x t_x` so large tilts cannot overflow.
pub(crate) struct Tilted<T> {
    pub v: Vec<T>,
    pub shift: T,
    pub outputs: usize,
}

impl<T: Real> Tilted<T> {
    pub fn new(rho: T, w: &Dmc<T>, t: &[T]) -> Self {
        let a = T::one() / (T::one() + rho);
        let shift = t.iter().copied().fold(T::neg_infinity(), T::max);
        let shift = if shift.is_finite() { shift } else { T::zero() };
        let m = w.num_outputs();
        let mut v = Vec::with_capacity(w.num_inputs() * m);
        for (x, &tx) in t.iter().enumerate() {
            let scale = (tx - shift).exp();
            v.extend(w.row(x).iter().map(|&p| scale * pow0(p, a)));
        }
        Tilted {
            v,
            shift,
            outputs: m,
        }
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.v[x * self.outputs..(x + 1) * self.outputs]
    }

    /// `α(y) = Σ_x Q(x) v(x, y)` in scaled units.
    pub fn alpha(&self, q: &[T]) -> Vec<T> {
        let mut alpha = vec![T::zero(); self.outputs];
        for (x, &qx) in q.iter().enumerate() {
            if qx > T::zero() {
                for (a, &vxy) in alpha.iter_mut().zip(self.row(x)) {
                    *a = *a + qx * vxy;
                }
            }
        }
        alpha
    }

    /// `E₀ = −log Σ_y α(y)^{1+ρ}` undoing the scaling.
    pub fn value(&self, rho: T, alpha: &[T]) -> T {
        let s = alpha.iter().fold(T::zero(), |acc, &a| acc + pow0(a, T::one() + rho));
        -s.ln() - (T::one() + rho) * self.shift
    }
}

/// `p^e` with `0^e = 0` for `e > 0` and `0^0 = 1`.
pub(crate) fn pow0<T: Real>(p: T, e: T) -> T {
    if p == T::zero() {
        if e == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        p.powf(e)
    }
}

/// Gallager's `E_{G,0}(ρ, Q) = −log Σ_y (Σ_x Q(x) W(y|x)^{1/(1+ρ)})^{1+ρ}`.
pub fn eg0<T: Real>(rho: T, q: &ProbVec<T>, w: &Dmc<T>) -> Result<T, DmcError> {
    check_rho(rho)?;
    w.check_input_law(q)?;
    let tilted = Tilted::new(rho, w, &vec![T::zero(); w.num_inputs()]);
    Ok(tilted.value(rho, &tilted.alpha(q.as_slice())))
}

/// The cost-tilted exponent
/// `E₀(ρ, Q, r) = −log Σ_y (Σ_x Q(x) e^{r(g(x)−Υ)} W(y|x)^{1/(1+ρ)})^{1+ρ}`.
pub fn e0_tilted<T: Real>(
    rho: T,
    q: &ProbVec<T>,
    r: T,
    w: &Dmc<T>,
    cost: &CostSpec<T>,
) -> Result<T, DmcError> {
    check_rho(rho)?;
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(DmcError::BadRho(r.as_f64()));
    }
    w.check_input_law(q)?;
    cost.check_against(w)?;
    // Inputs outside the support of Q must not set the overflow shift.
    let t: Vec<T> = tilt_exponents(w.num_inputs(), Some(cost), r)
        .into_iter()
        .zip(q.as_slice())
        .map(|(t, &qx)| if qx > T::zero() { t } else { T::neg_infinity() })
        .collect();
    let tilted = Tilted::new(rho, w, &t);
    Ok(tilted.value(rho, &tilted.alpha(q.as_slice())))
}

/// Value of the modified exponent together with the tilt attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Modified<T> {
    pub value: T,
    pub r: T,
}

/// `E^M_{G,0}(ρ, Q)`: the plain exponent when `E_Q[g] < Υ`, and the
/// maximum over `r ≥ 0` of [`e0_tilted`] when the budget is met with
/// equality.
pub fn eg0_modified<T: Real>(
    rho: T,
    q: &ProbVec<T>,
    w: &Dmc<T>,
    cost: &CostSpec<T>,
) -> Result<Modified<T>, DmcError> {
    check_rho(rho)?;
    w.check_input_law(q)?;
    cost.check_against(w)?;
    let mean = cost.mean_cost(q);
    let slack = T::c(BUDGET_SLACK);
    if mean > cost.budget() + slack {
        return Err(DmcError::CostViolated {
            mean: mean.as_f64(),
            budget: cost.budget().as_f64(),
        });
    }
    if mean < cost.budget() - slack {
        return Ok(Modified {
            value: eg0(rho, q, w)?,
            r: T::zero(),
        });
    }
    let f = |r: T| e0_tilted(rho, q, r, w, cost).unwrap_or(T::neg_infinity());
    let (r, value) = maximize_on_halfline(f);
    Ok(Modified { value, r })
}

/// Maximises a concave function on `[0, ∞)`: the right end of the bracket
/// is doubled until the objective stops increasing, then golden-section
/// search refines. Returns `(argmax, max)`.
pub(crate) fn maximize_on_halfline<T: Real, F: Fn(T) -> T>(f: F) -> (T, T) {
    let f0 = f(T::zero());
    let mut h = T::one();
    let mut fh = f(h);
    if !(fh > f0) {
        return golden_max(&f, T::zero(), h, T::c(1e-11));
    }
    let cap = T::c(1e12);
    loop {
        let f2 = f(h + h);
        if !(f2 > fh) || h > cap {
            break;
        }
        h = h + h;
        fh = f2;
    }
    let lo = if h > T::one() { h * T::c(0.5) } else { T::zero() };
    golden_max(&f, lo, h + h, T::c(1e-11) * (T::one() + h))
}

/// Golden-section search for the maximum of a unimodal function on
/// `[a, b]`; the endpoints are included among the candidates.
pub(crate) fn golden_max<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> (T, T) {
    let invphi = T::c(0.618_033_988_749_894_8);
    let (mut a, mut b) = (a, b);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fa_ge(f(a), f(b)) { (a, f(a)) } else { (b, f(b)) };
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

fn fa_ge<T: Real>(a: T, b: T) -> bool {
    a >= b || b.is_nan()
}

/// Outcome of minimising the dual objective over output laws.
#[derive(Clone, Debug, PartialEq)]
pub struct DualResult<T: Real> {
    /// Objective at the best output law found (an upper estimate of the
    /// minimum).
    pub value: T,
    /// Certified lower bound on the minimum from the linearisation gap.
    pub lower_bound: T,
    pub minimizer: ProbVec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Tolerance and iteration cap for the inner dual minimisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for DualOptions<T> {
    fn default() -> Self {
        DualOptions {
            tol: T::c(1e-9).max(T::epsilon() * T::c(64.0)),
            max_iter: 100_000,
        }
    }
}

/// The dual objective
/// `F(R) = −(1+ρ) Σ_x Q(x) log Σ_y W(y|x)^{1/(1+ρ)} R(y)^{ρ/(1+ρ)}`.
pub fn dual_objective<T: Real>(rho: T, q: &ProbVec<T>, w: &Dmc<T>, r_out: &ProbVec<T>) -> T {
    let a = T::one() / (T::one() + rho);
    let s = rho * a;
    let mut total = T::zero();
    for (x, &qx) in q.as_slice().iter().enumerate() {
        if qx > T::zero() {
            let h = w
                .row(x)
                .iter()
                .zip(r_out.as_slice())
                .fold(T::zero(), |acc, (&p, &r)| acc + pow0(p, a) * pow0(r, s));
            total = total + qx * h.ln();
        }
    }
    -(T::one() + rho) * total
}

/// `E_{CK,0}(ρ, Q)` as the minimum of [`dual_objective`] over output laws.
pub fn eck0_dual<T: Real>(rho: T, q: &ProbVec<T>, w: &Dmc<T>) -> Result<DualResult<T>, DmcError> {
    eck0_dual_with(rho, q, w, None, &DualOptions::default())
}

/// [`eck0_dual`] with an optional warm start and explicit options.
///
/// Each step takes the better of two candidates: the majorise-minimise
/// update `R ← R^{ρ/(1+ρ)} c` (which never increases the objective) and
/// the fixed-point jump `R ∝ c^{1+ρ}`, where
/// `c(y) = Σ_x Q(x) W(y|x)^{1/(1+ρ)} / Σ_y' W(y'|x)^{1/(1+ρ)} R(y')^{ρ/(1+ρ)}`.
/// The search is confined to outputs reachable from the support of `Q`.
pub fn eck0_dual_with<T: Real>(
    rho: T,
    q: &ProbVec<T>,
    w: &Dmc<T>,
    start: Option<&ProbVec<T>>,
    opts: &DualOptions<T>,
) -> Result<DualResult<T>, DmcError> {
    check_rho(rho)?;
    if rho == T::zero() {
        return Err(DmcError::BadRho(0.0));
    }
    w.check_input_law(q)?;
    let (n, m) = (w.num_inputs(), w.num_outputs());
    let a = T::one() / (T::one() + rho);
    let s = rho * a;
    let qs = q.as_slice();
    let u: Vec<T> = (0..n).flat_map(|x| w.row(x).iter().map(move |&p| pow0(p, a))).collect();
    let reach: Vec<bool> = (0..m)
        .map(|y| (0..n).any(|x| qs[x] > T::zero() && w.get(x, y) > T::zero()))
        .collect();

    let mut r: Vec<T> = match start {
        Some(r0) => {
            w.check_output_law(r0)?;
            // Keep every reachable output strictly positive.
            let k = T::from_count(reach.iter().filter(|&&b| b).count());
            let eps = T::c(1e-6);
            let v: Vec<T> = (0..m)
                .map(|y| if reach[y] { (T::one() - eps) * r0[y] + eps / k } else { T::zero() })
                .collect();
            normalize(v)
        }
        None => normalize(reach.iter().map(|&b| if b { T::one() } else { T::zero() }).collect()),
    };

    let objective = |r: &[T]| -> T {
        let mut total = T::zero();
        for x in 0..n {
            if qs[x] > T::zero() {
                let h = (0..m).fold(T::zero(), |acc, y| acc + u[x * m + y] * pow0(r[y], s));
                total = total + qs[x] * h.ln();
            }
        }
        -(T::one() + rho) * total
    };
    // c(y) and the linearisation gap ρ(max_y R(y)^{s−1} c(y) − 1).
    let gradient = |r: &[T]| -> (Vec<T>, T) {
        let mut c = vec![T::zero(); m];
        for x in 0..n {
            if qs[x] > T::zero() {
                let h = (0..m).fold(T::zero(), |acc, y| acc + u[x * m + y] * pow0(r[y], s));
                for y in 0..m {
                    c[y] = c[y] + qs[x] * u[x * m + y] / h;
                }
            }
        }
        let mut worst = T::zero();
        for y in 0..m {
            if reach[y] {
                worst = worst.max(r[y].powf(s - T::one()) * c[y]);
            }
        }
        (c, rho * (worst - T::one()).max(T::zero()))
    };

    let mut value = objective(&r);
    let mut iterations = 0;
    loop {
        let (c, gap) = gradient(&r);
        if gap <= opts.tol {
            return Ok(DualResult {
                value,
                lower_bound: value - gap,
                minimizer: ProbVec(r),
                iterations,
                converged: true,
            });
        }
        if iterations >= opts.max_iter {
            return Err(DmcError::NoConvergence {
                what: "dual minimisation",
                iterations,
                best: value.as_f64(),
                gap: gap.as_f64(),
            });
        }
        iterations += 1;
        let mm: Vec<T> = normalize((0..m).map(|y| pow0(r[y], s) * c[y]).collect());
        let jump: Vec<T> = normalize((0..m).map(|y| pow0(c[y], T::one() + rho)).collect());
        let (v_mm, v_jump) = (objective(&mm), objective(&jump));
        let (next, v_next) = if v_jump < v_mm { (jump, v_jump) } else { (mm, v_mm) };
        if !(v_next <= value) {
            // No candidate improves: the iterate is optimal to rounding.
            return Ok(DualResult {
                value,
                lower_bound: value - gap,
                minimizer: ProbVec(r),
                iterations,
                converged: gap <= opts.tol * T::c(100.0),
            });
        }
        r = next;
        value = v_next;
    }
}

pub(crate) fn normalize<T: Real>(v: Vec<T>) -> Vec<T> {
    let s = v.iter().fold(T::zero(), |a, &b| a + b);
    v.into_iter().map(|x| x / s).collect()
}

/// `D(V‖W|Q) + ρ I(Q, V)`, the primal form of the dual exponent.
/// Infinite when `V` puts mass where `W` has none.
pub fn primal_objective<T: Real>(rho: T, q: &ProbVec<T>, w: &Dmc<T>, v: &ConditionalLaw<T>) -> T {
    let (n, m) = (w.num_inputs(), w.num_outputs());
    let qs = q.as_slice();
    let mut out = vec![T::zero(); m];
    for x in 0..n {
        for y in 0..m {
            out[y] = out[y] + qs[x] * v.row(x)[y];
        }
    }
    let mut total = T::zero();
    for x in 0..n {
        if qs[x] == T::zero() {
            continue;
        }
        for y in 0..m {
            let vxy = v.row(x)[y];
            if vxy > T::zero() {
                let wxy = w.get(x, y);
                if wxy == T::zero() {
                    return T::infinity();
                }
                total = total + qs[x] * vxy * ((vxy / wxy).ln() + rho * (vxy / out[y]).ln());
            }
        }
    }
    total
}

/// Minimises [`primal_objective`] over conditional laws directly, from 32
/// seeded random starts plus `V = W`, by exponentiated-gradient descent
/// with backtracking. Intended as an independent check of [`eck0_dual`]
/// on small alphabets (`N·M ≤ 64`).
pub fn eck0_primal_oracle<T: Real>(rho: T, q: &ProbVec<T>, w: &Dmc<T>) -> Result<T, DmcError> {
    check_rho(rho)?;
    w.check_input_law(q)?;
    let (n, m) = (w.num_inputs(), w.num_outputs());
    if n * m > 64 {
        return Err(DmcError::TooLarge { size: n * m });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e0_c0de);
    let mut starts = vec![ConditionalLaw::from_channel(w)];
    for _ in 0..32 {
        let mut v = Vec::with_capacity(n * m);
        for x in 0..n {
            let support: Vec<bool> = w.row(x).iter().map(|&p| p > T::zero()).collect();
            let raw = ProbVec::<T>::random(m, &mut rng).into_vec();
            let masked: Vec<T> = raw
                .into_iter()
                .zip(&support)
                .map(|(p, &ok)| if ok { p } else { T::zero() })
                .collect();
            v.extend(normalize(masked));
        }
        starts.push(ConditionalLaw {
            inputs: n,
            outputs: m,
            v,
        });
    }
    let mut best = T::infinity();
    for start in starts {
        best = best.min(descend(rho, q, w, start));
    }
    Ok(best)
}

fn descend<T: Real>(rho: T, q: &ProbVec<T>, w: &Dmc<T>, mut v: ConditionalLaw<T>) -> T {
    let (n, m) = (w.num_inputs(), w.num_outputs());
    let qs = q.as_slice();
    let mut f = primal_objective(rho, q, w, &v);
    let mut eta = T::one() / (T::one() + rho);
    for _ in 0..20_000 {
        let mut out = vec![T::zero(); m];
        for x in 0..n {
            for y in 0..m {
                out[y] = out[y] + qs[x] * v.row(x)[y];
            }
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut next = Vec::with_capacity(n * m);
            for x in 0..n {
                let row = v.row(x);
                let stepped: Vec<T> = (0..m)
                    .map(|y| {
                        let vxy = row[y];
                        if vxy > T::zero() {
                            let g = (vxy / w.get(x, y)).ln() + rho * (vxy / out[y]).ln();
                            vxy * (-eta * g).exp()
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                next.extend(normalize(stepped));
            }
            let cand = ConditionalLaw {
                inputs: n,
                outputs: m,
                v: next,
            };
            let fc = primal_objective(rho, q, w, &cand);
            if fc <= f {
                let drop = f - fc;
                v = cand;
                f = fc;
                improved = drop > T::epsilon() * (T::one() + f.abs());
                eta = (eta * T::c(1.5)).min(T::c(4.0));
                break;
            }
            eta = eta * T::c(0.5);
        }
        if !improved {
            break;
        }
    }
    f
}

/// The per-input terms of the dual bound,
/// `−(1+ρ) log( e^{r(g(x)−Υ)} Σ_y W(y|x)^{1/(1+ρ)} R(y)^{ρ/(1+ρ)} )`.
pub fn per_letter_dual<T: Real>(
    rho: T,
    r_out: &ProbVec<T>,
    w: &Dmc<T>,
    tilt: Option<(&CostSpec<T>, T)>,
) -> Result<Vec<T>, DmcError> {
    check_rho(rho)?;
    w.check_output_law(r_out)?;
    if let Some((c, _)) = tilt {
        c.check_against(w)?;
    }
    let a = T::one() / (T::one() + rho);
    let s = rho * a;
    let t = match tilt {
        Some((c, r)) => tilt_exponents(w.num_inputs(), Some(c), r),
        None => vec![T::zero(); w.num_inputs()],
    };
    Ok((0..w.num_inputs())
        .map(|x| {
            let h = w
                .row(x)
                .iter()
                .zip(r_out.as_slice())
                .fold(T::zero(), |acc, (&p, &r)| acc + pow0(p, a) * pow0(r, s));
            -(T::one() + rho) * (t[x] + h.ln())
        })
        .collect())
}

/// An upper bound on `E₀(ρ)` from any output law: the largest per-input
/// dual term, with the first maximising input on ties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualBound<T> {
    pub value: T,
    pub argmax: usize,
}

pub fn dual_upper_bound<T: Real>(
    rho: T,
    r_out: &ProbVec<T>,
    w: &Dmc<T>,
    tilt: Option<(&CostSpec<T>, T)>,
) -> Result<DualBound<T>, DmcError> {
    let terms = per_letter_dual(rho, r_out, w, tilt)?;
    let mut best = DualBound {
        value: terms[0],
        argmax: 0,
    };
    for (x, &d) in terms.iter().enumerate().skip(1) {
        if d > best.value {
            best = DualBound { value: d, argmax: x };
        }
    }
    Ok(best)
}
