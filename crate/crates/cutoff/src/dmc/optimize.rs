//! Maximisation of the exponent over input laws, the derived exponents and
//! the numerical duality check.

use std::cell::RefCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::exponent::{
    check_rho, eck0_dual_with, eg0, golden_max, normalize, per_letter_dual, tilt_exponents,
    pow0, DualOptions, Tilted, BUDGET_SLACK,
};
use super::{CostSpec, Dmc, DmcError, ProbVec};
use crate::scalar::Real;

/// Stopping rule for the input-law iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions<T> {
    /// Largest change in the objective between iterations at convergence.
    pub value_tol: T,
    /// Largest admissible gap between the dual bound and the primal value.
    pub gap_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for OptimizeOptions<T> {
    fn default() -> Self {
        OptimizeOptions {
            value_tol: T::c(1e-12).max(T::epsilon() * T::c(16.0)),
            gap_tol: T::c(1e-8).max(T::epsilon() * T::c(64.0)),
            max_iter: 100_000,
        }
    }
}

/// The maximised exponent with its certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct E0Result<T: Real> {
    pub value: T,
    pub optimizing_input: ProbVec<T>,
    /// `R*(y) ∝ α(y)^{1+ρ}` built from the optimising input and tilt.
    pub optimizing_output: ProbVec<T>,
    pub tilt_r: T,
    pub iterations: usize,
    pub converged: bool,
    /// Dual bound at `optimizing_output` minus `value`.
    pub gap: T,
    pub cost_active: bool,
}

struct Inner<T: Real> {
    q: Vec<T>,
    value: T,
    r_out: Vec<T>,
    gap: T,
    iterations: usize,
    converged: bool,
}

// Value, α and the certificate of an input law on the tilted channel.
struct Certified<T> {
    alpha: Vec<T>,
    value: T,
    big_a: T,
    beta: Vec<T>,
    gap: T,
}

fn certify<T: Real>(rho: T, tilted: &Tilted<T>, n: usize, q: &[T]) -> Certified<T> {
    let one_rho = T::one() + rho;
    let alpha = tilted.alpha(q);
    let value = tilted.value(rho, &alpha);
    let big_a = alpha.iter().fold(T::zero(), |s, &a| s + a.powf(one_rho));
    let beta: Vec<T> = (0..n).map(|x| gradient(tilted, &alpha, rho, x)).collect();
    let min_beta = beta.iter().copied().fold(T::infinity(), T::min);
    let gap = (one_rho * (big_a.ln() - min_beta.ln())).max(T::zero());
    Certified {
        alpha,
        value,
        big_a,
        beta,
        gap,
    }
}

// Iteration counts at which a Newton polish is attempted before the
// multiplicative iteration has met the gap tolerance on its own.
const POLISH_AT: [usize; 5] = [64, 512, 4096, 32_768, 262_144];

// Arimoto-style ascent on the tilted exponent for fixed per-input exponents
// t: Q(x) ← Q(x) (β(x)/A)^{−1/ρ}, where α(y) = Σ_x Q(x) v(x,y),
// A = Σ_y α^{1+ρ} and β(x) = Σ_y α^ρ v(x,y). At the optimum β(x) ≥ A with
// equality on the support of Q, and (1+ρ) log(A / min β) is the gap between
// the primal value and the dual bound at R* ∝ α^{1+ρ}.
//
// The iteration converges only linearly, so once it has found the support
// the result is finished by Newton's method on that support.
fn arimoto<T: Real>(
    rho: T,
    w: &Dmc<T>,
    t: &[T],
    start: Vec<T>,
    opts: &OptimizeOptions<T>,
) -> Inner<T> {
    let tilted = Tilted::new(rho, w, t);
    let n = w.num_inputs();
    let one_rho = T::one() + rho;
    let mut q = start;
    let mut iterations = 0;
    let mut cur = certify(rho, &tilted, n, &q);
    let mut step = T::one();
    let finish = |q: Vec<T>, cur: Certified<T>, iterations: usize, converged: bool| Inner {
        q,
        value: cur.value,
        r_out: normalize(cur.alpha.iter().map(|&a| a.powf(one_rho)).collect()),
        gap: cur.gap,
        iterations,
        converged,
    };
    // Newton result if it certifies at least as well as the current iterate.
    let try_polish = |q: &[T], cur: &Certified<T>| {
        let p = polish(rho, &tilted, q)?;
        let c = certify(rho, &tilted, n, &p);
        let slack = T::epsilon() * T::c(64.0) * (T::one() + cur.value.abs());
        (c.value >= cur.value - slack && c.gap <= cur.gap).then_some((p, c))
    };
    loop {
        let done = cur.gap <= opts.gap_tol && iterations > 0;
        if rho == T::zero() {
            return finish(q, cur, iterations, true);
        }
        if done || iterations >= opts.max_iter || POLISH_AT.contains(&iterations) {
            if let Some((p, c)) = try_polish(&q, &cur) {
                if c.gap <= opts.gap_tol {
                    return finish(p, c, iterations, true);
                }
            }
            if done {
                return finish(q, cur, iterations, true);
            }
            if iterations >= opts.max_iter {
                return finish(q, cur, iterations, false);
            }
        }
        iterations += 1;
        let log_a = cur.big_a.ln();
        let mut accepted = false;
        for _ in 0..60 {
            let logs: Vec<T> = (0..n)
                .map(|x| {
                    if q[x] > T::zero() {
                        q[x].ln() - step * (cur.beta[x].ln() - log_a) / rho
                    } else {
                        T::neg_infinity()
                    }
                })
                .collect();
            let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
            let cand = normalize(logs.iter().map(|&l| (l - top).exp()).collect());
            let next = certify(rho, &tilted, n, &cand);
            if next.value >= cur.value {
                if next.value - cur.value < opts.value_tol && cur.gap <= opts.gap_tol {
                    // The certificate belongs to the current iterate.
                    return finish(q, cur, iterations, true);
                }
                q = cand;
                cur = next;
                accepted = true;
                // Over-relax while it keeps paying off.
                step = (step * T::c(1.25)).min(T::c(8.0));
                break;
            }
            step = step * T::c(0.5);
        }
        if !accepted {
            // No ascent direction left in this precision.
            if let Some((p, c)) = try_polish(&q, &cur) {
                let ok = c.gap <= opts.gap_tol * T::c(100.0);
                return finish(p, c, iterations, ok);
            }
            let ok = cur.gap <= opts.gap_tol * T::c(100.0);
            return finish(q, cur, iterations, ok);
        }
    }
}

// Active-set Newton method for min Σ_y α(y)^{1+ρ} over the simplex, started
// from an approximate optimiser. Inputs whose KT condition is nearly tight
// form the initial support; inputs that Newton drives to zero leave it and
// inputs violating the KT condition join it.
fn polish<T: Real>(rho: T, tilted: &Tilted<T>, q0: &[T]) -> Option<Vec<T>> {
    let n = q0.len();
    if rho == T::zero() || n < 2 {
        return None;
    }
    let one_rho = T::one() + rho;
    let objective = |q: &[T]| {
        tilted
            .alpha(q)
            .iter()
            .fold(T::zero(), |s, &a| s + pow0(a, one_rho))
    };
    let start = certify(rho, tilted, n, q0);
    let mut q = q0.to_vec();
    let mut support: Vec<usize> = (0..n)
        .filter(|&x| q[x] > T::c(1e-6) || start.beta[x] <= start.big_a * T::c(1.0 + 1e-6))
        .collect();
    for x in 0..n {
        if !support.contains(&x) {
            q[x] = T::zero();
        }
    }
    q = normalize(q);
    let tiny = T::epsilon() * T::c(16.0);
    for _ in 0..4 * n + 4 {
        for _ in 0..100 {
            let k = support.len();
            let alpha = tilted.alpha(&q);
            let big_a = alpha.iter().fold(T::zero(), |s, &a| s + pow0(a, one_rho));
            // Gradient and Hessian of Σ α^{1+ρ}, divided by 1+ρ.
            let grad: Vec<T> = support.iter().map(|&x| gradient(tilted, &alpha, rho, x)).collect();
            let mut sys = vec![vec![T::zero(); k + 2]; k + 1];
            for (i, &xi) in support.iter().enumerate() {
                let vi = tilted.row(xi);
                for (j, &xj) in support.iter().enumerate().skip(i) {
                    let vj = tilted.row(xj);
                    let mut h = T::zero();
                    for (y, &a) in alpha.iter().enumerate() {
                        if a > T::zero() {
                            h = h + a.powf(rho - T::one()) * vi[y] * vj[y];
                        }
                    }
                    sys[i][j] = rho * h;
                    sys[j][i] = rho * h;
                }
                sys[i][k] = T::one();
                sys[k][i] = T::one();
                sys[i][k + 1] = -grad[i];
            }
            let d = solve_dense(sys)?;
            let d = &d[..k];
            // Decrease rate of Σ α^{1+ρ}/(1+ρ) along d. Near the optimum the
            // decrease drops below rounding long before the KT residual does,
            // so the step length decides convergence and the line search
            // tolerates rounding-level increases.
            let slope = -grad.iter().zip(d).fold(T::zero(), |s, (&g, &dx)| s + g * dx);
            let step_len = d.iter().fold(T::zero(), |s, &v| s.max(v.abs()));
            if step_len <= tiny || slope < T::zero() {
                break;
            }
            let mut t_max = T::one();
            let mut blocking = None;
            for (i, &x) in support.iter().enumerate() {
                if d[i] < T::zero() && -q[x] / d[i] < t_max {
                    t_max = -q[x] / d[i];
                    blocking = Some(x);
                }
            }
            let mut t = t_max;
            let mut moved = false;
            for _ in 0..60 {
                let mut cand = q.clone();
                for (i, &x) in support.iter().enumerate() {
                    cand[x] = (q[x] + t * d[i]).max(T::zero());
                }
                if objective(&cand) <= big_a - T::c(1e-4) * t * one_rho * slope + tiny * big_a {
                    if t == t_max {
                        if let Some(b) = blocking {
                            cand[b] = T::zero();
                            support.retain(|&x| x != b);
                        }
                    }
                    q = normalize(cand);
                    moved = true;
                    break;
                }
                t = t * T::c(0.5);
            }
            if !moved || support.is_empty() {
                break;
            }
        }
        let c = certify(rho, tilted, n, &q);
        let worst = (0..n)
            .filter(|x| !support.contains(x))
            .min_by(|&a, &b| c.beta[a].partial_cmp(&c.beta[b]).unwrap_or(std::cmp::Ordering::Equal));
        match worst {
            Some(x) if c.beta[x] < c.big_a * (T::one() - tiny) => support.push(x),
            _ => return Some(q),
        }
        support.sort_unstable();
    }
    None
}

// β(x) = Σ_y α(y)^ρ v(x, y).
fn gradient<T: Real>(tilted: &Tilted<T>, alpha: &[T], rho: T, x: usize) -> T {
    tilted.row(x).iter().zip(alpha).fold(T::zero(), |s, (&v, &a)| {
        if a > T::zero() {
            s + a.powf(rho) * v
        } else {
            s
        }
    })
}

// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense<T: Real>(mut a: Vec<Vec<T>>) -> Option<Vec<T>> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|r| r[..n].iter())
        .fold(T::zero(), |s, &v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(a[piv][col].abs() > scale * T::epsilon() * T::c(64.0)) {
            return None;
        }
        a.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != T::zero() {
                for c in col..=n {
                    let v = a[col][c];
                    a[r][c] = a[r][c] - f * v;
                }
            }
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let s = (r + 1..n).fold(a[r][n], |s, c| s - a[r][c] * x[c]);
        x[r] = s / a[r][r];
    }
    Some(x)
}

fn blend_with_uniform<T: Real>(q: &[T]) -> Vec<T> {
    let n = T::from_count(q.len());
    let eps = T::c(1e-3);
    q.iter().map(|&p| (T::one() - eps) * p + eps / n).collect()
}

/// `max_Q E₀(ρ, Q)`, subject to the cost constraint when one is given.
///
/// Without a cost, or when the unconstrained optimiser already meets the
/// budget, this is the plain maximisation. Otherwise the tilt `r` is
/// bisected so that the maximiser of the tilted exponent at `r` spends the
/// budget exactly; there the result is the cost-constrained exponent.
pub fn optimize_e0<T: Real>(
    rho: T,
    w: &Dmc<T>,
    cost: Option<&CostSpec<T>>,
) -> Result<E0Result<T>, DmcError> {
    optimize_e0_with(rho, w, cost, &OptimizeOptions::default())
}

pub fn optimize_e0_with<T: Real>(
    rho: T,
    w: &Dmc<T>,
    cost: Option<&CostSpec<T>>,
    opts: &OptimizeOptions<T>,
) -> Result<E0Result<T>, DmcError> {
    check_rho(rho)?;
    let n = w.num_inputs();
    if let Some(c) = cost {
        c.check_against(w)?;
        let min_cost = c.cost().iter().copied().fold(T::infinity(), T::min);
        if min_cost > c.budget() + T::c(BUDGET_SLACK) {
            return Err(DmcError::Infeasible {
                budget: c.budget().as_f64(),
                min_cost: min_cost.as_f64(),
            });
        }
    }
    let uniform = vec![T::one() / T::from_count(n); n];
    let zero_tilt = vec![T::zero(); n];
    let free = arimoto(rho, w, &zero_tilt, uniform.clone(), opts);
    let pack = |inner: Inner<T>, r: T, active: bool| -> Result<E0Result<T>, DmcError> {
        Ok(E0Result {
            value: inner.value,
            optimizing_input: ProbVec::normalized(inner.q)?,
            optimizing_output: ProbVec::normalized(inner.r_out)?,
            tilt_r: r,
            iterations: inner.iterations,
            converged: inner.converged,
            gap: inner.gap,
            cost_active: active,
        })
    };
    let c = match cost {
        None => return pack(free, T::zero(), false),
        Some(c) => c,
    };
    let mean = |q: &[T]| q.iter().zip(c.cost()).fold(T::zero(), |s, (&p, &g)| s + p * g);
    let excess = mean(&free.q) - c.budget();
    if excess <= T::c(BUDGET_SLACK) {
        return pack(free, T::zero(), false);
    }
    if rho == T::zero() {
        // E₀(0, Υ) = 0; any feasible law attains it.
        let cheapest = (0..n)
            .min_by(|&a, &b| c.cost()[a].partial_cmp(&c.cost()[b]).unwrap())
            .unwrap_or(0);
        let q = ProbVec::point_mass(n, cheapest);
        let out: Vec<T> = (0..w.num_outputs()).map(|y| w.get(cheapest, y)).collect();
        return Ok(E0Result {
            value: T::zero(),
            optimizing_input: q,
            optimizing_output: ProbVec::normalized(out)?,
            tilt_r: T::zero(),
            iterations: 0,
            converged: true,
            gap: T::zero(),
            cost_active: true,
        });
    }

    let mut total_iter = free.iterations;
    let mut warm = free.q.clone();
    let solve = |r: T, warm: &mut Vec<T>, total: &mut usize| {
        let t = tilt_exponents(n, Some(c), r);
        let inner = arimoto(rho, w, &t, blend_with_uniform(warm), opts);
        *total += inner.iterations;
        *warm = inner.q.clone();
        inner
    };
    // Bracket: spending falls as r grows.
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut at_hi = solve(hi, &mut warm, &mut total_iter);
    while mean(&at_hi.q) > c.budget() {
        lo = hi;
        hi = hi + hi;
        if hi > T::c(1e9) {
            break;
        }
        at_hi = solve(hi, &mut warm, &mut total_iter);
    }
    let mut best = at_hi;
    let mut best_r = hi;
    for _ in 0..200 {
        let gap_r = (hi - lo) / (T::one() + hi);
        let spend = mean(&best.q) - c.budget();
        if gap_r <= T::epsilon() * T::c(8.0) || spend.abs() <= T::epsilon() * T::c(64.0) {
            break;
        }
        let mid = T::c(0.5) * (lo + hi);
        let at_mid = solve(mid, &mut warm, &mut total_iter);
        let spend_mid = mean(&at_mid.q) - c.budget();
        if spend_mid > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if spend_mid.abs() <= spend.abs() {
            best = at_mid;
            best_r = mid;
        }
    }
    best.iterations = total_iter;
    pack(best, best_r, true)
}

/// `R₀ = E₀(1)`.
pub fn cutoff_rate<T: Real>(w: &Dmc<T>, cost: Option<&CostSpec<T>>) -> Result<T, DmcError> {
    Ok(optimize_e0(T::one(), w, cost)?.value)
}

/// An exponent value and the `ρ` attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentPoint<T> {
    pub value: T,
    pub rho: T,
}

/// `E_r(R) = max_{0≤ρ≤1} {E₀(ρ) − ρR}` by golden-section search.
pub fn random_coding_exponent<T: Real>(
    rate: T,
    w: &Dmc<T>,
    cost: Option<&CostSpec<T>>,
) -> Result<ExponentPoint<T>, DmcError> {
    if !(rate >= T::zero()) || !rate.is_finite() {
        return Err(DmcError::BadRate(rate.as_f64()));
    }
    let failure = RefCell::new(None);
    let f = |rho: T| match optimize_e0(rho, w, cost) {
        Ok(r) => r.value - rho * rate,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::neg_infinity()
        }
    };
    let (rho, value) = golden_max(&f, T::zero(), T::one(), T::c(1e-9));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(ExponentPoint {
        value: value.max(T::zero()),
        rho,
    })
}

/// Sphere-packing exponent: finite with its maximiser, or unbounded when
/// `E₀(ρ) − ρR` is still increasing at `rho_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SpherePacking<T> {
    Finite(ExponentPoint<T>),
    Unbounded { rho_max: T },
}

impl<T: Real> SpherePacking<T> {
    pub fn value(&self) -> T {
        match self {
            SpherePacking::Finite(p) => p.value,
            SpherePacking::Unbounded { .. } => T::infinity(),
        }
    }
}

/// Largest `ρ` explored before declaring the sphere-packing exponent
/// unbounded.
pub const SPHERE_PACKING_RHO_MAX: f64 = 1024.0;

/// `E_sp(R) = max_{ρ≥0} {E₀(ρ) − ρR}`.
pub fn sphere_packing_exponent<T: Real>(rate: T, w: &Dmc<T>) -> Result<SpherePacking<T>, DmcError> {
    if !(rate > T::zero()) || !rate.is_finite() {
        return Err(DmcError::BadRate(rate.as_f64()));
    }
    let rho_max = T::c(SPHERE_PACKING_RHO_MAX);
    let failure = RefCell::new(None);
    let f = |rho: T| match optimize_e0(rho, w, None) {
        Ok(r) => r.value - rho * rate,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::neg_infinity()
        }
    };
    let mut h = T::one();
    let mut fh = f(h);
    let bracket = if !(fh > T::zero()) {
        Some((T::zero(), h))
    } else {
        let mut found = None;
        while h + h <= rho_max {
            let f2 = f(h + h);
            if !(f2 > fh) {
                found = Some((h * T::c(0.5), h + h));
                break;
            }
            h = h + h;
            fh = f2;
        }
        found
    };
    let out = match bracket {
        None => SpherePacking::Unbounded { rho_max },
        Some((a, b)) => {
            let (rho, value) = golden_max(&f, a, b, T::c(1e-9) * (T::one() + b));
            SpherePacking::Finite(ExponentPoint {
                value: value.max(T::zero()),
                rho,
            })
        }
    };
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `max_Q E_{CK,0}(ρ, Q)` by exponentiated-gradient ascent on the concave
/// map `Q ↦ min_R F(Q, R)`, whose supergradient is the vector of per-input
/// dual terms at the inner minimiser. The largest such term bounds the
/// maximum from above, which certifies convergence.
pub fn maximize_eck0<T: Real>(
    rho: T,
    w: &Dmc<T>,
    opts: &OptimizeOptions<T>,
) -> Result<E0Result<T>, DmcError> {
    check_rho(rho)?;
    if rho == T::zero() {
        return Err(DmcError::BadRho(0.0));
    }
    let n = w.num_inputs();
    let inner_opts = DualOptions {
        tol: opts.gap_tol * T::c(1e-2),
        max_iter: opts.max_iter,
    };
    let mut q = ProbVec::uniform(n);
    let mut inner = eck0_dual_with(rho, &q, w, None, &inner_opts)?;
    let mut step = T::one() / (rho * (T::one() + rho));
    let mut iterations = 0;
    loop {
        let d = per_letter_dual(rho, &inner.minimizer, w, None)?;
        let upper = d.iter().copied().fold(T::neg_infinity(), T::max);
        let gap = (upper - inner.value).max(T::zero());
        if gap <= opts.gap_tol || iterations >= opts.max_iter {
            return Ok(E0Result {
                value: inner.value,
                optimizing_input: q,
                optimizing_output: inner.minimizer,
                tilt_r: T::zero(),
                iterations,
                converged: gap <= opts.gap_tol,
                gap,
                cost_active: false,
            });
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let weights: Vec<T> = (0..n)
                .map(|x| q[x] * (step * (d[x] - upper)).exp())
                .collect();
            let cand = ProbVec::normalized(weights)?;
            let next = eck0_dual_with(rho, &cand, w, Some(&inner.minimizer), &inner_opts)?;
            if next.value >= inner.value {
                q = cand;
                inner = next;
                step = (step * T::c(1.25)).min(T::c(1e3));
                accepted = true;
                break;
            }
            step = step * T::c(0.5);
        }
        if !accepted {
            return Ok(E0Result {
                value: inner.value,
                optimizing_input: q,
                optimizing_output: inner.minimizer,
                tilt_r: T::zero(),
                iterations,
                converged: gap <= opts.gap_tol * T::c(100.0),
                gap,
                cost_active: false,
            });
        }
    }
}

/// One channel of the duality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityTrial {
    pub trial: usize,
    pub transition: Vec<Vec<f64>>,
    pub primal_max: f64,
    pub dual_max: f64,
    pub gap: f64,
    /// Smallest `E_{CK,0}(ρ,Q) − E_{G,0}(ρ,Q)` over the spot-check laws.
    pub pointwise_min_slack: f64,
}

/// Outcome of [`verify_lagrange_duality`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub rho: f64,
    pub seed: u64,
    pub inputs: usize,
    pub outputs: usize,
    pub trials: Vec<DualityTrial>,
    pub max_gap: f64,
    pub worst_pointwise_slack: f64,
}

impl DualityReport {
    /// True when every primal/dual gap is within `tol` and no pointwise
    /// comparison falls below `-pointwise_tol`.
    pub fn passes(&self, tol: f64, pointwise_tol: f64) -> bool {
        self.max_gap <= tol && self.worst_pointwise_slack >= -pointwise_tol
    }
}

/// Spot-check laws per channel for the pointwise inequality.
pub const POINTWISE_CHECKS: usize = 8;

/// Compares `max_Q E_{G,0}` with `max_Q E_{CK,0}` on a single channel and
/// checks `E_{CK,0}(ρ,Q) ≥ E_{G,0}(ρ,Q)` on random laws drawn from `rng`.
pub fn duality_trial<R: rand::Rng + ?Sized>(
    trial: usize,
    w: &Dmc<f64>,
    rho: f64,
    rng: &mut R,
) -> Result<DualityTrial, DmcError> {
    let opts = OptimizeOptions::default();
    let primal = optimize_e0_with(rho, w, None, &opts)?;
    let dual = maximize_eck0(rho, w, &opts)?;
    let mut slack = f64::INFINITY;
    for _ in 0..POINTWISE_CHECKS {
        let q = ProbVec::random(w.num_inputs(), rng);
        let ck = eck0_dual_with(rho, &q, w, None, &DualOptions::default())?;
        slack = slack.min(ck.value - eg0(rho, &q, w)?);
    }
    Ok(DualityTrial {
        trial,
        transition: (0..w.num_inputs()).map(|x| w.row(x).to_vec()).collect(),
        primal_max: primal.value,
        dual_max: dual.value,
        gap: (primal.value - dual.value).abs(),
        pointwise_min_slack: slack,
    })
}

/// Runs [`duality_trial`] on `trials` random `inputs × outputs` channels
/// drawn from a ChaCha8 stream seeded with `seed`.
pub fn verify_lagrange_duality(
    inputs: usize,
    outputs: usize,
    rho: f64,
    trials: usize,
    seed: u64,
) -> Result<DualityReport, DmcError> {
    if trials == 0 {
        return Err(DmcError::NoTrials);
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(DmcError::BadRho(rho));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for trial in 0..trials {
        let w = Dmc::random(inputs, outputs, &mut rng);
        out.push(duality_trial(trial, &w, rho, &mut rng)?);
    }
    let max_gap = out.iter().map(|t| t.gap).fold(0.0, f64::max);
    let worst = out.iter().map(|t| t.pointwise_min_slack).fold(f64::INFINITY, f64::min);
    Ok(DualityReport {
        rho,
        seed,
        inputs,
        outputs,
        trials: out,
        max_gap,
        worst_pointwise_slack: worst,
    })
}
