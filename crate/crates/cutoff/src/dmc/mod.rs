//! Discrete memoryless channels: Gallager's `E₀` in primal and dual form,
//! with and without an input cost constraint.

mod exponent;
mod optimize;

pub use exponent::*;
pub use optimize::*;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DmcError {
    #[error("channel has no inputs or no outputs")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("row {row} has a negative or non-finite entry {value} at column {col}")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },
    #[error("probability vector sums to {sum}")]
    NotNormalized { sum: f64 },
    #[error("probability vector has a negative or non-finite entry {value} at index {index}")]
    BadWeight { index: usize, value: f64 },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("cost of input {index} is {value}; costs must be finite and non-negative")]
    BadCost { index: usize, value: f64 },
    #[error("budget {0} must be finite and non-negative")]
    BadBudget(f64),
    #[error("input law has mean cost {mean} above the budget {budget}")]
    CostViolated { mean: f64, budget: f64 },
    #[error("no input law meets the budget {budget}: cheapest input costs {min_cost}")]
    Infeasible { budget: f64, min_cost: f64 },
    #[error("rho = {0} is outside the allowed range")]
    BadRho(f64),
    #[error("rate {0} is outside the allowed range")]
    BadRate(f64),
    #[error("alphabet product {size} exceeds the oracle cap of 64")]
    TooLarge { size: usize },
    #[error("{what} did not converge after {iterations} iterations (best value {best}, gap {gap})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        best: f64,
        gap: f64,
    },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("channel file gives {present} without {missing}")]
    Incomplete {
        present: &'static str,
        missing: &'static str,
    },
}

fn stochastic_tol<T: Real>() -> T {
    T::c(1e-12).max(T::epsilon() * T::c(16.0))
}

fn check_row<T: Real>(row: usize, v: &[T]) -> Result<(), DmcError> {
    for (col, &p) in v.iter().enumerate() {
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(DmcError::BadEntry {
                row,
                col,
                value: p.as_f64(),
            });
        }
    }
    let sum = v.iter().fold(T::zero(), |a, &b| a + b);
    if (sum - T::one()).abs() > stochastic_tol::<T>() {
        return Err(DmcError::NotStochastic {
            row,
            sum: sum.as_f64(),
        });
    }
    Ok(())
}

fn random_simplex<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<T> {
    // Normalized exponentials give the uniform law on the simplex.
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|&v| T::c(v / s)).collect()
}

/// A probability vector over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVec<T: Real>(Vec<T>);

impl<T: Real> ProbVec<T> {
    pub fn new(weights: Vec<T>) -> Result<Self, DmcError> {
        if weights.is_empty() {
            return Err(DmcError::Empty);
        }
        for (index, &p) in weights.iter().enumerate() {
            if !(p >= T::zero()) || !p.is_finite() {
                return Err(DmcError::BadWeight {
                    index,
                    value: p.as_f64(),
                });
            }
        }
        let sum = weights.iter().fold(T::zero(), |a, &b| a + b);
        if (sum - T::one()).abs() > stochastic_tol::<T>() {
            return Err(DmcError::NotNormalized { sum: sum.as_f64() });
        }
        Ok(ProbVec(weights))
    }

    /// Rescales non-negative weights to sum to one.
    pub fn normalized(weights: Vec<T>) -> Result<Self, DmcError> {
        let sum = weights.iter().fold(T::zero(), |a, &b| a + b);
        if !(sum > T::zero()) || !sum.is_finite() {
            return Err(DmcError::NotNormalized { sum: sum.as_f64() });
        }
        ProbVec::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "empty alphabet");
        ProbVec(vec![T::one() / T::from_count(n); n])
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        let mut v = vec![T::zero(); n];
        v[at] = T::one();
        ProbVec(v)
    }

    /// Uniformly distributed on the simplex.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        ProbVec(random_simplex(n, rng))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// `E_Q[f]`.
    pub fn expect(&self, f: &[T]) -> T {
        self.0.iter().zip(f).fold(T::zero(), |a, (&p, &v)| if p > T::zero() { a + p * v } else { a })
    }
}

impl<T: Real> std::ops::Index<usize> for ProbVec<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for ProbVec<f64> {
    type Error = DmcError;
    fn try_from(v: Vec<f64>) -> Result<Self, DmcError> {
        ProbVec::new(v)
    }
}

impl From<ProbVec<f64>> for Vec<f64> {
    fn from(p: ProbVec<f64>) -> Self {
        p.0
    }
}

/// A row-stochastic `N × M` matrix of transition probabilities `W(y|x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dmc<T: Real> {
    inputs: usize,
    outputs: usize,
    w: Vec<T>,
}

impl<T: Real> Dmc<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, DmcError> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        if inputs == 0 || outputs == 0 {
            return Err(DmcError::Empty);
        }
        let mut w = Vec::with_capacity(inputs * outputs);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != outputs {
                return Err(DmcError::Ragged {
                    row,
                    found: r.len(),
                    expected: outputs,
                });
            }
            check_row(row, r)?;
            w.extend_from_slice(r);
        }
        Ok(Dmc { inputs, outputs, w })
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: T) -> Result<Self, DmcError> {
        Dmc::new(vec![vec![T::one() - p, p], vec![p, T::one() - p]])
    }

    /// The `n`-ary identity channel.
    pub fn noiseless(n: usize) -> Self {
        let mut w = vec![T::zero(); n * n];
        for i in 0..n {
            w[i * n + i] = T::one();
        }
        Dmc {
            inputs: n,
            outputs: n,
            w,
        }
    }

    /// Rows drawn uniformly from the simplex.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let w = (0..inputs).flat_map(|_| random_simplex::<T, R>(outputs, rng)).collect();
        Dmc { inputs, outputs, w }
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.w[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.w[x * self.outputs + y]
    }

    fn check_input_law(&self, q: &ProbVec<T>) -> Result<(), DmcError> {
        if q.len() != self.inputs {
            return Err(DmcError::DimensionMismatch {
                what: "input law",
                expected: self.inputs,
                found: q.len(),
            });
        }
        Ok(())
    }

    fn check_output_law(&self, r: &ProbVec<T>) -> Result<(), DmcError> {
        if r.len() != self.outputs {
            return Err(DmcError::DimensionMismatch {
                what: "output law",
                expected: self.outputs,
                found: r.len(),
            });
        }
        Ok(())
    }
}

/// Per-input cost `g(x) ≥ 0` with budget `Υ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CostSpec<T: Real> {
    cost: Vec<T>,
    budget: T,
}

impl<T: Real> CostSpec<T> {
    pub fn new(cost: Vec<T>, budget: T) -> Result<Self, DmcError> {
        for (index, &g) in cost.iter().enumerate() {
            if !(g >= T::zero()) || !g.is_finite() {
                return Err(DmcError::BadCost {
                    index,
                    value: g.as_f64(),
                });
            }
        }
        if !(budget >= T::zero()) || !budget.is_finite() {
            return Err(DmcError::BadBudget(budget.as_f64()));
        }
        Ok(CostSpec { cost, budget })
    }

    pub fn cost(&self) -> &[T] {
        &self.cost
    }

    pub fn budget(&self) -> T {
        self.budget
    }

    /// `E_Q[g(X)]`.
    pub fn mean_cost(&self, q: &ProbVec<T>) -> T {
        q.expect(&self.cost)
    }

    fn check_against(&self, w: &Dmc<T>) -> Result<(), DmcError> {
        if self.cost.len() != w.num_inputs() {
            return Err(DmcError::DimensionMismatch {
                what: "cost vector",
                expected: w.num_inputs(),
                found: self.cost.len(),
            });
        }
        Ok(())
    }
}

/// A row-stochastic matrix `V(y|x)` used as the free variable of the
/// primal form of the dual exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalLaw<T: Real> {
    inputs: usize,
    outputs: usize,
    v: Vec<T>,
}

impl<T: Real> ConditionalLaw<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, DmcError> {
        let d = Dmc::new(rows)?;
        Ok(ConditionalLaw {
            inputs: d.inputs,
            outputs: d.outputs,
            v: d.w,
        })
    }

    pub fn from_channel(w: &Dmc<T>) -> Self {
        ConditionalLaw {
            inputs: w.inputs,
            outputs: w.outputs,
            v: w.w.clone(),
        }
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.v[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs
    }
}

/// On-disk channel description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub transition: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

impl ChannelFile {
    /// Validates the file and splits it into a channel and optional cost.
    /// A cost vector without a budget (or the reverse) is rejected.
    pub fn into_parts(self) -> Result<(Dmc<f64>, Option<CostSpec<f64>>), DmcError> {
        let w = Dmc::new(self.transition)?;
        let cost = match (self.cost, self.budget) {
            (None, None) => None,
            (Some(g), Some(b)) => {
                let c = CostSpec::new(g, b)?;
                c.check_against(&w)?;
                Some(c)
            }
            (Some(_), None) => {
                return Err(DmcError::Incomplete {
                    present: "cost",
                    missing: "budget",
                })
            }
            (None, Some(_)) => {
                return Err(DmcError::Incomplete {
                    present: "budget",
                    missing: "cost",
                })
            }
        };
        Ok((w, cost))
    }
}
