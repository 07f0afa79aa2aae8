//! The `(k, a, b, m)` weighted Ehrenfest walk on count vectors.
//!
//! `m` balls sit in `k` ordered urns. Each step picks a ball uniformly; with
//! probability `a` it moves one urn up, with probability `b` one urn down,
//! and otherwise (or when the move would leave `1..=k`) nothing happens.

mod coupling;
mod exact;

pub use coupling::{
    absorption_walk, coupled_run, estimate_mixing, expected_absorption_closed, mixing_bound,
    CouplingRun, MixingEstimate, MixingMethod, DEFAULT_STEP_LIMIT,
};
pub use exact::{
    detailed_balance_residual, enumerate_states, solve_stationary_exact, state_count,
    tv_distance_exact, ExactChain, InitialStates, DEFAULT_STATE_CAP,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestParams {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub m: u32,
}

impl EhrenfestParams {
    pub fn new(k: usize, a: f64, b: f64, m: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid(format!("need at least two urns, got k={k}")));
        }
        if m < 1 {
            return Err(Error::invalid("need at least one ball"));
        }
        if !(a > 0.0 && b > 0.0 && a + b <= 1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "need a, b > 0 and a + b <= 1 (got a={a}, b={b})"
            )));
        }
        Ok(Self { k, a, b, m })
    }

    /// `a / b`.
    pub fn lambda(&self) -> f64 {
        self.a / self.b
    }
}

/// Number of balls in each urn.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountVector(pub Vec<u32>);

impl CountVector {
    pub fn new(counts: Vec<u32>) -> Self {
        CountVector(counts)
    }

    /// All balls in urn `urn` (0-based).
    pub fn concentrated(k: usize, m: u32, urn: usize) -> Self {
        let mut c = vec![0; k];
        c[urn] = m;
        CountVector(c)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Checks membership in the simplex of `params`.
    pub fn check(&self, params: &EhrenfestParams) -> Result<()> {
        if self.k() != params.k || self.total() != params.m {
            return Err(Error::invalid(format!(
                "count vector {:?} is not in the simplex with k={} and m={}",
                self.0, params.k, params.m
            )));
        }
        Ok(())
    }

    fn moved(&self, from: usize, to: usize) -> Self {
        let mut c = self.0.clone();
        c[from] -= 1;
        c[to] += 1;
        CountVector(c)
    }
}

impl std::fmt::Display for CountVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Multinomial law with `m` trials over `k` categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialDist {
    pub m: u32,
    pub p: Vec<f64>,
}

impl MultinomialDist {
    pub fn new(m: u32, p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(Error::invalid("probabilities must be non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { m, p })
    }

    pub fn pmf(&self, x: &CountVector) -> f64 {
        if x.k() != self.p.len() || x.total() != self.m {
            return 0.0;
        }
        let mut log = ln_factorial(self.m);
        for (&xj, &pj) in x.0.iter().zip(&self.p) {
            if xj == 0 {
                continue;
            }
            if pj == 0.0 {
                return 0.0;
            }
            log += f64::from(xj) * pj.ln() - ln_factorial(xj);
        }
        log.exp()
    }

    /// `E[x_j] = m p_j`.
    pub fn mean(&self) -> Vec<f64> {
        self.p.iter().map(|p| f64::from(self.m) * p).collect()
    }

    /// Draws one count vector by dropping `m` labelled balls independently.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CountVector {
        let mut counts = vec![0u32; self.p.len()];
        for _ in 0..self.m {
            counts[sample_categorical(&self.p, rng)] += 1;
        }
        CountVector(counts)
    }
}

pub(crate) fn sample_categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, pj) in p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| f64::from(i).ln()).sum()
}

/// Stationary law: multinomial with `p_j` proportional to `lambda^(j-1)`.
pub fn stationary_closed(params: &EhrenfestParams) -> MultinomialDist {
    MultinomialDist {
        m: params.m,
        p: geometric_weights(params.k, params.lambda()),
    }
}

/// `lambda^(j-1) / sum_i lambda^(i-1)` for `j = 1..=k`, computed in log space.
pub fn geometric_weights(k: usize, lambda: f64) -> Vec<f64> {
    let ln_l = lambda.ln();
    let top = if ln_l > 0.0 { (k - 1) as f64 * ln_l } else { 0.0 };
    let w: Vec<f64> = (0..k).map(|j| (j as f64 * ln_l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// The non-zero entries of the kernel row at `x`, self-loop first.
pub fn transition_row(x: &CountVector, params: &EhrenfestParams) -> Vec<(CountVector, f64)> {
    let m = f64::from(params.m);
    let mut moves = Vec::with_capacity(2 * params.k - 1);
    let mut moving = 0.0;
    for j in 0..params.k - 1 {
        let up = params.a * f64::from(x.0[j]) / m;
        if up > 0.0 {
            moves.push((x.moved(j, j + 1), up));
            moving += up;
        }
        let down = params.b * f64::from(x.0[j + 1]) / m;
        if down > 0.0 {
            moves.push((x.moved(j + 1, j), down));
            moving += down;
        }
    }
    let stay = (1.0 - moving).max(0.0);
    if stay > 0.0 {
        moves.insert(0, (x.clone(), stay));
    }
    moves
}

/// One step of the walk, in place.
pub fn step_in_place<R: Rng + ?Sized>(x: &mut [u32], params: &EhrenfestParams, rng: &mut R) {
    let ball = rng.random_range(0..params.m);
    let mut seen = 0;
    let mut urn = 0;
    for (j, &c) in x.iter().enumerate() {
        seen += c;
        if ball < seen {
            urn = j;
            break;
        }
    }
    let u: f64 = rng.random();
    if u < params.a {
        if urn + 1 < params.k {
            x[urn] -= 1;
            x[urn + 1] += 1;
        }
    } else if u < params.a + params.b && urn > 0 {
        x[urn] -= 1;
        x[urn - 1] += 1;
    }
    debug_assert_eq!(x.iter().sum::<u32>(), params.m);
}

/// One step of the walk from `x`.
pub fn step<R: Rng + ?Sized>(x: &CountVector, params: &EhrenfestParams, rng: &mut R) -> CountVector {
    let mut next = x.clone();
    step_in_place(&mut next.0, params, rng);
    next
}
