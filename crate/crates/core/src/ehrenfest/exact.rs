//! Exact computations on small instances: enumeration of the simplex,
//! stationary solves, detailed balance and distance to stationarity.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::{stationary_closed, transition_row, CountVector, EhrenfestParams, MultinomialDist};
use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: usize = 1_000_000;

const POWER_RESIDUAL: f64 = 1e-14;
const POWER_MAX_ITERS: usize = 1_000_000;
const DENSE_FALLBACK_LIMIT: usize = 3_000;

/// `C(m + k - 1, k - 1)`, saturating at `u128::MAX`.
pub fn state_count(k: usize, m: u32) -> u128 {
    let n = u128::from(m) + k as u128 - 1;
    let r = (k as u128 - 1).min(u128::from(m));
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All count vectors with `k` urns and `m` balls, first coordinate
/// descending, then recursively the rest.
pub fn enumerate_states(k: usize, m: u32, cap: usize) -> Result<Vec<CountVector>> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let count = state_count(k, m);
    if count > cap as u128 {
        return Err(Error::CapExceeded { states: count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0u32; k];
    fill(&mut current, 0, m, &mut out);
    Ok(out)
}

fn fill(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<CountVector>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(CountVector(current.to_vec()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill(current, pos + 1, remaining - v, out);
    }
}

/// Which initial point masses the worst-case distance maximises over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialStates {
    /// All balls in urn 1, or all in urn k.
    Corners,
    /// Every state of the simplex (small instances only).
    All,
}

/// The walk's kernel materialised as sparse rows over an enumerated
/// state space.
#[derive(Debug, Clone)]
pub struct ExactChain {
    params: EhrenfestParams,
    states: Vec<CountVector>,
    index: HashMap<CountVector, usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ExactChain {
    pub fn new(params: EhrenfestParams) -> Result<Self> {
        Self::with_cap(params, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(params: EhrenfestParams, cap: usize) -> Result<Self> {
        let states = enumerate_states(params.k, params.m, cap)?;
        let index: HashMap<CountVector, usize> =
            states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let rows = states
            .iter()
            .map(|x| {
                transition_row(x, &params)
                    .into_iter()
                    .map(|(y, p)| (index[&y], p))
                    .collect()
            })
            .collect();
        Ok(Self {
            params,
            states,
            index,
            rows,
        })
    }

    pub fn params(&self) -> &EhrenfestParams {
        &self.params
    }

    pub fn states(&self) -> &[CountVector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, x: &CountVector) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Sparse row `i` of the kernel.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Closed-form stationary PMF evaluated on the enumerated states.
    pub fn closed_form_pmf(&self) -> Vec<f64> {
        self.pmf_of(&stationary_closed(&self.params))
    }

    pub fn pmf_of(&self, dist: &MultinomialDist) -> Vec<f64> {
        self.states.iter().map(|x| dist.pmf(x)).collect()
    }

    /// `mu P`.
    pub fn evolve(&self, mu: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; mu.len()];
        for (i, &w) in mu.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(j, p) in &self.rows[i] {
                next[j] += w * p;
            }
        }
        next
    }

    /// Stationary distribution from `pi P = pi`: power iteration to an L1
    /// residual of `1e-14`, falling back to a dense solve.
    pub fn stationary_exact(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut pi = vec![1.0 / n as f64; n];
        let mut residual = f64::INFINITY;
        for _ in 0..POWER_MAX_ITERS {
            let next = self.evolve(&pi);
            residual = l1(&next, &pi);
            pi = next;
            if residual <= POWER_RESIDUAL {
                return Ok(normalized(pi));
            }
            if !residual.is_finite() {
                break;
            }
        }
        if n <= DENSE_FALLBACK_LIMIT {
            return self.stationary_dense();
        }
        Err(Error::NonConvergence { residual })
    }

    /// Solves `(P^T - I) pi = 0` with the last equation replaced by
    /// `sum pi = 1`.
    pub fn stationary_dense(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                a[(j, i)] += p;
            }
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = DVector::<f64>::zeros(n);
        rhs[n - 1] = 1.0;
        let pi = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular("stationary system is singular".into()))?;
        let pi: Vec<f64> = pi.iter().copied().collect();
        let residual = l1(&self.evolve(&pi), &pi);
        if residual > 1e-10 {
            return Err(Error::NonConvergence { residual });
        }
        Ok(pi)
    }

    /// `max |mu(x) P(x, y) - mu(y) P(y, x)|` over neighbouring pairs.
    pub fn detailed_balance_residual_of(&self, mu: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p_ij) in row {
                if j <= i {
                    continue;
                }
                let p_ji = self.rows[j]
                    .iter()
                    .find(|(t, _)| *t == i)
                    .map_or(0.0, |&(_, p)| p);
                worst = worst.max((mu[i] * p_ij - mu[j] * p_ji).abs());
            }
        }
        worst
    }

    /// Total variation distance between `mu` and `nu`.
    pub fn tv(mu: &[f64], nu: &[f64]) -> f64 {
        0.5 * l1(mu, nu)
    }

    /// `||P^t(x0) - pi||_TV` for `t = 0..=t_max`.
    pub fn tv_curve(&self, x0: &CountVector, t_max: u64) -> Result<Vec<f64>> {
        let start = self
            .index_of(x0)
            .ok_or_else(|| Error::invalid(format!("{x0} is not a state of this chain")))?;
        let pi = self.closed_form_pmf();
        let mut mu = vec![0.0; self.len()];
        mu[start] = 1.0;
        let mut curve = Vec::with_capacity(t_max as usize + 1);
        curve.push(Self::tv(&mu, &pi));
        for _ in 0..t_max {
            mu = self.evolve(&mu);
            curve.push(Self::tv(&mu, &pi));
        }
        Ok(curve)
    }

    fn initial_states(&self, which: InitialStates) -> Vec<CountVector> {
        match which {
            InitialStates::Corners => vec![
                CountVector::concentrated(self.params.k, self.params.m, 0),
                CountVector::concentrated(self.params.k, self.params.m, self.params.k - 1),
            ],
            InitialStates::All => self.states.clone(),
        }
    }

    /// `d(t)` for `t = 0..=t_max`, maximised over the chosen initial states.
    pub fn worst_case_curve(&self, which: InitialStates, t_max: u64) -> Result<Vec<f64>> {
        let mut worst = vec![0.0_f64; t_max as usize + 1];
        for x0 in self.initial_states(which) {
            for (w, d) in worst.iter_mut().zip(self.tv_curve(&x0, t_max)?) {
                *w = w.max(d);
            }
        }
        Ok(worst)
    }

    /// First `t` with `d(t) <= threshold`, searching up to `t_limit`.
    pub fn mixing_time(&self, which: InitialStates, threshold: f64, t_limit: u64) -> Result<u64> {
        let pi = self.closed_form_pmf();
        let starts: Vec<usize> = self
            .initial_states(which)
            .iter()
            .map(|x| self.index[x])
            .collect();
        let mut dists: Vec<Vec<f64>> = starts
            .iter()
            .map(|&s| {
                let mut mu = vec![0.0; self.len()];
                mu[s] = 1.0;
                mu
            })
            .collect();
        for t in 0..=t_limit {
            let d = dists.iter().map(|mu| Self::tv(mu, &pi)).fold(0.0, f64::max);
            if d <= threshold {
                return Ok(t);
            }
            for mu in dists.iter_mut() {
                *mu = self.evolve(mu);
            }
        }
        Err(Error::Timeout {
            limit: t_limit,
            what: "distance to stationarity dropped below the threshold",
        })
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

/// Stationary PMF from the linear system, paired with the states.
pub fn solve_stationary_exact(params: &EhrenfestParams) -> Result<Vec<(CountVector, f64)>> {
    let chain = ExactChain::new(*params)?;
    let pi = chain.stationary_exact()?;
    Ok(chain.states.into_iter().zip(pi).collect())
}

/// Detailed-balance residual of the closed-form stationary law.
pub fn detailed_balance_residual(params: &EhrenfestParams) -> Result<f64> {
    let chain = ExactChain::new(*params)?;
    Ok(chain.detailed_balance_residual_of(&chain.closed_form_pmf()))
}

/// `||P^t(x0) - pi||_TV` by exact evolution.
pub fn tv_distance_exact(params: &EhrenfestParams, t: u64, x0: &CountVector) -> Result<f64> {
    x0.check(params)?;
    let chain = ExactChain::new(*params)?;
    Ok(*chain.tv_curve(x0, t)?.last().expect("curve has t + 1 entries"))
}
