//! Shared-randomness coupling of two label walks, the gambler's-ruin walk
//! that bounds its coordinate coalescence, and the mixing estimates built on
//! top of them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EhrenfestParams;
use crate::error::{Error, Result};
use crate::rng::stream;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000_000;

/// Two label vectors in `{1..k}^m` driven by the same coordinate and the
/// same up/down coin at every step.
#[derive(Debug, Clone)]
pub struct CouplingRun {
    params: EhrenfestParams,
    x: Vec<u32>,
    y: Vec<u32>,
    disagreeing: usize,
    t: u64,
}

impl CouplingRun {
    pub fn new(params: EhrenfestParams, x0: Vec<u32>, y0: Vec<u32>) -> Result<Self> {
        let m = params.m as usize;
        let k = params.k as u32;
        for v in [&x0, &y0] {
            if v.len() != m || v.iter().any(|&l| l < 1 || l > k) {
                return Err(Error::invalid(format!(
                    "label vectors must have length {m} with entries in 1..={k}"
                )));
            }
        }
        let disagreeing = x0.iter().zip(&y0).filter(|(a, b)| a != b).count();
        Ok(Self {
            params,
            x: x0,
            y: y0,
            disagreeing,
            t: 0,
        })
    }

    /// All labels 1 against all labels k.
    pub fn from_corners(params: EhrenfestParams) -> Self {
        let m = params.m as usize;
        Self::new(params, vec![1; m], vec![params.k as u32; m]).expect("corner labels are valid")
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn coupled(&self) -> bool {
        self.disagreeing == 0
    }

    pub fn labels(&self) -> (&[u32], &[u32]) {
        (&self.x, &self.y)
    }

    /// Advances one step and returns the coordinate that was touched.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.x.len());
        let u: f64 = rng.random();
        let k = self.params.k as u32;
        let (xi, yi) = (self.x[i], self.y[i]);
        let (nx, ny) = if u < self.params.a {
            ((xi + 1).min(k), (yi + 1).min(k))
        } else if u < self.params.a + self.params.b {
            ((xi - 1).max(1), (yi - 1).max(1))
        } else {
            (xi, yi)
        };
        debug_assert!(nx.abs_diff(ny) <= xi.abs_diff(yi), "coordinate distance grew");
        if xi != yi && nx == ny {
            self.disagreeing -= 1;
        }
        self.x[i] = nx;
        self.y[i] = ny;
        self.t += 1;
        i
    }

    /// Runs until the two label vectors agree.
    pub fn run_to_coupling<R: Rng + ?Sized>(&mut self, rng: &mut R, step_limit: u64) -> Result<u64> {
        while !self.coupled() {
            if self.t >= step_limit {
                return Err(Error::Timeout {
                    limit: step_limit,
                    what: "the coupled walks met",
                });
            }
            self.step(rng);
        }
        Ok(self.t)
    }
}

/// Coupling time of the label walks started at `x0` and `y0`.
pub fn coupled_run<R: Rng + ?Sized>(
    params: &EhrenfestParams,
    x0: Vec<u32>,
    y0: Vec<u32>,
    rng: &mut R,
    step_limit: u64,
) -> Result<u64> {
    CouplingRun::new(*params, x0, y0)?.run_to_coupling(rng, step_limit)
}

/// First time a walk on `{-k..k}` started at 0, stepping +1 w.p. `a` and
/// -1 w.p. `b`, reaches `-k` or `k`.
pub fn absorption_walk<R: Rng + ?Sized>(k: u32, a: f64, b: f64, rng: &mut R, step_limit: u64) -> Result<u64> {
    check_walk(k, a, b)?;
    let k = i64::from(k);
    let mut z: i64 = 0;
    let mut t = 0;
    while z.abs() < k {
        if t >= step_limit {
            return Err(Error::Timeout {
                limit: step_limit,
                what: "the walk was absorbed",
            });
        }
        let u: f64 = rng.random();
        if u < a {
            z += 1;
        } else if u < a + b {
            z -= 1;
        }
        t += 1;
    }
    Ok(t)
}

fn check_walk(k: u32, a: f64, b: f64) -> Result<()> {
    if k < 1 {
        return Err(Error::invalid("absorption boundary k must be at least 1"));
    }
    if !(a > 0.0 && b > 0.0 && a + b <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("need a, b > 0 and a + b <= 1 (got a={a}, b={b})")));
    }
    Ok(())
}

/// Expected absorption time of [`absorption_walk`].
///
/// For `a != b` this is `k/(a-b) * (2(l^k - 1)/(l^k - l^-k) - 1)` with
/// `l = a/b`, evaluated in the equivalent form `k/(a-b) * tanh(k ln(l) / 2)`.
/// For `a == b` the `Z^2 - (a+b)t` martingale gives `k^2 / (a + b)`, which is
/// `k^2` for the non-lazy walk `a = b = 1/2`.
pub fn expected_absorption_closed(k: u32, a: f64, b: f64) -> Result<f64> {
    check_walk(k, a, b)?;
    let k = f64::from(k);
    if a == b {
        return Ok(k * k / (a + b));
    }
    let ln_lambda = ((a - b) / b).ln_1p();
    Ok(k / (a - b) * (0.5 * k * ln_lambda).tanh())
}

/// `2 Phi log2(4m)` with `Phi = min(k/|a-b|, k^2) m` (or `k^2 m` when
/// `a = b`): the time after which the coupling has met with probability at
/// least 3/4, so `d(t) <= 1/4`.
pub fn mixing_bound(params: &EhrenfestParams) -> f64 {
    let k = params.k as f64;
    let m = f64::from(params.m);
    let per_coordinate = if params.a == params.b {
        k * k
    } else {
        (k / (params.a - params.b).abs()).min(k * k)
    };
    2.0 * per_coordinate * m * (4.0 * m).log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MixingMethod {
    ExactTv,
    CouplingTail,
}

/// A mixing time estimate and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub t_hat: u64,
    pub method: MixingMethod,
    pub epsilon: f64,
    pub trials: u32,
}

/// Empirical `(1 - epsilon)`-quantile of the coupling time from the two
/// corner label vectors.
///
/// Every other pair of starts is sandwiched between the corners, so the
/// quantile upper-bounds the time at which `d(t) <= epsilon` (up to sampling
/// error). Trial `i` draws from stream `("coupling", i)` of `seed`, so the
/// result does not depend on scheduling.
pub fn estimate_mixing(
    params: &EhrenfestParams,
    epsilon: f64,
    trials: u32,
    seed: u64,
    step_limit: u64,
) -> Result<MixingEstimate> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let mut times = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, "coupling", u64::from(i));
            CouplingRun::from_corners(*params).run_to_coupling(&mut rng, step_limit)
        })
        .collect::<Result<Vec<u64>>>()?;
    times.sort_unstable();
    let rank = ((1.0 - epsilon) * f64::from(trials)).ceil() as usize;
    let t_hat = times[rank.clamp(1, times.len()) - 1];
    Ok(MixingEstimate {
        t_hat,
        method: MixingMethod::CouplingTail,
        epsilon,
        trials,
    })
}
