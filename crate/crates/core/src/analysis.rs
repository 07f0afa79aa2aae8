//! Mean-field payoff analysis of the k-IGT stationary state.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ehrenfest::{enumerate_states, geometric_weights, MultinomialDist, DEFAULT_STATE_CAP};
use crate::error::{Error, Result};
use crate::game::{expected_payoff_closed, GameConfig, RewardVector, Strategy};
use crate::population::grid;
use crate::rng::stream;

fn check_beta_open(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    Ok(())
}

fn check_fractions(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta <= 1.0) {
        return Err(Error::invalid(format!(
            "need alpha, beta >= 0 and alpha + beta <= 1 (got alpha={alpha}, beta={beta})"
        )));
    }
    Ok(())
}

/// Mean generosity of a GTFT node under the stationary law, for
/// `lambda = (1 - beta) / beta`.
pub fn avg_stationary_generosity(k: usize, beta: f64, g_hat: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("need k >= 2, got {k}")));
    }
    check_beta_open(beta)?;
    if beta == 0.5 {
        return Ok(g_hat / 2.0);
    }
    let l = (1.0 - beta) / beta;
    let lk = l.powi(k as i32);
    let lk1 = l.powi(k as i32 - 1);
    let value = lk / (lk - 1.0)
        - 1.0 / (k - 1) as f64 * (l / (l - 1.0)) * ((lk1 - 1.0) / (lk - 1.0));
    Ok(g_hat * value)
}

/// `sum_j g_j p_j` for an explicit weight vector on the grid.
pub fn avg_generosity_of(p: &[f64], g_hat: f64) -> f64 {
    grid(p.len(), g_hat).iter().zip(p).map(|(g, p)| g * p).sum()
}

/// `F(g) = alpha f_g(AllC) + beta f_g(AllD) + (1 - alpha - beta) f_g(Gtft(g))`.
pub fn mean_field_payoff(
    g: f64,
    alpha: f64,
    beta: f64,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<f64> {
    check_fractions(alpha, beta)?;
    let me = Strategy::gtft(g)?;
    let f = |opp| expected_payoff_closed(me, opp, cfg, rv);
    let gtft = 1.0 - alpha - beta;
    Ok(alpha * f(Strategy::AllC)? + beta * f(Strategy::AllD)? + gtft * f(Strategy::Gtft(g))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Low,
    Mid,
    High,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Low => "low",
            Regime::Mid => "mid",
            Regime::High => "high",
        })
    }
}

fn donation_setup(cfg: &GameConfig, rv: &RewardVector) -> Result<(f64, f64)> {
    let (b, c) = rv
        .donation_params()
        .ok_or_else(|| Error::invalid("optimal generosity needs a donation-game reward vector"))?;
    if cfg.s1 != 0.5 {
        return Err(Error::invalid(format!(
            "the regime thresholds assume round-1 cooperation 1/2, got s1 = {}",
            cfg.s1
        )));
    }
    if cfg.delta <= 0.0 {
        return Err(Error::invalid("delta must be positive for the optimality analysis"));
    }
    Ok((b, c))
}

/// `phi` at or below this value puts the optimum at `g_hat`.
pub fn phi_low_threshold(cfg: &GameConfig, rv: &RewardVector) -> Result<f64> {
    let (b, c) = donation_setup(cfg, rv)?;
    let d = cfg.delta;
    Ok((b - c) * (1.0 - d) / (2.0 * c * (1.0 - d * (1.0 - cfg.g_hat)).powi(2)))
}

/// `phi` at or above this value puts the optimum at 0.
pub fn phi_high_threshold(cfg: &GameConfig, rv: &RewardVector) -> Result<f64> {
    let (b, c) = donation_setup(cfg, rv)?;
    Ok((b - c) / (2.0 * c * (1.0 - cfg.delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalGenerosity {
    pub g_star: f64,
    pub regime: Regime,
    pub phi: f64,
    /// Interior root of `dF/dg`, before clamping; infinite when `beta = 0`.
    pub g_bar: f64,
}

/// Maximiser of `F` on `[0, g_hat]` for a donation game, classified by
/// `phi = beta n / m`.
pub fn optimal_generosity(
    alpha: f64,
    beta: f64,
    n: u32,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<OptimalGenerosity> {
    check_fractions(alpha, beta)?;
    if alpha + beta >= 1.0 {
        return Err(Error::invalid("population has no GTFT nodes"));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let (b, c) = donation_setup(cfg, rv)?;
    let n = f64::from(n);
    let m = (1.0 - alpha - beta) * n;
    let phi = beta * n / m;
    let d = cfg.delta;
    let g_bar = (m * (1.0 - d) * (b - c) / (2.0 * beta * n * c * d * d)).sqrt() - (1.0 - d) / d;
    let (g_star, regime) = if phi <= phi_low_threshold(cfg, rv)? {
        (cfg.g_hat, Regime::Low)
    } else if phi >= phi_high_threshold(cfg, rv)? {
        (0.0, Regime::High)
    } else {
        (g_bar.clamp(0.0, cfg.g_hat), Regime::Mid)
    };
    Ok(OptimalGenerosity {
        g_star,
        regime,
        phi,
        g_bar,
    })
}

/// `beta / ((1 - 2 beta)(k - 1))`.
pub fn gap_bound(k: usize, beta: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::invalid(format!("need k >= 2, got {k}")));
    }
    if !(0.0..0.5).contains(&beta) {
        return Err(Error::invalid(format!(
            "the gap bound needs 0 <= beta < 1/2, got {beta}"
        )));
    }
    Ok(beta / ((1.0 - 2.0 * beta) * (k - 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerosityReport {
    pub k: usize,
    pub avg_stationary_generosity: f64,
    pub lambda: f64,
    pub g_star: f64,
    pub gap: f64,
    /// `None` when `beta >= 1/2`.
    pub gap_bound: Option<f64>,
    pub phi: f64,
    pub regime: Regime,
}

pub fn generosity_report(
    alpha: f64,
    beta: f64,
    n: u32,
    k: usize,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<GenerosityReport> {
    let w = avg_stationary_generosity(k, beta, cfg.g_hat)?;
    let opt = optimal_generosity(alpha, beta, n, cfg, rv)?;
    Ok(GenerosityReport {
        k,
        avg_stationary_generosity: w,
        lambda: (1.0 - beta) / beta,
        g_star: opt.g_star,
        gap: (opt.g_star - w).abs(),
        gap_bound: gap_bound(k, beta).ok(),
        phi: opt.phi,
        regime: opt.regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotonicityKind {
    /// `f(g; Gtft(g''))` must increase in `g`.
    AgainstGtft,
    /// `f(g; AllC)` must not depend on `g`.
    AgainstAllC,
    /// `f(g; AllD)` must decrease in `g`.
    AgainstAllD,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub kind: MonotonicityKind,
    pub g: f64,
    pub g_prime: f64,
    pub g_opp: Option<f64>,
    pub f_g: f64,
    pub f_g_prime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalOptimalityReport {
    /// Unmet preconditions; the grid check is skipped when non-empty.
    pub failed_preconditions: Vec<String>,
    pub checked: bool,
    pub comparisons: usize,
    pub violations: Vec<MonotonicityViolation>,
}

/// Checks, on a `grid_size`-point grid of `[0, g_hat]`, that a GTFT player
/// gains from more generosity against GTFT, is indifferent against AllC and
/// loses against AllD, provided `R + P <= T + S`,
/// `delta > (T - R)/(R - S)` and `g_hat < 1 - (T - R)/(delta (R - S))`.
pub fn check_local_optimality(
    cfg: &GameConfig,
    rv: &RewardVector,
    grid_size: usize,
) -> Result<LocalOptimalityReport> {
    if grid_size < 2 {
        return Err(Error::invalid("grid needs at least two points"));
    }
    let RewardVector { r, s, t, p } = *rv;
    let d = cfg.delta;
    let mut failed = Vec::new();
    if r + p > t + s {
        failed.push(format!("R + P = {} exceeds T + S = {}", r + p, t + s));
    }
    let ratio = (t - r) / (r - s);
    if d <= ratio {
        failed.push(format!("delta = {d} is not above (T - R)/(R - S) = {ratio}"));
    }
    let cap = 1.0 - (t - r) / (d * (r - s));
    if cfg.g_hat >= cap {
        failed.push(format!(
            "g_hat = {} is not below 1 - (T - R)/(delta (R - S)) = {cap}",
            cfg.g_hat
        ));
    }
    if !failed.is_empty() {
        return Ok(LocalOptimalityReport {
            failed_preconditions: failed,
            checked: false,
            comparisons: 0,
            violations: Vec::new(),
        });
    }
    let gs = grid(grid_size, cfg.g_hat);
    let f = |g: f64, opp| expected_payoff_closed(Strategy::Gtft(g), opp, cfg, rv);
    let mut violations = Vec::new();
    let mut comparisons = 0;
    for (i, &g) in gs.iter().enumerate() {
        for &g2 in &gs[i + 1..] {
            let mut push = |kind, g_opp, a: f64, b: f64| {
                violations.push(MonotonicityViolation {
                    kind,
                    g,
                    g_prime: g2,
                    g_opp,
                    f_g: a,
                    f_g_prime: b,
                })
            };
            for &h in &gs {
                let (a, b) = (f(g, Strategy::Gtft(h))?, f(g2, Strategy::Gtft(h))?);
                if a >= b {
                    push(MonotonicityKind::AgainstGtft, Some(h), a, b);
                }
            }
            let (a, b) = (f(g, Strategy::AllC)?, f(g2, Strategy::AllC)?);
            if a != b {
                push(MonotonicityKind::AgainstAllC, None, a, b);
            }
            let (a, b) = (f(g, Strategy::AllD)?, f(g2, Strategy::AllD)?);
            if a <= b {
                push(MonotonicityKind::AgainstAllD, None, a, b);
            }
            comparisons += gs.len() + 2;
        }
    }
    Ok(LocalOptimalityReport {
        failed_preconditions: Vec::new(),
        checked: true,
        comparisons,
        violations,
    })
}

/// Mean-field against granular payoff for one `(alpha, beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffComparison {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub m: u32,
    pub grid: Vec<f64>,
    /// `F(g_j)` at each grid point.
    pub mean_field_on_grid: Vec<f64>,
    pub stationary_p: Vec<f64>,
    pub avg_generosity: f64,
    /// `F` at the average stationary generosity.
    pub mean_field: f64,
    /// Expected GTFT payoff when every node keeps its own index.
    pub granular: f64,
    pub abs_diff: f64,
}

/// `f_{g_i}` against AllC, AllD and every grid point, for the row index `i`.
struct PayoffTable {
    vs_allc: Vec<f64>,
    vs_alld: Vec<f64>,
    vs_gtft: Vec<Vec<f64>>,
}

impl PayoffTable {
    fn new(gs: &[f64], cfg: &GameConfig, rv: &RewardVector) -> Result<Self> {
        let f = |g: f64, opp| expected_payoff_closed(Strategy::Gtft(g), opp, cfg, rv);
        Ok(Self {
            vs_allc: gs.iter().map(|&g| f(g, Strategy::AllC)).collect::<Result<_>>()?,
            vs_alld: gs.iter().map(|&g| f(g, Strategy::AllD)).collect::<Result<_>>()?,
            vs_gtft: gs
                .iter()
                .map(|&g| gs.iter().map(|&h| f(g, Strategy::Gtft(h))).collect::<Result<_>>())
                .collect::<Result<_>>()?,
        })
    }

    fn pair(&self, alpha: f64, beta: f64, i: usize, j: usize) -> f64 {
        alpha * self.vs_allc[i] + beta * self.vs_alld[i] + (1.0 - alpha - beta) * self.vs_gtft[i][j]
    }
}

fn check_granular(alpha: f64, beta: f64, m: u32, k: usize) -> Result<()> {
    check_fractions(alpha, beta)?;
    if !(beta > 0.0 && alpha + beta < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < beta < 1 - alpha (got alpha={alpha}, beta={beta})"
        )));
    }
    if m < 2 {
        return Err(Error::invalid("need at least two GTFT nodes"));
    }
    if k < 2 {
        return Err(Error::invalid(format!("need k >= 2, got {k}")));
    }
    Ok(())
}

/// `sum_i p_i [alpha f_i(AllC) + beta f_i(AllD) + (1-alpha-beta) sum_j p_j f_i(g_j)]`
/// for explicit index weights `p`.
pub fn granular_payoff_with_weights(
    alpha: f64,
    beta: f64,
    p: &[f64],
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<f64> {
    check_fractions(alpha, beta)?;
    let table = PayoffTable::new(&grid(p.len(), cfg.g_hat), cfg, rv)?;
    let mut total = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        for (j, &pj) in p.iter().enumerate() {
            total += pi * pj * table.pair(alpha, beta, i, j);
        }
    }
    Ok(total)
}

/// Granular and mean-field payoffs under the stationary law of `k`-IGT with
/// `m` GTFT nodes. A random GTFT node's index is categorical(p) and a random
/// second GTFT node's index is independently categorical(p) in expectation,
/// so the value does not depend on `m` beyond validation.
pub fn granular_expected_payoff(
    alpha: f64,
    beta: f64,
    m: u32,
    k: usize,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<PayoffComparison> {
    check_granular(alpha, beta, m, k)?;
    let p = geometric_weights(k, (1.0 - beta) / beta);
    let gs = grid(k, cfg.g_hat);
    let granular = granular_payoff_with_weights(alpha, beta, &p, cfg, rv)?;
    let avg = avg_stationary_generosity(k, beta, cfg.g_hat)?;
    let mean_field = mean_field_payoff(avg, alpha, beta, cfg, rv)?;
    let mean_field_on_grid = gs
        .iter()
        .map(|&g| mean_field_payoff(g, alpha, beta, cfg, rv))
        .collect::<Result<_>>()?;
    Ok(PayoffComparison {
        alpha,
        beta,
        k,
        m,
        grid: gs,
        mean_field_on_grid,
        stationary_p: p,
        avg_generosity: avg,
        mean_field,
        granular,
        abs_diff: (granular - mean_field).abs(),
    })
}

/// The same expectation computed by summing over every count vector with
/// the multinomial weights and distinct-partner probabilities
/// `z_i (z_j - [i = j]) / (m (m - 1))`. Only feasible for small `m` and `k`.
pub fn granular_payoff_enumerated(
    alpha: f64,
    beta: f64,
    m: u32,
    k: usize,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<f64> {
    check_granular(alpha, beta, m, k)?;
    let p = geometric_weights(k, (1.0 - beta) / beta);
    let dist = MultinomialDist::new(m, p)?;
    let table = PayoffTable::new(&grid(k, cfg.g_hat), cfg, rv)?;
    let pairs = f64::from(m) * f64::from(m - 1);
    let mut total = 0.0;
    for z in enumerate_states(k, m, DEFAULT_STATE_CAP)? {
        let w = dist.pmf(&z);
        let zs = z.as_slice();
        let mut inner = 0.0;
        for i in 0..k {
            for j in 0..k {
                let same = u32::from(i == j);
                if zs[i] == 0 || zs[j] < same {
                    continue;
                }
                let pij = f64::from(zs[i]) * f64::from(zs[j] - same) / pairs;
                inner += pij * table.pair(alpha, beta, i, j);
            }
        }
        total += w * inner;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: u64,
}

/// Sampling oracle for [`granular_expected_payoff`]: draw `z` from the
/// stationary multinomial, a GTFT node with probability `z_i / m`, then a
/// distinct GTFT partner, and average the closed-form payoff.
#[allow(clippy::too_many_arguments)]
pub fn granular_payoff_monte_carlo(
    alpha: f64,
    beta: f64,
    m: u32,
    k: usize,
    cfg: &GameConfig,
    rv: &RewardVector,
    draws: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_granular(alpha, beta, m, k)?;
    if draws < 2 {
        return Err(Error::invalid("need at least two draws"));
    }
    let dist = MultinomialDist::new(m, geometric_weights(k, (1.0 - beta) / beta))?;
    let table = PayoffTable::new(&grid(k, cfg.g_hat), cfg, rv)?;
    const CHUNK: u64 = 1 << 16;
    let chunks = draws.div_ceil(CHUNK);
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, "granular", c);
            let len = CHUNK.min(draws - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let z = dist.sample(&mut rng);
                let zs = z.as_slice();
                let i = pick(zs, rng.random_range(0..m), None);
                let j = pick(zs, rng.random_range(0..m - 1), Some(i));
                let v = table.pair(alpha, beta, i, j);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = draws as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / nf).sqrt(),
        draws,
    })
}

/// Index of the `r`-th node when nodes are listed by index, with one node
/// of index `skip` removed.
fn pick(z: &[u32], mut r: u32, skip: Option<usize>) -> usize {
    for (j, &c) in z.iter().enumerate() {
        let c = if skip == Some(j) { c - 1 } else { c };
        if r < c {
            return j;
        }
        r -= c;
    }
    unreachable!("rank exceeds population size")
}

/// [`granular_expected_payoff`] over every `(alpha, beta)` pair, in input
/// order. Pairs outside the simplex are skipped.
pub fn payoff_sweep(
    alphas: &[f64],
    betas: &[f64],
    m: u32,
    k: usize,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<Vec<PayoffComparison>> {
    let mut out = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            if beta > 0.0 && alpha >= 0.0 && alpha + beta < 1.0 {
                out.push(granular_expected_payoff(alpha, beta, m, k, cfg, rv)?);
            }
        }
    }
    Ok(out)
}
