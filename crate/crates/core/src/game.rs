//! Repeated prisoner's dilemma between AllC, AllD and generous tit-for-tat.
//!
//! A game is a Markov chain over the four joint action states
//! `(CC, CD, DC, DD)` (row player first). After every round another round is
//! played with probability `delta`, so the expected total payoff of the row
//! player is `<v, q1 (I - delta M)^-1>` where `q1` is the first-round state
//! distribution and `M` the round-to-round transition matrix.
//!
//! Closed forms exist for a GTFT row player against each of the three
//! strategy types. Everything else goes through the truncated Neumann series.

use nalgebra::Matrix4;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-round row-player payoffs over `(CC, CD, DC, DD)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    /// Reward for mutual cooperation.
    pub r: f64,
    /// Sucker's payoff.
    pub s: f64,
    /// Temptation to defect.
    pub t: f64,
    /// Punishment for mutual defection.
    pub p: f64,
}

impl RewardVector {
    /// Builds a prisoner's dilemma reward vector; requires `T > R > P > S`.
    pub fn new(r: f64, s: f64, t: f64, p: f64) -> Result<Self> {
        if ![r, s, t, p].iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("reward entries must be finite"));
        }
        if !(t > r && r > p && p > s) {
            return Err(Error::invalid(format!(
                "reward vector must satisfy T > R > P > S (got R={r}, S={s}, T={t}, P={p})"
            )));
        }
        Ok(Self { r, s, t, p })
    }

    /// Donation game `(b - c, -c, b, 0)` with benefit `b > c >= 0`.
    pub fn donation(benefit: f64, cost: f64) -> Result<Self> {
        if !(benefit > cost && cost >= 0.0) {
            return Err(Error::invalid(format!(
                "donation game needs benefit > cost >= 0 (got b={benefit}, c={cost})"
            )));
        }
        // cost == 0 collapses P and S, so skip the strict ordering check there.
        Ok(Self {
            r: benefit - cost,
            s: -cost,
            t: benefit,
            p: 0.0,
        })
    }

    /// `(benefit, cost)` if this is a donation game.
    pub fn donation_params(&self) -> Option<(f64, f64)> {
        let scale = self.max_abs().max(1.0);
        let additive = (self.r + self.p - self.t - self.s).abs() <= 1e-12 * scale;
        (self.p == 0.0 && additive).then_some((self.t, -self.s))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.r, self.s, self.t, self.p]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Payoffs seen from the column player: `CD` and `DC` swap.
    pub fn transposed(&self) -> [f64; 4] {
        [self.r, self.t, self.s, self.p]
    }
}

/// The three repeated-game strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Strategy {
    AllC,
    AllD,
    /// Generous tit-for-tat with generosity `g`.
    Gtft(f64),
}

impl Strategy {
    pub fn gtft(g: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::invalid(format!("generosity must lie in [0, 1], got {g}")));
        }
        Ok(Strategy::Gtft(g))
    }

    /// Probability of cooperating in round 1.
    pub fn first_cooperation(&self, s1: f64) -> f64 {
        match *self {
            Strategy::AllC => 1.0,
            Strategy::AllD => 0.0,
            Strategy::Gtft(_) => s1,
        }
    }

    /// Probability of cooperating given the opponent's previous action.
    pub fn cooperation_after(&self, opponent_cooperated: bool) -> f64 {
        match *self {
            Strategy::AllC => 1.0,
            Strategy::AllD => 0.0,
            Strategy::Gtft(g) => {
                if opponent_cooperated {
                    1.0
                } else {
                    g
                }
            }
        }
    }

    fn generosity(&self) -> Option<f64> {
        match *self {
            Strategy::Gtft(g) => Some(g),
            _ => None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::AllC => write!(f, "allc"),
            Strategy::AllD => write!(f, "alld"),
            Strategy::Gtft(g) => write!(f, "gtft:{g}"),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    /// Parses `allc`, `alld` or `gtft:<g>`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "allc" => Ok(Strategy::AllC),
            "alld" => Ok(Strategy::AllD),
            other => {
                let g = other
                    .strip_prefix("gtft:")
                    .and_then(|g| g.parse::<f64>().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown strategy '{s}'")))?;
                Strategy::gtft(g)
            }
        }
    }
}

/// Repeated-game settings shared by every GTFT node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Probability of playing another round.
    pub delta: f64,
    /// Round-1 cooperation probability of GTFT players.
    pub s1: f64,
    /// Largest admissible generosity.
    pub g_hat: f64,
}

impl GameConfig {
    pub fn new(delta: f64, s1: f64, g_hat: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1), got {delta}")));
        }
        if !(0.0..1.0).contains(&s1) {
            return Err(Error::invalid(format!("s1 must lie in [0, 1), got {s1}")));
        }
        if !(0.0..=1.0).contains(&g_hat) {
            return Err(Error::invalid(format!("g_hat must lie in [0, 1], got {g_hat}")));
        }
        Ok(Self { delta, s1, g_hat })
    }

    fn check(&self) -> Result<()> {
        Self::new(self.delta, self.s1, self.g_hat).map(|_| ())
    }

    fn check_strategy(&self, strategy: Strategy) -> Result<()> {
        if let Some(g) = strategy.generosity() {
            if !(0.0..=self.g_hat).contains(&g) {
                return Err(Error::invalid(format!(
                    "generosity {g} outside [0, g_hat = {}]",
                    self.g_hat
                )));
            }
        }
        Ok(())
    }
}

/// Joint action state of one round, row player first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameState {
    CC,
    CD,
    DC,
    DD,
}

impl GameState {
    pub const ALL: [GameState; 4] = [GameState::CC, GameState::CD, GameState::DC, GameState::DD];

    pub fn from_actions(row_cooperates: bool, col_cooperates: bool) -> Self {
        match (row_cooperates, col_cooperates) {
            (true, true) => GameState::CC,
            (true, false) => GameState::CD,
            (false, true) => GameState::DC,
            (false, false) => GameState::DD,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn row_cooperated(self) -> bool {
        matches!(self, GameState::CC | GameState::CD)
    }

    pub fn col_cooperated(self) -> bool {
        matches!(self, GameState::CC | GameState::DC)
    }
}

/// Distribution over `(CC, CD, DC, DD)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution(pub [f64; 4]);

impl StateDistribution {
    pub fn probabilities(&self) -> [f64; 4] {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Row-stochastic round-to-round matrix, conditioned on another round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTransitionMatrix(pub [[f64; 4]; 4]);

impl RoundTransitionMatrix {
    pub fn row(&self, from: GameState) -> [f64; 4] {
        self.0[from.index()]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.0
            .iter()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn to_matrix(self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| self.0[i][j])
    }
}

fn product_distribution(p_row: f64, p_col: f64) -> [f64; 4] {
    [
        p_row * p_col,
        p_row * (1.0 - p_col),
        (1.0 - p_row) * p_col,
        (1.0 - p_row) * (1.0 - p_col),
    ]
}

/// Round transition matrix for `row` playing against `col`.
///
/// Both players act independently given the previous state, so each row is
/// the product of the two conditional cooperation probabilities.
pub fn transition_matrix(row: Strategy, col: Strategy) -> RoundTransitionMatrix {
    let mut m = [[0.0; 4]; 4];
    for state in GameState::ALL {
        let p_row = row.cooperation_after(state.col_cooperated());
        let p_col = col.cooperation_after(state.row_cooperated());
        m[state.index()] = product_distribution(p_row, p_col);
    }
    RoundTransitionMatrix(m)
}

/// First-round state distribution `q1`.
pub fn initial_distribution(row: Strategy, col: Strategy, cfg: &GameConfig) -> StateDistribution {
    StateDistribution(product_distribution(
        row.first_cooperation(cfg.s1),
        col.first_cooperation(cfg.s1),
    ))
}

/// Expected total payoff of `me` against `opp`.
///
/// Uses the exact closed forms when `me` is GTFT and the Neumann series
/// (to `1e-13`) otherwise.
pub fn expected_payoff_closed(
    me: Strategy,
    opp: Strategy,
    cfg: &GameConfig,
    rv: &RewardVector,
) -> Result<f64> {
    cfg.check()?;
    cfg.check_strategy(me)?;
    cfg.check_strategy(opp)?;
    let Strategy::Gtft(g) = me else {
        return expected_payoff_series(me, opp, cfg, rv, 1e-13);
    };
    let RewardVector { r, s, t, p } = *rv;
    let d = cfg.delta;
    let s1 = cfg.s1;
    let value = match opp {
        Strategy::AllC => (1.0 - s1) * (t - r) + r / (1.0 - d),
        Strategy::AllD => s1 * s + (1.0 - s1) * p + (g * (s - p) + p) * d / (1.0 - d),
        Strategy::Gtft(h) => {
            let u = (1.0 - g) * (1.0 - h);
            let d2u = 1.0 - d * d * u;
            s1 * (t + s1 * (r - t)) + (1.0 - s1) * (p + s1 * (s - p))
                - (1.0 - s1) * (r - t) * (d * d * u + d * (1.0 - g)) / d2u
                - (1.0 - s1) * (r - s) * (d * d * u + d * (1.0 - h)) / d2u
                + (1.0 - s1).powi(2) * (r - s - t + p) * d * u * (1.0 + d * u)
                    / (1.0 - d * d * u * u)
                + r * d / (1.0 - d)
        }
    };
    Ok(value)
}

/// GTFT payoffs in the donation game with `s1 = 1/2`.
///
/// These are the simplified forms of [`expected_payoff_closed`] and are kept
/// separately so the two can be checked against each other.
pub fn donation_payoff(g: f64, opp: Strategy, delta: f64, benefit: f64, cost: f64) -> f64 {
    let (b, c, d) = (benefit, cost, delta);
    match opp {
        Strategy::AllC => c / 2.0 + (b - c) / (1.0 - d),
        Strategy::AllD => -c * (0.5 + d * g / (1.0 - d)),
        Strategy::Gtft(h) => {
            (b - c) / (1.0 - d)
                + (c * d * (1.0 - g) - b * d * (1.0 - h) + c - b)
                    / (2.0 * (1.0 - d * d * (1.0 - g) * (1.0 - h)))
        }
    }
}

/// Number of series terms needed so the neglected tail is at most `tol`:
/// `ceil(ln(tol (1 - delta) / max|v|) / ln delta)`, at least one.
pub fn series_truncation_index(delta: f64, max_abs_reward: f64, tol: f64) -> u64 {
    if delta <= 0.0 || max_abs_reward <= 0.0 {
        return 1;
    }
    let ratio = tol * (1.0 - delta) / max_abs_reward;
    if ratio >= 1.0 {
        return 1;
    }
    let terms = (ratio.ln() / delta.ln()).ceil();
    (terms as u64).max(1)
}

/// Truncated Neumann series `sum_i <v, q1 (delta M)^(i-1)>`.
pub fn expected_payoff_series(
    me: Strategy,
    opp: Strategy,
    cfg: &GameConfig,
    rv: &RewardVector,
    tol: f64,
) -> Result<f64> {
    cfg.check()?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("series tolerance must be positive, got {tol}")));
    }
    let m = transition_matrix(me, opp).0;
    let v = rv.as_array();
    let terms = series_truncation_index(cfg.delta, rv.max_abs(), tol);
    let mut q = initial_distribution(me, opp, cfg).0;
    let mut total = 0.0;
    for _ in 0..terms {
        total += v.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        let mut next = [0.0; 4];
        for (i, qi) in q.iter().enumerate() {
            for (j, nj) in next.iter_mut().enumerate() {
                *nj += qi * m[i][j];
            }
        }
        q = next.map(|x| x * cfg.delta);
    }
    Ok(total)
}

/// `(I - delta M)^-1` for GTFT(g) against GTFT(g'), by direct inversion.
pub fn resolvent_entries(g: f64, g_prime: f64, cfg: &GameConfig) -> Result<[[f64; 4]; 4]> {
    cfg.check()?;
    let me = Strategy::gtft(g)?;
    let opp = Strategy::gtft(g_prime)?;
    if cfg.delta * (1.0 - g) * (1.0 - g_prime) >= 1.0 {
        return Err(Error::Singular(format!(
            "delta (1-g)(1-g') = {} >= 1",
            cfg.delta * (1.0 - g) * (1.0 - g_prime)
        )));
    }
    let m = transition_matrix(me, opp).to_matrix();
    let a = (Matrix4::identity() - m * cfg.delta)
        .try_inverse()
        .ok_or_else(|| Error::Singular("I - delta M is not invertible".into()))?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| a[(i, j)])))
}

/// Explicit entries of `(I - delta M)^-1` for GTFT(g) against GTFT(g').
///
/// Each row sums to `1 / (1 - delta)`.
pub fn resolvent_closed(g: f64, h: f64, delta: f64) -> [[f64; 4]; 4] {
    let d = delta;
    let u = (1.0 - g) * (1.0 - h);
    let d1 = 1.0 - d * u;
    let d2 = 1.0 - d * d * u;
    let mut a = [[0.0; 4]; 4];
    a[0][0] = 1.0 / (1.0 - d);

    a[1][0] = (-d * d * g * h + d * d * h + d * g) / ((1.0 - d) * d2);
    a[1][1] = 1.0 / d2;
    a[1][2] = (d - d * g) / d2;

    a[2][0] = (-d * d * g * h + d * d * g + d * h) / ((1.0 - d) * d2);
    a[2][1] = (d - d * h) / d2;
    a[2][2] = 1.0 / d2;

    a[3][0] = d * (g + d * h * (1.0 - g)) * (h + d * g * (1.0 - h)) / ((1.0 - d) * d1 * d2);
    a[3][1] = d * (d * h * u + g * (1.0 - h)) / (d1 * d2);
    a[3][2] = d * (d * g * u + h * (1.0 - g)) / (d1 * d2);
    a[3][3] = 1.0 / d1;
    a
}

/// Result of one simulated repeated game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub payoff_me: f64,
    pub payoff_opp: f64,
    pub rounds: u64,
}

/// Plays one repeated game: a geometric number of rounds, each continuing
/// with probability `delta`.
pub fn simulate_game<R: Rng + ?Sized>(
    me: Strategy,
    opp: Strategy,
    cfg: &GameConfig,
    rv: &RewardVector,
    rng: &mut R,
) -> Result<GameOutcome> {
    cfg.check()?;
    let v = rv.as_array();
    let v_opp = rv.transposed();
    let mut me_c = rng.random::<f64>() < me.first_cooperation(cfg.s1);
    let mut opp_c = rng.random::<f64>() < opp.first_cooperation(cfg.s1);
    let mut out = GameOutcome {
        payoff_me: 0.0,
        payoff_opp: 0.0,
        rounds: 0,
    };
    loop {
        let state = GameState::from_actions(me_c, opp_c).index();
        out.payoff_me += v[state];
        out.payoff_opp += v_opp[state];
        out.rounds += 1;
        if rng.random::<f64>() >= cfg.delta {
            return Ok(out);
        }
        let next_me = rng.random::<f64>() < me.cooperation_after(opp_c);
        let next_opp = rng.random::<f64>() < opp.cooperation_after(me_c);
        me_c = next_me;
        opp_c = next_opp;
    }
}
