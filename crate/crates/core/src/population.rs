//! Agent-level k-IGT dynamics on an `(alpha, beta)` population.
//!
//! Nodes are laid out AllC first, then AllD, then the `m` GTFT nodes. Only
//! a GTFT initiator ever changes: its generosity index moves up after
//! meeting AllC or GTFT and down after meeting AllD, truncated to `1..=k`.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ehrenfest::{
    geometric_weights, mixing_bound, CountVector, EhrenfestParams, MultinomialDist,
};
use crate::error::{Error, Result};

const INTEGRALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Partner drawn uniformly from all `n` nodes, possibly the initiator.
    #[default]
    Idealized,
    /// Partner drawn uniformly from the other `n - 1` nodes.
    DistinctPair,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idealized" => Ok(Pairing::Idealized),
            "distinct-pair" | "distinct" => Ok(Pairing::DistinctPair),
            other => Err(Error::invalid(format!("unknown pairing mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub n: u32,
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub g_hat: f64,
    #[serde(default)]
    pub pairing: Pairing,
    #[serde(default)]
    pub seed: u64,
}

fn exact_count(fraction: f64, n: u32, what: &str) -> Result<u32> {
    let x = fraction * f64::from(n);
    let r = x.round();
    if (x - r).abs() > INTEGRALITY_TOL {
        return Err(Error::invalid(format!(
            "{what} * n = {x} is not an integer; choose n so every type count is whole"
        )));
    }
    Ok(r as u32)
}

impl PopulationConfig {
    pub fn new(n: u32, alpha: f64, beta: f64, k: usize, g_hat: f64) -> Result<Self> {
        let cfg = Self {
            n,
            alpha,
            beta,
            k,
            g_hat,
            pairing: Pairing::Idealized,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_pairing(mut self, pairing: Pairing) -> Self {
        self.pairing = pairing;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.type_counts().map(|_| ())
    }

    /// `(alpha n, beta n, m)`.
    pub fn type_counts(&self) -> Result<(u32, u32, u32)> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta < 1.0) {
            return Err(Error::invalid(format!(
                "need alpha, beta >= 0 and alpha + beta < 1 (got alpha={}, beta={})",
                self.alpha, self.beta
            )));
        }
        if self.k < 2 {
            return Err(Error::invalid(format!("need k >= 2, got {}", self.k)));
        }
        if !(0.0..=1.0).contains(&self.g_hat) {
            return Err(Error::invalid(format!("g_hat must lie in [0, 1], got {}", self.g_hat)));
        }
        let allc = exact_count(self.alpha, self.n, "alpha")?;
        let alld = exact_count(self.beta, self.n, "beta")?;
        let m = self.n - allc - alld;
        if m < 1 {
            return Err(Error::invalid("population has no GTFT nodes"));
        }
        Ok((allc, alld, m))
    }

    /// Number of GTFT nodes.
    pub fn m(&self) -> Result<u32> {
        self.type_counts().map(|(_, _, m)| m)
    }

    pub fn grid(&self) -> Vec<f64> {
        grid(self.k, self.g_hat)
    }
}

/// `g_j = (j - 1) / (k - 1) * g_hat` for `j = 1..=k`.
pub fn grid(k: usize, g_hat: f64) -> Vec<f64> {
    assert!(k >= 2, "grid needs k >= 2");
    (0..k).map(|j| j as f64 / (k - 1) as f64 * g_hat).collect()
}

/// Strategy of a single node; GTFT carries its 1-based generosity index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    AllC,
    AllD,
    Gtft(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationState {
    nodes: Vec<Node>,
    counts: Vec<u32>,
    t: u64,
}

impl PopulationState {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// The parameter count vector `z`.
    pub fn counts(&self) -> CountVector {
        CountVector(self.counts.clone())
    }

    pub fn counts_slice(&self) -> &[u32] {
        &self.counts
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    /// `sum_j g_j z_j / m`.
    pub fn avg_generosity(&self, g_hat: f64) -> f64 {
        let k = self.counts.len();
        let m: u32 = self.counts.iter().sum();
        let weighted: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(j, &z)| j as f64 * f64::from(z))
            .sum();
        g_hat * weighted / ((k - 1) as f64 * f64::from(m))
    }

    pub fn type_counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for node in &self.nodes {
            match node {
                Node::AllC => c.0 += 1,
                Node::AllD => c.1 += 1,
                Node::Gtft(_) => c.2 += 1,
            }
        }
        c
    }
}

pub enum InitialCounts {
    Explicit(CountVector),
    UniformRandom,
}

/// Builds the population with its exact type counts. With explicit counts
/// the GTFT nodes are assigned in index order.
pub fn init_population<R: Rng + ?Sized>(
    cfg: &PopulationConfig,
    initial: &InitialCounts,
    rng: &mut R,
) -> Result<PopulationState> {
    let (allc, alld, m) = cfg.type_counts()?;
    let mut nodes = Vec::with_capacity(cfg.n as usize);
    nodes.extend(std::iter::repeat_n(Node::AllC, allc as usize));
    nodes.extend(std::iter::repeat_n(Node::AllD, alld as usize));
    let mut counts = vec![0u32; cfg.k];
    match initial {
        InitialCounts::Explicit(z) => {
            if z.k() != cfg.k || z.total() != m {
                return Err(Error::invalid(format!(
                    "initial counts {z} must have {} entries summing to m = {m}",
                    cfg.k
                )));
            }
            for (j, &c) in z.as_slice().iter().enumerate() {
                nodes.extend(std::iter::repeat_n(Node::Gtft(j + 1), c as usize));
            }
            counts.copy_from_slice(z.as_slice());
        }
        InitialCounts::UniformRandom => {
            for _ in 0..m {
                let j = rng.random_range(0..cfg.k);
                counts[j] += 1;
                nodes.push(Node::Gtft(j + 1));
            }
        }
    }
    Ok(PopulationState { nodes, counts, t: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub initiator: usize,
    pub partner: usize,
    pub initiator_type: Node,
    pub partner_type: Node,
    pub index_before: Option<usize>,
    pub index_after: Option<usize>,
}

impl InteractionRecord {
    pub fn is_null(&self) -> bool {
        self.index_before.is_none()
    }
}

/// One interaction, applied in place.
pub fn interact<R: Rng + ?Sized>(
    state: &mut PopulationState,
    cfg: &PopulationConfig,
    rng: &mut R,
) -> InteractionRecord {
    let n = state.nodes.len();
    let initiator = rng.random_range(0..n);
    let partner = match cfg.pairing {
        Pairing::Idealized => rng.random_range(0..n),
        Pairing::DistinctPair => {
            let p = rng.random_range(0..n - 1);
            if p >= initiator {
                p + 1
            } else {
                p
            }
        }
    };
    let initiator_type = state.nodes[initiator];
    let partner_type = state.nodes[partner];
    state.t += 1;
    let Node::Gtft(j) = initiator_type else {
        return InteractionRecord {
            initiator,
            partner,
            initiator_type,
            partner_type,
            index_before: None,
            index_after: None,
        };
    };
    let next = match partner_type {
        Node::AllD => j.saturating_sub(1).max(1),
        Node::AllC | Node::Gtft(_) => (j + 1).min(cfg.k),
    };
    if next != j {
        state.counts[j - 1] -= 1;
        state.counts[next - 1] += 1;
        state.nodes[initiator] = Node::Gtft(next);
    }
    InteractionRecord {
        initiator,
        partner,
        initiator_type,
        partner_type,
        index_before: Some(j),
        index_after: Some(next),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: u64,
    pub z: CountVector,
    pub avg_generosity: f64,
}

/// Advances `state` by `steps` interactions, recording the start, every
/// `record_every`-th step and the final step.
pub fn run_from<R: Rng + ?Sized>(
    state: &mut PopulationState,
    cfg: &PopulationConfig,
    steps: u64,
    record_every: u64,
    rng: &mut R,
) -> Result<Vec<TrajectoryPoint>> {
    if record_every == 0 {
        return Err(Error::invalid("record_every must be positive"));
    }
    let point = |s: &PopulationState| TrajectoryPoint {
        t: s.t,
        z: s.counts(),
        avg_generosity: s.avg_generosity(cfg.g_hat),
    };
    let mut out = vec![point(state)];
    for i in 1..=steps {
        interact(state, cfg, rng);
        if i % record_every == 0 || i == steps {
            out.push(point(state));
        }
    }
    Ok(out)
}

/// Uniform-random initialisation followed by [`run_from`].
pub fn run<R: Rng + ?Sized>(
    cfg: &PopulationConfig,
    steps: u64,
    record_every: u64,
    rng: &mut R,
) -> Result<Vec<TrajectoryPoint>> {
    let mut state = init_population(cfg, &InitialCounts::UniformRandom, rng)?;
    run_from(&mut state, cfg, steps, record_every, rng)
}

/// `a = (1-alpha-beta)(1-beta)`, `b = (1-alpha-beta) beta`,
/// `m = (1-alpha-beta) n`.
pub fn to_ehrenfest(cfg: &PopulationConfig) -> Result<EhrenfestParams> {
    let (_, _, m) = cfg.type_counts()?;
    if cfg.beta <= 0.0 {
        return Err(Error::Degenerate(
            "beta = 0: no down moves, the chain is absorbed at the top index".into(),
        ));
    }
    let gtft = 1.0 - cfg.alpha - cfg.beta;
    EhrenfestParams::new(cfg.k, gtft * (1.0 - cfg.beta), gtft * cfg.beta, m)
}

/// Multinomial with `p_j` proportional to `(1/beta - 1)^(j-1)`.
pub fn stationary_of_population(cfg: &PopulationConfig) -> Result<MultinomialDist> {
    let params = to_ehrenfest(cfg)?;
    MultinomialDist::new(params.m, geometric_weights(cfg.k, (1.0 - cfg.beta) / cfg.beta))
}

/// Counts of `z` visited after a burn-in, every `thin` interactions.
/// `burn_in` defaults to the coupling bound and `thin` to `n`.
pub fn sample_stationary_histogram<R: Rng + ?Sized>(
    cfg: &PopulationConfig,
    samples: u64,
    burn_in: Option<u64>,
    thin: Option<u64>,
    rng: &mut R,
) -> Result<HashMap<CountVector, u64>> {
    let params = to_ehrenfest(cfg)?;
    let burn_in = burn_in.unwrap_or_else(|| mixing_bound(&params).ceil() as u64);
    let thin = thin.unwrap_or(u64::from(cfg.n)).max(1);
    let mut state = init_population(cfg, &InitialCounts::UniformRandom, rng)?;
    for _ in 0..burn_in {
        interact(&mut state, cfg, rng);
    }
    let mut hist: HashMap<CountVector, u64> = HashMap::new();
    for _ in 0..samples {
        for _ in 0..thin {
            interact(&mut state, cfg, rng);
        }
        *hist.entry(state.counts()).or_default() += 1;
    }
    Ok(hist)
}

/// Total variation distance between an empirical histogram and `dist`.
/// States never visited contribute their full probability.
pub fn histogram_tv(hist: &HashMap<CountVector, u64>, dist: &MultinomialDist) -> f64 {
    let total: u64 = hist.values().sum();
    let total = total as f64;
    let mut seen_mass = 0.0;
    let mut diff = 0.0;
    for (x, &c) in hist {
        let p = dist.pmf(x);
        seen_mass += p;
        diff += (c as f64 / total - p).abs();
    }
    0.5 * (diff + (1.0 - seen_mass).max(0.0))
}
