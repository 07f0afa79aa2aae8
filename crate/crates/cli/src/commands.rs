use serde::Serialize;

use kigt::analysis::{
    check_local_optimality, generosity_report, granular_payoff_monte_carlo, optimal_generosity,
    payoff_sweep, phi_high_threshold, phi_low_threshold, GenerosityReport, LocalOptimalityReport,
    MonteCarloEstimate, OptimalGenerosity,
};
use kigt::ehrenfest::{
    estimate_mixing, geometric_weights, mixing_bound, state_count, CountVector, EhrenfestParams,
    ExactChain, InitialStates, MixingEstimate,
};
use kigt::game::{
    expected_payoff_closed, expected_payoff_series, simulate_game, GameConfig, RewardVector,
    Strategy,
};
use kigt::population::{init_population, interact, InitialCounts, Pairing, PopulationConfig};
use kigt::rng::stream;

use crate::args::{
    Cli, Command, CompareArgs, Format, GameArgs, MixingArgs, OptimalityArgs, PairingArg,
    PayoffArgs, SimulateArgs, StationaryArgs,
};
use crate::output::{CliError, CliResult, Clock, Sink};

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Stationary(a) => stationary(a),
        Command::Mixing(a) => mixing(a),
        Command::Payoff(a) => payoff(a),
        Command::Optimality(a) => optimality(a),
        Command::Compare(a) => compare(a),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("cannot parse '{x}' in {what}")))
        })
        .collect()
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let clock = Clock::start();
    let pairing = match args.pairing {
        PairingArg::Idealized => Pairing::Idealized,
        PairingArg::DistinctPair => Pairing::DistinctPair,
    };
    let cfg = PopulationConfig::new(args.n, args.alpha, args.beta, args.k, args.g_hat)?
        .with_pairing(pairing)
        .with_seed(args.seed);
    if args.record_every == 0 {
        return Err(CliError::Usage("--record-every must be positive".into()));
    }
    let init = if args.init == "uniform" {
        InitialCounts::UniformRandom
    } else {
        InitialCounts::Explicit(CountVector(parse_list(&args.init, "--init")?))
    };
    let mut rng = stream(args.seed, "simulate", 0);
    let mut state = init_population(&cfg, &init, &mut rng)?;

    let sink = Sink::new(args.output.out.clone(), args.output.manifest.clone());
    let mut csv = csv::Writer::from_writer(sink.writer()?);
    let mut header = vec!["t".to_string()];
    header.extend((1..=args.k).map(|j| format!("z_{j}")));
    header.push("avg_generosity".into());
    csv.write_record(&header)?;
    let mut record = |s: &kigt::population::PopulationState| -> CliResult<()> {
        let mut row = vec![s.time().to_string()];
        row.extend(s.counts_slice().iter().map(u32::to_string));
        row.push(s.avg_generosity(cfg.g_hat).to_string());
        csv.write_record(&row)?;
        Ok(())
    };
    record(&state)?;
    for i in 1..=args.steps {
        interact(&mut state, &cfg, &mut rng);
        if i % args.record_every == 0 || i == args.steps {
            record(&state)?;
        }
    }
    csv.flush()?;
    sink.finish(clock.manifest("simulate", &args, Some(args.seed)))
}

#[derive(Serialize)]
struct StateRow {
    z: Vec<u32>,
    closed_form: f64,
    exact: f64,
}

#[derive(Serialize)]
struct ExactComparison {
    states: usize,
    tv_diff: f64,
    max_abs_diff: f64,
    detailed_balance_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_p: Option<Vec<StateRow>>,
}

#[derive(Serialize)]
struct StationaryReport {
    k: usize,
    a: f64,
    b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u32>,
    lambda: f64,
    closed_form_p: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<ExactComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn stationary(args: StationaryArgs) -> CliResult<()> {
    let clock = Clock::start();
    if args.k < 2 {
        return Err(CliError::Usage(format!("need k >= 2, got {}", args.k)));
    }
    let (a, b) = match (args.beta, args.a, args.b) {
        (Some(beta), _, _) => {
            if !(beta > 0.0 && args.alpha >= 0.0 && args.alpha + beta < 1.0) {
                return Err(CliError::Usage(format!(
                    "need 0 < beta < 1 - alpha (got alpha={}, beta={beta})",
                    args.alpha
                )));
            }
            let gtft = 1.0 - args.alpha - beta;
            (gtft * (1.0 - beta), gtft * beta)
        }
        (None, Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Usage("give either --beta or both --a and --b".into())),
    };
    let params = match args.m {
        Some(m) => Some(EhrenfestParams::new(args.k, a, b, m)?),
        None if args.exact => return Err(CliError::Usage("--exact needs --m".into())),
        None => {
            EhrenfestParams::new(args.k, a, b, 1)?;
            None
        }
    };
    let lambda = a / b;
    let mut report = StationaryReport {
        k: args.k,
        a,
        b,
        m: args.m,
        lambda,
        closed_form_p: geometric_weights(args.k, lambda),
        exact: None,
        note: None,
    };
    let mut deferred = None;
    if let (true, Some(params)) = (args.exact, params) {
        match ExactChain::with_cap(params, args.cap) {
            Ok(chain) => {
                let exact = chain.stationary_exact()?;
                let closed = chain.closed_form_pmf();
                let max_abs_diff = exact.iter().zip(&closed).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                report.exact = Some(ExactComparison {
                    states: chain.len(),
                    tv_diff: ExactChain::tv(&exact, &closed),
                    max_abs_diff,
                    detailed_balance_residual: chain.detailed_balance_residual_of(&closed),
                    exact_p: args.states.then(|| {
                        chain
                            .states()
                            .iter()
                            .zip(exact.iter().zip(&closed))
                            .map(|(z, (&e, &c))| StateRow {
                                z: z.0.clone(),
                                closed_form: c,
                                exact: e,
                            })
                            .collect()
                    }),
                });
            }
            Err(e) if e.is_resource_limit() => {
                report.note = Some(format!("exact comparison skipped: {e}"));
                deferred = Some(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let sink = Sink::new(args.output.out.clone(), args.output.manifest.clone());
    sink.write_json(&report)?;
    sink.finish(clock.manifest("stationary", &args, None))?;
    match deferred {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct MixingRow {
    k: usize,
    a: f64,
    b: f64,
    m: u32,
    bound: f64,
    estimate: MixingEstimate,
    exact_tmix: Option<u64>,
}

fn mixing_row(args: &MixingArgs, k: usize, m: u32) -> CliResult<MixingRow> {
    let params = EhrenfestParams::new(k, args.a, args.b, m)?;
    let bound = mixing_bound(&params);
    let estimate = estimate_mixing(&params, args.epsilon, args.trials, args.seed, args.step_limit)?;
    let exact_tmix = if state_count(k, m) <= args.exact_cap as u128 {
        let chain = ExactChain::with_cap(params, args.exact_cap)?;
        let limit = (100.0 * bound).ceil() as u64;
        Some(chain.mixing_time(InitialStates::Corners, args.epsilon, limit)?)
    } else {
        None
    };
    Ok(MixingRow {
        k,
        a: args.a,
        b: args.b,
        m,
        bound,
        estimate,
        exact_tmix,
    })
}

fn mixing(args: MixingArgs) -> CliResult<()> {
    let clock = Clock::start();
    let points: Vec<(usize, u32)> = match &args.sweep {
        None => vec![(args.k, args.m)],
        Some(spec) => {
            let (key, values) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--sweep must look like m=8,16; got '{spec}'")))?;
            let mut values: Vec<u64> = parse_list(values, "--sweep")?;
            values.sort_unstable();
            values.dedup();
            match key.trim() {
                "m" => values.iter().map(|&m| Ok((args.k, u32::try_from(m).map_err(|_| CliError::Usage("m too large".into()))?))).collect::<CliResult<_>>()?,
                "k" => values.iter().map(|&k| (k as usize, args.m)).collect(),
                other => return Err(CliError::Usage(format!("can only sweep m or k, not '{other}'"))),
            }
        }
    };
    for &(k, m) in &points {
        EhrenfestParams::new(k, args.a, args.b, m)?;
    }
    let rows = points
        .iter()
        .map(|&(k, m)| mixing_row(&args, k, m))
        .collect::<CliResult<Vec<_>>>()?;
    let sink = Sink::new(args.output.out.clone(), args.output.manifest.clone());
    match args.format {
        Format::Json if args.sweep.is_none() => sink.write_json(&rows[0])?,
        Format::Json => sink.write_json(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink.writer()?);
            w.write_record(["k", "a", "b", "m", "bound", "estimate", "epsilon", "trials", "exact_tmix"])?;
            for r in &rows {
                w.write_record([
                    r.k.to_string(),
                    r.a.to_string(),
                    r.b.to_string(),
                    r.m.to_string(),
                    r.bound.to_string(),
                    r.estimate.t_hat.to_string(),
                    r.estimate.epsilon.to_string(),
                    r.estimate.trials.to_string(),
                    r.exact_tmix.map_or(String::new(), |t| t.to_string()),
                ])?;
            }
            w.flush()?;
        }
    }
    sink.finish(clock.manifest("mixing", &args, Some(args.seed)))
}

fn game_setup(g: &GameArgs) -> CliResult<(GameConfig, RewardVector)> {
    let rv = match &g.reward {
        Some(spec) => {
            let v: Vec<f64> = parse_list(spec, "--reward")?;
            let [r, s, t, p] = v[..] else {
                return Err(CliError::Usage("--reward needs four values R,S,T,P".into()));
            };
            RewardVector::new(r, s, t, p)?
        }
        None => RewardVector::donation(g.b, g.c)?,
    };
    Ok((GameConfig::new(g.delta, g.s1, g.g_hat)?, rv))
}

#[derive(Serialize)]
struct PayoffReport {
    me: String,
    opp: String,
    reward: [f64; 4],
    delta: f64,
    s1: f64,
    closed_form: f64,
    series: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<MonteCarloEstimate>,
}

fn payoff(args: PayoffArgs) -> CliResult<()> {
    let clock = Clock::start();
    let (cfg, rv) = game_setup(&args.game)?;
    let me: Strategy = args.me.parse()?;
    let opp: Strategy = args.opp.parse()?;
    let closed_form = expected_payoff_closed(me, opp, &cfg, &rv)?;
    let series = expected_payoff_series(me, opp, &cfg, &rv, 1e-12)?;
    let monte_carlo = if args.games >= 2 {
        let mut rng = stream(args.seed, "payoff", 0);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..args.games {
            let x = simulate_game(me, opp, &cfg, &rv, &mut rng)?.payoff_me;
            s += x;
            s2 += x * x;
        }
        let n = args.games as f64;
        let mean = s / n;
        let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
        Some(MonteCarloEstimate {
            mean,
            std_error: (var / n).sqrt(),
            draws: args.games,
        })
    } else {
        None
    };
    let report = PayoffReport {
        me: me.to_string(),
        opp: opp.to_string(),
        reward: rv.as_array(),
        delta: cfg.delta,
        s1: cfg.s1,
        closed_form,
        series,
        monte_carlo,
    };
    let sink = Sink::new(args.output.out.clone(), args.output.manifest.clone());
    sink.write_json(&report)?;
    sink.finish(clock.manifest("payoff", &args, Some(args.seed)))
}

#[derive(Serialize)]
struct OptimalityReport {
    #[serde(flatten)]
    optimum: OptimalGenerosity,
    phi_low_threshold: f64,
    phi_high_threshold: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    generosity: Vec<GenerosityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotonicity: Option<LocalOptimalityReport>,
}

fn optimality(args: OptimalityArgs) -> CliResult<()> {
    let clock = Clock::start();
    let (cfg, rv) = game_setup(&args.game)?;
    let optimum = optimal_generosity(args.alpha, args.beta, args.n, &cfg, &rv)?;
    let generosity = args
        .k
        .iter()
        .map(|&k| generosity_report(args.alpha, args.beta, args.n, k, &cfg, &rv))
        .collect::<Result<_, _>>()?;
    let monotonicity = args
        .monotonicity_grid
        .map(|size| check_local_optimality(&cfg, &rv, size))
        .transpose()?;
    let report = OptimalityReport {
        optimum,
        phi_low_threshold: phi_low_threshold(&cfg, &rv)?,
        phi_high_threshold: phi_high_threshold(&cfg, &rv)?,
        generosity,
        monotonicity,
    };
    let sink = Sink::new(args.output.out.clone(), args.output.manifest.clone());
    sink.write_json(&report)?;
    sink.finish(clock.manifest("optimality", &args, None))
}

#[derive(Serialize)]
struct CompareRow {
    alpha: f64,
    beta: f64,
    k: usize,
    m: u32,
    avg_generosity: f64,
    f_mean_field: f64,
    f_exact: f64,
    abs_diff: f64,
    mc_mean: Option<f64>,
    mc_std_error: Option<f64>,
}

fn compare(args: CompareArgs) -> CliResult<()> {
    let clock = Clock::start();
    let (cfg, rv) = game_setup(&args.game)?;
    let mut rows = Vec::new();
    for &k in &args.k {
        let sweep = payoff_sweep(&args.alphas, &args.betas, args.m, k, &cfg, &rv)?;
        for cmp in sweep {
            let mc = if args.mc_draws > 0 {
                let seed = args.seed.wrapping_add(rows.len() as u64);
                Some(granular_payoff_monte_carlo(
                    cmp.alpha, cmp.beta, args.m, k, &cfg, &rv, args.mc_draws, seed,
                )?)
            } else {
                None
            };
            rows.push(CompareRow {
                alpha: cmp.alpha,
                beta: cmp.beta,
                k,
                m: args.m,
                avg_generosity: cmp.avg_generosity,
                f_mean_field: cmp.mean_field,
                f_exact: cmp.granular,
                abs_diff: cmp.abs_diff,
                mc_mean: mc.map(|e| e.mean),
                mc_std_error: mc.map(|e| e.std_error),
            });
        }
    }
    let sink = Sink::new(args.output.out.clone(), args.output.manifest.clone());
    match args.format {
        Format::Json => sink.write_json(&rows)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink.writer()?);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    sink.finish(clock.manifest("compare", &args, Some(args.seed)))
}
