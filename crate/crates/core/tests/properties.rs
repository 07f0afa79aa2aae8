use proptest::prelude::*;

use kigt::analysis::{avg_stationary_generosity, mean_field_payoff};
use kigt::ehrenfest::{
    enumerate_states, stationary_closed, transition_row, CountVector, CouplingRun, EhrenfestParams,
    ExactChain,
};
use kigt::game::{
    expected_payoff_closed, expected_payoff_series, resolvent_closed, resolvent_entries, GameConfig,
    RewardVector, Strategy as Play,
};
use kigt::population::{init_population, interact, InitialCounts, Pairing, PopulationConfig};
use kigt::rng::stream;

fn chain_params() -> impl Strategy<Value = EhrenfestParams> {
    (2usize..=5, 1u32..=6, 0.01f64..0.99, 0.01f64..1.0).prop_map(|(k, m, a, frac)| {
        let b = (1.0 - a) * frac;
        EhrenfestParams::new(k, a, b.max(1e-3), m).unwrap()
    })
}

fn any_state(params: EhrenfestParams) -> impl Strategy<Value = CountVector> {
    let states = enumerate_states(params.k, params.m, 10_000).unwrap();
    (0..states.len()).prop_map(move |i| states[i].clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rows_are_stochastic_and_conserve_balls(
        (params, x) in chain_params().prop_flat_map(|p| (Just(p), any_state(p)))
    ) {
        let row = transition_row(&x, &params);
        let total: f64 = row.iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(row.len() <= 2 * (params.k - 1) + 1);
        for (y, p) in &row {
            prop_assert!(*p > 0.0);
            prop_assert_eq!(y.total(), params.m);
            let moved: u32 = x.as_slice().iter().zip(y.as_slice()).map(|(a, b)| a.abs_diff(*b)).sum();
            prop_assert!(moved == 0 || moved == 2);
        }
    }

    #[test]
    fn closed_form_is_reversible(params in chain_params()) {
        let chain = ExactChain::new(params).unwrap();
        let pmf = chain.closed_form_pmf();
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(chain.detailed_balance_residual_of(&pmf) < 1e-12);
        let next = chain.evolve(&pmf);
        let drift: f64 = next.iter().zip(&pmf).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(drift < 1e-12);
        prop_assert_eq!(stationary_closed(&params).m, params.m);
    }

    #[test]
    fn coupled_walks_never_separate(params in chain_params(), seed in any::<u64>()) {
        let mut rng = stream(seed, "prop-coupling", 0);
        let mut run = CouplingRun::from_corners(params);
        let mut gaps: Vec<u32> = vec![params.k as u32 - 1; params.m as usize];
        for _ in 0..2_000 {
            run.step(&mut rng);
            let (x, y) = run.labels();
            for (i, (a, b)) in x.iter().zip(y).enumerate() {
                let d = a.abs_diff(*b);
                prop_assert!(d <= gaps[i]);
                gaps[i] = d;
            }
        }
    }

    #[test]
    fn closed_payoffs_match_series(
        g in 0.0f64..=1.0, h in 0.0f64..=1.0, delta in 0.0f64..0.97, s1 in 0.0f64..0.99,
        (r, s, t, p) in (0.5f64..5.0, -3.0f64..0.0, 0.0f64..3.0).prop_map(|(r, s, dt)| (r, s, r + dt + 0.01, s + (r - s) * 0.5))
    ) {
        let rv = RewardVector::new(r, s, t, p).unwrap();
        let cfg = GameConfig::new(delta, s1, 1.0).unwrap();
        for opp in [Play::AllC, Play::AllD, Play::Gtft(h)] {
            let closed = expected_payoff_closed(Play::Gtft(g), opp, &cfg, &rv).unwrap();
            let series = expected_payoff_series(Play::Gtft(g), opp, &cfg, &rv, 1e-12).unwrap();
            prop_assert!((closed - series).abs() < 1e-9, "{opp}: {closed} vs {series}");
        }
    }

    #[test]
    fn explicit_resolvent_matches_inverse(g in 0.0f64..=1.0, h in 0.0f64..=1.0, delta in 0.0f64..0.99) {
        let cfg = GameConfig::new(delta, 0.5, 1.0).unwrap();
        let exact = resolvent_entries(g, h, &cfg).unwrap();
        let explicit = resolvent_closed(g, h, delta);
        for i in 0..4 {
            let row: f64 = exact[i].iter().sum();
            prop_assert!((row * (1.0 - delta) - 1.0).abs() < 1e-10);
            for j in 0..4 {
                prop_assert!((exact[i][j] - explicit[i][j]).abs() < 1e-9 * exact[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn stationary_generosity_stays_in_range(k in 2usize..80, beta in 0.01f64..0.99, g_hat in 0.0f64..=1.0) {
        let w = avg_stationary_generosity(k, beta, g_hat).unwrap();
        prop_assert!(w >= -1e-12 && w <= g_hat + 1e-12);
    }

    #[test]
    fn mean_field_payoff_is_concave_in_g(alpha in 0.0f64..0.5, beta in 0.0f64..0.5, b in 1.5f64..6.0, c in 0.1f64..1.4) {
        let cfg = GameConfig::new(0.9, 0.5, 0.25).unwrap();
        let rv = RewardVector::donation(b, c).unwrap();
        let f = |g: f64| mean_field_payoff(g, alpha, beta, &cfg, &rv).unwrap();
        for i in 1..50 {
            let h = 0.25 / 50.0;
            let g = i as f64 * h;
            prop_assert!(f(g - h) - 2.0 * f(g) + f(g + h) <= 1e-12);
        }
    }

    #[test]
    fn interactions_preserve_types_and_counts(
        seed in any::<u64>(), distinct in any::<bool>(), k in 2usize..6
    ) {
        let pairing = if distinct { Pairing::DistinctPair } else { Pairing::Idealized };
        let cfg = PopulationConfig::new(20, 0.2, 0.3, k, 0.5).unwrap().with_pairing(pairing);
        let mut rng = stream(seed, "prop-pop", 0);
        let mut state = init_population(&cfg, &InitialCounts::UniformRandom, &mut rng).unwrap();
        for _ in 0..500 {
            let rec = interact(&mut state, &cfg, &mut rng);
            if let (Some(before), Some(after)) = (rec.index_before, rec.index_after) {
                prop_assert!(before.abs_diff(after) <= 1);
            }
            prop_assert_eq!(state.type_counts(), (4, 6, 10));
            prop_assert_eq!(state.counts().total(), 10);
            let w = state.avg_generosity(0.5);
            prop_assert!((0.0..=0.5).contains(&w));
        }
    }
}
