"""Smoke test for the kigt extension module.

Build first, e.g. `pip install --no-build-isolation -e crates/py`, then run
`python3 python/smoke_test.py` (or with pytest).
"""

import math

import kigt


def close(x, y, tol):
    return abs(x - y) <= tol


def test_game():
    cfg = kigt.GameConfig(0.9, 0.5, 0.25)
    rv = kigt.RewardVector.donation(3.0, 2.0)
    assert rv.as_tuple() == (1.0, -2.0, 3.0, 0.0)
    closed = kigt.expected_payoff("gtft:0.2", "alld", cfg, rv)
    assert close(closed, -4.6, 1e-12)
    assert close(kigt.expected_payoff_series("gtft:0.2", "alld", cfg, rv), closed, 1e-9)
    mean, se = kigt.simulate_payoff("gtft:0.2", "alld", cfg, rv, 50_000, seed=1)
    assert abs(mean - closed) < 5 * se
    rows = kigt.resolvent(0.3, 0.6, cfg)
    for row in rows:
        assert close(sum(row) * (1 - cfg.delta), 1.0, 1e-12)


def test_ehrenfest():
    p = kigt.EhrenfestParams(3, 0.4, 0.2, 4)
    assert close(p.lam, 2.0, 1e-15)
    closed = kigt.stationary_closed(p)
    assert close(closed[0], 1 / 7, 1e-15) and close(closed[2], 4 / 7, 1e-15)
    exact = kigt.solve_stationary_exact(p)
    assert len(exact) == 15
    for z, prob in exact:
        assert close(prob, kigt.stationary_pmf(p, z), 1e-10)
    assert kigt.detailed_balance_residual(p) < 1e-12
    assert close(sum(q for _, q in kigt.transition_row(p, [2, 1, 1])), 1.0, 1e-12)
    assert kigt.tv_distance_exact(p, 0, [4, 0, 0]) > kigt.tv_distance_exact(p, 50, [4, 0, 0])

    q = kigt.EhrenfestParams(3, 0.375, 0.125, 4)
    assert kigt.estimate_mixing(q, trials=500, seed=3) <= kigt.mixing_bound(q)
    assert close(kigt.expected_absorption(6, 0.3, 0.3), 60.0, 1e-12)


def test_population():
    cfg = kigt.PopulationConfig(40, 0.25, 0.25, 3, 0.25, seed=7)
    assert cfg.m == 20
    assert close(kigt.to_ehrenfest(cfg).lam, 3.0, 1e-12)
    pop = kigt.Population(cfg, [20, 0, 0])
    rec = pop.interact()
    assert set(rec) >= {"initiator", "partner", "index_before", "index_after"}
    traj = pop.run(1000, 100)
    assert traj[-1][0] == 1001 and sum(traj[-1][1]) == 20
    assert all(0.0 <= w <= 0.25 for _, _, w in traj)
    a = kigt.Population(cfg).run(500, 50)
    b = kigt.Population(cfg).run(500, 50)
    assert a == b
    assert kigt.grid(3, 0.25) == [0.0, 0.125, 0.25]


def test_analysis():
    cfg = kigt.GameConfig(0.9, 0.5, 0.25)
    rv = kigt.RewardVector.donation(3.0, 2.0)
    assert close(kigt.phi_low_threshold(cfg, rv), 40 / 169, 1e-15)
    g, regime, phi = kigt.optimal_generosity(0.25, 0.05, 100, cfg, rv)
    assert (g, regime) == (0.25, "low")
    w = kigt.avg_stationary_generosity(6, 0.3, 0.25)
    assert 0.0 <= w <= 0.25
    assert kigt.gap_bound(6, 0.3) > 0
    cmp = kigt.granular_expected_payoff(0.1, 0.3, 20, 6, cfg, rv)
    assert close(sum(cmp["stationary_p"]), 1.0, 1e-12)
    assert math.isfinite(cmp["granular"]) and cmp["abs_diff"] >= 0
    assert close(kigt.mean_field_payoff(cmp["avg_generosity"], 0.1, 0.3, cfg, rv), cmp["mean_field"], 1e-12)


def test_errors():
    for bad in (lambda: kigt.GameConfig(1.0), lambda: kigt.EhrenfestParams(3, 0.7, 0.4, 3)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
