import math
import warnings

import numpy as np
import pytest

from netmed.mediation import InfeasibleConditionError
from netmed.netcore import density
from netmed.sampler import ChainConfig
from netmed.simstudy import (SimCondition, aggregate, coverage_rate, estimate_runtime,
                             generate_dataset, generate_empirical_replica, generate_positions,
                             grid_csv, load_grid, full_grid, path_coefficient, relative_bias,
                             replication_seeds, replications_csv, run_condition, run_grid)

TINY = ChainConfig(n_iter=300, burn_in=150)


def mean_sq_distance(z):
    n = len(z)
    sq = (z ** 2).sum(1)
    total = 2 * n * sq.sum() - 2 * (z.sum(0) ** 2).sum()
    return total / (n * (n - 1))


def test_full_grid_shape():
    grid = full_grid(n_reps=5)
    assert len(grid) == 96
    assert {c.dim for c in grid} == {2, 3}
    assert {c.n for c in grid} == {50, 100, 150, 200, 250, 300}
    meds = sorted({round(c.true_effects()["med"], 10) for c in grid})
    assert meds == [0.0, 0.0196, 0.1521, 0.3481]


def test_condition_truth_values():
    c = SimCondition(2, 100, 0.1521, 0.14)
    assert np.allclose(c.paths(), 0.39 / math.sqrt(2))
    eff = c.true_effects()
    assert eff["med"] == pytest.approx(0.1521, abs=1e-12)
    assert eff["total"] == pytest.approx(0.2921, abs=1e-12)
    assert c.truth().alpha == 0.0
    assert path_coefficient(0.25) == 0.5


def test_infeasible_condition_rejected():
    with pytest.raises(InfeasibleConditionError):
        SimCondition(2, 100, 0.5, 0.9)
    with pytest.raises(ValueError):
        SimCondition(2, 3, 0.0, 0.0)


def test_generator_unit_variances():
    x, z = generate_positions(SimCondition(2, 100_000, 0.0, 0.0), 0)
    assert np.allclose(z.var(axis=0), 1.0, rtol=0.05)
    cond = SimCondition(2, 5000, 0.3481, 0.14)
    ys = np.concatenate([generate_dataset(cond, s)[1].y for s in range(4)])
    assert ys.var() == pytest.approx(1.0, rel=0.05)


def test_generator_null_outcome_variance_large_n():
    # the network draw is O(n^2), so check the outcome variance on the position draw
    cond = SimCondition(2, 100_000, 0.0, 0.0)
    rng = np.random.default_rng(1)
    x, z = generate_positions(cond, 1)
    y = z @ cond.truth().b + math.sqrt(cond.truth().sigma2_sq) * rng.standard_normal(len(x))
    assert y.var() == pytest.approx(1.0, rel=0.05)


def test_generator_geometry():
    msd = {2: [], 3: []}
    dens = {2: [], 3: []}
    for d in (2, 3):
        cond = SimCondition(d, 300, 0.1521, 0.14)
        for s in range(20):
            net, _, _ = generate_dataset(cond, s)
            msd[d].append(mean_sq_distance(generate_positions(cond, s)[1]))
            dens[d].append(density(net))
    for d in (2, 3):
        assert np.mean(msd[d]) == pytest.approx(2 * d, rel=0.05)
    assert np.mean(dens[3]) < np.mean(dens[2])


def test_mean_sq_distance_helper():
    z = np.random.default_rng(0).standard_normal((30, 2))
    brute = np.mean([((z[i] - z[j]) ** 2).sum() for i in range(30) for j in range(30) if i != j])
    assert mean_sq_distance(z) == pytest.approx(brute)


def test_generate_positions_matches_dataset():
    cond = SimCondition(3, 60, 0.0196, 0.0)
    x, _ = generate_positions(cond, 9)
    _, data, _ = generate_dataset(cond, 9)
    assert np.array_equal(x, data.x)


def test_empirical_replica_density():
    dens = [density(generate_empirical_replica(s)[0]) for s in range(5)]
    assert np.mean(dens) == pytest.approx(0.162, abs=0.01)
    net, data, truth = generate_empirical_replica(0)
    assert net.n_actors == 162 and net.n_dyads == 13041
    assert data.is_binary and truth.dim == 5


def test_relative_bias_examples():
    assert relative_bias(0.3655, 0.3481) == pytest.approx(5.0, abs=0.01)
    assert relative_bias(0.002, 0.0) == pytest.approx(0.2)
    assert relative_bias(0.14, 0.14) == 0.0
    assert relative_bias(-0.15, -0.1) == pytest.approx(-50.0)


def test_coverage_examples():
    assert coverage_rate([(0, 1)] * 4, 0.5) == 100.0
    assert coverage_rate([(1, 2)] * 4, 0.5) == 0.0
    ivs = [(-1.0, 1.0)] * 95 + [(2.0, 3.0)] * 5
    assert coverage_rate(ivs, 0.0) == 95.0
    with pytest.raises(ValueError):
        coverage_rate([], 0.0)


def test_seed_streams_do_not_alias():
    g0, s0 = replication_seeds(10, 0)
    g1, s1 = replication_seeds(10, 1)
    assert (g0, g1) == (10, 11)
    a = s0.generate_state(4)
    assert not np.array_equal(a, s1.generate_state(4))
    assert not np.array_equal(a, np.random.SeedSequence(10).generate_state(4))


def fake_records(cond, means, half=0.1):
    return [{"rep": r, "seed": r, "ok": True, "error": "",
             **{f"{t}_{k}": v for t in ("med", "direct", "total")
                for k, v in (("mean", m), ("lo", m - half), ("hi", m + half))}}
            for r, m in enumerate(means)]


def test_aggregate_is_order_independent():
    cond = SimCondition(2, 50, 0.1521, 0.14, n_reps=4)
    recs = fake_records(cond, [0.10, 0.15, 0.20, 0.30])
    a = aggregate(cond, recs)
    b = aggregate(cond, list(reversed(recs)))
    assert grid_csv([a]) == grid_csv([b])
    assert replications_csv([a]) == replications_csv([b])
    assert a.targets["med"].mean_estimate == pytest.approx(0.1875)
    assert a.targets["med"].mean_ci_width == pytest.approx(0.2)


def test_aggregate_counts_failures():
    cond = SimCondition(2, 50, 0.0, 0.0, n_reps=3)
    recs = fake_records(cond, [0.0, 0.0]) + [{"rep": 2, "seed": 2, "ok": False, "error": "boom"}]
    rep = aggregate(cond, recs)
    assert rep.n_failed == 1
    assert rep.targets["med"].coverage_percent == 100.0


def test_plot_rows_are_clipped_but_raw_rows_are_not():
    cond = SimCondition(2, 50, 0.0196, 0.0, n_reps=2)
    rep = aggregate(cond, fake_records(cond, [0.05, 0.05]))
    raw = {r["target"]: r["rel_bias"] for r in rep.rows()}
    clipped = {r["target"]: r["rel_bias"] for r in rep.rows(clip=True)}
    assert raw["med"] > 100
    assert clipped["med"] == 20.0


def test_run_condition_is_deterministic():
    cond = SimCondition(2, 40, 0.1521, 0.14, n_reps=2, base_seed=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = run_condition(cond, TINY)
        b = run_condition(cond, TINY)
        g = run_grid([cond], TINY)
    assert grid_csv([a]) == grid_csv([b])
    assert replications_csv([a]) == replications_csv([b])
    assert grid_csv(g) == grid_csv([a])
    assert a.n_failed == 0


def test_parallel_matches_serial():
    cond = SimCondition(2, 40, 0.0, 0.0, n_reps=2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = run_condition(cond, TINY, threads=1)
        b = run_condition(cond, TINY, threads=2)
    assert replications_csv([a]) == replications_csv([b])


def test_run_grid_rejects_empty():
    with pytest.raises(ValueError):
        run_grid([], TINY)


def test_runtime_estimate_scales():
    small = estimate_runtime([SimCondition(2, 50, 0, 0, n_reps=10)], TINY)
    big = estimate_runtime([SimCondition(2, 300, 0, 0, n_reps=10)], TINY)
    assert 0 < small < big
    assert estimate_runtime(full_grid(), ChainConfig()) > 3600


def test_load_grid():
    grid = load_grid([{"D": 2, "n": 50, "med": 0.1521, "c_prime": 0.14}])
    assert grid[0].key() == {"D": 2, "n": 50, "med_true": 0.1521, "c_prime": 0.14}
    with pytest.raises(ValueError, match="lacks field"):
        load_grid([{"D": 2, "n": 50}])
