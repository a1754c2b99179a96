import itertools
import math

import numpy as np
import pytest

from rfim import glauber as GL
from rfim.glauber import (
    conditional_plus_probability,
    coupled_drift_estimate,
    glauber_sample,
    glauber_step,
    mixing_time_bound,
    run_chains,
    start_state,
)
from rfim.graph import Graph
from rfim.model import IsingInstance, exact_marginal, exact_region_law

from conftest import random_connected_graph

TRIANGLE = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])


def test_conditional_is_gibbs_conditional(rng):
    # the update kernel agrees with the exact conditional obtained by
    # conditioning every neighbor
    for _ in range(10):
        n = int(rng.integers(3, 8))
        g = random_connected_graph(n, rng)
        inst = IsingInstance(g, float(rng.uniform(-2, 2)), rng.uniform(-2, 2, n))
        config = rng.choice([-1, 1], n)
        x = int(rng.integers(n))
        extra = {int(y): int(config[y]) for y in g.adjacency[x]}
        assert conditional_plus_probability(inst, config, x) == pytest.approx(
            exact_marginal(inst, x, extra), abs=1e-12
        )


def test_step_examples():
    lone = IsingInstance(Graph.from_edges(1, []), 1.0, np.zeros(1))
    hits = 0
    state = start_state(lone, 5)
    for _ in range(2000):
        state = glauber_step(state, lone)
        hits += state.config[0] == 1
    assert abs(hits / 2000 - 0.5) < 0.05

    # strong coupling with +1 neighbors pins the update
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    inst = IsingInstance(star, 30.0, np.zeros(4), {1: 1, 2: 1, 3: 1})
    assert conditional_plus_probability(inst, np.array([1, 1, 1, 1]), 0) == pytest.approx(1.0)


def test_step_requires_free_vertex():
    g = Graph.from_edges(2, [(0, 1)])
    inst = IsingInstance(g, 1.0, np.zeros(2), {0: 1, 1: 1})
    with pytest.raises(ValueError):
        glauber_step(start_state(inst, 0), inst)


def test_mixing_bound_beta_zero():
    for n, eps in [(10, 0.1), (50, 0.01)]:
        assert mixing_time_bound(n, 3, 0.0, 0.0, eps) == math.ceil(n * math.log(n / eps))


def test_mixing_bound_at_field_threshold():
    # |h| >= delta|beta| + 0.5 log(delta) keeps delta*M below 1
    for delta in (2, 3, 5):
        for beta in (0.5, 1.0, 2.0):
            h0 = delta * beta + 0.5 * math.log(delta)
            assert mixing_time_bound(20, delta, beta, h0, 0.1) is not None


def test_no_guarantee_honesty():
    assert mixing_time_bound(10, 3, 2.0, 0.0, 0.1) is None
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    inst = IsingInstance(g, 2.0, np.zeros(4))
    assert glauber_sample(inst, 0.1, 0) is None


def test_glauber_sample_all_fixed():
    g = Graph.from_edges(2, [(0, 1)])
    inst = IsingInstance(g, 2.0, np.zeros(2), {0: 1, 1: -1})
    assert list(glauber_sample(inst, 0.1, 0)) == [1, -1]


def test_empirical_stationarity_triangle():
    inst = IsingInstance(TRIANGLE, 0.7, np.array([0.1, 0.2, -0.1]))
    law = exact_region_law(inst, [0, 1, 2])
    # long-run occupation frequencies of a single chain after burn-in
    steps, chains = 400, 20000
    finals = run_chains(inst, steps, chains, seed=9)
    counts = {}
    for row in finals:
        counts[tuple(row)] = counts.get(tuple(row), 0) + 1
    tv = 0.5 * sum(
        abs(counts.get(cfg, 0) / chains - law.get(cfg, 0.0))
        for cfg in itertools.product([-1, 1], repeat=3)
    )
    assert tv <= 0.02


def test_run_chains_deterministic():
    inst = IsingInstance(TRIANGLE, 0.5, np.array([0.3, -0.2, 0.1]))
    a = run_chains(inst, 100, 8, seed=3)
    b = run_chains(inst, 100, 8, seed=3)
    assert np.array_equal(a, b)
    c = run_chains(inst, 100, 8, seed=4)
    assert not np.array_equal(a, c)


def test_run_chains_respects_boundary():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    inst = IsingInstance(g, 1.0, np.zeros(3), {1: -1})
    finals = run_chains(inst, 50, 16, seed=2)
    assert np.all(finals[:, 1] == -1)


def test_coupled_drift_contracts_under_large_fields(rng):
    g = random_connected_graph(8, rng)
    delta = max(len(a) for a in g.adjacency)
    beta = 0.8
    h0 = delta * beta + 0.5 * math.log(delta)
    h = rng.choice([-1, 1], 8) * (h0 + rng.uniform(0, 0.5, 8))
    inst = IsingInstance(g, beta, h)
    mean, se = coupled_drift_estimate(inst, 10000, seed=1)
    assert mean <= 3 * se
