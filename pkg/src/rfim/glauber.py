"""Single-site heat-bath (Glauber) dynamics with the path-coupling
mixing-time bound, plus the coupled-chain drift experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .graph import max_degree
from .model import IsingInstance, influence_bound


@dataclass
class ChainState:
    config: np.ndarray
    steps_taken: int
    rng: np.random.Generator


def start_state(inst: IsingInstance, seed: int, init_spin: int = +1) -> ChainState:
    config = np.full(inst.graph.n, init_spin, dtype=int)
    for v, s in inst.boundary.items():
        config[v] = s
    return ChainState(config=config, steps_taken=0, rng=np.random.default_rng(seed))


def conditional_plus_probability(inst: IsingInstance, config: np.ndarray, x: int) -> float:
    """Exact Gibbs conditional P(sigma_x = +1 | neighbor spins)."""
    neigh_sum = sum(config[y] for y in inst.graph.adjacency[x])
    return float(expit(2.0 * inst.fields[x] + 2.0 * inst.beta * neigh_sum))


def glauber_step(state: ChainState, inst: IsingInstance) -> ChainState:
    """One update: resample a uniformly chosen free vertex from its exact
    conditional given its neighbors."""
    free = inst.free_vertices
    if not free:
        raise ValueError("no free vertex to update")
    x = free[int(state.rng.integers(len(free)))]
    p = conditional_plus_probability(inst, state.config, x)
    config = state.config.copy()
    config[x] = +1 if state.rng.random() < p else -1
    return ChainState(config=config, steps_taken=state.steps_taken + 1, rng=state.rng)


def mixing_time_bound(n: int, delta: int, beta: float, h_min: float, eps: float) -> int | None:
    """Path-coupling mixing-time bound, or None (no guarantee) when the
    per-step contraction delta*M(delta, h_min, beta) < 1 fails."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0,1)")
    contraction = 1.0 - delta * influence_bound(delta, h_min, beta)
    if contraction <= 0.0:
        return None
    return math.ceil(n * math.log(n / eps) / contraction)


def glauber_sample(inst: IsingInstance, eps: float, seed: int) -> np.ndarray | None:
    """Run the chain from the all-(+1) start for the certified number of steps;
    None when no mixing guarantee exists."""
    free = inst.free_vertices
    state = start_state(inst, seed)
    if not free:
        return state.config
    h_min = float(np.min(np.abs(inst.fields[free])))
    steps = mixing_time_bound(inst.graph.n, max_degree(inst.graph), inst.beta, h_min, eps)
    if steps is None:
        return None
    return run_chain(inst, steps, seed)


def run_chain(inst: IsingInstance, steps: int, seed: int, init_spin: int = +1) -> np.ndarray:
    """Final configuration after `steps` Glauber updates (single chain)."""
    return run_chains(inst, steps, 1, seed, init_spin)[0]


def run_chains(
    inst: IsingInstance, steps: int, n_chains: int, seed: int, init_spin: int = +1
) -> np.ndarray:
    """Run independent chains in lockstep, vectorized across chains.

    All chains draw from one generator in a fixed interleaving, so the
    result is deterministic given (seed, steps, n_chains).
    """
    rng = np.random.default_rng(seed)
    n = inst.graph.n
    free = np.array(inst.free_vertices, dtype=int)
    configs = np.full((n_chains, n), init_spin, dtype=np.int8)
    for v, s in inst.boundary.items():
        configs[:, v] = s
    if len(free) == 0 or steps == 0:
        return configs.astype(int)
    adj = np.zeros((n, n))
    for a in range(n):
        for b in inst.graph.adjacency[a]:
            adj[a, b] = 1.0
    rows = np.arange(n_chains)
    for _ in range(steps):
        xs = free[rng.integers(len(free), size=n_chains)]
        neigh_sum = np.einsum("rn,rn->r", configs, adj[xs])
        p = expit(2.0 * inst.fields[xs] + 2.0 * inst.beta * neigh_sum)
        configs[rows, xs] = np.where(rng.random(n_chains) < p, 1, -1)
    return configs.astype(int)


def coupled_drift_estimate(
    inst: IsingInstance, trials: int, seed: int
) -> tuple[float, float]:
    """Per-step Hamming-distance drift for the identity coupling.

    Each trial starts two chains at a random pair of configurations differing
    at one random free vertex, applies one coupled update (same vertex, same
    uniform variate), and records the change in Hamming distance.  Returns
    (mean change, standard error).
    """
    rng = np.random.default_rng(seed)
    free = inst.free_vertices
    if not free:
        raise ValueError("no free vertex")
    changes = np.empty(trials)
    for t in range(trials):
        config = np.where(rng.random(inst.graph.n) < 0.5, 1, -1)
        for v, s in inst.boundary.items():
            config[v] = s
        y = free[int(rng.integers(len(free)))]
        other = config.copy()
        other[y] = -other[y]
        x = free[int(rng.integers(len(free)))]
        u = rng.random()
        pa = conditional_plus_probability(inst, config, x)
        pb = conditional_plus_probability(inst, other, x)
        config[x] = +1 if u < pa else -1
        other[x] = +1 if u < pb else -1
        changes[t] = int(np.sum(config != other)) - 1
    return float(changes.mean()), float(changes.std(ddof=1) / math.sqrt(trials))
