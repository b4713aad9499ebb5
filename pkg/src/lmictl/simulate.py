"""Monte Carlo rollouts and empirical cost estimates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import CostSpec, StochasticSystem
from .synthesis import as_schedule


@dataclass(frozen=True)
class SimConfig:
    trials: int
    horizon: int
    seed: int
    x0: tuple[float, ...]

    def __post_init__(self):
        if self.trials < 1 or self.horizon < 1:
            raise ValueError("trials and horizon must be >= 1")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))


@dataclass
class CostEstimate:
    mean: float
    std_error: float
    trials: int
    costs: np.ndarray | None = field(default=None, repr=False)


@dataclass
class Trajectory:
    states: np.ndarray  # (T+1, n)
    inputs: np.ndarray  # (T, m)
    stage_costs: np.ndarray  # (T+1,), last entry is the terminal cost
    alphas: np.ndarray  # (T, S)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-style stream for one trial; independent of how trials are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def draw_alphas(sys: StochasticSystem, rng: np.random.Generator, horizon: int) -> np.ndarray:
    return sys.sample_alphas(rng, (horizon,))


def _gain_arrays(sys: StochasticSystem, policy, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    sched = [p.affine(sys) for p in as_schedule(policy, horizon)]
    k_bar = np.ascontiguousarray(np.stack([g.k_bar for g in sched]), dtype=float)
    nterms = len(sys.terms)
    corr = np.zeros((horizon, nterms, sys.m, sys.n))
    for k, g in enumerate(sched):
        for s, c in enumerate(g.corrections):
            corr[k, s] = c
    return k_bar, corr


def _q_stack(cost: CostSpec, horizon: int) -> np.ndarray:
    return np.ascontiguousarray(np.stack([cost.q_at(k) for k in range(horizon)] + [cost.terminal(horizon)]))


def rollout(sys: StochasticSystem, cost: CostSpec, policy, x0, horizon: int, seed) -> tuple[Trajectory, float]:
    """Simulate one closed-loop trajectory.

    Each controller reads the realization through the affine form of its
    policy, so an LMI gain's block-row ``i`` only ever sees subsystem ``i``'s
    draws.  ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sched = [p.affine(sys) for p in as_schedule(policy, horizon)]
    alphas = draw_alphas(sys, rng, horizon)
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({sys.n},)")
    r = np.asarray(cost.r)
    states = [x]
    inputs, stage = [], []
    b = sys.b
    for k in range(horizon):
        u = sched[k].gain(alphas[k]) @ x
        stage.append(float(x @ cost.q_at(k) @ x + u @ r @ u))
        x = sys.realize(alphas[k]) @ x + b @ u
        states.append(x)
        inputs.append(u)
    stage.append(float(x @ cost.terminal(horizon) @ x))
    traj = Trajectory(np.array(states), np.array(inputs).reshape(horizon, sys.m), np.array(stage), alphas)
    return traj, math.fsum(stage)


def kernel_inputs(sys: StochasticSystem, cost: CostSpec, policy, cfg: SimConfig) -> tuple:
    """Contiguous arrays in the argument order of the rollout kernels."""
    x0 = np.asarray(cfg.x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ValueError(f"x0 has shape {x0.shape}, expected ({sys.n},)")
    alphas = np.empty((cfg.trials, cfg.horizon, len(sys.terms)))
    for t in range(cfg.trials):
        alphas[t] = draw_alphas(sys, trial_rng(cfg.seed, t), cfg.horizon)
    k_bar, corr = _gain_arrays(sys, policy, cfg.horizon)
    bases = np.stack([t.basis for t in sys.terms]) if sys.terms else np.zeros((0, sys.n, sys.n))
    return tuple(
        np.ascontiguousarray(a, dtype=float)
        for a in (sys.a_bar, bases, sys.b, k_bar, corr, _q_stack(cost, cfg.horizon), cost.r, x0, alphas)
    )


def estimate_cost(
    sys: StochasticSystem,
    cost: CostSpec,
    policy,
    cfg: SimConfig,
    keep_costs: bool = False,
    backend=None,
) -> CostEstimate:
    """Mean realized cost over ``cfg.trials`` independent trials."""
    kernel = backend or kernels.rollout_costs
    costs = np.asarray(kernel(*kernel_inputs(sys, cost, policy, cfg)))
    return summarize(costs, keep_costs)


def summarize(costs: np.ndarray, keep_costs: bool = False) -> CostEstimate:
    n = costs.size
    mean = math.fsum(costs) / n
    if n > 1 and np.ptp(costs) > 0:
        var = math.fsum((c - mean) ** 2 for c in costs) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return CostEstimate(mean, se, n, costs if keep_costs else None)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """One row per step: step, states, inputs, instantaneous cost.  The final row has no inputs."""
    n = traj.states.shape[1]
    m = traj.inputs.shape[1]
    horizon = traj.inputs.shape[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + [f"x{i}" for i in range(n)] + [f"u{j}" for j in range(m)] + ["cost"])
        for k in range(horizon + 1):
            u = [repr(float(v)) for v in traj.inputs[k]] if k < horizon else [""] * m
            w.writerow([k] + [repr(float(v)) for v in traj.states[k]] + u + [repr(float(traj.stage_costs[k]))])
