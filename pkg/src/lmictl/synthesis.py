"""Optimal state feedback under limited, full and statistical model information.

All policies produced here are affine in the parameter draws:

    u(k) = (K_bar + sum_s alpha_s(k) C_s) x(k)

and expose that form through ``affine(sys)``.  Infinite-horizon value
matrices come from monotone value iteration started at ``X = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from . import matstat
from .model import CostSpec, StochasticSystem, validate

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
DEFAULT_CAP = 1e12


class NotStabilizable(RuntimeError):
    """Value iteration blew up or stalled; numerical evidence only, not a proof."""

    def __init__(self, message: str, iterations: int, last_norm: float):
        super().__init__(message)
        self.iterations = iterations
        self.last_norm = last_norm


class NotFullyActuated(ValueError):
    pass


STALL_MESSAGES = {
    "lmi": "not mean square stabilizable under limited model information (numerically)",
    "fmi": "not mean square stabilizable under full model information (numerically)",
    "smi": "not mean square stabilizable (constant gain, numerically)",
    "dare": "not stabilizable (classical DARE, numerically)",
}


@dataclass(frozen=True, eq=False)
class AffineGain:
    """Realization-dependent gain ``K(alpha) = k_bar + sum_s alpha_s * corrections[s]``."""

    k_bar: np.ndarray
    corrections: tuple[np.ndarray, ...] = ()

    def gain(self, alphas=()) -> np.ndarray:
        k = np.array(self.k_bar, dtype=float)
        for a, c in zip(np.atleast_1d(np.asarray(alphas, dtype=float)), self.corrections):
            k += a * c
        return k

    def affine(self, sys: StochasticSystem) -> "AffineGain":
        if self.k_bar.shape != (sys.m, sys.n):
            raise ValueError(f"gain shape {self.k_bar.shape} does not match system {(sys.m, sys.n)}")
        corr = self.corrections or tuple(np.zeros((sys.m, sys.n)) for _ in sys.terms)
        if len(corr) != len(sys.terms):
            raise ValueError("one correction per stochastic term is required")
        return AffineGain(self.k_bar, tuple(corr))


@dataclass(frozen=True, eq=False)
class LmiGain:
    """Gain under limited model information.

    ``local[s]`` is the ``m_i x n`` correction of term ``s`` (owned by
    subsystem ``i``); only block-row ``i`` of the realized gain reads
    ``alpha_s``.
    """

    k_bar: np.ndarray
    local: tuple[np.ndarray, ...]
    subsystems: tuple[int, ...]
    input_dims: tuple[int, ...]

    regime = "lmi"

    def affine(self, sys: StochasticSystem) -> AffineGain:
        corr = []
        for c, i in zip(self.local, self.subsystems):
            full = np.zeros((sys.m, sys.n))
            full[sys.structure.input_slice(i)] = c
            corr.append(full)
        return AffineGain(self.k_bar, tuple(corr))


@dataclass(frozen=True, eq=False)
class FmiGain:
    """``u(k) = h A(k) x(k)``; every controller reads the whole realization."""

    h: np.ndarray

    regime = "fmi"

    def affine(self, sys: StochasticSystem) -> AffineGain:
        return AffineGain(self.h @ sys.a_bar, tuple(self.h @ t.basis for t in sys.terms))


@dataclass(frozen=True, eq=False)
class SmiGain:
    l: np.ndarray

    regime = "smi"

    def affine(self, sys: StochasticSystem) -> AffineGain:
        return AffineGain(self.l, tuple(np.zeros_like(self.l) for _ in sys.terms))


@dataclass(frozen=True, eq=False)
class DeadbeatGain:
    """Block-row ``i`` is ``-B_ii^{-1} [A_i1(k) ... A_iN(k)]``."""

    b_inv: np.ndarray

    regime = "deadbeat"

    def affine(self, sys: StochasticSystem) -> AffineGain:
        return AffineGain(-self.b_inv @ sys.a_bar, tuple(-self.b_inv @ t.basis for t in sys.terms))


@dataclass
class ValueCertificate:
    p: np.ndarray
    iterations: int
    residual: float
    rel_residual: float
    regime: str
    tol: float


@dataclass
class FiniteSolution:
    p: list[np.ndarray]
    gains: list = field(default_factory=list)


# -- Riccati maps -------------------------------------------------------------

def _inner(x: np.ndarray, b: np.ndarray, r: np.ndarray) -> np.ndarray:
    xb = x @ b
    return x - xb @ np.linalg.solve(r + b.T @ xb, xb.T)


def _lmi_map(sys: StochasticSystem, q: np.ndarray, r: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    b = sys.b
    st = sys.structure
    local = [
        (sys.embed_b(i), r[st.input_slice(i), st.input_slice(i)], sys.atilde_terms(i))
        for i in range(st.N)
    ]
    local = [item for item in local if item[2]]

    def f(x):
        out = q + sys.a_bar.T @ _inner(x, b, r) @ sys.a_bar
        for bi, rii, terms in local:
            out = out + matstat.expected_quad(terms, _inner(x, bi, rii))
        return matstat.symmetrize(out)

    return f


def _fmi_map(sys: StochasticSystem, q: np.ndarray, r: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    b = sys.b
    terms = sys.term_pairs()

    def f(x):
        inner = _inner(x, b, r)
        return matstat.symmetrize(q + sys.a_bar.T @ inner @ sys.a_bar + matstat.expected_quad(terms, inner))

    return f


def _smi_map(sys: StochasticSystem, q: np.ndarray, r: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    b = sys.b
    terms = sys.term_pairs()

    def f(x):
        return matstat.symmetrize(
            q + sys.a_bar.T @ _inner(x, b, r) @ sys.a_bar + matstat.expected_quad(terms, x)
        )

    return f


def _dare_map(a, b, q, r):
    def f(x):
        return matstat.symmetrize(q + a.T @ _inner(x, b, r) @ a)

    return f


def value_iteration(
    f: Callable[[np.ndarray], np.ndarray],
    n: int,
    regime: str,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    cap: float = DEFAULT_CAP,
    callback: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
) -> ValueCertificate:
    """Iterate ``X_{i+1} = f(X_i)`` from ``X_0 = 0``.

    Stops when ``max|X_{i+1} - X_i| <= tol * max(1, max|X_{i+1}|)``.  The
    relative scaling keeps the rule meaningful for value matrices whose
    entries are in the thousands, where an absolute 1e-12 sits below round-off.
    """
    x = np.zeros((n, n))
    for it in range(1, max_iter + 1):
        nxt = f(x)
        if callback is not None:
            callback(it, x, nxt)
        scale = float(np.abs(nxt).max())
        if not np.isfinite(scale) or scale > cap:
            raise NotStabilizable(STALL_MESSAGES[regime], it, scale)
        step = float(np.abs(nxt - x).max())
        x = nxt
        if step <= tol * max(1.0, scale):
            res = float(np.abs(f(x) - x).max())
            return ValueCertificate(x, it, res, res / max(1.0, scale), regime, tol)
    raise NotStabilizable(STALL_MESSAGES[regime] + f" [no convergence in {max_iter} iterations]", max_iter,
                          float(np.abs(x).max()))


def _infinite_cost(sys: StochasticSystem, cost: CostSpec) -> tuple[np.ndarray, np.ndarray]:
    problems = validate(sys, cost, "infinite")
    if problems:
        raise ValueError("; ".join(problems))
    return np.asarray(cost.q), np.asarray(cost.r)


def _lmi_gain(sys: StochasticSystem, p: np.ndarray, r: np.ndarray, a_bar=None) -> LmiGain:
    b = sys.b
    a_bar = sys.a_bar if a_bar is None else a_bar
    k_bar = -np.linalg.solve(r + b.T @ p @ b, b.T @ p @ a_bar)
    st = sys.structure
    local, owners = [], []
    for t in sys.terms:
        i = t.subsystem
        bi = sys.embed_b(i)
        s = st.input_slice(i)
        local.append(-np.linalg.solve(r[s, s] + bi.T @ p @ bi, bi.T @ p @ t.basis))
        owners.append(i)
    return LmiGain(k_bar, tuple(local), tuple(owners), st.input_dims)


def _full_h(sys: StochasticSystem, p: np.ndarray, r: np.ndarray) -> np.ndarray:
    b = sys.b
    return -np.linalg.solve(r + b.T @ p @ b, b.T @ p)


def infinite_lmi(sys, cost, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, cap=DEFAULT_CAP, callback=None):
    q, r = _infinite_cost(sys, cost)
    cert = value_iteration(_lmi_map(sys, q, r), sys.n, "lmi", tol, max_iter, cap, callback)
    return cert, _lmi_gain(sys, cert.p, r)


def infinite_fmi(sys, cost, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, cap=DEFAULT_CAP, callback=None):
    q, r = _infinite_cost(sys, cost)
    cert = value_iteration(_fmi_map(sys, q, r), sys.n, "fmi", tol, max_iter, cap, callback)
    return cert, FmiGain(_full_h(sys, cert.p, r))


def infinite_smi(sys, cost, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, cap=DEFAULT_CAP, callback=None):
    """Best constant gain: ``P = Q + R(A_bar, P, B, R) + E{A~' P A~}``."""
    q, r = _infinite_cost(sys, cost)
    cert = value_iteration(_smi_map(sys, q, r), sys.n, "smi", tol, max_iter, cap, callback)
    return cert, SmiGain(_full_h(sys, cert.p, r) @ sys.a_bar)


def classical_dare(a, b, q, r, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, cap=DEFAULT_CAP) -> ValueCertificate:
    a, b, q, r = (matstat.as_matrix(x) for x in (a, b, q, r))
    return value_iteration(_dare_map(a, b, q, r), a.shape[0], "dare", tol, max_iter, cap)


SOLVERS = {"lmi": infinite_lmi, "fmi": infinite_fmi, "smi": infinite_smi}


def deadbeat(sys: StochasticSystem) -> DeadbeatGain:
    inv_blocks = []
    for i, bii in enumerate(sys.b_blocks):
        if bii.shape[0] != bii.shape[1]:
            raise NotFullyActuated(
                f"not fully-actuated: B_{i}{i} is {bii.shape[0]}x{bii.shape[1]}, deadbeat needs square blocks"
            )
        if np.linalg.cond(bii) > 1e12:
            raise NotFullyActuated(f"not fully-actuated: B_{i}{i} is singular")
        inv_blocks.append(np.linalg.inv(bii))
    return DeadbeatGain(sla.block_diag(*inv_blocks))


# -- finite horizon -------------------------------------------------------------

def _per_step(sys, horizon: int) -> list[StochasticSystem]:
    if isinstance(sys, StochasticSystem):
        return [sys] * horizon
    seq = list(sys)
    if len(seq) != horizon:
        raise ValueError(f"need {horizon} per-step systems, got {len(seq)}")
    return seq


def _finite_checks(systems, cost: CostSpec, horizon: int) -> None:
    if int(horizon) < 1:
        raise ValueError("horizon must be >= 1")
    problems = validate(systems[0], cost, int(horizon))
    if problems:
        raise ValueError("; ".join(problems))


def finite_lmi(sys, cost: CostSpec, horizon: int) -> FiniteSolution:
    """Backward recursion for limited model information.

    ``sys`` may be one system or a sequence of ``horizon`` per-step systems
    sharing a block structure (time-varying statistics).
    """
    systems = _per_step(sys, horizon)
    _finite_checks(systems, cost, horizon)
    r = np.asarray(cost.r)
    p = [None] * (horizon + 1)
    gains = [None] * horizon
    p[horizon] = np.array(cost.terminal(horizon))
    for k in range(horizon - 1, -1, -1):
        s = systems[k]
        p[k] = _lmi_map(s, cost.q_at(k), r)(p[k + 1])
        gains[k] = _lmi_gain(s, p[k + 1], r)
    return FiniteSolution(p, gains)


def finite_fmi(sys, cost: CostSpec, horizon: int) -> FiniteSolution:
    systems = _per_step(sys, horizon)
    _finite_checks(systems, cost, horizon)
    r = np.asarray(cost.r)
    p = [None] * (horizon + 1)
    gains = [None] * horizon
    p[horizon] = np.array(cost.terminal(horizon))
    for k in range(horizon - 1, -1, -1):
        s = systems[k]
        p[k] = _fmi_map(s, cost.q_at(k), r)(p[k + 1])
        gains[k] = FmiGain(_full_h(s, p[k + 1], r))
    return FiniteSolution(p, gains)


def as_schedule(policy, horizon: int) -> list:
    if isinstance(policy, (list, tuple)):
        if len(policy) != horizon:
            raise ValueError(f"gain schedule has {len(policy)} entries, horizon is {horizon}")
        return list(policy)
    return [policy] * horizon


def closed_loop_update(sys: StochasticSystem, q, r, gain: AffineGain, p_next: np.ndarray) -> np.ndarray:
    """One step of the exact cost recursion for an affine policy."""
    b = sys.b
    m0 = sys.a_bar + b @ gain.k_bar
    out = q + gain.k_bar.T @ r @ gain.k_bar + m0.T @ p_next @ m0
    for t, c in zip(sys.terms, gain.corrections):
        ms = t.basis + b @ c
        out = out + t.variance * (c.T @ r @ c + ms.T @ p_next @ ms)
    return matstat.symmetrize(out)


def evaluate_finite(sys, cost: CostSpec, policy, horizon: int) -> list[np.ndarray]:
    """Exact closed-loop cost matrices ``P(0..T)`` of a (scheduled) affine policy."""
    systems = _per_step(sys, horizon)
    sched = as_schedule(policy, horizon)
    r = np.asarray(cost.r)
    p = [None] * (horizon + 1)
    p[horizon] = np.array(cost.terminal(horizon))
    for k in range(horizon - 1, -1, -1):
        p[k] = closed_loop_update(systems[k], cost.q_at(k), r, sched[k].affine(systems[k]), p[k + 1])
    return p
