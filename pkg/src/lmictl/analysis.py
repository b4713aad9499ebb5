"""Mean-square stability, exact policy evaluation and the value of information.

The second-moment transition of a closed loop ``x+ = M(alpha) x`` with
``M(alpha) = M_0 + sum_s alpha_s M_s`` is

    U_bar = M_0' (x) M_0' + sum_s var_s * M_s' (x) M_s'

acting on ``vec(W)``, so ``W_{k+1} = vec^-1(U_bar vec(W_k))`` propagates the
expected cost-to-go weight one step.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import matstat
from .model import CostSpec, StochasticSystem, normalize_cost
from .synthesis import AffineGain, NotStabilizable, infinite_fmi, infinite_lmi

MS_MARGIN = 1e-10
LU_COND_WARN = 1e12


@dataclass
class SecondMomentMap:
    u_bar: np.ndarray
    rho: float


@dataclass
class RatioReport:
    r: float
    p_num: np.ndarray | None
    p_den: np.ndarray | None
    epsilon: float | None = None
    bound: float | None = None
    regime_gap: bool = False


def _closed_loop(sys: StochasticSystem, policy) -> tuple[np.ndarray, list[tuple[float, np.ndarray]], AffineGain]:
    if not hasattr(policy, "affine"):
        raise TypeError(f"policy {type(policy).__name__} is not affine in the parameter draws")
    gain = policy.affine(sys)
    b = sys.b
    m0 = sys.a_bar + b @ gain.k_bar
    parts = [(t.variance, t.basis + b @ c) for t, c in zip(sys.terms, gain.corrections)]
    return m0, parts, gain


def second_moment_map(sys: StochasticSystem, policy) -> SecondMomentMap:
    m0, parts, _ = _closed_loop(sys, policy)
    u_bar = np.kron(m0.T, m0.T)
    for var, ms in parts:
        u_bar += var * np.kron(ms.T, ms.T)
    return SecondMomentMap(u_bar, matstat.spectral_radius(u_bar))


def is_ms_stable(sys: StochasticSystem, policy, margin: float = MS_MARGIN) -> tuple[bool, float]:
    """Return ``(stable, rho)`` where ``rho`` is the spectral radius of ``U_bar``."""
    rho = second_moment_map(sys, policy).rho
    return rho < 1.0 - margin, rho


def stage_weight(sys: StochasticSystem, cost: CostSpec, policy) -> np.ndarray:
    """``Q + E{K(alpha)' R K(alpha)}`` for a constant-in-time affine policy."""
    gain = policy.affine(sys)
    r = np.asarray(cost.r)
    w = np.asarray(cost.q) + gain.k_bar.T @ r @ gain.k_bar
    for t, c in zip(sys.terms, gain.corrections):
        w = w + t.variance * (c.T @ r @ c)
    return matstat.symmetrize(w)


def policy_value_infinite(sys: StochasticSystem, cost: CostSpec, policy) -> np.ndarray:
    """Exact infinite-horizon cost matrix of a stationary affine policy."""
    smm = second_moment_map(sys, policy)
    if smm.rho >= 1.0 - MS_MARGIN:
        raise NotStabilizable(
            f"closed loop is not mean square stable (rho={smm.rho:.6g}); cost is infinite", 0, math.inf
        )
    n = sys.n
    lhs = np.eye(n * n) - smm.u_bar
    if np.linalg.cond(lhs) > LU_COND_WARN:
        warnings.warn("I - U_bar is badly conditioned; value matrix may be inaccurate", RuntimeWarning)
    w0 = stage_weight(sys, cost, policy)
    return matstat.symmetrize(matstat.vec_inv(np.linalg.solve(lhs, matstat.vec(w0)), n, n))


def truncated_value(sys: StochasticSystem, cost: CostSpec, policy, horizon: int) -> np.ndarray:
    """``sum_{k<T} W_k`` with ``W_0`` the stage weight; equals the horizon-T cost with zero terminal weight."""
    smm = second_moment_map(sys, policy)
    n = sys.n
    w = matstat.vec(stage_weight(sys, cost, policy))
    total = np.zeros_like(w)
    for _ in range(horizon):
        total += w
        w = smm.u_bar @ w
    return matstat.symmetrize(matstat.vec_inv(total, n, n))


def degradation_ratio(p_lmi, p_fmi) -> RatioReport:
    """sup over x0 of x0'P_lmi x0 / x0'P_fmi x0, as a top generalized eigenvalue."""
    r = matstat.max_gen_eig(p_lmi, p_fmi)
    return RatioReport(r, np.asarray(p_lmi), np.asarray(p_fmi))


def epsilon_bound(sys: StochasticSystem) -> tuple[float, float] | None:
    """``(eps, 1 + 1/eps^2)`` for fully-actuated systems, ``None`` otherwise."""
    eps = math.inf
    for bii in sys.b_blocks:
        if bii.shape[0] != bii.shape[1]:
            return None
        eps = min(eps, float(np.linalg.svd(bii, compute_uv=False).min()))
    if not eps > 0.0:
        return None
    return eps, 1.0 + 1.0 / eps**2


def compare_information(sys: StochasticSystem, cost: CostSpec, **solver_kw) -> RatioReport:
    """Degradation ratio with the full-actuation bound where it applies.

    The bound is stated for ``Q = R = I``; other block-diagonal weights are
    first normalized away.  If the full-information design converges but the
    limited-information one does not, ``r`` is reported as infinity with
    ``regime_gap`` set.
    """
    work = sys
    if not (np.array_equal(cost.q, np.eye(sys.n)) and np.array_equal(cost.r, np.eye(sys.m))):
        work = normalize_cost(sys, cost)
    cost_i = CostSpec.identity(work.structure)
    cert_f, _ = infinite_fmi(work, cost_i, **solver_kw)
    eb = epsilon_bound(work)
    eps, bound = eb if eb else (None, None)
    try:
        cert_l, _ = infinite_lmi(work, cost_i, **solver_kw)
    except NotStabilizable:
        return RatioReport(math.inf, None, cert_f.p, eps, bound, regime_gap=True)
    rep = degradation_ratio(cert_l.p, cert_f.p)
    rep.epsilon, rep.bound = eps, bound
    return rep
