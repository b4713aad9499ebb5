"""Two-machine power network scenarios.

Both networks share the sine power-flow coupling

    P_1 = sin(d1 - d2)/c12 + sin(d1)/c1,   P_2 = sin(d2 - d1)/c12 + sin(d2)/c2

around an operating point found by Newton's method from the origin.  The
linearized dynamics are discretized with a forward Euler step, and the local
load admittance ``1/c_i`` fluctuates by ``alpha_i(k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import CostSpec, StochasticSystem, StochasticTerm

# Inertia and damping in p.u. for a 50 Hz system: M = H / (50 pi).  Rounded to
# two digits these are the tabulated 2.6e-2, 3.2e-2 and 6.4e-3.
_M1 = 4.0 / (50.0 * math.pi)
_M2 = 5.0 / (50.0 * math.pi)
_D = 1.0 / (50.0 * math.pi)


@dataclass(frozen=True)
class SwingParams:
    m1: float = _M1
    m2: float = _M2
    d1: float = _D
    d2: float = _D
    c12: float = 0.40
    c1: float = 0.50
    c2: float = 0.50
    p1: float = 1.6
    p2: float = 1.2
    dt: float = 0.3
    load_std: tuple[float, float] = (0.1, 0.3)
    # overrides the linearized admittance sensitivities dt*cos(d_i)/M_i
    load_sensitivity: tuple[float, float] | None = None

    def __post_init__(self):
        for name in ("m1", "m2", "d1", "d2", "c12", "c1", "c2", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def variances(self) -> tuple[float, float]:
        return (self.load_std[0] ** 2, self.load_std[1] ** 2)


@dataclass(frozen=True)
class DroopParams:
    d1: float = 1.0
    d2: float = 1.0
    c12: float = 0.40
    c1: float = 0.50
    c2: float = 0.50
    p1: float = 1.6
    p2: float = 1.2
    dt: float = 0.3
    load_std: tuple[float, float] = (0.1, 0.3)
    load_sensitivity: tuple[float, float] | None = None

    def __post_init__(self):
        for name in ("d1", "d2", "c12", "c1", "c2", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def variances(self) -> tuple[float, float]:
        return (self.load_std[0] ** 2, self.load_std[1] ** 2)


class EquilibriumError(RuntimeError):
    pass


def power_mismatch(params, delta) -> np.ndarray:
    d1, d2 = delta
    return np.array([
        params.p1 - math.sin(d1 - d2) / params.c12 - math.sin(d1) / params.c1,
        params.p2 - math.sin(d2 - d1) / params.c12 - math.sin(d2) / params.c2,
    ])


def _mismatch_jacobian(params, delta) -> np.ndarray:
    d1, d2 = delta
    cc = math.cos(d1 - d2) / params.c12
    return -np.array([
        [cc + math.cos(d1) / params.c1, -cc],
        [-cc, cc + math.cos(d2) / params.c2],
    ])


def equilibrium(params, tol: float = 1e-12, max_steps: int = 100) -> tuple[float, float]:
    """Operating angles from Newton's method started at (0, 0)."""
    delta = np.zeros(2)
    for _ in range(max_steps):
        res = power_mismatch(params, delta)
        if np.abs(res).max() <= tol:
            if np.abs(delta).max() >= math.pi / 2:
                raise EquilibriumError(f"Newton left the small-angle branch: {delta}")
            return float(delta[0]), float(delta[1])
        jac = _mismatch_jacobian(params, delta)
        if abs(np.linalg.det(jac)) < 1e-14:
            raise EquilibriumError("power-flow Jacobian is singular")
        delta = delta - np.linalg.solve(jac, res)
    raise EquilibriumError(f"Newton did not converge in {max_steps} steps")


def swing_field(params: SwingParams, state) -> np.ndarray:
    """Continuous-time vector field, state = (d1, w1, d2, w2)."""
    d1, w1, d2, w2 = state
    return np.array([
        w1,
        (params.p1 - math.sin(d1 - d2) / params.c12 - math.sin(d1) / params.c1 - params.d1 * w1) / params.m1,
        w2,
        (params.p2 - math.sin(d2 - d1) / params.c12 - math.sin(d2) / params.c2 - params.d2 * w2) / params.m2,
    ])


def swing_jacobian(params: SwingParams, delta) -> np.ndarray:
    d1, d2 = delta
    cc = math.cos(d1 - d2) / params.c12
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-(cc + math.cos(d1) / params.c1) / params.m1, -params.d1 / params.m1, cc / params.m1, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [cc / params.m2, 0.0, -(cc + math.cos(d2) / params.c2) / params.m2, -params.d2 / params.m2],
    ])


def droop_field(params: DroopParams, state) -> np.ndarray:
    d1, d2 = state
    return np.array([
        (params.p1 - math.sin(d1 - d2) / params.c12 - math.sin(d1) / params.c1) / params.d1,
        (params.p2 - math.sin(d2 - d1) / params.c12 - math.sin(d2) / params.c2) / params.d2,
    ])


def droop_jacobian(params: DroopParams, delta) -> np.ndarray:
    d1, d2 = delta
    cc = math.cos(d1 - d2) / params.c12
    return np.array([
        [-(cc + math.cos(d1) / params.c1) / params.d1, cc / params.d1],
        [cc / params.d2, -(cc + math.cos(d2) / params.c2) / params.d2],
    ])


def swing_sensitivities(params: SwingParams) -> tuple[float, float]:
    d1, d2 = equilibrium(params)
    return (params.dt * math.cos(d1) / params.m1, params.dt * math.cos(d2) / params.m2)


def build_swing_system(params: SwingParams = SwingParams()) -> StochasticSystem:
    """Euler-discretized linearization of the two-generator swing network.

    States per generator are (angle deviation, frequency deviation); each
    generator has one input entering its frequency row.
    """
    delta = equilibrium(params)
    a_bar = np.eye(4) + params.dt * swing_jacobian(params, delta)
    sens = params.load_sensitivity or swing_sensitivities(params)
    v1, v2 = params.variances
    d1 = np.zeros((4, 4))
    d1[1, 0] = -sens[0]
    d2 = np.zeros((4, 4))
    d2[3, 2] = -sens[1]
    col = np.array([[0.0], [1.0]])
    return StochasticSystem.build(
        (2, 2), (1, 1), a_bar, [col, col], [StochasticTerm(0, d1, v1), StochasticTerm(1, d2, v2)]
    )


def droop_sensitivities(params: DroopParams) -> tuple[float, float]:
    d1, d2 = equilibrium(params)
    return (params.dt * math.cos(d1) / params.d1, params.dt * math.cos(d2) / params.d2)


def build_droop_system(params: DroopParams = DroopParams()) -> StochasticSystem:
    """Euler-discretized linearization of the two droop-controlled converters."""
    delta = equilibrium(params)
    a_bar = np.eye(2) + params.dt * droop_jacobian(params, delta)
    sens = params.load_sensitivity or droop_sensitivities(params)
    v1, v2 = params.variances
    one = np.ones((1, 1))
    return StochasticSystem.build(
        (1, 1), (1, 1), a_bar, [one, one],
        [StochasticTerm(0, np.diag([-sens[0], 0.0]), v1), StochasticTerm(1, np.diag([0.0, -sens[1]]), v2)],
    )


# Reference droop model.  Its second load coefficient does not follow from
# the network equations (they give about 0.2206), so these numbers are used
# as they stand.
DROOP_REFERENCE_A = np.array([[-0.1635, 0.7486], [0.7486, -0.1897]])
DROOP_REFERENCE_SENSITIVITY = (0.2075, 0.0877)


def reference_droop_system(load_std=(0.1, 0.3)) -> StochasticSystem:
    one = np.ones((1, 1))
    s1, s2 = DROOP_REFERENCE_SENSITIVITY
    return StochasticSystem.build(
        (1, 1), (1, 1), DROOP_REFERENCE_A, [one, one],
        [StochasticTerm(0, np.diag([-s1, 0.0]), load_std[0] ** 2),
         StochasticTerm(1, np.diag([0.0, -s2]), load_std[1] ** 2)],
    )


def _round_sig(x: float, digits: int) -> float:
    return float(f"{x:.{digits}g}")


def example1_params() -> SwingParams:
    """Swing network matching the reference gain tables.

    Those gains follow from the load sensitivities rounded to two
    significant digits (8.1 and 6.9), not from the four-digit values.
    """
    base = SwingParams()
    return replace(base, load_sensitivity=tuple(_round_sig(s, 2) for s in swing_sensitivities(base)))


BUILTIN_NAMES = ("example1", "example2", "example2-highvar", "scalar-unit")


def builtin(name: str) -> tuple[StochasticSystem, CostSpec, np.ndarray]:
    """Named scenario with ``Q = I``, ``R = I`` and a default initial state."""
    if name == "example1":
        sys = build_swing_system(example1_params())
        x0 = np.array([0.1, 0.0, 0.1, 0.0])
    elif name == "example2":
        sys = reference_droop_system()
        x0 = np.array([0.1, 0.1])
    elif name == "example2-highvar":
        sys = reference_droop_system(load_std=(1000.0, 3000.0))
        x0 = np.array([0.1, 0.1])
    elif name == "scalar-unit":
        sys = StochasticSystem.build(
            (1,), (1,), [[1.0]], [[[1.0]]], [StochasticTerm(0, [[1.0]], 0.5)]
        )
        x0 = np.array([1.0])
    else:
        raise KeyError(f"unknown builtin scenario {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    return sys, CostSpec.identity(sys.structure), x0
