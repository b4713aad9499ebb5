"""Interconnected systems with stochastically varying parameters.

A system is ``x(k+1) = A(k) x(k) + B u(k)`` with

    A(k) = a_bar + sum_s alpha_s(k) * D_s

where each scalar ``alpha_s`` is zero mean with variance ``variance_s``,
independent across terms and across time, and the basis ``D_s`` of a term
owned by subsystem ``i`` is nonzero only in block-row ``i``.  ``B`` is block
diagonal with blocks ``B_ii``.

Subsystem indices are 0-based throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import matstat

LAWS = ("gaussian", "uniform", "two_point")


@dataclass(frozen=True)
class BlockStructure:
    state_dims: tuple[int, ...]
    input_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "state_dims", tuple(int(d) for d in self.state_dims))
        object.__setattr__(self, "input_dims", tuple(int(d) for d in self.input_dims))
        if len(self.state_dims) != len(self.input_dims) or not self.state_dims:
            raise ValueError("need one (n_i, m_i) pair per subsystem")
        if min(self.state_dims + self.input_dims) < 1:
            raise ValueError("all block dimensions must be >= 1")

    @property
    def N(self) -> int:
        return len(self.state_dims)

    @property
    def n(self) -> int:
        return sum(self.state_dims)

    @property
    def m(self) -> int:
        return sum(self.input_dims)

    def state_slice(self, i: int) -> slice:
        self._check(i)
        start = sum(self.state_dims[:i])
        return slice(start, start + self.state_dims[i])

    def input_slice(self, i: int) -> slice:
        self._check(i)
        start = sum(self.input_dims[:i])
        return slice(start, start + self.input_dims[i])

    def _check(self, i: int) -> None:
        if not 0 <= i < self.N:
            raise IndexError(f"subsystem index {i} out of range for N={self.N}")


@dataclass(frozen=True, eq=False)
class StochasticTerm:
    """One independent scalar fluctuation ``alpha * basis`` owned by a subsystem."""

    subsystem: int
    basis: np.ndarray
    variance: float
    law: str = "gaussian"

    def __post_init__(self):
        basis = matstat.as_matrix(self.basis, "basis").copy()
        basis.flags.writeable = False
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "variance", float(self.variance))
        if self.law not in LAWS:
            raise ValueError(f"unknown law {self.law!r}; expected one of {LAWS}")

    @property
    def std(self) -> float:
        return float(np.sqrt(max(self.variance, 0.0)))

    def draw(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Zero-mean draws with the term's variance."""
        return draw_standardized(self.law, rng, size) * self.std


def draw_standardized(law: str, rng: np.random.Generator, size=None) -> np.ndarray:
    if law == "gaussian":
        return rng.standard_normal(size)
    if law == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)
    if law == "two_point":
        return 2.0 * rng.integers(0, 2, size) - 1.0
    raise ValueError(f"unknown law {law!r}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class StochasticSystem:
    structure: BlockStructure
    a_bar: np.ndarray
    b_blocks: tuple[np.ndarray, ...]
    terms: tuple[StochasticTerm, ...] = ()

    def __post_init__(self):
        st = self.structure
        a_bar = matstat.as_matrix(self.a_bar, "a_bar")
        if a_bar.shape != (st.n, st.n):
            raise ValueError(f"a_bar has shape {a_bar.shape}, expected {(st.n, st.n)}")
        blocks = tuple(matstat.as_matrix(b, "b_block") for b in self.b_blocks)
        if len(blocks) != st.N:
            raise ValueError(f"expected {st.N} input blocks, got {len(blocks)}")
        for i, b in enumerate(blocks):
            if b.shape != (st.state_dims[i], st.input_dims[i]):
                raise ValueError(
                    f"b_blocks[{i}] has shape {b.shape}, "
                    f"expected {(st.state_dims[i], st.input_dims[i])}"
                )
        terms = tuple(self.terms)
        for k, t in enumerate(terms):
            if t.basis.shape != (st.n, st.n):
                raise ValueError(f"terms[{k}] basis shape {t.basis.shape} != {(st.n, st.n)}")
            st._check(t.subsystem)
        object.__setattr__(self, "a_bar", _frozen(a_bar))
        object.__setattr__(self, "b_blocks", tuple(_frozen(b) for b in blocks))
        object.__setattr__(self, "terms", terms)

    @classmethod
    def build(cls, state_dims, input_dims, a_bar, b_blocks, terms=()) -> "StochasticSystem":
        return cls(BlockStructure(tuple(state_dims), tuple(input_dims)), a_bar, tuple(b_blocks), tuple(terms))

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def m(self) -> int:
        return self.structure.m

    @property
    def N(self) -> int:
        return self.structure.N

    @cached_property
    def b(self) -> np.ndarray:
        return _frozen(sla.block_diag(*self.b_blocks))

    def embed_b(self, i: int) -> np.ndarray:
        """Block-column ``i`` of ``B``: zero except ``B_ii`` in block-row ``i``."""
        out = np.zeros((self.n, self.structure.input_dims[i]))
        out[self.structure.state_slice(i)] = self.b_blocks[i]
        return out

    def atilde_terms(self, i: int) -> list[tuple[float, np.ndarray]]:
        self.structure._check(i)
        return [(t.variance, t.basis) for t in self.terms if t.subsystem == i]

    def term_pairs(self) -> list[tuple[float, np.ndarray]]:
        return [(t.variance, t.basis) for t in self.terms]

    def second_moment(self) -> np.ndarray:
        """E{A~ (x) A~} (n^2 x n^2)."""
        return matstat.second_moment_of_terms(self.term_pairs(), self.n)

    def second_moment_blocks(self) -> list[np.ndarray]:
        """Per-subsystem E{A~_i (x) A~_i}; these sum to :meth:`second_moment`."""
        return [matstat.second_moment_of_terms(self.atilde_terms(i), self.n) for i in range(self.N)]

    def sample_alphas(self, rng: np.random.Generator, size=None) -> np.ndarray:
        """Draw all term coefficients; trailing axis indexes terms."""
        shape = () if size is None else (size if isinstance(size, tuple) else (size,))
        out = np.empty(shape + (len(self.terms),))
        for s, t in enumerate(self.terms):
            out[..., s] = t.draw(rng, shape or None)
        return out

    def realize(self, alphas) -> np.ndarray:
        a = np.array(self.a_bar)
        for alpha, t in zip(np.asarray(alphas, dtype=float), self.terms):
            a += alpha * t.basis
        return a

    def sample_a(self, rng_seed) -> np.ndarray:
        """One realization of ``A(k)``, deterministic in the seed."""
        rng = np.random.default_rng(rng_seed)
        return self.realize(self.sample_alphas(rng))

    def with_variances(self, variances: Sequence[float]) -> "StochasticSystem":
        terms = tuple(
            StochasticTerm(t.subsystem, t.basis, v, t.law) for t, v in zip(self.terms, variances, strict=True)
        )
        return StochasticSystem(self.structure, self.a_bar, self.b_blocks, terms)

    def scale_variances(self, factor: float) -> "StochasticSystem":
        return self.with_variances([t.variance * factor for t in self.terms])


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Quadratic weights.

    ``q`` is either a constant state weight or a schedule ``[Q(0), ..., Q(T)]``
    whose last entry is the terminal weight.  For a constant ``q`` the
    terminal weight is ``q_terminal`` if given, else ``q`` itself.  The
    infinite-horizon solvers ignore the terminal weight.
    """

    q: np.ndarray | tuple[np.ndarray, ...]
    r: np.ndarray
    q_terminal: np.ndarray | None = None

    def __post_init__(self):
        q = self.q
        # a tuple, or a list of matrices, is a schedule; a nested list of numbers is one matrix
        if isinstance(q, tuple) or (isinstance(q, list) and np.ndim(q) == 3):
            q = tuple(_frozen(matstat.as_matrix(x, "q")) for x in q)
        else:
            q = _frozen(matstat.as_matrix(q, "q"))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", _frozen(matstat.as_matrix(self.r, "r")))
        if self.q_terminal is not None:
            object.__setattr__(self, "q_terminal", _frozen(matstat.as_matrix(self.q_terminal, "q_terminal")))

    @classmethod
    def from_blocks(cls, q, r_blocks, q_terminal=None) -> "CostSpec":
        return cls(q, sla.block_diag(*[matstat.as_matrix(r) for r in r_blocks]), q_terminal)

    @classmethod
    def identity(cls, structure: BlockStructure, q_terminal=None) -> "CostSpec":
        return cls(np.eye(structure.n), np.eye(structure.m), q_terminal)

    @property
    def is_schedule(self) -> bool:
        return isinstance(self.q, tuple)

    def q_at(self, k: int) -> np.ndarray:
        return self.q[k] if self.is_schedule else self.q

    def terminal(self, horizon: int) -> np.ndarray:
        if self.is_schedule:
            if len(self.q) != horizon + 1:
                raise ValueError(f"q schedule has {len(self.q)} entries, horizon {horizon} needs {horizon + 1}")
            return self.q[horizon]
        return self.q if self.q_terminal is None else self.q_terminal

    def r_block(self, structure: BlockStructure, i: int) -> np.ndarray:
        s = structure.input_slice(i)
        return self.r[s, s]


def validate(sys: StochasticSystem, cost: CostSpec | None = None, horizon: str | int = "infinite") -> list[str]:
    """List every violated modelling assumption; empty means the pair is admissible."""
    out: list[str] = []
    st = sys.structure
    for k, t in enumerate(sys.terms):
        rows = st.state_slice(t.subsystem)
        outside = np.array(t.basis)
        outside[rows] = 0.0
        if np.any(outside != 0.0):
            out.append(
                f"block-row structure: terms[{k}] basis has entries outside block-row of subsystem {t.subsystem}"
            )
        if t.variance < 0:
            out.append(f"terms[{k}] variance is negative")
    if cost is None:
        return out
    n, m = st.n, st.m
    if cost.r.shape != (m, m):
        out.append(f"R has shape {cost.r.shape}, expected {(m, m)}")
        return out
    off = np.array(cost.r)
    for i in range(st.N):
        s = st.input_slice(i)
        off[s, s] = 0.0
    if np.any(off != 0.0):
        out.append("R block-diagonal: R has entries coupling different subsystems")
    if not matstat.is_pd(cost.r):
        out.append("R must be symmetric positive definite")
    qs = cost.q if cost.is_schedule else (cost.q,)
    for k, q in enumerate(qs):
        if q.shape != (n, n):
            out.append(f"Q[{k}] has shape {q.shape}, expected {(n, n)}")
        elif not matstat.is_psd(q):
            out.append(f"Q[{k}] must be symmetric positive semidefinite")
    if cost.q_terminal is not None and (cost.q_terminal.shape != (n, n) or not matstat.is_psd(cost.q_terminal)):
        out.append("terminal Q must be symmetric positive semidefinite n x n")
    if horizon == "infinite":
        if cost.is_schedule:
            out.append("infinite horizon needs a constant Q")
        elif cost.q.shape == (n, n) and not matstat.is_pd(cost.q):
            out.append("infinite horizon needs Q positive definite")
    elif cost.is_schedule and not isinstance(horizon, str) and len(cost.q) != int(horizon) + 1:
        out.append(f"Q schedule length {len(cost.q)} does not match horizon {horizon}")
    return out


def _block_diagonal(mat: np.ndarray, dims: Sequence[int]) -> bool:
    off = np.array(mat)
    start = 0
    for d in dims:
        off[start:start + d, start:start + d] = 0.0
        start += d
    return not np.any(off != 0.0)


def normalize_cost(sys: StochasticSystem, cost: CostSpec) -> StochasticSystem:
    """Change variables so the cost becomes ``Q = R = I``.

    With ``x' = Q^{1/2} x`` and ``u' = R^{1/2} u`` the returned system has
    ``A' = Q^{1/2} A Q^{-1/2}`` (applied to the mean and every basis) and
    ``B' = Q^{1/2} B R^{-1/2}``.  A value matrix ``P'`` of the new system maps
    back as ``P = Q^{1/2} P' Q^{1/2}``.
    """
    st = sys.structure
    if cost.is_schedule:
        raise ValueError("normalize_cost needs a constant Q")
    if not (matstat.is_pd(cost.q) and matstat.is_pd(cost.r)):
        raise ValueError("normalize_cost needs Q and R positive definite")
    if not _block_diagonal(cost.q, st.state_dims):
        raise ValueError("Q is not block-diagonal conformal to the subsystem structure")
    if not _block_diagonal(cost.r, st.input_dims):
        raise ValueError("R is not block-diagonal conformal to the subsystem structure")
    qh = matstat.symmetrize(sla.sqrtm(cost.q).real)
    qh_inv = np.linalg.inv(qh)
    b_new = []
    for i in range(st.N):
        s, u = st.state_slice(i), st.input_slice(i)
        rh_inv = np.linalg.inv(matstat.symmetrize(sla.sqrtm(cost.r[u, u]).real))
        b_new.append(qh[s, s] @ sys.b_blocks[i] @ rh_inv)
    terms = tuple(
        StochasticTerm(t.subsystem, _chop(qh @ t.basis @ qh_inv, st, t.subsystem), t.variance, t.law)
        for t in sys.terms
    )
    return StochasticSystem(st, qh @ sys.a_bar @ qh_inv, tuple(b_new), terms)


def _chop(basis: np.ndarray, st: BlockStructure, i: int) -> np.ndarray:
    # a block-diagonal similarity keeps the block-row; clear round-off elsewhere
    out = np.zeros_like(basis)
    rows = st.state_slice(i)
    out[rows] = basis[rows]
    return out


def cost_sqrt(cost: CostSpec) -> np.ndarray:
    """Symmetric square root of a constant ``Q``; pairs with :func:`normalize_cost`."""
    return matstat.symmetrize(sla.sqrtm(cost.q).real)
