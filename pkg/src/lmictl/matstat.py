"""Dense matrix helpers and second-moment calculus.

Everything here is a pure function of numpy arrays.  ``vec`` stacks columns
(Fortran order), so ``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

SYM_TOL = 1e-12
PSD_TOL = 1e-10
COND_LIMIT = 1e14


class NotPositiveDefinite(ValueError):
    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def is_symmetric(m: np.ndarray, tol: float = SYM_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = 1.0 + np.abs(m).max(initial=0.0)
    return bool(np.abs(m - m.T).max(initial=0.0) <= tol * scale)


def min_eig(m: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of ``m``."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(symmetrize(m))[0])


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    return is_symmetric(m, max(SYM_TOL, tol)) and min_eig(m) >= -tol


def is_pd(m: np.ndarray) -> bool:
    return is_symmetric(m) and min_eig(m) > 0.0


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vec(a) -> np.ndarray:
    return np.asarray(a, dtype=float).reshape(-1, order="F")


def vec_inv(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape vector of length {v.size} to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def riccati_op(a, p, b, r, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Discrete Riccati operator ``A'(P - P B (R + B'PB)^-1 B'P) A``."""
    a = as_matrix(a, "a")
    p = as_matrix(p, "p")
    b = as_matrix(b, "b")
    r = as_matrix(r, "r")
    n = p.shape[0]
    if a.shape[0] != n or b.shape[0] != n or r.shape != (b.shape[1], b.shape[1]):
        raise ValueError(
            f"incompatible shapes a{a.shape} p{p.shape} b{b.shape} r{r.shape}"
        )
    if np.linalg.cond(symmetrize(r + b.T @ p @ b)) > cond_limit:
        raise np.linalg.LinAlgError("R + B'PB is numerically singular")
    return riccati_core(a, p, b, r)


def riccati_core(a: np.ndarray, p: np.ndarray, b: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Unchecked Riccati operator for inner loops; inputs must already be valid."""
    pb = p @ b
    inner = p - pb @ np.linalg.solve(r + b.T @ pb, pb.T)
    return symmetrize(a.T @ inner @ a)


def expected_quad(terms: Iterable[tuple[float, np.ndarray]], z) -> np.ndarray:
    """E{A~' Z A~} for A~ = sum_s alpha_s D_s with independent zero-mean alpha_s."""
    z = as_matrix(z, "z")
    out = np.zeros_like(z)
    for var, d in terms:
        if var < 0:
            raise ValueError("variance must be nonnegative")
        d = np.asarray(d, dtype=float)
        if d.shape != z.shape:
            raise ValueError(f"basis shape {d.shape} does not match z {z.shape}")
        out += var * (d.T @ z @ d)
    return out


def second_moment_of_terms(terms: Sequence[tuple[float, np.ndarray]], n: int) -> np.ndarray:
    """E{A~ (x) A~} as an n^2 x n^2 matrix."""
    sigma = np.zeros((n * n, n * n))
    for var, d in terms:
        sigma += var * np.kron(d, d)
    return sigma


def expected_quad_kron(sigma, z) -> np.ndarray:
    """Kronecker route: vec^-1(E{A~ (x) A~}' vec Z)."""
    z = as_matrix(z, "z")
    sigma = as_matrix(sigma, "sigma")
    n = z.shape[0]
    if sigma.shape != (n * n, n * n):
        raise ValueError(f"second moment shape {sigma.shape} does not match n={n}")
    return symmetrize(vec_inv(sigma.T @ vec(z), n, n))


def max_gen_eig(p1, p2) -> float:
    """Largest lambda with p1 v = lambda p2 v, both inputs positive definite.

    Whitens ``p2`` by its Cholesky factor and takes the top eigenvalue of the
    symmetric result, which equals sup_x x'p1x / x'p2x.
    """
    p1 = symmetrize(as_matrix(p1, "p1"))
    p2 = symmetrize(as_matrix(p2, "p2"))
    if p1.shape != p2.shape:
        raise ValueError("p1 and p2 differ in shape")
    if not (is_pd(p1) and is_pd(p2)):
        raise NotPositiveDefinite("max_gen_eig needs two positive definite matrices")
    c = np.linalg.cholesky(p2)
    w = sla.solve_triangular(c, p1, lower=True)
    w = sla.solve_triangular(c, w.T, lower=True)
    return float(np.linalg.eigvalsh(symmetrize(w))[-1])


def spectral_radius(m) -> float:
    m = as_matrix(m, "m")
    if m.shape[0] != m.shape[1]:
        raise ValueError("spectral radius needs a square matrix")
    if m.size == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(m)).max())
