"""Random block-structured instances for property checks and benchmarks."""

from __future__ import annotations

import numpy as np

from .model import LAWS, StochasticSystem, StochasticTerm


def random_system(
    rng: np.random.Generator,
    max_n: int = 6,
    max_subsystems: int = 3,
    fully_actuated: bool = False,
    zero_variance: bool = False,
    spectral_scale: float = 1.1,
    max_variance: float = 0.3,
) -> StochasticSystem:
    """Draw a system whose fluctuation bases respect the block-row structure.

    ``spectral_scale`` sets the spectral radius of ``A_bar`` so most draws
    are open-loop unstable.  With ``fully_actuated`` every ``B_ii`` is square
    and well conditioned.
    """
    n_sub = int(rng.integers(1, max_subsystems + 1))
    budget = max_n
    state_dims = []
    for i in range(n_sub):
        left = n_sub - i - 1
        ni = int(rng.integers(1, max(1, min(2, budget - left)) + 1))
        state_dims.append(ni)
        budget -= ni
    input_dims = list(state_dims) if fully_actuated else [int(rng.integers(1, ni + 1)) for ni in state_dims]
    n = sum(state_dims)

    a_bar = rng.standard_normal((n, n))
    a_bar *= spectral_scale / max(np.abs(np.linalg.eigvals(a_bar)).max(), 1e-9)
    b_blocks = []
    for ni, mi in zip(state_dims, input_dims):
        bii = rng.standard_normal((ni, mi))
        if fully_actuated:
            u, _, vt = np.linalg.svd(bii)
            bii = u @ np.diag(rng.uniform(0.5, 2.0, ni)) @ vt
        b_blocks.append(bii)

    terms = []
    offset = 0
    for i, ni in enumerate(state_dims):
        for _ in range(int(rng.integers(1, 3))):
            basis = np.zeros((n, n))
            basis[offset:offset + ni] = rng.standard_normal((ni, n))
            var = 0.0 if zero_variance else float(rng.uniform(0.0, max_variance))
            terms.append(StochasticTerm(i, basis, var, LAWS[int(rng.integers(len(LAWS)))]))
        offset += ni
    return StochasticSystem.build(state_dims, input_dims, a_bar, b_blocks, terms)
