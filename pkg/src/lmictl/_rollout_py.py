"""NumPy batch rollout, vectorized over trials.  Same contract as the compiled kernel."""

import numpy as np


def rollout_costs(a_bar, bases, b, k_bar, corr, q, r, x0, alphas):
    trials, horizon, _ = alphas.shape
    x = np.broadcast_to(np.asarray(x0, dtype=float), (trials, a_bar.shape[0])).copy()
    acc = np.zeros(trials)
    for k in range(horizon):
        al = alphas[:, k, :]
        gain = k_bar[k][None] + np.einsum("ts,sij->tij", al, corr[k])
        u = np.einsum("tij,tj->ti", gain, x)
        acc += np.einsum("ti,ij,tj->t", x, q[k], x) + np.einsum("ti,ij,tj->t", u, r, u)
        a = a_bar[None] + np.einsum("ts,sij->tij", al, bases)
        x = np.einsum("tij,tj->ti", a, x) + u @ b.T
    acc += np.einsum("ti,ij,tj->t", x, q[horizon], x)
    return acc
