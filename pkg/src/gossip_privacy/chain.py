"""Gossip-contact Markov chain: transition matrices and spread probabilities.

Under private gossip exactly one node is active, so the index of the active
node is a random walk with transition matrix ``A[j, i] = 1/d_j`` for
neighbours. ``P[j, i]`` is the probability that, starting from source ``j``,
node ``i`` becomes active before the attacker's first observation when each
gossip action is observed independently with probability ``alpha``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .graphs import Graph


def transition_matrix(g: Graph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    for j, nbrs in enumerate(g.adjacency):
        A[j, list(nbrs)] = 1.0 / len(nbrs)
    return A


def _as_matrix(g_or_A) -> np.ndarray:
    return transition_matrix(g_or_A) if isinstance(g_or_A, Graph) else np.asarray(g_or_A, dtype=float)


def absorbing_variant(A: np.ndarray, i: int) -> np.ndarray:
    """Copy of ``A`` with node ``i`` turned into an absorbing state."""
    out = np.array(A, dtype=float, copy=True)
    out[i, :] = 0.0
    out[i, i] = 1.0
    return out


def matrix_power(A: np.ndarray, t: int) -> np.ndarray:
    if t < 0:
        raise ValueError(f"matrix power needs t >= 0, got {t}")
    return np.linalg.matrix_power(np.asarray(A, dtype=float), int(t))


@dataclass(frozen=True, eq=False)
class SpreadMatrix:
    """``p[j, i]`` = P(j -> i) computed at detection probability ``alpha``."""

    p: np.ndarray
    alpha: float

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def resolvent_column(self, i: int) -> np.ndarray:
        """Column ``i`` of ``(I - (1 - alpha) A_i)^{-1}``."""
        return self.p[:, i] / self.alpha

    def off_diagonal(self) -> np.ndarray:
        mask = ~np.eye(self.n, dtype=bool)
        return self.p[mask]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"detection probability alpha must lie in (0, 1], got {alpha}")


def spread_probabilities(g_or_A, alpha: float, method: str = "lu") -> SpreadMatrix:
    """Secret-spread probabilities for every (source, target) pair.

    ``method="lu"`` factorises ``I - (1 - alpha) A_i`` for each target ``i``.
    ``method="rank_one"`` factorises ``B = I - (1 - alpha) A`` once; since the
    absorbing variant differs from ``A`` only in row ``i``, column ``i`` of the
    absorbing resolvent is proportional to column ``i`` of ``B^{-1}`` and
    ``P[:, i] = B^{-1}[:, i] / B^{-1}[i, i]``.
    """
    _check_alpha(alpha)
    A = _as_matrix(g_or_A)
    n = A.shape[0]
    eye = np.eye(n)
    if method == "lu":
        P = np.empty((n, n))
        for i in range(n):
            M = eye - (1.0 - alpha) * absorbing_variant(A, i)
            x = lu_solve(lu_factor(M, check_finite=False), eye[:, i], check_finite=False)
            P[:, i] = alpha * x
    elif method == "rank_one":
        Binv = lu_solve(lu_factor(eye - (1.0 - alpha) * A, check_finite=False), eye, check_finite=False)
        P = Binv / np.diag(Binv)[None, :]
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(P)):
        raise FloatingPointError("singular spread system; alpha must be > 0")
    # the absorbing diagonal makes the resolvent entry exactly 1/alpha
    np.fill_diagonal(P, 1.0)
    P.setflags(write=False)
    return SpreadMatrix(P, float(alpha))


def truncated_series_oracle(g_or_A, alpha: float, i: int, M: int) -> np.ndarray:
    """``alpha * sum_{m=0}^{M} (1-alpha)^m A_i^m e_i`` by repeated products.

    Independent of the linear solves above; the entrywise gap to the exact
    resolvent is at most ``(1 - alpha) ** (M + 1)``.
    """
    if M < 0:
        raise ValueError("truncation order must be >= 0")
    Ai = absorbing_variant(_as_matrix(g_or_A), i)
    v = np.zeros(Ai.shape[0])
    v[i] = 1.0
    acc = alpha * v
    weight = alpha
    for _ in range(M):
        v = Ai @ v
        weight *= 1.0 - alpha
        acc = acc + weight * v
    return acc
