"""Closed-form privacy guarantees of gossip protocols.

Two families of results live here:

* bounds valid for *any* push-gossip protocol (a lower bound on the
  tolerance ``delta`` and an upper bound on the prediction uncertainty
  ``c``), for perfect, wireless and delayed-monitoring settings;
* exact ``(epsilon, 0)`` guarantees and prediction uncertainty of private
  gossip in the asynchronous model, computed from the spread matrix
  ``P[j, i] = P(j -> i)``.

An infinite ``epsilon`` (some ``P(j -> i) = 0``) is ``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import log_ndtr

from .chain import SpreadMatrix, matrix_power, spread_probabilities, transition_matrix
from .graphs import Graph, GraphMetrics, min_decay_centrality, shortest_paths

INF = math.inf

SYNC, ASYNC = "sync", "async"
EXACT = "exact"
LOWER_BOUND_DELTA = "lower_bound_delta"
UPPER_BOUND_C = "upper_bound_c"


@dataclass(frozen=True)
class AnalysisParams:
    alpha: float
    failure: float = 0.0
    delay: int = 0
    epsilon_budget: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.failure < 1.0:
            raise ValueError(f"failure probability must lie in [0, 1), got {self.failure}")
        if int(self.delay) != self.delay or self.delay < 0:
            raise ValueError(f"delay must be a non-negative integer, got {self.delay}")
        if self.epsilon_budget < 0:
            raise ValueError("epsilon budget must be >= 0")

    @property
    def effective_alpha(self) -> float:
        return self.alpha * (1.0 - self.failure)


@dataclass(frozen=True)
class PrivacyGuarantee:
    """An ``(epsilon, delta, c)`` triple and the regime it holds in.

    For ``kind == "lower_bound_delta"`` the ``delta`` is a lower bound on any
    feasible tolerance at budget ``epsilon``, and ``c`` (when present) is an
    upper bound on the prediction uncertainty. ``witness`` is the
    ``(i, j)`` pair attaining the epsilon (target ``i``, source ``j``).
    """

    epsilon: float
    delta: float
    c: float | None
    regime: str
    kind: str
    witness: tuple[int, int] | None = None
    c_witness: int | None = None
    alpha: float | None = None
    failure: float = 0.0
    delay: int = 0
    candidate: tuple[int, ...] | None = None
    epsilon_floor: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if self.c is not None and self.c < 0:
            raise ValueError(f"c must be >= 0, got {self.c}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")


def candidate_set(members: Iterable[int], n: int) -> tuple[int, ...]:
    q = tuple(int(x) for x in members)
    if len(set(q)) != len(q):
        raise ValueError(f"candidate set has duplicates: {q}")
    if len(q) < 2:
        raise ValueError("candidate set needs at least 2 nodes")
    if any(not 0 <= x < n for x in q):
        raise ValueError(f"candidate set {q} not within 0..{n - 1}")
    return tuple(sorted(q))


def one_hop_candidates(g: Graph, source: int) -> tuple[int, ...]:
    return tuple(sorted((source,) + g.neighbors(source)))


# ---------------------------------------------------------------------------
# General protocols
# ---------------------------------------------------------------------------


def lemma1_delta_bound(w_i: float, w_j: float, epsilon: float) -> float:
    """``max(w_i - e^eps * w_j, 0)`` for witnesses ``p_i >= w_i``, ``p_j <= w_j``."""
    return max(w_i - math.exp(epsilon) * w_j, 0.0)


def epsilon_lower_bound(alpha: float, n: int, diameter: int, delta: float) -> float:
    """Smallest budget compatible with tolerance ``delta`` (asynchronous)."""
    gap = alpha - delta
    if gap <= 0:
        return 0.0
    if alpha >= 1.0:
        return INF
    ratio = max(gap / (1.0 - alpha) ** diameter, gap * (n - 1) / (1.0 - alpha))
    return max(0.0, math.log(ratio))


def async_delta_lower_bound(alpha: float, n: int, diameter: int, epsilon: float) -> float:
    """Asynchronous tolerance bound from the diameter and node count alone."""
    e = math.exp(epsilon)
    return max(alpha - e * (1.0 - alpha) ** diameter, alpha - e * (1.0 - alpha) / (n - 1), 0.0)


def _diameter_pair(metrics: GraphMetrics) -> tuple[int, int]:
    i, j = np.unravel_index(int(np.argmax(metrics.distances)), metrics.distances.shape)
    return int(i), int(j)


def _general_bounds(g: Graph, alpha: float, epsilon: float, metrics: GraphMetrics,
                    failure: float = 0.0, delta_target: float = 0.0) -> tuple[PrivacyGuarantee, PrivacyGuarantee]:
    n, D = g.n, metrics.diameter
    e = math.exp(epsilon)
    sync = PrivacyGuarantee(epsilon, min(max(alpha, 0.0), 1.0), 0.0, SYNC, LOWER_BOUND_DELTA,
                            alpha=alpha, failure=failure)
    by_diameter = alpha - e * (1.0 - alpha) ** D
    by_count = alpha - e * (1.0 - alpha) / (n - 1)
    delta = max(by_diameter, by_count, 0.0)
    witness = _diameter_pair(metrics) if by_diameter >= by_count and by_diameter > 0 else None
    if alpha >= 1.0:
        c_ub, c_node = 0.0, 0
    else:
        beta = 1.0 - alpha
        decay = [np.sum(beta ** np.delete(metrics.distances[i], i).astype(float)) for i in range(n)]
        c_node = int(np.argmin(decay))
        c_ub = float(decay[c_node]) / alpha
    asyn = PrivacyGuarantee(epsilon, min(delta, 1.0), c_ub, ASYNC, LOWER_BOUND_DELTA,
                            witness=witness, c_witness=c_node, alpha=alpha, failure=failure,
                            epsilon_floor=epsilon_lower_bound(alpha, n, D, delta_target))
    return sync, asyn


def theorem1_bounds(g: Graph, params: AnalysisParams, metrics: GraphMetrics | None = None,
                    delta_target: float = 0.0):
    """Tolerance lower bounds and uncertainty upper bounds, ``(sync, async)``.

    The async guarantee also carries ``epsilon_floor``: the smallest budget
    compatible with tolerance ``delta_target``.
    """
    if params.failure != 0 or params.delay != 0:
        raise ValueError("perfect-channel bounds need failure = 0 and delay = 0")
    metrics = metrics or shortest_paths(g)
    return _general_bounds(g, params.alpha, params.epsilon_budget, metrics, delta_target=delta_target)


def wireless_bounds(g: Graph, params: AnalysisParams, metrics: GraphMetrics | None = None,
                    delta_target: float = 0.0):
    """Same bounds at the effective detection probability ``alpha (1 - f)``."""
    if params.delay != 0:
        raise ValueError("wireless bounds assume delay = 0")
    metrics = metrics or shortest_paths(g)
    return _general_bounds(g, params.effective_alpha, params.epsilon_budget, metrics,
                           failure=params.failure, delta_target=delta_target)


def delayed_general_bounds(g: Graph, params: AnalysisParams, metrics: GraphMetrics | None = None):
    """Tolerance lower bounds when monitoring starts ``t`` rounds/steps late."""
    if params.failure != 0:
        raise ValueError("delayed-monitoring bounds assume failure = 0")
    metrics = metrics or shortest_paths(g)
    t, D, n, a = int(params.delay), metrics.diameter, g.n, params.alpha
    if t >= D:
        raise ValueError(f"delayed bound holds only for delay t < diameter ({t} >= {D})")
    dmax = metrics.max_degree
    e = math.exp(params.epsilon_budget)
    sync_delta = a / dmax ** t
    w = a / (dmax ** t * math.factorial(t + 1))
    by_diameter = w - e * (1.0 - a) ** (D - t)
    by_count = w - e * (1.0 - w) / (n - 1)
    sync = PrivacyGuarantee(params.epsilon_budget, sync_delta, None, SYNC, LOWER_BOUND_DELTA,
                            alpha=a, delay=t)
    asyn = PrivacyGuarantee(params.epsilon_budget, max(by_diameter, by_count, 0.0), None, ASYNC,
                            LOWER_BOUND_DELTA, alpha=a, delay=t)
    return sync, asyn


# ---------------------------------------------------------------------------
# Private gossip, exact values
# ---------------------------------------------------------------------------


def _spread(g: Graph, alpha: float, spread: SpreadMatrix | None) -> SpreadMatrix:
    if spread is None:
        return spread_probabilities(g, alpha)
    if spread.alpha != alpha:
        raise ValueError(f"spread matrix computed at alpha={spread.alpha}, asked for {alpha}")
    return spread


def _pairwise_min(P: np.ndarray, Q: Sequence[int]) -> tuple[float, tuple[int, int]]:
    """Smallest ``P[j, i]`` over ``j != i`` in Q; ties go to the lowest ``(i, j)``."""
    q = np.asarray(Q)
    sub = P[np.ix_(q, q)].T.copy()  # sub[a, b] = P[q[b], q[a]]
    np.fill_diagonal(sub, np.inf)
    a, b = np.unravel_index(int(np.argmin(sub)), sub.shape)
    return float(sub[a, b]), (int(q[a]), int(q[b]))


def _within_sums(P: np.ndarray, Q: Sequence[int]) -> np.ndarray:
    """``sum_{j != i in Q} P[j, i]`` for each ``i`` in Q."""
    q = np.asarray(Q)
    sub = P[np.ix_(q, q)].copy()
    np.fill_diagonal(sub, 0.0)
    return sub.sum(axis=0)


def _log_inverse(p: float) -> float:
    return INF if p <= 0.0 else math.log(1.0 / p)


def private_gossip(g: Graph, alpha: float, spread: SpreadMatrix | None = None) -> PrivacyGuarantee:
    """Exact ``(epsilon, 0)`` level and prediction uncertainty, asynchronous."""
    S = _spread(g, alpha, spread)
    nodes = range(g.n)
    p_min, witness = _pairwise_min(S.p, nodes)
    sums = _within_sums(S.p, nodes)
    c_node = int(np.argmin(sums))
    return PrivacyGuarantee(_log_inverse(p_min), 0.0, float(sums[c_node]), ASYNC, EXACT,
                            witness=witness, c_witness=c_node, alpha=alpha)


def private_gossip_epsilon(g: Graph, alpha: float, spread: SpreadMatrix | None = None) -> float:
    return private_gossip(g, alpha, spread).epsilon


def private_gossip_c(g: Graph, alpha: float, spread: SpreadMatrix | None = None) -> float:
    return private_gossip(g, alpha, spread).c


def posterior_odds(spread: SpreadMatrix) -> np.ndarray:
    """``odds[i, k]``: posterior odds against source ``i`` after first seeing ``k``.

    Uses ``p^(j)(S_k) = P(j -> k) p^(k)(S_k)``, so the odds reduce to
    ``sum_{j != i} P[j, k] / P[i, k]``. Its minimum is the prediction
    uncertainty.
    """
    P = spread.p
    col = P.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = (col[None, :] - P) / P
    odds[P == 0] = INF
    return odds


def wireless_private_gossip(g: Graph, params: AnalysisParams) -> PrivacyGuarantee:
    """Private gossip over links failing with probability ``f``."""
    if params.delay != 0:
        raise ValueError("wireless private gossip assumes delay = 0")
    r = private_gossip(g, params.effective_alpha)
    return replace(r, alpha=params.alpha, failure=params.failure)


def candidate_privacy(g: Graph, alpha: float, Q: Iterable[int], spread: SpreadMatrix | None = None,
                      literal_form: bool = False) -> PrivacyGuarantee:
    """Private gossip guarantees when only sources in ``Q`` must be confused.

    Observations first seen outside Q at node k contribute the ratios
    ``P(j -> k) / P(i -> k)`` (absorbing state at k). With
    ``literal_form=True`` the uncertainty's second family instead uses the
    resolvent of the chain absorbed at ``i``, as the closed form is printed;
    its row ``i`` vanishes off the diagonal, so those terms are infinite and
    only the first family remains.
    """
    q = candidate_set(Q, g.n)
    S = _spread(g, alpha, spread)
    P = S.p
    outside = [k for k in range(g.n) if k not in set(q)]
    p_min, witness = _pairwise_min(P, q)
    e_eps = INF if p_min <= 0 else 1.0 / p_min
    sums = _within_sums(P, q)
    c_val, c_node = float(sums.min()), q[int(np.argmin(sums))]
    qa = np.asarray(q)
    if outside:
        # rows: k outside Q, columns: members of Q in sorted order
        cols = P[np.ix_(qa, outside)].T
        lo, hi = np.argmin(cols, axis=1), np.argmax(cols, axis=1)
        rows = np.arange(len(outside))
        cmin, cmax = cols[rows, lo], cols[rows, hi]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(cmin > 0, cmax / cmin, INF)
        ratio[lo == hi] = 1.0
        k = int(np.argmax(ratio))
        if ratio[k] > e_eps:
            e_eps, witness = float(ratio[k]), (q[int(lo[k])], q[int(hi[k])])
        if not literal_form:
            with np.errstate(divide="ignore", invalid="ignore"):
                odds = np.where(cols > 0, (cols.sum(axis=1, keepdims=True) - cols) / cols, INF)
            flat = int(np.argmin(odds))
            if odds.flat[flat] < c_val:
                c_val, c_node = float(odds.flat[flat]), q[flat % len(q)]
    if literal_form and outside:
        eye = np.eye(g.n)
        A = transition_matrix(g)
        for i in q:
            Ai = A.copy()
            Ai[i, :] = 0.0
            Ai[i, i] = 1.0
            R = alpha * np.linalg.inv(eye - (1.0 - alpha) * Ai)
            for k in outside:
                num = sum(R[j, k] for j in q if j != i)
                r = INF if R[i, k] <= 0 else num / R[i, k]
                if r < c_val:
                    c_val, c_node = r, i
    eps = INF if math.isinf(e_eps) else math.log(e_eps)
    return PrivacyGuarantee(eps, 0.0, c_val, ASYNC, EXACT, witness=witness, c_witness=c_node,
                            alpha=alpha, candidate=q)


def candidate_epsilon(g: Graph, alpha: float, Q: Iterable[int], spread: SpreadMatrix | None = None) -> float:
    return candidate_privacy(g, alpha, Q, spread).epsilon


def candidate_c(g: Graph, alpha: float, Q: Iterable[int], spread: SpreadMatrix | None = None,
                literal_form: bool = False) -> float:
    return candidate_privacy(g, alpha, Q, spread, literal_form=literal_form).c


def delayed_spread(g: Graph, alpha: float, t: int, spread: SpreadMatrix | None = None) -> np.ndarray:
    """``N[j, i] = A^t[j, i] + sum_{k != i} A^t[j, k] P(k -> i)``.

    Proportional to the chance that ``i`` is the first observed actor when
    the source is ``j`` and monitoring starts after ``t`` steps.
    """
    S = _spread(g, alpha, spread)
    At = matrix_power(transition_matrix(g), t)
    return At @ S.p


def delayed_private_gossip(g: Graph, alpha: float, t: int, spread: SpreadMatrix | None = None) -> PrivacyGuarantee:
    """Private gossip guarantees when monitoring starts after ``t`` steps."""
    N = delayed_spread(g, alpha, t, spread)
    if alpha < 1.0 and not np.all(N > 0):
        raise FloatingPointError("delayed spread matrix has a zero entry on a connected graph")
    best, witness = 1.0, (0, 0)
    for i in range(g.n):
        col = N[:, i]
        j, z = int(np.argmax(col)), int(np.argmin(col))
        if j == z:
            continue
        r = INF if col[z] <= 0 else col[j] / col[z]
        if r > best:
            # the two sources compared; at t = 0 this is the undelayed witness
            best, witness = r, (j, z)
    eps = INF if math.isinf(best) else math.log(best)
    colsum = N.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = (colsum[None, :] - N) / N
    odds[N <= 0] = INF
    flat = int(np.argmin(odds))
    c_node = flat // g.n
    return PrivacyGuarantee(eps, 0.0, float(odds.flat[flat]), ASYNC, EXACT, witness=witness,
                            c_witness=c_node, alpha=alpha, delay=int(t))


# ---------------------------------------------------------------------------
# Gaussian differential privacy conversion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianDPParams:
    mu1: float
    epsilon: float
    residual: float
    residual_tol: float


def gdp_delta(epsilon_prime: float, mu: float) -> float:
    """``Phi(-e/mu + mu/2) - exp(e) Phi(-e/mu - mu/2)`` evaluated in log space."""
    if mu <= 0:
        raise ValueError("mu must be > 0")
    la = log_ndtr(-epsilon_prime / mu + mu / 2.0)
    lb = epsilon_prime + log_ndtr(-epsilon_prime / mu - mu / 2.0)
    if la == -np.inf:
        return 0.0
    return float(max(math.exp(la) * -math.expm1(lb - la), 0.0))


def _log_gdp_delta(epsilon: float, mu: float) -> float:
    la = log_ndtr(-epsilon / mu + mu / 2.0)
    lb = epsilon + log_ndtr(-epsilon / mu - mu / 2.0)
    gap = -math.expm1(lb - la)
    return -INF if gap <= 0 else float(la + math.log(gap))


def gaussian_dp_params(epsilon: float, residual_tol: float = 1e-10) -> GaussianDPParams:
    """Gaussian-DP parameter matched to a pure ``epsilon`` guarantee.

    The tradeoff residual ``gdp_delta(epsilon, mu)`` increases from 0 (as
    ``mu -> 0``) to 1 and is positive for every ``mu > 0``, so the defining
    equation is met to within ``residual_tol``: the result is the largest
    ``mu`` whose residual does not exceed the tolerance.
    """
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon}")
    target = math.log(residual_tol)
    f = lambda mu: _log_gdp_delta(epsilon, mu) - target  # noqa: E731
    hi = 1.0
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise ArithmeticError("could not bracket the Gaussian-DP parameter")
    lo = hi / 2.0
    floor = epsilon / 60.0
    while f(lo) > 0:
        lo /= 2.0
        if lo < floor:
            raise ArithmeticError("could not bracket the Gaussian-DP parameter")
    mu = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    while gdp_delta(epsilon, mu) > residual_tol:
        mu = float(np.nextafter(mu, 0.0))
    return GaussianDPParams(mu1=mu, epsilon=epsilon, residual=gdp_delta(epsilon, mu), residual_tol=residual_tol)


def gaussian_dp_convert(epsilon: float, epsilon_prime: float, residual_tol: float = 1e-10) -> float:
    """Tolerance ``delta(epsilon')`` implied by a pure ``epsilon`` guarantee."""
    if epsilon_prime < 0:
        raise ValueError("epsilon' must be >= 0")
    mu1 = gaussian_dp_params(epsilon, residual_tol).mu1
    return gdp_delta(epsilon_prime, mu1)
