import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gossip_privacy.chain import spread_probabilities
from gossip_privacy.graphs import GraphSpec, build_graph, complete_graph, ring_graph, shortest_paths
from gossip_privacy.privacy import (INF, AnalysisParams, PrivacyGuarantee, async_delta_lower_bound,
                                    candidate_privacy, candidate_set, delayed_general_bounds,
                                    delayed_private_gossip, epsilon_lower_bound, gaussian_dp_convert,
                                    gaussian_dp_params, gdp_delta, lemma1_delta_bound, one_hop_candidates,
                                    posterior_odds, private_gossip, private_gossip_c, private_gossip_epsilon,
                                    theorem1_bounds, wireless_bounds, wireless_private_gossip)
from conftest import connected_graphs
import oracles as O


# -- general protocols -------------------------------------------------------

def test_lemma1_examples():
    assert lemma1_delta_bound(0.5, 0.25, 0.0) == 0.25
    assert lemma1_delta_bound(0.3, 0.7, 0.01) == 0.0
    assert lemma1_delta_bound(0.4, 0.0, 3.0) == 0.4


def test_theorem1_left_endpoint():
    # both branches by hand: 0.3 - e^0.01 * 0.7 < 0, 0.3 - e^0.01 * 0.7 / 49 = 0.28557071
    assert async_delta_lower_bound(0.3, 50, 1, 0.01) == pytest.approx(0.285571, abs=1e-6)
    sync, asyn = theorem1_bounds(complete_graph(50), AnalysisParams(0.3, epsilon_budget=0.01))
    assert asyn.delta == pytest.approx(0.3 - math.exp(0.01) * 0.7 / 49, abs=1e-15)
    assert sync.delta == 0.3 and sync.c == 0.0
    assert asyn.kind == sync.kind == "lower_bound_delta"


def test_theorem1_alpha_one():
    for g in (ring_graph(6), complete_graph(4)):
        sync, asyn = theorem1_bounds(g, AnalysisParams(1.0, epsilon_budget=0.3))
        assert sync.delta == asyn.delta == 1.0
        assert sync.c == asyn.c == 0.0


def test_theorem1_k3_c_bound():
    _, asyn = theorem1_bounds(complete_graph(3), AnalysisParams(0.5))
    assert asyn.c == pytest.approx(2.0)


def test_theorem1_rejects_failure_or_delay():
    with pytest.raises(ValueError):
        theorem1_bounds(ring_graph(4), AnalysisParams(0.5, failure=0.1))
    with pytest.raises(ValueError):
        theorem1_bounds(ring_graph(4), AnalysisParams(0.5, delay=1))


def test_diameter_branch_witness():
    # long path: the diameter branch binds and the witness is a diametral pair
    from gossip_privacy.graphs import path_graph
    _, asyn = theorem1_bounds(path_graph(30), AnalysisParams(0.5))
    assert asyn.witness == (0, 29)


def test_epsilon_floor_examples():
    assert epsilon_lower_bound(0.5, 4, 2, 0.0) == pytest.approx(math.log(3))
    assert epsilon_lower_bound(0.5, 4, 2, 0.6) == 0.0
    assert epsilon_lower_bound(1.0, 4, 2, 0.0) == INF


def test_params_validation():
    for kw in (dict(alpha=0), dict(alpha=1.2), dict(alpha=0.5, failure=1.0), dict(alpha=0.5, delay=-1),
               dict(alpha=0.5, delay=1.5), dict(alpha=0.5, epsilon_budget=-1)):
        with pytest.raises(ValueError):
            AnalysisParams(**kw)
    with pytest.raises(ValueError):
        PrivacyGuarantee(0.1, 1.5, 0.0, "async", "exact")


# -- private gossip ------------------------------------------------------------

def test_k2_values():
    r = private_gossip(complete_graph(2), 0.5)
    assert r.epsilon == pytest.approx(math.log(2), abs=1e-12)
    assert r.c == pytest.approx(0.5, abs=1e-12)


def test_ring4_values():
    r = private_gossip(ring_graph(4), 0.5)
    assert r.epsilon == pytest.approx(math.log(7), abs=1e-9)
    assert r.c == pytest.approx(5 / 7, abs=1e-9)
    assert r.kind == "exact" and r.delta == 0.0
    assert r.witness == (0, 2)  # lowest pair at distance 2


def test_alpha_one_sentinel():
    r = private_gossip(ring_graph(5), 1.0)
    assert r.epsilon == INF and r.c == 0.0


def test_complete_graph_closed_form():
    for n in range(2, 11):
        p = 0.5 / (1 + 0.5 * (n - 2))
        assert private_gossip_epsilon(complete_graph(n), 0.5) == pytest.approx(-math.log(p), abs=1e-12)
        assert private_gossip_c(complete_graph(n), 0.5) == pytest.approx((n - 1) * p, abs=1e-12)


def test_epsilon_nondecreasing_complete():
    eps = [private_gossip_epsilon(complete_graph(n), 0.5) for n in range(2, 11)]
    assert all(a <= b + 1e-12 for a, b in zip(eps, eps[1:]))


def test_c_two_ways(graph_fleet):
    for g in graph_fleet.values():
        for a in (0.3, 0.5, 0.8):
            S = spread_probabilities(g, a)
            c_direct = private_gossip_c(g, a, S)
            c_odds = float(posterior_odds(S).min())
            assert c_direct == pytest.approx(c_odds, abs=1e-12)


def test_spread_alpha_mismatch():
    S = spread_probabilities(ring_graph(4), 0.5)
    with pytest.raises(ValueError):
        private_gossip(ring_graph(4), 0.3, S)


# -- candidate set -------------------------------------------------------------

def test_ring4_candidate():
    r = candidate_privacy(ring_graph(4), 0.5, [0, 1])
    assert r.epsilon == pytest.approx(math.log(3.5), abs=1e-9)
    assert r.c == pytest.approx(2 / 7, abs=1e-9)
    assert O.candidate_values(ring_graph(4).adjacency, 0.5, [0, 1]) == pytest.approx((3.5, 2 / 7))


def test_literal_form_ring4():
    lit = candidate_privacy(ring_graph(4), 0.5, [0, 1], literal_form=True)
    # printed form: row i of the resolvent absorbed at i vanishes off the diagonal,
    # so its terms are infinite and only the within-set minimum is left
    assert lit.c == pytest.approx(2 / 7, abs=1e-12)


@given(connected_graphs(min_n=3, max_n=9), st.floats(0.1, 0.9), st.data())
def test_outside_terms_never_bind(g, alpha, data):
    # P(j->k) >= P(j->i) P(i->k): reaching i first is one way to reach k
    P = spread_probabilities(g, alpha).p
    assert np.all(P[:, None, :] >= P[:, :, None] * P[None, :, :] - 1e-12)
    Q = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=g.n, unique=True))
    a = candidate_privacy(g, alpha, Q)
    lit = candidate_privacy(g, alpha, Q, literal_form=True)
    assert a.c == pytest.approx(lit.c, rel=1e-12)
    q = sorted(Q)
    sub = P[np.ix_(q, q)]
    assert a.epsilon == pytest.approx(-math.log(sub[~np.eye(len(q), dtype=bool)].min()), rel=1e-12)


def test_candidate_set_validation():
    with pytest.raises(ValueError):
        candidate_set([1], 4)
    with pytest.raises(ValueError):
        candidate_set([1, 1], 4)
    with pytest.raises(ValueError):
        candidate_set([0, 4], 4)
    assert one_hop_candidates(ring_graph(5), 0) == (0, 1, 4)


@given(connected_graphs(min_n=3, max_n=9), st.floats(0.1, 0.9), st.data())
def test_candidate_matches_brute_force(g, alpha, data):
    Q = data.draw(st.lists(st.integers(0, g.n - 1), min_size=2, max_size=g.n, unique=True))
    r = candidate_privacy(g, alpha, Q)
    e, c = O.candidate_values(g.adjacency, alpha, sorted(Q))
    assert math.exp(r.epsilon) == pytest.approx(e, rel=1e-9)
    assert r.c == pytest.approx(c, rel=1e-9)
    assert r.epsilon <= private_gossip_epsilon(g, alpha) + 1e-12


# -- wireless and delayed ------------------------------------------------------

def test_wireless_examples():
    r = wireless_private_gossip(complete_graph(2), AnalysisParams(0.5, failure=0.5))
    assert r.epsilon == pytest.approx(math.log(4 / 3), abs=1e-12)
    sync, _ = wireless_bounds(ring_graph(5), AnalysisParams(0.5, failure=0.2))
    assert sync.delta == pytest.approx(0.4, abs=1e-15)


def test_wireless_is_substitution():
    g = build_graph(GraphSpec("erdos_renyi", 15, p=0.3, seed=2))
    for f in (0.1, 0.4, 0.7):
        w = wireless_private_gossip(g, AnalysisParams(0.6, failure=f))
        direct = private_gossip(g, 0.6 * (1 - f))
        assert (w.epsilon, w.c) == (direct.epsilon, direct.c)
        wb = wireless_bounds(g, AnalysisParams(0.6, failure=f, epsilon_budget=0.2))
        tb = theorem1_bounds(g, AnalysisParams(0.6 * (1 - f), epsilon_budget=0.2))
        assert [x.delta for x in wb] == [x.delta for x in tb]
        assert [x.c for x in wb] == [x.c for x in tb]


def test_wireless_epsilon_nonincreasing_in_f():
    g = ring_graph(6)
    eps = [wireless_private_gossip(g, AnalysisParams(0.5, failure=f)).epsilon for f in np.linspace(0, 0.9, 10)]
    assert all(b <= a + 1e-12 for a, b in zip(eps, eps[1:]))


def test_delayed_general_examples():
    g = ring_graph(6)  # d_max 2, diameter 3
    sync0, _ = delayed_general_bounds(g, AnalysisParams(0.5, delay=0))
    assert sync0.delta == 0.5
    sync1, asyn1 = delayed_general_bounds(g, AnalysisParams(0.5, delay=1))
    assert sync1.delta == 0.25
    # w = 0.5 / (2 * 2!) = 0.125; branches 0.125 - 0.25 and 0.125 - 0.875 / 5 are negative
    assert asyn1.delta == 0.0
    g4 = build_graph(GraphSpec("ring", 4))
    with pytest.raises(ValueError, match="diameter"):
        delayed_general_bounds(g4, AnalysisParams(0.5, delay=2))


def test_delayed_general_hand_case():
    # path 0-1-2-3: d_max 2, D 3, n 4; alpha 0.5, t 1, eps 0
    from gossip_privacy.graphs import path_graph
    _, asyn = delayed_general_bounds(path_graph(4), AnalysisParams(0.5, delay=1))
    w = 0.5 / (2 * 2)
    assert asyn.delta == max(w - 0.5 ** 2, w - (1 - w) / 3, 0.0) == 0.0
    sync, asyn = delayed_general_bounds(path_graph(4), AnalysisParams(0.9, delay=1))
    w = 0.9 / 4
    assert asyn.delta == pytest.approx(max(w - 0.1 ** 2, w - (1 - w) / 3, 0.0))


def test_delayed_ring4_improves():
    r0 = private_gossip(ring_graph(4), 0.5)
    r1 = delayed_private_gossip(ring_graph(4), 0.5, 1)
    assert r1.epsilon < r0.epsilon
    # frozen from the explicit-sum oracle: e^eps = 2 at t = 1
    e, c = O.delayed_values(ring_graph(4).adjacency, 0.5, 1)
    assert math.exp(r1.epsilon) == pytest.approx(e, rel=1e-12) == pytest.approx(2.0)
    assert r1.c == pytest.approx(c, rel=1e-12)


def test_delayed_k3_converges():
    eps = [delayed_private_gossip(complete_graph(3), 0.5, t).epsilon for t in range(0, 65, 4)]
    assert eps[-1] <= 0.05
    assert all(b <= a + 1e-12 for a, b in zip(eps, eps[1:]))


@given(connected_graphs(max_n=8), st.floats(0.1, 0.9), st.integers(0, 5))
def test_delayed_matches_oracle(g, alpha, t):
    r = delayed_private_gossip(g, alpha, t)
    e, c = O.delayed_values(g.adjacency, alpha, t)
    assert math.exp(r.epsilon) == pytest.approx(e, rel=1e-9)
    assert r.c == pytest.approx(c, rel=1e-9)


@given(connected_graphs(max_n=10), st.floats(0.1, 0.9))
def test_delayed_epsilon_nonincreasing(g, alpha):
    eps = [delayed_private_gossip(g, alpha, t).epsilon for t in range(6)]
    assert all(b <= a + 1e-9 for a, b in zip(eps, eps[1:]))


@given(connected_graphs(), st.floats(0.05, 0.95))
def test_reductions(g, alpha):
    base = private_gossip(g, alpha)
    full = candidate_privacy(g, alpha, range(g.n))
    d0 = delayed_private_gossip(g, alpha, 0)
    w0 = wireless_private_gossip(g, AnalysisParams(alpha, failure=0.0))
    for r in (full, d0, w0):
        assert abs(r.epsilon - base.epsilon) <= 1e-12
        assert abs(r.c - base.c) <= 1e-12
    # witnesses may differ only between pairs tied within rounding
    P = spread_probabilities(g, alpha).p
    for r in (base, full, d0):
        i, j = r.witness
        assert P[j, i] == pytest.approx(P[~np.eye(g.n, dtype=bool)].min(), rel=1e-12)


@given(connected_graphs(), st.floats(0.05, 0.95))
def test_bound_consistency(g, alpha):
    S = spread_probabilities(g, alpha)
    r = private_gossip(g, alpha, S)
    off = S.off_diagonal()
    assert math.exp(-r.epsilon) <= off.min() * (1 + 1e-12)
    m = shortest_paths(g)
    assert epsilon_lower_bound(alpha, g.n, m.diameter, 0.0) <= r.epsilon + 1e-12


# -- Gaussian conversion -------------------------------------------------------

MU_ORACLE = {0.1: 0.01844804158928098, 0.5: 0.0874413269071974, 1.0: 0.1704222693272532, 2.0: 0.3304918149328676}


@pytest.mark.parametrize("eps", sorted(MU_ORACLE))
def test_gaussian_root(eps):
    gp = gaussian_dp_params(eps)
    assert gp.residual <= 1e-10
    assert abs(gdp_delta(eps, gp.mu1)) <= 1e-9
    assert gp.mu1 == pytest.approx(MU_ORACLE[eps], abs=1e-8)
    assert gdp_delta(0.0, gp.mu1) == pytest.approx(2 * O.phi(gp.mu1 / 2) - 1, abs=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 2.0])
def test_gaussian_delta_monotone(eps):
    grid = np.linspace(0, 3 * eps, 61)
    ds = [gaussian_dp_convert(eps, e) for e in grid]
    assert all(0 <= d <= 1 for d in ds)
    assert all(b <= a for a, b in zip(ds, ds[1:]))


def test_gaussian_matches_direct_evaluation():
    mu = gaussian_dp_params(1.0).mu1
    assert gaussian_dp_convert(1.0, 0.5) == pytest.approx(O.gdp_residual(0.5, mu), rel=1e-9)


def test_gaussian_rejects_bad_epsilon():
    for e in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            gaussian_dp_params(e)
    with pytest.raises(ValueError):
        gaussian_dp_convert(1.0, -0.1)
