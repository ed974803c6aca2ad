"""Desk-scale figure presets: plot-ready rows plus automatic trend checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .graphs import (GraphSpec, build_graph, complete_graph, grid_graph, min_decay_centrality,
                     rewire, ring_graph, shortest_paths, star_graph)
from .chain import spread_probabilities
from .privacy import (AnalysisParams, async_delta_lower_bound, candidate_privacy, delayed_private_gossip,
                      one_hop_candidates, private_gossip, wireless_bounds)
from .sim import SimConfig, StopCondition, measure_spreading_time


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class FigureData:
    preset: str
    title: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    reference_params: dict = field(default_factory=dict)
    run_params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class FigurePreset:
    preset: str
    title: str
    reference_params: dict
    defaults: dict
    runner: Callable[[dict], FigureData]

    def run(self, overrides: dict | None = None) -> FigureData:
        params = dict(self.defaults)
        for k, v in (overrides or {}).items():
            if k not in params:
                raise KeyError(f"preset {self.preset} has no parameter {k!r} (known: {sorted(params)})")
            params[k] = _coerce(v, params[k])
        out = self.runner(params)
        out.preset, out.title = self.preset, self.title
        out.reference_params, out.run_params = dict(self.reference_params), params
        return out


def _coerce(value, like):
    if not isinstance(value, str):
        return value
    if isinstance(like, (list, tuple)):
        parts = [p for p in value.split(",") if p]
        kind = type(like[0]) if like else float
        return tuple(kind(p) for p in parts)
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes")
    return type(like)(value)


def _monotone(xs, increasing: bool, tol: float = 1e-12) -> bool:
    d = np.diff(np.asarray(xs, dtype=float))
    return bool(np.all(d >= -tol) if increasing else np.all(d <= tol))


def _series(rows, key_col: int, val_col: int, key) -> list[float]:
    return [r[val_col] for r in rows if r[key_col] == key]


# ---------------------------------------------------------------------------
# Graph families used by the size sweeps
# ---------------------------------------------------------------------------

DETERMINISTIC = ("complete", "star", "ring", "grid2d")
RANDOM = ("random_regular", "erdos_renyi", "geometric_random")


def family_graph(family: str, n: int, avg_degree: float, seed: int):
    if family == "complete":
        return complete_graph(n)
    if family == "star":
        return star_graph(n)
    if family == "ring":
        return ring_graph(n)
    if family == "grid2d":
        return grid_graph(n)
    d = min(avg_degree, n - 1)
    if family == "random_regular":
        d = int(d)
        if (d * n) % 2:
            d -= 1
        return build_graph(GraphSpec("random_regular", n, degree=d, seed=seed))
    if family == "erdos_renyi":
        return build_graph(GraphSpec("erdos_renyi", n, p=d / (n - 1), seed=seed))
    if family == "geometric_random":
        return build_graph(GraphSpec("geometric_random", n, avg_degree=d, seed=seed))
    raise ValueError(f"unknown family {family!r}")


def _sizes_for(family: str, ns) -> list[int]:
    if family == "grid2d":
        return [n for n in ns if math.isqrt(n) ** 2 == n] or [math.isqrt(n) ** 2 for n in ns if n >= 4]
    return list(ns)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def _fig3(p: dict) -> FigureData:
    out = FigureData("", "", ["diameter", "delta_lb"])
    for D in range(1, p["max_diameter"] + 1):
        out.rows.append([D, async_delta_lower_bound(p["alpha"], p["n"], D, p["epsilon"])])
    ys = [r[1] for r in out.rows]
    out.checks.append(Check("left endpoint 0.285571", abs(ys[0] - 0.285571) <= 1e-6, f"{ys[0]:.9g}"))
    ys10 = ys[:10]
    out.checks.append(Check("delta_lb nonincreasing over D=1..10", _monotone(ys10, increasing=False),
                            " ".join(f"{y:.6g}" for y in ys10)))
    return out


def _size_sweep(p: dict) -> FigureData:
    out = FigureData("", "", ["family", "n", "epsilon", "c"])
    for fam in p["families"]:
        for n in _sizes_for(fam, p["sizes"]):
            if fam in RANDOM and n <= p["avg_degree"]:
                continue
            r = private_gossip(family_graph(fam, n, p["avg_degree"], p["seed"] + n), p["alpha"])
            out.rows.append([fam, n, r.epsilon, r.c])
    return out


def _fig5(p: dict) -> FigureData:
    out = _size_sweep(p)
    eps = _series(out.rows, 0, 2, "complete")
    out.checks.append(Check("complete: epsilon nondecreasing in n", _monotone(eps, True)))
    return out


def _fig6(p: dict) -> FigureData:
    out = _size_sweep(p)
    cs = _series(out.rows, 0, 3, "complete")
    out.checks.append(Check("complete: c nondecreasing in n", _monotone(cs, True)))
    return out


def _structure_sweep(p: dict) -> FigureData:
    out = FigureData("", "", ["family", "n", "diameter", "min_decay_centrality"])
    beta = 1.0 - p["alpha"]
    for fam in p["families"]:
        for n in _sizes_for(fam, p["sizes"]):
            g = family_graph(fam, n, 0, 0)
            m = shortest_paths(g)
            out.rows.append([fam, n, m.diameter, min_decay_centrality(g, beta, m)])
    return out


def _fig7(p: dict) -> FigureData:
    out = _structure_sweep(p)
    ok = all(r[2] == {"complete": 1, "star": 2, "ring": r[1] // 2}.get(r[0], r[2]) for r in out.rows)
    grid = all(r[2] == 2 * (math.isqrt(r[1]) - 1) for r in out.rows if r[0] == "grid2d")
    out.checks.append(Check("closed-form diameters (complete 1, star 2, ring n//2, grid 2(sqrt n - 1))", ok and grid))
    return out


def _fig8(p: dict) -> FigureData:
    out = _structure_sweep(p)
    beta = 1.0 - p["alpha"]
    ok = all(abs(r[3] - (r[1] - 1) * beta) <= 1e-9 for r in out.rows if r[0] == "complete")
    out.checks.append(Check("complete: decay centrality (n-1) beta", ok))
    return out


def _rewire_sweep(p: dict) -> FigureData:
    out = FigureData("", "", ["degree", "rewiring", "epsilon_mean", "c_mean", "seeds"])
    for d in p["degrees"]:
        eps = np.zeros((p["seeds"], len(p["rewiring"])))
        cs = np.zeros_like(eps)
        for s in range(p["seeds"]):
            base = build_graph(GraphSpec("random_regular", p["n"], degree=d, seed=p["seed"] + s))
            for k, prob in enumerate(p["rewiring"]):
                # same stream for every probability: the rewired edge sets are nested
                g = rewire(base, prob, np.random.default_rng([p["seed"] + s, d]))
                r = private_gossip(g, p["alpha"])
                eps[s, k], cs[s, k] = r.epsilon, r.c
        for k, prob in enumerate(p["rewiring"]):
            out.rows.append([d, prob, float(eps[:, k].mean()), float(cs[:, k].mean()), p["seeds"]])
    return out


def _fig9(p: dict) -> FigureData:
    out = _rewire_sweep(p)
    for d in p["degrees"]:
        ys = _series(out.rows, 0, 2, d)
        out.checks.append(Check(f"degree {d}: mean epsilon nondecreasing in rewiring", _monotone(ys, True),
                                " ".join(f"{y:.5g}" for y in ys)))
    return out


def _fig10(p: dict) -> FigureData:
    out = _rewire_sweep(p)
    for d in p["degrees"]:
        ys = _series(out.rows, 0, 3, d)
        out.checks.append(Check(f"degree {d}: mean c nonincreasing in rewiring", _monotone(ys, False),
                                " ".join(f"{y:.5g}" for y in ys)))
    return out


def _spreading(p: dict, timing: str) -> FigureData:
    out = FigureData("", "", ["family", "instance", "failure", "delta_lb", "time_mean", "time_stderr", "ratio", "ratio_stderr"])
    fs = tuple(p["failures"])
    for fam in p["families"]:
        for inst in range(p["instances"]):
            g = family_graph(fam, p["n"], p["avg_degree"], p["seed"] + inst)
            m = shortest_paths(g)
            cfg = SimConfig(protocol=p["protocol"], timing=timing, alpha=p["alpha"],
                            stop=StopCondition.informed_fraction(p["fraction"]),
                            master_seed=p["seed"] + inst, num_trials=p["trials"])
            res = measure_spreading_time(g, cfg, fs, workers=p["workers"])
            for f in fs:
                dl = wireless_bounds(g, AnalysisParams(p["alpha"], f, 0, p["epsilon"]), m)[1].delta
                t = res[float(f)]["time"]
                r = res[float(f)]["ratio"] if "ratio" in res[float(f)] else None
                out.rows.append([fam, inst, f, dl, t.value, t.stderr, r.value if r else math.nan,
                                 r.stderr if r else math.nan])
    for fam in p["families"]:
        dls = [r[3] for r in out.rows if r[0] == fam and r[1] == 0]
        out.checks.append(Check(f"{fam}: delta_lb nonincreasing in f", _monotone(dls, False)))
    if timing == "async":
        # thinning by failed pushes rescales async wall-clock time by exactly 1/(1-f)
        bad = [r for r in out.rows if r[2] > 0 and abs(r[6] - 1 / (1 - r[2])) > 4 * r[7]]
        out.checks.append(Check("time ratio within 4 SE of 1/(1-f)", not bad, f"{len(bad)} points outside"))
    return out


def _candidate_stats(g, alpha: float, runs: int, rng: np.random.Generator) -> tuple[float, float, float]:
    S = spread_probabilities(g, alpha)
    whole = private_gossip(g, alpha, S).epsilon
    eps, cs = [], []
    for src in rng.integers(0, g.n, size=runs):
        r = candidate_privacy(g, alpha, one_hop_candidates(g, int(src)), S)
        eps.append(r.epsilon)
        cs.append(r.c)
    return float(np.mean(eps)), float(np.mean(cs)), whole


def _fig13(p: dict) -> FigureData:
    out = FigureData("", "", ["family", "n", "epsilon_mean", "c_mean", "runs", "whole_epsilon"])
    for fam in p["families"]:
        for n in p["sizes"]:
            g = family_graph(fam, n, p["avg_degree"], p["seed"] + n)
            e, c, whole = _candidate_stats(g, p["alpha"], p["runs"], np.random.default_rng([p["seed"], n]))
            out.rows.append([fam, n, e, c, p["runs"], whole])
    out.checks.append(Check("candidate epsilon never exceeds whole-network epsilon",
                            all(r[2] <= r[5] + 1e-12 for r in out.rows)))
    return out


def _fig14(p: dict) -> FigureData:
    out = FigureData("", "", ["family", "avg_degree", "epsilon_mean", "c_mean", "runs", "whole_epsilon"])
    for fam in p["families"]:
        for d in p["degrees"]:
            g = family_graph(fam, p["n"], d, p["seed"] + int(d))
            e, c, whole = _candidate_stats(g, p["alpha"], p["runs"], np.random.default_rng([p["seed"], int(d)]))
            out.rows.append([fam, d, e, c, p["runs"], whole])
    out.checks.append(Check("candidate epsilon never exceeds whole-network epsilon",
                            all(r[2] <= r[5] + 1e-12 for r in out.rows)))
    return out


def _delay_sweep(p: dict) -> FigureData:
    out = FigureData("", "", ["family", "delay", "epsilon", "c"])
    for fam in p["families"]:
        g = family_graph(fam, p["n"], p["avg_degree"], p["seed"])
        S = spread_probabilities(g, p["alpha"])
        for t in range(p["max_delay"] + 1):
            r = delayed_private_gossip(g, p["alpha"], t, S)
            out.rows.append([fam, t, r.epsilon, r.c])
    return out


def _fig15(p: dict) -> FigureData:
    out = _delay_sweep(p)
    for fam in p["checked"]:
        ys = _series(out.rows, 0, 2, fam)
        out.checks.append(Check(f"{fam}: epsilon nonincreasing in delay", _monotone(ys, False, 1e-9)))
    return out


def _fig16(p: dict) -> FigureData:
    out = _delay_sweep(p)
    for fam in p["checked"]:
        ys = _series(out.rows, 0, 3, fam)
        out.checks.append(Check(f"{fam}: c nondecreasing in delay", _monotone(ys, True, 1e-9)))
    return out


# ---------------------------------------------------------------------------
# Preset table
# ---------------------------------------------------------------------------

_ALL_FAMILIES = DETERMINISTIC + RANDOM
_SIZES = tuple(range(10, 101, 10)) + (16, 25, 36, 49, 64, 81)
_SIZES = tuple(sorted(set(_SIZES)))

_size_defaults = dict(alpha=0.5, sizes=_SIZES, families=_ALL_FAMILIES, avg_degree=10, seed=1)
_size_reference = dict(alpha=0.5, families="complete/star/ring/grid/regular/ER/GR", avg_degree=10,
                   sizes="figure axis, not tabulated")
_struct_defaults = dict(alpha=0.5, sizes=_SIZES, families=DETERMINISTIC)
_rewire_defaults = dict(alpha=0.5, n=100, degrees=(10,), rewiring=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5), seeds=20, seed=0)
_rewire_reference = dict(alpha=0.5, n=500, degrees="10/20/50", rewiring="0..1", seeds="not stated")
_spread_defaults = dict(protocol="standard", alpha=0.5, epsilon=1.0, n=2000, avg_degree=10,
                        families=("erdos_renyi", "geometric_random"), instances=2, trials=20,
                        failures=(0.0, 0.2, 0.4, 0.6, 0.8), fraction=0.9, seed=0, workers=1)
_spread_reference = dict(protocol="standard", alpha=0.5, epsilon=1.0, n=100000, avg_degree=10,
                     families="ER/GR", instances=5, trials=100, fraction=0.9)
_cand_n_defaults = dict(alpha=0.5, sizes=(50, 100, 150, 200), avg_degree=10,
                        families=RANDOM, runs=500, seed=0)
_cand_d_defaults = dict(alpha=0.5, n=200, degrees=(6, 8, 10, 12, 14, 16, 18, 20),
                        families=RANDOM, runs=500, seed=0)
_delay_defaults = dict(alpha=0.5, n=100, avg_degree=10, max_delay=6, seed=1,
                       families=("complete", "erdos_renyi", "random_regular", "geometric_random"),
                       checked=("complete", "erdos_renyi", "random_regular"))
_delay_reference = dict(alpha=0.5, n=500, families="complete/ER/regular/GR", max_delay="figure axis")

PRESETS: dict[str, FigurePreset] = {
    p.preset: p for p in [
        FigurePreset("fig3", "async tolerance lower bound vs diameter",
                     dict(alpha=0.3, n=50, epsilon=0.01, max_diameter=10),
                     dict(alpha=0.3, n=50, epsilon=0.01, max_diameter=10), _fig3),
        FigurePreset("fig5", "epsilon vs number of nodes", _size_reference, _size_defaults, _fig5),
        FigurePreset("fig6", "c vs number of nodes", _size_reference, _size_defaults, _fig6),
        FigurePreset("fig7", "diameter vs number of nodes", dict(families="complete/star/ring/grid"),
                     _struct_defaults, _fig7),
        FigurePreset("fig8", "decay centrality vs number of nodes", dict(families="complete/star/ring/grid"),
                     _struct_defaults, _fig8),
        FigurePreset("fig9", "epsilon vs rewiring probability", _rewire_reference, _rewire_defaults, _fig9),
        FigurePreset("fig10", "c vs rewiring probability", _rewire_reference, _rewire_defaults, _fig10),
        FigurePreset("fig11", "spreading time vs tolerance bound, synchronous", _spread_reference,
                     _spread_defaults, lambda p: _spreading(p, "sync")),
        FigurePreset("fig12", "spreading time vs tolerance bound, asynchronous", _spread_reference,
                     _spread_defaults, lambda p: _spreading(p, "async")),
        FigurePreset("fig13", "candidate-set epsilon and c vs number of nodes",
                     dict(alpha=0.5, avg_degree=10, families="ER/GR/regular", runs=15000, sizes="figure axis"),
                     _cand_n_defaults, _fig13),
        FigurePreset("fig14", "candidate-set epsilon and c vs average degree",
                     dict(alpha=0.5, n=500, families="ER/GR/regular", runs=15000), _cand_d_defaults, _fig14),
        FigurePreset("fig15", "epsilon vs monitoring delay", _delay_reference, _delay_defaults, _fig15),
        FigurePreset("fig16", "c vs monitoring delay", _delay_reference, _delay_defaults, _fig16),
    ]
}


def run_preset(name: str, overrides: dict | None = None) -> FigureData:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return PRESETS[name].run(overrides)
