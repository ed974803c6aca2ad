"""Seeded Monte-Carlo simulator for standard and private push gossip.

The attacker sees each executed push with probability ``alpha``; on wireless
links a push fails with probability ``f`` (the sender stays active and
nothing is observed) and a sensor report is lost with probability ``f``, so a
successful push is reported with probability ``alpha (1 - f)``.

Every trial draws from its own stream ``SeedSequence(master_seed,
spawn_key=(trial_index,))``. The vectorised estimators work on fixed-size
blocks of trials with streams keyed by block index and aggregate integer
counts, so results do not depend on how many workers run them.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .graphs import Graph

PROTOCOLS = ("standard", "private")
TIMINGS = ("sync", "async")
DEFAULT_BLOCK = 10_000


@dataclass(frozen=True)
class StopCondition:
    kind: str = "all_informed"
    fraction: float | None = None
    target: int | None = None

    KINDS = ("all_informed", "fraction", "first_observation", "target_absorbed")

    @classmethod
    def all_informed(cls) -> "StopCondition":
        return cls("all_informed")

    @classmethod
    def informed_fraction(cls, q: float) -> "StopCondition":
        return cls("fraction", fraction=q)

    @classmethod
    def first_observation(cls) -> "StopCondition":
        return cls("first_observation")

    @classmethod
    def target_absorbed(cls, i: int) -> "StopCondition":
        """Stop when node ``i`` becomes active, or at an earlier observation."""
        return cls("target_absorbed", target=i)

    @classmethod
    def parse(cls, text: str) -> "StopCondition":
        name, _, arg = text.partition(":")
        if name in ("all", "all_informed"):
            return cls.all_informed()
        if name == "fraction":
            return cls.informed_fraction(float(arg))
        if name in ("first", "first_observation"):
            return cls.first_observation()
        if name in ("target", "target_absorbed"):
            return cls.target_absorbed(int(arg))
        raise ValueError(f"unknown stop condition {text!r}")

    def validate(self, n: int) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown stop condition {self.kind!r}")
        if self.kind == "fraction" and not (self.fraction is not None and 0 < self.fraction <= 1):
            raise ValueError(f"fraction stop needs 0 < q <= 1, got {self.fraction}")
        if self.kind == "target_absorbed" and not (self.target is not None and 0 <= self.target < n):
            raise ValueError(f"target node {self.target} not in graph")

    def needed(self, n: int) -> int:
        """Informed count that ends the run (n + 1 when count never stops it)."""
        if self.kind == "all_informed":
            return n
        if self.kind == "fraction":
            return max(1, math.ceil(self.fraction * n - 1e-12))
        return n + 1


@dataclass(frozen=True)
class SimConfig:
    protocol: str = "private"
    timing: str = "async"
    alpha: float = 1.0
    failure: float = 0.0
    monitor_delay: int = 0
    source: int = 0
    stop: StopCondition = field(default_factory=StopCondition)
    master_seed: int = 0
    num_trials: int = 1000
    record_observations: bool = True
    record_actions: bool = False
    wall_clock: bool = False
    max_steps: int = 50_000_000

    def validate(self, g: Graph) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.timing not in TIMINGS:
            raise ValueError(f"timing must be one of {TIMINGS}, got {self.timing!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.failure < 1.0:
            raise ValueError(f"failure probability must lie in [0, 1), got {self.failure}")
        if self.monitor_delay < 0 or int(self.monitor_delay) != self.monitor_delay:
            raise ValueError("monitor delay must be a non-negative integer")
        if not 0 <= self.source < g.n:
            raise ValueError(f"source {self.source} not in graph")
        if self.num_trials < 1:
            raise ValueError("num_trials must be >= 1")
        self.stop.validate(g.n)
        if self.stop.kind == "first_observation" and self.alpha * (1 - self.failure) == 0:
            raise ValueError("first_observation stop never fires with zero detection probability")

    @property
    def report_probability(self) -> float:
        return self.alpha * (1.0 - self.failure)


@dataclass(frozen=True)
class ObservationSequence:
    """Attacker's view: ``(node, slot)`` in sync, ``(node, position)`` in async."""

    timing: str
    events: tuple[tuple[int, int], ...] = ()

    def __len__(self):
        return len(self.events)

    @property
    def first(self) -> tuple[int, int] | None:
        return self.events[0] if self.events else None


@dataclass
class TrialOutcome:
    trial_index: int
    informed_sizes: list[int]
    observations: ObservationSequence
    rounds: int | None
    steps: int
    wall_time: float | None
    reason: str
    actions: list[tuple[int, int, int, bool]] | None = None
    first_seen_step: int | None = None

    @property
    def spreading_time(self) -> float:
        """Rounds (sync), else wall-clock time when recorded, else activations."""
        if self.rounds is not None:
            return float(self.rounds)
        return self.wall_time if self.wall_time is not None else float(self.steps)

    def to_json(self) -> str:
        d = asdict(self)
        d["observations"] = {"timing": self.observations.timing, "events": [list(e) for e in self.observations.events]}
        return json.dumps(d)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trial_index,))))


def block_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


class _Uniforms:
    __slots__ = ("rng", "buf", "k", "size")

    def __init__(self, rng: np.random.Generator, size: int = 64):
        self.rng, self.size = rng, size
        self.buf = rng.random(size).tolist()
        self.k = 0

    def __call__(self) -> float:
        if self.k == self.size:
            # grow the batch so long trials amortise the draw cost
            self.size = min(2 * self.size, 1 << 16)
            self.buf = self.rng.random(self.size).tolist()
            self.k = 0
        u = self.buf[self.k]
        self.k += 1
        return u


# ---------------------------------------------------------------------------
# Single trials
# ---------------------------------------------------------------------------


def run_trial(g: Graph, cfg: SimConfig, trial_index: int) -> TrialOutcome:
    cfg.validate(g)
    rng = trial_rng(cfg.master_seed, trial_index)
    if cfg.protocol == "private":
        return _run_private(g, cfg, rng, trial_index)
    if cfg.timing == "sync":
        return _run_standard_sync(g, cfg, rng, trial_index)
    return _run_standard_async(g, cfg, rng, trial_index)


def _run_private(g: Graph, cfg: SimConfig, rng: np.random.Generator, trial_index: int) -> TrialOutcome:
    adj = g.adjacency
    n = g.n
    draw = _Uniforms(rng)
    f, q, delay = cfg.failure, cfg.report_probability, cfg.monitor_delay
    needed = cfg.stop.needed(n)
    stop_first = cfg.stop.kind in ("first_observation", "target_absorbed")
    target = cfg.stop.target if cfg.stop.kind == "target_absorbed" else -1
    sync = cfg.timing == "sync"
    wall = 0.0 if (cfg.wall_clock and not sync) else None
    actions = [] if cfg.record_actions else None
    record = cfg.record_observations or stop_first

    active = cfg.source
    informed = bytearray(n)
    informed[active] = 1
    count = 1
    sizes = [1]
    events: list[tuple[int, int]] = []
    first_step = None
    step = 0
    reason = "target_absorbed" if active == target else ""
    if count >= needed:
        reason = "informed"
    while not reason:
        if step >= cfg.max_steps:
            reason = "max_steps"
            break
        if wall is not None:
            wall -= math.log(1.0 - draw())
        ok = f == 0.0 or draw() >= f
        if ok:
            nbrs = adj[active]
            dest = nbrs[int(draw() * len(nbrs))]
            seen = q > 0.0 and draw() < q and step >= delay
            if actions is not None:
                actions.append((active, step, dest, seen))
            if seen:
                if first_step is None:
                    first_step = step
                if record:
                    events.append((active, step if sync else len(events)))
            active = dest
            if not informed[dest]:
                informed[dest] = 1
                count += 1
        elif actions is not None:
            actions.append((active, step, -1, False))
        step += 1
        sizes.append(count)
        if stop_first and events:
            reason = "observed"
        elif active == target:
            reason = "target_absorbed"
        elif count >= needed:
            reason = "informed"
    return TrialOutcome(trial_index, sizes, ObservationSequence(cfg.timing, tuple(events)),
                        step if sync else None, step, wall, reason, actions, first_step)


def _run_standard_sync(g: Graph, cfg: SimConfig, rng: np.random.Generator, trial_index: int) -> TrialOutcome:
    n = g.n
    indptr, indices = g.csr
    deg = g.degrees
    f, q, delay = cfg.failure, cfg.report_probability, cfg.monitor_delay
    needed = cfg.stop.needed(n)
    stop_first = cfg.stop.kind in ("first_observation", "target_absorbed")
    target = cfg.stop.target if cfg.stop.kind == "target_absorbed" else -1
    record = cfg.record_observations or stop_first
    actions = [] if cfg.record_actions else None

    informed = np.zeros(n, dtype=bool)
    informed[cfg.source] = True
    count = 1
    sizes = [1]
    events: list[tuple[int, int]] = []
    first_step = None
    r = 0
    reason = "target_absorbed" if cfg.source == target else ("informed" if count >= needed else "")
    while not reason:
        if r >= cfg.max_steps:
            reason = "max_steps"
            break
        act = np.flatnonzero(informed)
        u = rng.random((3, act.size))
        ok = u[0] >= f
        dest = indices[indptr[act] + (u[1] * deg[act]).astype(np.int64)]
        seen = ok & (u[2] < q) if r >= delay else np.zeros(act.size, dtype=bool)
        if actions is not None:
            actions.extend((int(a), r, int(d) if o else -1, bool(s)) for a, d, o, s in zip(act, dest, ok, seen))
        if seen.any():
            if first_step is None:
                first_step = r
            if record:
                events.extend((int(a), r) for a in act[seen])
        informed[dest[ok]] = True
        count = int(informed.sum())
        r += 1
        sizes.append(count)
        if stop_first and events:
            reason = "observed"
        elif target >= 0 and informed[target]:
            reason = "target_absorbed"
        elif count >= needed:
            reason = "informed"
    return TrialOutcome(trial_index, sizes, ObservationSequence("sync", tuple(events)), r, r, None, reason,
                        actions, first_step)


def _run_standard_async(g: Graph, cfg: SimConfig, rng: np.random.Generator, trial_index: int) -> TrialOutcome:
    adj = g.adjacency
    n = g.n
    draw = _Uniforms(rng)
    f, q, delay = cfg.failure, cfg.report_probability, cfg.monitor_delay
    needed = cfg.stop.needed(n)
    stop_first = cfg.stop.kind in ("first_observation", "target_absorbed")
    target = cfg.stop.target if cfg.stop.kind == "target_absorbed" else -1
    record = cfg.record_observations or stop_first
    wall = 0.0 if cfg.wall_clock else None
    actions = [] if cfg.record_actions else None

    informed = bytearray(n)
    informed[cfg.source] = 1
    order = [cfg.source]
    sizes = [1]
    events: list[tuple[int, int]] = []
    first_step = None
    step = 0
    reason = "target_absorbed" if cfg.source == target else ("informed" if 1 >= needed else "")
    while not reason:
        if step >= cfg.max_steps:
            reason = "max_steps"
            break
        k = len(order)
        if wall is not None:
            # k unit-rate clocks: next tick after Exp(k)
            wall -= math.log(1.0 - draw()) / k
        node = order[int(draw() * k)]
        ok = f == 0.0 or draw() >= f
        if ok:
            nbrs = adj[node]
            dest = nbrs[int(draw() * len(nbrs))]
            seen = q > 0.0 and draw() < q and step >= delay
            if actions is not None:
                actions.append((node, step, dest, seen))
            if seen:
                if first_step is None:
                    first_step = step
                if record:
                    events.append((node, len(events)))
            if not informed[dest]:
                informed[dest] = 1
                order.append(dest)
        elif actions is not None:
            actions.append((node, step, -1, False))
        step += 1
        sizes.append(len(order))
        if stop_first and events:
            reason = "observed"
        elif target >= 0 and informed[target]:
            reason = "target_absorbed"
        elif len(order) >= needed:
            reason = "informed"
    return TrialOutcome(trial_index, sizes, ObservationSequence("async", tuple(events)), None, step, wall,
                        reason, actions, first_step)


def _trial_chunk(args) -> list[TrialOutcome]:
    g, cfg, indices = args
    return [run_trial(g, cfg, i) for i in indices]


def _pmap(fn: Callable, jobs: Sequence, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def run_trials(g: Graph, cfg: SimConfig, workers: int = 1, trials: Iterable[int] | None = None) -> list[TrialOutcome]:
    """Run trials in index order; parallel runs return identical outcomes."""
    cfg.validate(g)
    idx = list(range(cfg.num_trials) if trials is None else trials)
    if workers <= 1:
        return [run_trial(g, cfg, i) for i in idx]
    size = max(1, math.ceil(len(idx) / workers))
    chunks = [(g, cfg, idx[s:s + size]) for s in range(0, len(idx), size)]
    return [o for part in _pmap(_trial_chunk, chunks, workers) for o in part]


def dump_trials(outcomes: Iterable[TrialOutcome], fh) -> None:
    for o in outcomes:
        fh.write(o.to_json() + "\n")


def check_trial_consistency(outcome: TrialOutcome, cfg: SimConfig) -> None:
    """Raise ``AssertionError`` if the observations disagree with the actions.

    Needs a trial run with ``record_actions=True``.
    """
    if outcome.actions is None:
        raise ValueError("trial was run without record_actions")
    seen = [(node, t) for node, t, _, s in outcome.actions if s]
    assert all(t >= cfg.monitor_delay for _, t in seen), "observation inside the delay window"
    if cfg.record_observations:
        assert len(seen) == len(outcome.observations.events)
        for (node, t), (onode, label) in zip(seen, outcome.observations.events):
            assert node == onode
            if cfg.timing == "sync":
                assert label == t
        labels = [e[1] for e in outcome.observations.events]
        if cfg.timing == "sync":
            assert labels == sorted(labels)
        else:
            assert labels == list(range(len(labels)))
    sizes = outcome.informed_sizes
    assert sizes[0] == 1 and all(a <= b for a, b in zip(sizes, sizes[1:]))
    if cfg.protocol == "private":
        assert all(b - a <= 1 for a, b in zip(sizes, sizes[1:]))
        chain = [a for a, *_ in outcome.actions]
        for (a, _, d, _), nxt in zip(outcome.actions, chain[1:]):
            assert nxt == (a if d < 0 else d), "private gossip handed activity to a non-recipient"


# ---------------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Estimate:
    name: str
    value: float
    stderr: float
    trials: int


@dataclass(frozen=True)
class SimStats:
    estimates: dict[str, Estimate]
    seed: int
    trials: int

    def __getitem__(self, name: str) -> Estimate:
        return self.estimates[name]

    def __contains__(self, name: str) -> bool:
        return name in self.estimates

    def rows(self) -> list[list]:
        return [[e.name, e.value, e.stderr, e.trials, self.seed] for e in self.estimates.values()]


def proportion(name: str, successes: int, trials: int) -> Estimate:
    p = successes / trials
    return Estimate(name, p, math.sqrt(p * (1.0 - p) / trials), trials)


def mean_estimate(name: str, values: Sequence[float]) -> Estimate:
    x = np.asarray(values, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return Estimate(name, float(x.mean()), se, int(x.size))


def _blocks(num_trials: int, block_size: int) -> list[tuple[int, int]]:
    return [(b, min(block_size, num_trials - b * block_size)) for b in range(math.ceil(num_trials / block_size))]


def _walk_block(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised private-gossip walks from one source.

    Returns per-node counts of walks that activated the node before the first
    observation, per-node counts of first observed actor, and the count of
    first observations that happened at the first monitored step.
    """
    g, alpha, failure, delay, source, size, seed, key, needed = args
    rng = block_rng(seed, *key)
    indptr, indices = g.csr
    deg = g.degrees
    n = g.n
    q = alpha * (1.0 - failure)
    pos = np.full(size, source, dtype=np.int64)
    visited = np.zeros((size, n), dtype=bool)
    visited[:, source] = True
    count = np.ones(size, dtype=np.int64)
    rows = np.arange(size)
    reached = np.zeros(n, dtype=np.int64)
    first = np.zeros(n, dtype=np.int64)
    at_start = 0
    step = 0
    while rows.size:
        u = rng.random((3, rows.size))
        ok = u[0] >= failure if failure > 0 else np.ones(rows.size, dtype=bool)
        seen = ok & (u[1] < q) if step >= delay else np.zeros(rows.size, dtype=bool)
        if seen.any():
            np.add.at(first, pos[seen], 1)
            if step == delay:
                at_start += int(seen.sum())
            dead = rows[seen]
            reached += visited[dead].sum(axis=0)
        move = ok & ~seen
        mr = rows[move]
        mp = pos[move]
        dest = indices[indptr[mp] + (u[2][move] * deg[mp]).astype(np.int64)]
        fresh = ~visited[mr, dest]
        visited[mr, dest] = True
        count[mr] += fresh
        pos[move] = dest
        alive = ~seen
        done = alive & (count[rows] >= needed)
        if done.any():
            reached += visited[rows[done]].sum(axis=0)
        keep = alive & ~done
        rows, pos = rows[keep], pos[keep]
        step += 1
    return reached, first, np.int64(at_start)


def _walk_counts(g: Graph, alpha: float, source: int, num_trials: int, seed: int, failure: float = 0.0,
                 delay: int = 0, needed: int | None = None, block_size: int = DEFAULT_BLOCK, workers: int = 1):
    if not 0.0 < alpha * (1.0 - failure) <= 1.0:
        raise ValueError("walk estimators need a positive detection probability")
    needed = g.n + 1 if needed is None else needed
    jobs = [(g, alpha, failure, delay, source, size, seed, (source, b), needed)
            for b, size in _blocks(num_trials, block_size)]
    reached = np.zeros(g.n, dtype=np.int64)
    first = np.zeros(g.n, dtype=np.int64)
    at_start = 0
    for r, fo, s in _pmap(_walk_block, jobs, workers):
        reached += r
        first += fo
        at_start += int(s)
    return reached, first, at_start


def estimate_spread_row(g: Graph, alpha: float, j: int, num_trials: int, seed: int,
                        block_size: int = DEFAULT_BLOCK, workers: int = 1) -> SimStats:
    """Empirical ``P(j -> i)`` for every target ``i`` from walks started at ``j``."""
    reached, _, _ = _walk_counts(g, alpha, j, num_trials, seed, block_size=block_size, workers=workers)
    reached[j] = num_trials
    est = {f"P({j}->{i})": proportion(f"P({j}->{i})", int(reached[i]), num_trials) for i in range(g.n)}
    return SimStats(est, seed, num_trials)


def estimate_spread_probability(g: Graph, alpha: float, j: int, i: int, num_trials: int, seed: int,
                                block_size: int = DEFAULT_BLOCK, workers: int = 1) -> SimStats:
    """Empirical probability that ``i`` becomes active before any observation.

    Each trial walks the single active token from ``j``; every step is
    observed with probability ``alpha`` and the trial succeeds if the token
    reaches ``i`` first (immediately when ``j == i``).
    """
    row = estimate_spread_row(g, alpha, j, num_trials, seed, block_size, workers)
    name = f"P({j}->{i})"
    return SimStats({name: row[name]}, seed, num_trials)


def estimate_first_observation_distribution(g: Graph, cfg: SimConfig, workers: int = 1,
                                            block_size: int = DEFAULT_BLOCK) -> SimStats:
    """Frequency of each node being the attacker's first observed actor.

    Also reports ``first@start``: the first observation falls on the first
    monitored slot or step, and ``first=none`` for runs that ended unseen.
    """
    cfg.validate(g)
    n, N = g.n, cfg.num_trials
    if cfg.protocol == "private" and cfg.stop.kind in ("first_observation", "all_informed", "fraction"):
        needed = cfg.stop.needed(n) if cfg.stop.kind != "first_observation" else n + 1
        _, first, at_start = _walk_counts(g, cfg.alpha, cfg.source, N, cfg.master_seed, cfg.failure,
                                          cfg.monitor_delay, needed, block_size, workers)
        first = first.tolist()
    else:
        first = [0] * n
        at_start = 0
        for o in run_trials(g, cfg, workers):
            ev = o.observations.first
            if ev is not None:
                first[ev[0]] += 1
                at_start += o.first_seen_step == cfg.monitor_delay
    est = {f"first={k}": proportion(f"first={k}", int(first[k]), N) for k in range(n)}
    est["first=none"] = proportion("first=none", N - int(sum(first)), N)
    est["first@start"] = proportion("first@start", int(at_start), N)
    return SimStats(est, cfg.master_seed, N)


def measure_spreading_time(g: Graph, cfg: SimConfig, failures: Sequence[float] = (0.0,),
                           workers: int = 1) -> dict[float, SimStats]:
    """Mean spreading time per failure probability, and the ratio to ``f = 0``.

    Sync runs report rounds; async runs report wall-clock time from the
    nodes' unit-rate Poisson clocks. Each entry carries ``time`` and, when
    ``0.0`` is among the failures, ``ratio`` (mean at f over mean at 0, with a
    delta-method standard error).
    """
    if cfg.stop.kind not in ("all_informed", "fraction"):
        raise ValueError("spreading time needs an all_informed or fraction stop condition")
    base = dict(record_observations=False, record_actions=False, wall_clock=cfg.timing == "async")
    out: dict[float, SimStats] = {}
    for f in failures:
        c = SimConfig(**{**asdict_shallow(cfg), **base, "failure": float(f)})
        times = [o.spreading_time for o in run_trials(g, c, workers)]
        out[float(f)] = SimStats({"time": mean_estimate("time", times)}, cfg.master_seed, c.num_trials)
    if 0.0 in out:
        m0 = out[0.0]["time"]
        for f, st in out.items():
            m = st["time"]
            r = m.value / m0.value
            se = r * math.sqrt((m.stderr / m.value) ** 2 + (m0.stderr / m0.value) ** 2) if f != 0.0 else 0.0
            st.estimates["ratio"] = Estimate("ratio", r, se, m.trials)
    return out


def asdict_shallow(cfg: SimConfig) -> dict:
    return {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
