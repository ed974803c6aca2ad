"""Command-line front end: generate, analyze, validate, reproduce, simulate."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import math
import sys
from pathlib import Path

from . import graphs as G
from . import privacy as PV
from .chain import spread_probabilities
from .experiments import PRESETS, run_preset
from .sim import (SimConfig, StopCondition, dump_trials, estimate_first_observation_distribution,
                  estimate_spread_row, mean_estimate, run_trials)

ANALYZE_COLUMNS = ["graph_id", "family", "n", "alpha", "f", "t", "Q_spec", "epsilon", "delta", "c",
                   "kind", "witness_i", "witness_j"]
VALIDATE_COLUMNS = ["estimand", "closed_form", "estimate", "stderr", "z", "pass"]
Z_MAX = 4.0

FAMILY_ALIASES = {"regular": "random_regular", "er": "erdos_renyi", "gr": "geometric_random",
                  "grid": "grid2d", "rewired": "rewired_regular"}


def fmt(v) -> str:
    """9 significant digits; infinities as ``inf``; ``None`` as empty."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return f"{v:.9g}"
    if isinstance(v, (tuple, list)):
        return " ".join(fmt(x) for x in v)
    try:
        return fmt(v.item())  # numpy scalars
    except AttributeError:
        return str(v)


def render_csv(columns, rows, comments=(), timestamp: bool = True) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def parse_floats(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(x) for x in str(text).split(",") if x.strip()]


def parse_ints(text) -> list[int]:
    if isinstance(text, int):
        return [text]
    return [int(x) for x in str(text).split(",") if x.strip()]


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{ln}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


# ---------------------------------------------------------------------------
# Graph input
# ---------------------------------------------------------------------------


def load_graph_arg(path: str) -> tuple[G.Graph, str, str]:
    data = Path(path).read_bytes()
    g = G.load_graph(data)
    meta = G.graph_meta(data)
    return g, Path(path).stem, str(meta.get("family", "custom"))


def parse_candidate(spec: str | None, g: G.Graph) -> tuple[tuple[int, ...] | None, str]:
    """``all`` / ``None`` -> whole network; ``1hop:s`` -> s and its neighbours; else a node list."""
    if spec is None or spec == "all":
        return None, "all"
    if spec.startswith("1hop:"):
        q = PV.one_hop_candidates(g, int(spec.split(":", 1)[1]))
    else:
        q = PV.candidate_set(parse_ints(spec.replace(" ", ",")), g.n)
    return q, " ".join(map(str, q))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    family = FAMILY_ALIASES.get(args.family, args.family)
    spec = G.GraphSpec(family, args.n, degree=args.degree, p=args.p, radius=args.radius,
                       avg_degree=args.avg_degree, rewiring=args.rewiring, seed=args.seed)
    g = G.build_graph(spec)
    m = G.shortest_paths(g)
    meta = {"family": family, "seed": args.seed}
    data = G.save_graph(g, meta)
    if args.out in (None, "-"):
        sys.stdout.write(data.decode() + "\n")
    else:
        Path(args.out).write_bytes(data)
    print(f"n={g.n} edges={g.num_edges} diameter={m.diameter} max_degree={m.max_degree}", file=sys.stderr)
    return 0


def _guarantee_row(gid, family, n, alpha, f, t, qspec, r: PV.PrivacyGuarantee):
    wi, wj = r.witness if r.witness is not None else (None, None)
    return [gid, family, n, alpha, f, t, qspec, r.epsilon, r.delta, r.c, f"{r.kind}:{r.regime}", wi, wj]


def cmd_analyze(args) -> int:
    g, gid, family = load_graph_arg(args.graph)
    m = G.shortest_paths(g)
    q, qspec = parse_candidate(args.candidate, g)
    rows = []
    for th in parse_ints(args.theorem):
        if th not in (1, 2, 3, 4, 5, 7, 8):
            raise ValueError(f"unknown theorem selector {th}")
        for a in parse_floats(args.alpha):
            for f in parse_floats(args.failure):
                for t in parse_ints(args.delay):
                    if th in (1, 2, 3) and (f != 0 or t != 0):
                        raise ValueError(f"selector {th} needs --failure 0 --delay 0")
                    if th in (4, 5) and t != 0:
                        raise ValueError(f"selector {th} needs --delay 0")
                    if th in (7, 8) and f != 0:
                        raise ValueError(f"selector {th} needs --failure 0")
                    params = PV.AnalysisParams(a, f, t, args.epsilon)
                    if th == 1:
                        res = PV.theorem1_bounds(g, params, m)
                    elif th == 2:
                        res = (PV.private_gossip(g, a),)
                    elif th == 3:
                        res = (PV.candidate_privacy(g, a, q if q is not None else range(g.n),
                                                    literal_form=args.literal),)
                    elif th == 4:
                        res = PV.wireless_bounds(g, params, m)
                    elif th == 5:
                        res = (PV.wireless_private_gossip(g, params),)
                    elif th == 7:
                        res = PV.delayed_general_bounds(g, params, m)
                    else:
                        res = (PV.delayed_private_gossip(g, a, t),)
                    qs = qspec if th == 3 else "all"
                    rows.extend(_guarantee_row(gid, family, g.n, a, f, t, qs, r) for r in res)
    emit(render_csv(ANALYZE_COLUMNS, rows, timestamp=not args.no_timestamp), args.out)
    return 0


def z_score(closed: float, estimate: float, trials: int) -> float:
    """Deviation in units of the binomial standard error under the closed form."""
    se = math.sqrt(closed * (1.0 - closed) / trials)
    if se == 0.0:
        return 0.0 if estimate == closed else math.inf
    return (estimate - closed) / se


def validate_rows(g: G.Graph, alpha: float, trials: int, seed: int, workers: int = 1):
    """Closed-form ``P(j -> i)`` against Monte-Carlo estimates for every off-diagonal cell."""
    P = spread_probabilities(g, alpha).p
    rows = []
    for j in range(g.n):
        est = estimate_spread_row(g, alpha, j, trials, seed, workers=workers)
        for i in range(g.n):
            if i == j:
                continue
            e = est[f"P({j}->{i})"]
            z = z_score(float(P[j, i]), e.value, trials)
            rows.append([e.name, float(P[j, i]), e.value, e.stderr, z, abs(z) <= Z_MAX])
    return rows


def cmd_validate(args) -> int:
    if args.trials < 1000:
        raise ValueError("validation needs at least 1000 trials")
    g, gid, _ = load_graph_arg(args.graph)
    a = parse_floats(args.alpha)
    rows = []
    for alpha in a:
        rows.extend(validate_rows(g, alpha, args.trials, args.seed, args.workers) if len(a) == 1 else
                    [[f"alpha={fmt(alpha)} {r[0]}"] + r[1:] for r in
                     validate_rows(g, alpha, args.trials, args.seed, args.workers)])
    comments = [f"graph={gid} n={g.n} trials={args.trials} seed={args.seed} z_max={fmt(Z_MAX)}"]
    emit(render_csv(VALIDATE_COLUMNS, rows, comments, timestamp=not args.no_timestamp), args.out)
    failed = sum(1 for r in rows if not r[-1])
    print(f"{len(rows) - failed}/{len(rows)} cells pass |z| <= {Z_MAX:g}", file=sys.stderr)
    return 0 if failed == 0 else 1


def _kv(items) -> dict:
    out = {}
    for it in items or ():
        k, _, v = it.partition("=")
        out[k.strip()] = v.strip()
    return out


def cmd_reproduce(args) -> int:
    if args.preset not in PRESETS:
        raise ValueError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
    overrides = _kv(args.set)
    if args.seed is not None and "seed" in PRESETS[args.preset].defaults:
        overrides.setdefault("seed", str(args.seed))
    if args.workers > 1 and "workers" in PRESETS[args.preset].defaults:
        overrides.setdefault("workers", str(args.workers))
    data = run_preset(args.preset, overrides)
    comments = [f"preset {data.preset}: {data.title}",
                "reference-scale: " + " ".join(f"{k}={fmt(v)}" for k, v in data.reference_params.items()),
                "run-scale: " + " ".join(f"{k}={fmt(v)}" for k, v in data.run_params.items() if k != "workers")]
    comments += [f"check {'PASS' if c.passed else 'FAIL'}: {c.name}" + (f" [{c.detail}]" if c.detail else "")
                 for c in data.checks]
    emit(render_csv(data.columns, data.rows, comments, timestamp=not args.no_timestamp), args.out)
    for c in data.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {data.preset}: {c.name}", file=sys.stderr)
    return 0 if data.passed else 1


def cmd_simulate(args) -> int:
    g, gid, _ = load_graph_arg(args.graph)
    cfg = SimConfig(protocol=args.protocol, timing=args.timing, alpha=parse_floats(args.alpha)[0],
                    failure=parse_floats(args.failure)[0], monitor_delay=parse_ints(args.delay)[0],
                    source=args.source, stop=StopCondition.parse(args.stop), master_seed=args.seed,
                    num_trials=args.trials, wall_clock=args.timing == "async")
    cfg.validate(g)
    outcomes = run_trials(g, cfg, args.workers)
    if args.dump:
        with open(args.dump, "w") as fh:
            dump_trials(outcomes, fh)
    ests = [mean_estimate("spreading_time", [o.spreading_time for o in outcomes]),
            mean_estimate("activations", [o.steps for o in outcomes]),
            mean_estimate("observations", [len(o.observations) for o in outcomes]),
            mean_estimate("final_informed", [o.informed_sizes[-1] for o in outcomes])]
    if cfg.report_probability > 0:
        dist = estimate_first_observation_distribution(g, cfg, args.workers)
        ests += list(dist.estimates.values())
    rows = [[e.name, e.value, e.stderr, e.trials, cfg.master_seed] for e in ests]
    comments = [f"graph={gid} protocol={cfg.protocol} timing={cfg.timing} alpha={fmt(cfg.alpha)} "
                f"f={fmt(cfg.failure)} t={cfg.monitor_delay} source={cfg.source} stop={args.stop}"]
    emit(render_csv(["estimand", "value", "stderr", "trials", "seed"], rows, comments,
                    timestamp=not args.no_timestamp), args.out)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; command-line flags win")
    common.add_argument("--graph", help="graph JSON file")
    common.add_argument("--alpha", default="0.5", help="detection probability (comma list to sweep)")
    common.add_argument("--failure", default="0", help="wireless failure probability f (comma list)")
    common.add_argument("--delay", default="0", help="monitoring delay t (comma list)")
    common.add_argument("--candidate", help="candidate set: all, 1hop:<node>, or node list 0,1,...")
    common.add_argument("--trials", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    common.add_argument("--workers", type=int, default=1)

    p = argparse.ArgumentParser(prog="gossip-privacy", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[common], help="build a graph and save it as JSON")
    gen.add_argument("--family", required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--degree", type=int)
    gen.add_argument("--p", type=float)
    gen.add_argument("--radius", type=float)
    gen.add_argument("--avg-degree", type=float)
    gen.add_argument("--rewiring", type=float, default=0.0)
    gen.set_defaults(func=cmd_generate)

    an = sub.add_parser("analyze", parents=[common], help="closed-form guarantees as CSV rows")
    an.add_argument("--theorem", default="2", help="selectors 1,2,3,4,5,7,8 (comma list)")
    an.add_argument("--epsilon", type=float, default=0.0, help="budget used by tolerance bounds")
    an.add_argument("--literal", action="store_true", help="literal printed form of the candidate-set c")
    an.set_defaults(func=cmd_analyze)

    va = sub.add_parser("validate", parents=[common], help="Monte-Carlo check of every P(j->i)")
    va.set_defaults(func=cmd_validate)

    re_ = sub.add_parser("reproduce", parents=[common], help="desk-scale figure data with trend checks")
    re_.add_argument("preset", help=", ".join(PRESETS))
    re_.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a preset parameter")
    re_.set_defaults(func=cmd_reproduce)

    si = sub.add_parser("simulate", parents=[common], help="run gossip trials and summarise them")
    si.add_argument("--protocol", choices=["standard", "private"], default="private")
    si.add_argument("--timing", choices=["sync", "async"], default="async")
    si.add_argument("--source", type=int, default=0)
    si.add_argument("--stop", default="all_informed",
                    help="all_informed | fraction:<q> | first_observation | target:<i>")
    si.add_argument("--dump", help="write one JSON line per trial")
    si.set_defaults(func=cmd_simulate)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        values = read_config(args.config)
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        sub.set_defaults(**{k: v for k, v in values.items()})
        args = parser.parse_args(argv)
        # argparse does not run type conversion on set_defaults strings
        for a in sub._actions:  # noqa: SLF001
            v = getattr(args, a.dest, None)
            if isinstance(v, str) and a.dest in values:
                if a.type is not None:
                    setattr(args, a.dest, a.type(v))
                elif a.const is True:
                    setattr(args, a.dest, v.lower() in ("1", "true", "yes"))
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
        if args.command in ("validate", "simulate") and args.seed is None:
            raise ValueError(f"{args.command} is stochastic: --seed is required")
        return args.func(args)
    except (ValueError, KeyError, G.GraphError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
