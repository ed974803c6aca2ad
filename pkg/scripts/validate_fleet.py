"""Monte-Carlo agreement campaign: every off-diagonal P(j->i) on a fleet of small graphs.

Prints one summary line per (graph, alpha) and the overall fraction of cells with |z| <= 4.
"""

import argparse
import math
import sys

from gossip_privacy import build_graph, GraphSpec, spread_probabilities
from gossip_privacy.sim import estimate_spread_row

FLEET = [
    GraphSpec("complete", 4), GraphSpec("complete", 6), GraphSpec("ring", 4), GraphSpec("ring", 7),
    GraphSpec("star", 6), GraphSpec("grid2d", 9),
    GraphSpec("erdos_renyi", 12, p=0.35, seed=11),
    GraphSpec("geometric_random", 15, avg_degree=5, seed=3),
    GraphSpec("random_regular", 12, degree=3, seed=5),
    GraphSpec("rewired_regular", 12, degree=4, rewiring=0.3, seed=8),
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", default="0.3,0.5,0.8")
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=7000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--threshold", type=float, default=0.95)
    args = ap.parse_args()

    total = ok = 0
    for spec in FLEET:
        g = build_graph(spec)
        for a in map(float, args.alphas.split(",")):
            P = spread_probabilities(g, a).p
            cells = good = 0
            for j in range(g.n):
                row = estimate_spread_row(g, a, j, args.trials, seed=args.seed + j, workers=args.workers)
                for i in range(g.n):
                    if i == j:
                        continue
                    est = row[f"P({j}->{i})"]
                    se = math.sqrt(P[j, i] * (1 - P[j, i]) / est.trials)
                    cells += 1
                    good += abs(est.value - P[j, i]) <= 4 * se
            total += cells
            ok += good
            print(f"{spec.family:17s} n={g.n:3d} alpha={a:.2f}: {good}/{cells}")
    frac = ok / total
    print(f"overall {ok}/{total} = {frac:.2%} (threshold {args.threshold:.0%})")
    return 0 if frac >= args.threshold else 1


if __name__ == "__main__":
    sys.exit(main())
