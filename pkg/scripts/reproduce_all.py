"""Run every figure preset at desk scale and write plot-ready CSVs into an output directory.

    python scripts/reproduce_all.py --out results/ [--only fig3,fig9] [--workers 2]
"""

import argparse
import sys
import time
from pathlib import Path

from gossip_privacy.cli import main as cli_main
from gossip_privacy.experiments import PRESETS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", default="", help="comma-separated preset names")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--no-timestamp", action="store_true")
    args = ap.parse_args()

    names = [s for s in args.only.split(",") if s] or list(PRESETS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in names:
        t0 = time.perf_counter()
        argv = ["reproduce", name, "-o", str(out / f"{name}.csv"), "--workers", str(args.workers)]
        if args.no_timestamp:
            argv.append("--no-timestamp")
        code = cli_main(argv)
        print(f"{name}: exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        if code:
            failed.append(name)
    if failed:
        print("failed presets: " + ", ".join(failed), file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
