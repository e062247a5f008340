"""Run every bundled fixture (or those named) and write one JSON report per fixture."""

import argparse
import sys
from pathlib import Path

from weilglue.harness import bundled_scenarios, load_scenario, run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("fixtures", nargs="*", help="fixture names or paths (default: all bundled)")
    parser.add_argument("--out", default="reports", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--mode", choices=["rational", "float"])
    parser.add_argument("--no-timing", action="store_true")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name in args.fixtures or bundled_scenarios():
        sc = load_scenario(name)
        report = run(sc, seed=args.seed, mode=args.mode)
        path = out / f"{sc.name}.json"
        path.write_text(report.to_json(timing=not args.no_timing) + "\n")
        s = report.summary()
        print(f"{sc.name:20} {s['passed']:4}/{s['checks']:<4} {report.elapsed:6.2f}s  -> {path}")
        failed += s["failed"]
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
