"""Tally identified vs. separated probe pairs and classification sides per Weil algebra.

Useful for checking that the seeded probes are not vacuous: both verdicts and all
three classification sides should show up for every algebra.
"""

import argparse
from collections import Counter

from weilglue.gluing import glue, wpoint_classify, wpoints_identified
from weilglue.harness import load_scenario
from weilglue.suites import glued_wpoint, probe_pairs


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("fixture", nargs="?", default="interval_glue")
    parser.add_argument("--count", type=int, default=500)
    parser.add_argument("--seed", type=int)
    args = parser.parse_args(argv)

    sc = load_scenario(args.fixture)
    cfg = sc.config(seed=args.seed)
    for gname, g in sorted(sc.gluings.items()):
        glued = glue(g.fi, g.collar_M, g.collar_N)
        for a in sc.probe_algebras:
            w = sc.algebras[a]
            rng = cfg.rng(f"stats/{gname}/{a}")
            verdicts = Counter(
                wpoints_identified(pm, pn, g.fi, glued.collar_M, glued.collar_N, cfg.tol)
                for pm, pn in probe_pairs(glued, w, rng, args.count, cfg)
            )
            sides = Counter(wpoint_classify(glued_wpoint(glued, w, rng, cfg), glued, cfg.tol).side
                            for _ in range(args.count))
            print(f"{gname:8} {a:6} identified={verdicts[True]:4} separated={verdicts[False]:4}  "
                  + "  ".join(f"{k}={v}" for k, v in sorted(sides.items())))


if __name__ == "__main__":
    main()
