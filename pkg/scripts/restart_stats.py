"""Restart statistics of the randomized graph construction.

For each tuple, builds graphs over many seeds and reports how many
reference re-draws and full restarts were needed, plus any seeds that ran
out of budget.
"""

import argparse
from collections import Counter

import numpy as np

from iac.errors import ConstructionExhausted
from iac.graph import DEFAULT_RETRY_BUDGET, build_graph_general
from iac.system_model import SystemConfig

DEFAULT_TUPLES = ["6:3,1,3,2,2", "6:3,3,2,2,2", "4:2,2,2,2", "6:1,3,1,2,1,3", "8:2,3,2,2,2,2"]


def parse(spec):
    m, d = spec.split(":")
    return SystemConfig.from_tuple(int(m), [int(x) for x in d.split(",")])


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("tuples", nargs="*", default=DEFAULT_TUPLES, help="M:d1,d2,... entries")
    p.add_argument("--seeds", type=int, default=1000)
    p.add_argument("--budget", type=int, default=DEFAULT_RETRY_BUDGET)
    args = p.parse_args()
    print("tuple,M,seeds,exhausted,mean_restarts,p99_restarts,max_restarts,mean_full_restarts")
    for spec in args.tuples:
        cfg = parse(spec)
        restarts, full, exhausted = [], [], Counter()
        for s in range(args.seeds):
            try:
                _, _, trace = build_graph_general(cfg, s, args.budget)
            except ConstructionExhausted as exc:
                exhausted[exc.receiver] += 1
                continue
            restarts.append(trace.restarts)
            full.append(trace.full_restarts)
        r = np.array(restarts)
        print(f"\"{cfg.d}\",{cfg.M},{args.seeds},{sum(exhausted.values())},{r.mean():.3f},"
              f"{np.percentile(r, 99):.0f},{r.max()},{np.mean(full):.3f}")
        if exhausted:
            print(f"#   exhausted at receivers {dict(exhausted)}")


if __name__ == "__main__":
    main()
