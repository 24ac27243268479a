"""Geometric-mean SEQC/baseline ratios from a sweep CSV.

    python scripts/compare_pipelines.py runs/default/report.csv
"""

import argparse
import csv
from collections import defaultdict

from chiplet_compiler.metrics import geomean_ratio

METRICS = ("inter_gates", "esp", "exec_ns", "depth", "gates")


def summarize(rows):
    paired = defaultdict(dict)
    for r in rows:
        key = (r["family"], int(r["chiplets"]), int(r["seed"]))
        paired[key][r["pipeline"]] = r
    by_chiplets = defaultdict(list)
    for (_, ch, _), pair in paired.items():
        if "seqc" in pair and "baseline" in pair:
            by_chiplets[ch].append(pair)
    print(f"{'chiplets':>8} {'runs':>5} " + " ".join(f"{m:>12}" for m in METRICS))
    for ch in sorted(by_chiplets):
        pairs = by_chiplets[ch]
        cells = []
        for m in METRICS:
            vals = [(float(p["seqc"][m]), float(p["baseline"][m])) for p in pairs]
            vals = [v for v in vals if v[0] > 0 and v[1] > 0]
            cells.append(f"{geomean_ratio(vals):12.3f}" if vals else f"{'n/a':>12}")
        print(f"{ch:>8} {len(pairs):>5} " + " ".join(cells))


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("csv")
    a = p.parse_args()
    with open(a.csv) as fh:
        summarize(list(csv.DictReader(fh)))


if __name__ == "__main__":
    main()
