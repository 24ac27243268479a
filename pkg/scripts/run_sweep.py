"""Run the default benchmark sweep and print a per-chiplet summary.

    python scripts/run_sweep.py --out runs/default --workers 4
"""

import argparse
import sys
from pathlib import Path

from chiplet_compiler.bench import FAMILIES
from chiplet_compiler.sweep import SweepConfig, run_sweep

sys.path.insert(0, str(Path(__file__).parent))
from compare_pipelines import summarize  # noqa: E402


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", default="runs/default")
    p.add_argument("--chiplets", default="2,4,6,9")
    p.add_argument("--families", default=",".join(FAMILIES))
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    cfg = SweepConfig(families=tuple(a.families.split(",")),
                      chiplets=tuple(int(x) for x in a.chiplets.split(",")),
                      master_seed=a.master_seed, replicates=a.replicates, workers=a.workers)
    rows = run_sweep(cfg, a.out)
    print(f"{len(rows)} runs verified; CSV at {Path(a.out) / 'report.csv'}")
    summarize(rows)


if __name__ == "__main__":
    main()
