#!/usr/bin/env python3
"""Window-size tradeoff study: removal percentage and runtime versus dkx.

Runs the window_sweep preset (true readout support of 5 taps) at several
configured window sizes and writes one CSV row per size.

Usage:
    python scripts/run_window_sweep.py [--out sweep.csv] [--sizes 1,3,5,7,9,13]
"""

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from editer import assemble_dataset, percent_emi_removed, reconstruct, run_editer
from editer.presets import get_preset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="window_sweep.csv")
    parser.add_argument("--sizes", default="1,3,5,7,9,13")
    parser.add_argument("--repeats", type=int, default=3, help="timing repeats (min is kept)")
    args = parser.parse_args()

    preset = get_preset("window_sweep")
    ds = assemble_dataset(preset.scenario)
    img_un = reconstruct(ds.primary)

    rows = []
    for dkx in (int(v) for v in args.sizes.split(",")):
        cfg = replace(preset.config, dkx=dkx)
        wall = float("inf")
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            result = run_editer(ds, cfg)
            wall = min(wall, time.perf_counter() - t0)
        removed = percent_emi_removed(
            img_un, reconstruct(result.corrected.primary), preset.roi
        )
        rows.append({"dkx": dkx, "emi_removed_pct": f"{removed:.4f}", "wall_time_s": f"{wall:.6f}"})
        print(f"dkx={dkx:2d}  removed={removed:7.3f}%  wall={wall*1e3:7.1f} ms")

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["dkx", "emi_removed_pct", "wall_time_s"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
