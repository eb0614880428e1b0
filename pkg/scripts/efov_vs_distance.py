"""EFOV vs distance for every lens under all four calibration presets.

Shows how the acceptance cone narrows with distance and how the stricter
(230 kbaud, lights-on) calibrations shrink it.

    python3 scripts/efov_vs_distance.py --axis vertical
"""

import argparse
import sys

import numpy as np

from vlclink.config import build_setup, load_config, load_presets
from vlclink.measurements import write_rows
from vlclink.telecom import efov


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--config")
    ap.add_argument("--axis", default="vertical", choices=("horizontal", "vertical"))
    ap.add_argument("--step", type=float, default=1.0, help="distance step, m")
    ap.add_argument("--threshold", type=float, default=1e-3)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    setup = build_setup(load_config(args.config))
    dist = np.arange(3.0, 50.0 + 1e-9, args.step)
    rows = []
    for label, curve in load_presets().items():
        for lens in setup.lenses:
            for d in dist:
                e = efov(args.axis, lens, setup.pd, setup.src, setup.pattern, curve,
                         setup.scene(d), args.threshold)
                rows.append((label, lens.label, float(d), e or None))

    cols = ("preset", "lens", "distance_m", "efov_deg")
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_rows(fh, setup.config.header(), cols, rows)
    finally:
        if args.out:
            fh.close()


if __name__ == "__main__":
    main()
