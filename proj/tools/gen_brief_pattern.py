#!/usr/bin/env python3
"""Regenerates core/data/brief_pattern.inc, the fixed point-pair table of the
binary descriptor. The committed file is authoritative; this script only
documents how it was produced.

Pairs are drawn from an isotropic Gaussian (sigma = 31/5) around the keypoint
and rejected outside [-13, 13] so that a 5x5 smoothing window around every
sample stays inside the 31x31 patch.
"""
import random
import sys

SEED = 20230815
COUNT = 256
RADIUS = 13
SIGMA = 31.0 / 5.0


def draw(rng):
    while True:
        v = int(round(rng.gauss(0.0, SIGMA)))
        if -RADIUS <= v <= RADIUS:
            return v


def main(out_path):
    rng = random.Random(SEED)
    pairs = []
    while len(pairs) < COUNT:
        p = (draw(rng), draw(rng), draw(rng), draw(rng))
        if (p[0], p[1]) == (p[2], p[3]) or p in pairs:
            continue
        pairs.append(p)
    with open(out_path, "w") as f:
        f.write("// Generated by tools/gen_brief_pattern.py (seed %d). Do not edit.\n" % SEED)
        f.write("// x1, y1, x2, y2 offsets from the keypoint.\n")
        for p in pairs:
            f.write("{%d, %d, %d, %d},\n" % p)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "core/data/brief_pattern.inc")
