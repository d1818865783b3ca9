#!/usr/bin/env python3
# Copyright 2026 The SVL Authors
# SPDX-License-Identifier: Apache-2.0
"""Builds tests/fixtures/hardcase5 and its expected ranking files.

Brute force throughout: full sort for the nearest-rank threshold, pairwise
counting for ranks, integer arithmetic for the selection size.
"""

import math
import os
import sys

import numpy as np
from PIL import Image

PERCENTILES = (5, 10, 15)
SIZE = 16
# Dark non-shadow pixel counts; "charlie" is all shadow.
DARK = {"delta": 3, "alpha": 11, "echo": 5, "charlie": 0, "bravo": 8}


def make_image(rng, dark_pixels, all_shadow):
    rgb = rng.integers(90, 256, size=(SIZE, SIZE, 3), dtype=np.uint8)
    mask = np.zeros((SIZE, SIZE), dtype=np.uint8)
    if all_shadow:
        mask[:] = 1
    else:
        mask[2:8, 2:10] = 1
    rgb[mask == 1] = rng.integers(40, 90, size=(int(mask.sum()), 3), dtype=np.uint8)
    free = np.argwhere(mask == 0)
    if len(free) == 0:
        return rgb, mask
    pick = free[rng.choice(len(free), size=dark_pixels, replace=False)]
    for y, x in pick:
        rgb[y, x] = rng.integers(0, 40, size=3, dtype=np.uint8)
    return rgb, mask


def ratios(rgb, mask):
    v = rgb.max(axis=2).astype(np.int64).ravel()
    m = mask.ravel()
    ordered = sorted(v.tolist())
    out = []
    for p in PERCENTILES:
        k = (p * len(ordered) + 99) // 100
        tau = ordered[k - 1]
        nonshadow = int((m == 0).sum())
        dark = sum(1 for vi, mi in zip(v, m) if mi == 0 and vi < tau)
        out.append((dark, nonshadow))
    return out


def value(r):
    return 0.0 if r[1] == 0 else r[0] / r[1]


def main(out_dir):
    rng = np.random.default_rng(20261014)
    root = os.path.join(out_dir, "hardcase5")
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    os.makedirs(os.path.join(root, "masks"), exist_ok=True)
    data = {}
    for name, dark in DARK.items():
        rgb, mask = make_image(rng, dark_pixels=dark, all_shadow=(name == "charlie"))
        Image.fromarray(rgb, "RGB").save(os.path.join(root, "images", name + ".png"))
        Image.fromarray(mask * 255, "L").save(os.path.join(root, "masks", name + ".png"))
        data[name] = ratios(rgb, mask)

    ids = sorted(data)
    n = len(ids)
    for j in range(len(PERCENTILES)):
        vals = [value(data[i][j]) for i in ids]
        assert len(set(vals)) == n, "ratios must be strictly ordered at every percentile"
    ranks = {i: [] for i in ids}
    for j in range(len(PERCENTILES)):
        for a in ids:
            ra = value(data[a][j])
            better = sum(1 for b in ids if b != a and (value(data[b][j]) > ra or (value(data[b][j]) == ra and b < a)))
            ranks[a].append(better + 1)
    order = sorted(ids, key=lambda i: (sum(ranks[i]), i))
    count = (20 * n + 99) // 100
    selected = order[:count]

    lines = ["id," + ",".join("r_%d" % p for p in PERCENTILES) + ",mean_rank,selected,degenerate"]
    for i in ids:
        r = ",".join("%.9f" % value(x) for x in data[i])
        degenerate = 1 if data[i][0][1] == 0 else 0
        lines.append("%s,%s,%.6f,%d,%d" % (i, r, sum(ranks[i]) / len(PERCENTILES), int(i in selected), degenerate))
    with open(os.path.join(out_dir, "hardcase5_expected.csv"), "w") as f:
        f.write("\n".join(lines) + "\n")
    with open(os.path.join(out_dir, "hardcase5_expected_selected.txt"), "w") as f:
        f.write("".join(s + "\n" for s in selected))
    top = max(ids, key=lambda i: value(data[i][0]))
    print("selected", selected, "largest r", top)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__)))
