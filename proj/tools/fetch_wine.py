#!/usr/bin/env python3
"""Write the Wine recognition data as a headed CSV: id, 13 features, class.

By default the copy bundled with scikit-learn is used (no download). A UCI
``wine.data`` file (class first, no header) can be given with --uci instead.
"""

import argparse
import csv
import pathlib
import sys

FEATURES = [
    "alcohol", "malic_acid", "ash", "alcalinity_of_ash", "magnesium", "total_phenols",
    "flavanoids", "nonflavanoid_phenols", "proanthocyanins", "color_intensity", "hue",
    "od280_od315_of_diluted_wines", "proline",
]


def from_sklearn():
    from sklearn.datasets import load_wine

    data = load_wine()
    return [(list(map(float, x)), int(y)) for x, y in zip(data.data, data.target)]


def from_uci(path):
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            rows.append(([float(v) for v in rec[1:]], int(rec[0]) - 1))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", required=True, type=pathlib.Path)
    ap.add_argument("--uci", type=pathlib.Path, help="UCI wine.data file")
    args = ap.parse_args()

    rows = from_uci(args.uci) if args.uci else from_sklearn()
    if len(rows) != 178 or any(len(x) != 13 for x, _ in rows):
        sys.exit(f"unexpected shape: {len(rows)} rows")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *FEATURES, "class"])
        for i, (x, y) in enumerate(rows, start=1):
            w.writerow([i, *(repr(v) for v in x), y])
    print(f"wrote {args.out} (178 x 14)")


if __name__ == "__main__":
    main()
