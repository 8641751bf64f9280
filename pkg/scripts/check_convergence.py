#!/usr/bin/env python3
"""Validate fitted orders of accuracy in a CSV written by `convergence`.

The windows apply to `order`, the slope of the cell RMS error. `value` is the
slope of E itself, which also carries the growth of n_t under refinement.
"""

import argparse
import sys

import pandas as pd

WINDOWS = {
    "space": {"mpdata": (1.7, 2.3), "upwind": (0.7, 1.3)},
    "time": {"mpdata": (1.7, 2.3), "upwind": (None, 1.0)},
}


def read_slopes(csv_path):
    """Parse the trailing '# slope ...' rows into a DataFrame."""
    rows = []
    with open(csv_path, "r") as f:
        for line in f:
            if not line.startswith("# slope"):
                continue
            fields = dict(item.split("=", 1) for item in line[len("# slope"):].split())
            fields["value"] = float(fields["value"])
            fields["order"] = float(fields["order"])
            fields["points"] = int(fields["points"])
            rows.append(fields)
    return pd.DataFrame(rows)


def check_convergence(csv_path, axis, fixed=None):
    """Check every (scheme, fixed value) order against its window."""

    points = pd.read_csv(csv_path, comment="#")
    print(f"Loaded {len(points)} convergence points from {csv_path}")

    slopes = read_slopes(csv_path)
    if slopes.empty:
        print("❌ No slope rows found")
        sys.exit(1)

    fixed_column = [c for c in slopes.columns if c not in ("scheme", "points", "value", "order")][0]
    if fixed is not None:
        slopes = slopes[slopes[fixed_column].astype(float) == fixed]
        if slopes.empty:
            print(f"❌ No slopes for {fixed_column}={fixed}")
            sys.exit(1)

    failures = 0
    for row in slopes.itertuples(index=False):
        low, high = WINDOWS[axis].get(row.scheme, (None, None))
        label = f"{row.scheme} {fixed_column}={getattr(row, fixed_column)}"
        if pd.isna(row.order):
            print(f"⚠️  {label}: too few points to fit")
            continue
        if (low is not None and row.order < low) or (high is not None and row.order > high):
            print(f"❌ {label}: order {row.order:.3f} outside [{low}, {high}] (slope of E {row.value:.3f})")
            failures += 1
        else:
            print(f"✅ {label}: order {row.order:.3f} (slope of E {row.value:.3f})")

    if failures:
        sys.exit(1)
    print("✅ All convergence checks passed")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--csv", type=str, required=True)
    parser.add_argument("--axis", choices=["space", "time"], required=True)
    parser.add_argument("--fixed", type=float, default=None, help="only check this lambda^2 (space) or C (time)")

    args = parser.parse_args()

    check_convergence(args.csv, args.axis, args.fixed)
