#!/usr/bin/env python3
"""Scatter of the first two particle coordinates, with optional Gaussian contours.

Usage: scatter2d.py particles_final.csv -o fig.png [--contour-gaussian MEAN VAR]
The contour option overlays density contours of an isotropic Gaussian with the
given per-coordinate mean and variance (e.g. --contour-gaussian 0 0.5).
"""

import argparse
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import _csvplot


def build_figure(path, contour_gaussian=None):
    columns = _csvplot.read_table(path)
    if "x_0" not in columns or "x_1" not in columns:
        raise SystemExit(f"{path}: missing required columns 'x_0'/'x_1'")
    xs = _csvplot.numeric(columns, "x_0", path)
    ys = _csvplot.numeric(columns, "x_1", path)
    fig, ax = _csvplot.new_figure()
    if contour_gaussian is not None:
        mean, var = contour_gaussian
        span = 3.5 * math.sqrt(var)
        lo = min(min(xs), min(ys), mean - span)
        hi = max(max(xs), max(ys), mean + span)
        n = 160
        grid = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
        dens = [[math.exp(-((gx - mean) ** 2 + (gy - mean) ** 2) / (2 * var))
                 / (2 * math.pi * var) for gx in grid] for gy in grid]
        peak = 1.0 / (2 * math.pi * var)
        levels = [peak * f for f in (0.05, 0.2, 0.5, 0.8)]
        ax.contour(grid, grid, dens, levels=levels, colors="gray", linewidths=0.8)
    ax.scatter(xs, ys, s=8, alpha=0.7)
    ax.set_xlabel("coordinate 1")
    ax.set_ylabel("coordinate 2")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", help="particles CSV (x_0, x_1, ... columns)")
    parser.add_argument("-o", "--output", required=True)
    parser.add_argument("--contour-gaussian", nargs=2, type=float, default=None,
                        metavar=("MEAN", "VAR"))
    args = parser.parse_args(argv)
    _csvplot.save(build_figure(args.csv, args.contour_gaussian), args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
