#!/usr/bin/env python3
"""Discrepancy-versus-cost curve: log-scale KSD against gradient evaluations.

Usage: ksd_curve.py diagnostics.csv [more.csv ...] -o fig.png [--labels a b ...]
Accepts per-run diagnostics files and merged comparison files (one line per config).
"""

import argparse
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import _csvplot


def build_figure(paths, labels=None):
    fig, ax = _csvplot.new_figure()
    label_iter = iter(labels) if labels else None
    for path in paths:
        for auto_label, xs, ys in _csvplot.series_by_config(path, "ksd"):
            pts = [(x, y) for x, y in zip(xs, ys) if not math.isnan(y) and y > 0]
            if not pts:
                raise SystemExit(f"{path}: no positive KSD values to plot")
            label = next(label_iter) if label_iter else auto_label
            ax.plot(*zip(*pts), label=label)
    ax.set_yscale("log")
    ax.set_xlabel("gradient evaluations")
    ax.set_ylabel("KSD")
    ax.legend()
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csvs", nargs="+", help="diagnostics or comparison CSV files")
    parser.add_argument("-o", "--output", required=True, help="output image (png/pdf)")
    parser.add_argument("--labels", nargs="*", default=None)
    args = parser.parse_args(argv)
    _csvplot.save(build_figure(args.csvs, args.labels), args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
