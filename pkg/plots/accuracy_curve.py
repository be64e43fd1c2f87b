#!/usr/bin/env python3
"""Test accuracy against gradient evaluations for classification runs.

Usage: accuracy_curve.py diagnostics.csv [more.csv ...] -o fig.png [--labels a b ...]
Accepts per-run diagnostics files and merged comparison files.
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
        for auto_label, xs, ys in _csvplot.series_by_config(path, "accuracy"):
            pts = [(x, y) for x, y in zip(xs, ys) if not math.isnan(y)]
            if not pts:
                raise SystemExit(f"{path}: no accuracy values to plot "
                                 "(not a classification run?)")
            label = next(label_iter) if label_iter else auto_label
            ax.plot(*zip(*pts), label=label)
    ax.set_xlabel("gradient evaluations")
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.02)
    ax.legend()
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csvs", nargs="+")
    parser.add_argument("-o", "--output", required=True)
    parser.add_argument("--labels", nargs="*", default=None)
    args = parser.parse_args(argv)
    _csvplot.save(build_figure(args.csvs, args.labels), args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
