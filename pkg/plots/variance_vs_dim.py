#!/usr/bin/env python3
"""Averaged posterior variance trace(Cov)/d against dimension, with the 1/2 truth line.

Usage: variance_vs_dim.py diag_d5.csv diag_d20.csv ... -o fig.png [--labels ...]
Each input is one run's diagnostics.csv; the dimension is inferred from the number
of mean_* columns and the plotted value is the final cov_trace_over_d.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import _csvplot

REFERENCE_VALUE = 0.5


def build_figure(paths, labels=None, reference=REFERENCE_VALUE):
    points = []
    for path in paths:
        columns = _csvplot.read_table(path)
        dim = sum(1 for name in columns if name.startswith("mean_"))
        if dim == 0:
            raise SystemExit(f"{path}: missing required column 'mean_0'")
        trace = _csvplot.numeric(columns, "cov_trace_over_d", path)
        points.append((dim, trace[-1]))
    points.sort()
    fig, ax = _csvplot.new_figure()
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o",
            label=labels[0] if labels else "final trace(Cov)/d")
    ax.axhline(reference, color="black", linewidth=1.0,
               label=f"true value {reference}")
    ax.set_xlabel("dimension")
    ax.set_ylabel("trace(Cov)/d")
    ax.legend()
    fig.tight_layout()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csvs", nargs="+", help="one diagnostics.csv per dimension")
    parser.add_argument("-o", "--output", required=True)
    parser.add_argument("--labels", nargs="*", default=None)
    args = parser.parse_args(argv)
    _csvplot.save(build_figure(args.csvs, args.labels), args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
