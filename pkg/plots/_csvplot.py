"""Shared helpers for the figure scripts: CSV loading and deterministic saving.

The scripts are deliberately decoupled from the sampler package; they consume
only the documented CSV schemas (diagnostics.csv, comparison.csv,
particles_final.csv) and can be replaced by any plotting stack.
"""

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGSIZE = (6.4, 4.2)
DPI = 130


def read_table(path):
    """Read a CSV with header into a dict of column name -> list of strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SystemExit(f"{path}: empty file")
        columns = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                columns[name].append(value)
    return columns


def numeric(columns, name, path):
    if name not in columns:
        raise SystemExit(f"{path}: missing required column '{name}'")
    out = []
    for cell in columns[name]:
        out.append(float(cell) if cell not in ("", "None") else math.nan)
    return out


def series_by_config(path, y_column, x_column="grad_evals"):
    """Yield (label, xs, ys) series; comparison files split on their config column."""
    columns = read_table(path)
    xs = numeric(columns, x_column, path)
    ys = numeric(columns, y_column, path)
    if "config" in columns:
        groups = {}
        for label, x, y in zip(columns["config"], xs, ys):
            groups.setdefault(label, ([], []))
            groups[label][0].append(x)
            groups[label][1].append(y)
        for label, (gx, gy) in groups.items():
            yield label, gx, gy
    else:
        yield Path(path).stem, xs, ys


def new_figure():
    return plt.subplots(figsize=FIGSIZE, dpi=DPI)


def save(fig, out_path):
    """Write PNG or PDF with timestamp metadata stripped, then close the figure."""
    out_path = Path(out_path)
    metadata = {"CreationDate": None} if out_path.suffix.lower() == ".pdf" else None
    fig.savefig(out_path, metadata=metadata)
    plt.close(fig)
