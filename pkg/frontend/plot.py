"""Convergence-curve figures from optimizer harness trace CSVs.

Reads the fixed 11-column trace schema, picks one y column per file,
optionally subtracts a gap baseline f*, and writes a single PNG with one
labeled line per CSV. This package consumes only the CSV contract; nothing
here imports the optimizer package.
"""

import argparse
import csv
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMA = ("k", "f_x", "f_w", "f_y", "grad_sq", "m_sq", "phi", "varphi",
          "bound", "resid_w", "resid_v")
Y_CHOICES = ("f_x", "f_y", "f_w", "grad_sq")


class TraceError(Exception):
    pass


@dataclass
class PlotJob:
    csvs: tuple
    labels: tuple
    y: str = "f_x"
    fstar: float | None = None
    logy: bool = False
    out: str = "fig.png"

    def __post_init__(self):
        self.csvs = tuple(self.csvs)
        self.labels = tuple(self.labels)
        assert len(self.csvs) == len(self.labels), \
            "labels count (%d) must match csv count (%d)" % (len(self.labels),
                                                             len(self.csvs))
        assert self.y in Y_CHOICES, "y must be one of %s" % (Y_CHOICES,)


def read_trace(path):
    """Columns of one trace CSV as float arrays; empty columns are dropped."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SCHEMA:
        raise TraceError("%s: schema mismatch, expected header %s"
                         % (path, ",".join(SCHEMA)))
    body = rows[1:]
    if not body:
        raise TraceError("%s: no data rows" % path)
    cols = {}
    for j, name in enumerate(SCHEMA):
        cells = [r[j] for r in body]
        if all(c == "" for c in cells):
            continue
        cols[name] = np.array([float(c) if c else np.nan for c in cells])
    return cols


def extract(job):
    """The (label, k, y) arrays render will draw; pure in the CSV contents."""
    out = []
    for path, label in zip(job.csvs, job.labels):
        cols = read_trace(path)
        if job.y not in cols:
            raise TraceError("%s: column %r is empty in this trace; "
                             "choose one of its recorded columns" % (path, job.y))
        y = cols[job.y]
        if job.fstar is not None:
            y = y - job.fstar
        out.append((label, cols["k"], y))
    return out


def render(job):
    """Write the figure for a job; returns the plotted data arrays."""
    data = extract(job)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, k, y in data:
        ax.plot(k, y, label=label, linewidth=1.2)
    ax.set_xlabel("iteration k")
    ax.set_ylabel(job.y if job.fstar is None else "%s - f*" % job.y)
    if job.logy:
        ax.set_yscale("log")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(job.out, dpi=120)
    plt.close(fig)
    return data


def main(argv=None):
    ap = argparse.ArgumentParser(
        description="Plot convergence curves from harness trace CSVs.")
    ap.add_argument("--csv", nargs="+", required=True, help="input trace CSVs")
    ap.add_argument("--labels", nargs="+", required=True, help="legend labels")
    ap.add_argument("--y", default="f_x", choices=Y_CHOICES)
    ap.add_argument("--fstar", type=float, default=None,
                    help="baseline subtracted from y (optimality gap)")
    ap.add_argument("--logy", action="store_true")
    ap.add_argument("--out", required=True, help="output PNG path")
    ns = ap.parse_args(argv)
    try:
        render(PlotJob(csvs=ns.csv, labels=ns.labels, y=ns.y,
                       fstar=ns.fstar, logy=ns.logy, out=ns.out))
    except (TraceError, OSError, AssertionError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
