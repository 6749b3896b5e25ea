"""Render experiment CSVs into publication-style comparison figures.

The input is the simulation harness's long-format CSV (one row per sweep
value, trial, and scheme); rendering groups rows by scheme, aggregates the
metric over trials at each sweep value, and draws one line/marker series
per scheme.
"""

import csv
import json
import logging
from dataclasses import dataclass, fields

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

log = logging.getLogger(__name__)

# legend labels in the plotting order used by the comparison figures
SCHEME_LABELS = {
    "proposed": "w/ IRS, proposed",
    "no_selection": "w/ IRS, w/o selection",
    "random_selection": "w/ IRS, random selection",
    "no_irs": "w/o IRS",
}
MARKERS = ("o", "s", "^", "v", "d", "x")


def watts_to_dbm(p):
    return 10.0 * np.log10(np.asarray(p, dtype=float) * 1000.0)


@dataclass(frozen=True)
class FigureSpec:
    """What to plot: input CSV, column roles, aggregation, and output file."""

    csv_path: str
    out_path: str
    x: str = "sweep_value"
    y: str = "metric"
    group_by: str = "scheme"
    aggregate: str = "mean"          # "mean" or "median"
    dbm_axis: bool = False           # convert y from watts to dBm
    x_label: str = None
    y_label: str = None
    title: str = None

    def __post_init__(self):
        if self.aggregate not in ("mean", "median"):
            raise ValueError("aggregate must be 'mean' or 'median'")

    @classmethod
    def from_dict(cls, data):
        allowed = {f.name for f in fields(cls)}
        unknown = set(data) - allowed
        if unknown:
            raise KeyError("unknown figure spec keys: %s" % sorted(unknown))
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def load_rows(spec):
    """Read the CSV and return [(group, x, y)] with columns validated."""
    with open(spec.csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (spec.x, spec.y, spec.group_by):
            if col not in header:
                raise ValueError("column %r not in CSV header %s" % (col, header))
        rows = [(row[spec.group_by], float(row[spec.x]), float(row[spec.y]))
                for row in reader]
    if not rows:
        raise ValueError("no data rows in %s" % spec.csv_path)
    return rows


def aggregate_series(spec, rows):
    """Per group: sorted x values and the aggregated y at each, as
    {group: (x_array, y_array)}."""
    reduce = np.mean if spec.aggregate == "mean" else np.median
    groups = {}
    for g, x, y in rows:
        groups.setdefault(g, {}).setdefault(x, []).append(y)
    series = {}
    for g, by_x in groups.items():
        xs = np.array(sorted(by_x))
        ys = np.array([reduce(by_x[x]) for x in xs])
        if spec.dbm_axis:
            ys = watts_to_dbm(ys)
        series[g] = (xs, ys)
    return series


def render(spec):
    """Draw the figure described by ``spec`` and write it to out_path.

    Returns the aggregated series dict so callers can inspect what was
    plotted.  Inputs are never modified.
    """
    series = aggregate_series(spec, load_rows(spec))
    order = [g for g in SCHEME_LABELS if g in series]
    order += [g for g in sorted(series) if g not in SCHEME_LABELS]

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for i, g in enumerate(order):
        xs, ys = series[g]
        ax.plot(xs, ys, marker=MARKERS[i % len(MARKERS)],
                label=SCHEME_LABELS.get(g, g))
    ax.set_xlabel(spec.x_label or spec.x)
    default_y = spec.y + (" (dBm)" if spec.dbm_axis else "")
    ax.set_ylabel(spec.y_label or default_y)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    log.info("wrote %s (%d series)", spec.out_path, len(series))
    return series
