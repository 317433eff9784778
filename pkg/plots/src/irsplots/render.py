"""Render sweep and convergence figures from the simulator's CSV outputs.

Inputs are read-only; output images are written atomically (temp file plus
rename) and deterministically (fixed style, no embedded timestamps).
"""

import csv
import os
import sys
import tempfile
from dataclasses import dataclass, field

import matplotlib
matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "irsec-plots"
matplotlib.rcParams["svg.fonttype"] = "none"
import matplotlib.pyplot as plt

SWEEP_HEADER = ["var", "value", "strategy", "trial", "seed", "secrecy_rate",
                "admm_iters", "converged", "ms"]
TRACE_HEADER = ["iter", "residual", "lagrangian", "objective", "ms"]
KINDS = ("sweep-ni", "sweep-na", "convergence")
X_LABELS = {"sweep-ni": "N_I", "sweep-na": "N_A"}


@dataclass
class FigureSpec:
    """What to render: input CSVs, figure kind, output path and format."""

    inputs: list
    kind: str
    output: str
    image_format: str = "svg"
    aggregate: str = "mean"  # or "median"

    def __post_init__(self):
        if isinstance(self.inputs, (str, os.PathLike)):
            self.inputs = [self.inputs]
        self.inputs = [os.fspath(p) for p in self.inputs]
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if self.image_format not in ("svg", "png"):
            raise ValueError("image format must be 'svg' or 'png'")
        if self.aggregate not in ("mean", "median"):
            raise ValueError("aggregate must be 'mean' or 'median'")
        for p in self.inputs:
            if not os.path.exists(p):
                raise FileNotFoundError(p)


def _read_csv(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ValueError(f"{path}: header {header} does not match "
                             f"expected {expected_header}")
        return [row for row in reader if row]


def _aggregate(values, how):
    values = sorted(values)
    if how == "median":
        mid = len(values) // 2
        if len(values) % 2:
            return values[mid]
        return 0.5 * (values[mid - 1] + values[mid])
    return sum(values) / len(values)


def _save_atomic(fig, spec):
    directory = os.path.dirname(os.path.abspath(spec.output)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix="." + spec.image_format)
    os.close(fd)
    try:
        fig.savefig(tmp, format=spec.image_format,
                    metadata={"Date": None} if spec.image_format == "svg" else None)
        os.chmod(tmp, 0o644)
        os.replace(tmp, spec.output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def render_sweep(spec: FigureSpec):
    """Aggregate secrecy rate per (strategy, sweep value) and draw one
    marked polyline per strategy. Returns the list of strategies drawn."""
    if spec.kind not in ("sweep-ni", "sweep-na"):
        raise ValueError("render_sweep needs a sweep-ni or sweep-na spec")
    rows = _read_csv(spec.inputs[0], SWEEP_HEADER)
    if not rows:
        raise ValueError(f"{spec.inputs[0]}: no data rows")
    skipped = [i for i, row in enumerate(rows, start=2) if not row[2]]
    if skipped:
        print(f"warning: skipping rows with missing strategy: {skipped}",
              file=sys.stderr)
    series = {}
    trial_counts = set()
    for row in rows:
        if not row[2]:
            continue
        value, strategy, rate = float(row[1]), row[2], float(row[5])
        series.setdefault(strategy, {}).setdefault(value, []).append(rate)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for strategy, by_value in series.items():
        xs = sorted(by_value)
        ys = [_aggregate(by_value[x], spec.aggregate) for x in xs]
        trial_counts.update(len(by_value[x]) for x in xs)
        ax.plot(xs, ys, marker="o", label=strategy)
    ax.set_xlabel(X_LABELS[spec.kind])
    ax.set_ylabel("Secrecy rate (bits/s/Hz)")
    counts = sorted(trial_counts)
    note = f"{counts[0]}" if len(counts) == 1 else f"{counts[0]}-{counts[-1]}"
    ax.set_title(f"{spec.aggregate} over {note} trials per point")
    ax.grid(True, alpha=0.4)
    ax.legend()
    _save_atomic(fig, spec)
    return sorted(series)


def _trace_label(path):
    name = os.path.splitext(os.path.basename(path))[0]
    return name[len("trace_"):] if name.startswith("trace_") else name


def render_convergence(spec: FigureSpec):
    """Objective (left axis) and residual (right axis, log) per iteration,
    one pair of curves per trace file. Returns the list of labels drawn."""
    if spec.kind != "convergence":
        raise ValueError("render_convergence needs a convergence spec")
    traces = []
    for path in spec.inputs:
        rows = _read_csv(path, TRACE_HEADER)
        if not rows:
            raise ValueError(f"{path}: no data rows")
        iters = [int(r[0]) for r in rows]
        residual = [float(r[1]) for r in rows]
        objective = [float(r[3]) for r in rows]
        traces.append((_trace_label(path), iters, residual, objective))
    fig, ax_obj = plt.subplots(figsize=(6.0, 4.2))
    ax_res = ax_obj.twinx()
    for label, iters, residual, objective in traces:
        line, = ax_obj.plot(iters, objective, label=label)
        ax_res.semilogy(iters, residual, linestyle="--", alpha=0.6,
                        color=line.get_color())
    ax_obj.set_xlabel("iteration")
    ax_obj.set_ylabel("objective")
    ax_res.set_ylabel("primal residual (dashed, log scale)")
    ax_obj.grid(True, alpha=0.4)
    ax_obj.legend()
    _save_atomic(fig, spec)
    return [t[0] for t in traces]


def infer_sweep_kind(path):
    """Pick sweep-ni/sweep-na from the CSV's var column."""
    rows = _read_csv(path, SWEEP_HEADER)
    variables = {row[0] for row in rows if row[0]}
    if variables == {"n-alice"}:
        return "sweep-na"
    return "sweep-ni"
