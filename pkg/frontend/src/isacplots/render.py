"""Render experiment CSVs into the standard figure layouts.

The renderer is a pure consumer of the CSV contract: it never mutates its
inputs, and identical CSV input yields byte-identical images under the
pinned style.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["FigureSpec", "NoDataError", "SchemaError", "render"]

KINDS = ("sweep", "region", "approx", "convergence")

REQUIRED_COLUMNS = {
    "sweep": ["scheme", "gamma_dt_db", "mse_com", "mse_rad"],
    "region": ["scheme", "omega1", "mse_com", "mse_rad"],
    "approx": ["l_dt", "mse_rad_exact", "mse_rad_approx"],
    "convergence": ["algorithm", "seconds", "objective"],
}

# Pinned style so golden-image comparisons are stable.
STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "lines.markersize": 4.5,
    "legend.fontsize": 8,
    "svg.hashsalt": "isacplots",
}

MARKERS = ("o", "s", "d", "^", "v", "x", "+", "*")


class SchemaError(ValueError):
    """The CSV does not carry the columns the figure kind needs."""


class NoDataError(ValueError):
    """The CSV has a header but no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: which CSV, which layout, where to write."""

    input_csv: str
    kind: str
    output_image: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


def _read_rows(path: str, kind: str) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        columns = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in columns]
        if missing:
            raise SchemaError(
                f"CSV {path} is missing required columns for kind {kind!r}: "
                + ", ".join(missing)
            )
        rows = list(reader)
    if not rows:
        raise NoDataError(f"CSV {path} has no data rows")
    return rows


def _series(rows: list[dict], key: str) -> list[str]:
    seen = []
    for row in rows:
        if row[key] not in seen:
            seen.append(row[key])
    return seen


def _floats(rows: list[dict], column: str) -> list[float]:
    return [float(row[column]) for row in rows]


def _plot_sweep(rows, axes):
    ax_com, ax_rad = axes
    for i, scheme in enumerate(_series(rows, "scheme")):
        sub = sorted(
            (r for r in rows if r["scheme"] == scheme),
            key=lambda r: float(r["gamma_dt_db"]),
        )
        x = _floats(sub, "gamma_dt_db")
        ax_com.semilogy(x, _floats(sub, "mse_com"), marker=MARKERS[i % len(MARKERS)], label=scheme)
        ax_rad.semilogy(x, _floats(sub, "mse_rad"), marker=MARKERS[i % len(MARKERS)], label=scheme)
    ax_com.set_ylabel("data MSE")
    ax_rad.set_ylabel("sensing MSE")
    ax_rad.set_xlabel("data SNR (dB)")
    ax_com.legend()


def _plot_region(rows, ax):
    for i, scheme in enumerate(_series(rows, "scheme")):
        sub = sorted(
            (r for r in rows if r["scheme"] == scheme),
            key=lambda r: float(r["mse_com"]),
        )
        ax.loglog(
            _floats(sub, "mse_com"),
            _floats(sub, "mse_rad"),
            marker=MARKERS[i % len(MARKERS)],
            label=scheme,
        )
    ax.set_xlabel("data MSE")
    ax.set_ylabel("sensing MSE")
    ax.legend()


def _plot_approx(rows, ax):
    sub = sorted(rows, key=lambda r: float(r["l_dt"]))
    x = _floats(sub, "l_dt")
    ax.semilogy(x, _floats(sub, "mse_rad_exact"), marker="o", label="exact")
    ax.semilogy(x, _floats(sub, "mse_rad_approx"), marker="s", label="approximation")
    ax.set_xlabel("data block length")
    ax.set_ylabel("sensing MSE")
    ax.legend()


def _plot_convergence(rows, ax):
    for i, algorithm in enumerate(_series(rows, "algorithm")):
        sub = sorted(
            (r for r in rows if r["algorithm"] == algorithm),
            key=lambda r: float(r["seconds"]),
        )
        ax.plot(
            _floats(sub, "seconds"),
            _floats(sub, "objective"),
            marker=MARKERS[i % len(MARKERS)],
            label=algorithm,
        )
    ax.set_xlabel("wall clock (s)")
    ax.set_ylabel("objective")
    ax.legend()


def render(spec: FigureSpec) -> str:
    """Render one figure and return the written path."""
    rows = _read_rows(spec.input_csv, spec.kind)
    with plt.rc_context(STYLE):
        if spec.kind == "sweep":
            fig, axes = plt.subplots(2, 1, figsize=(5.2, 5.6), sharex=True)
            _plot_sweep(rows, axes)
        else:
            fig, ax = plt.subplots(figsize=(5.2, 3.6))
            if spec.kind == "region":
                _plot_region(rows, ax)
            elif spec.kind == "approx":
                _plot_approx(rows, ax)
            else:
                _plot_convergence(rows, ax)
        fig.tight_layout()
        # Strip the writer-version tag so identical input gives identical bytes.
        fig.savefig(spec.output_image, metadata={"Software": None})
        plt.close(fig)
    return spec.output_image
