"""Render BER, NMSE and complexity figures from result CSV files.

The input files are the simulation harness's CSV outputs, identified by a
``# schema: <name>`` first line.  Rendering is deterministic: fixed styles,
fixed colors, no timestamps, and stripped writer metadata, so identical
input bytes produce identical image bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402  backend must be set first

__all__ = ["KINDS", "SCHEMAS", "FigureSpec", "SchemaError", "render"]

KINDS = ("ber", "nmse", "complexity")
SCHEMAS = {"ber": "ber-v1", "nmse": "nmse-v1", "complexity": "complexity-v1"}

BER_FLOOR = 1e-6  # display clamp for the log axis

# fixed palette so figures do not depend on matplotlib's configured cycle
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
_DPI = 150


class SchemaError(ValueError):
    """Input CSV does not carry the expected schema version."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: where the data lives, what it is, where the image goes."""

    csv_path: str | Path
    kind: str
    out_path: str | Path
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; valid: {KINDS}")


def _read_rows(path, kind: str) -> list[dict]:
    """Parse a schema-tagged CSV; the schema line must match the kind."""
    expected = SCHEMAS[kind]
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != f"# schema: {expected}":
            raise SchemaError(
                f"{path}: expected schema {expected!r}, found {first!r}"
            )
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def _ordered_unique(values) -> list:
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def _float(row: dict, key: str) -> float:
    return float(row[key])


def _new_axes(spec: FigureSpec, xlabel: str, ylabel: str):
    fig = Figure(figsize=(6.0, 4.0), dpi=_DPI)
    ax = fig.add_subplot(111)
    ax.set_xlabel(spec.xlabel or xlabel)
    ax.set_ylabel(spec.ylabel or ylabel)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def _render_ber(rows: list[dict], spec: FigureSpec) -> Figure:
    """Log-y BER curves, one per detector, with confidence bands."""
    fig, ax = _new_axes(spec, "SNR (dB)", "BER")
    for i, name in enumerate(_ordered_unique(r["detector"] for r in rows)):
        sel = [r for r in rows if r["detector"] == name]
        snr = np.array([_float(r, "snr_db") for r in sel])
        ber = np.array([_float(r, "ber") for r in sel])
        lo = np.array([_float(r, "wilson_low") for r in sel])
        hi = np.array([_float(r, "wilson_high") for r in sel])
        keep = ~np.isnan(ber)  # rows whose every frame failed carry nan
        color = _COLORS[i % len(_COLORS)]
        ax.semilogy(snr[keep], np.maximum(ber[keep], BER_FLOOR),
                    marker="o", markersize=4, linewidth=1.5,
                    color=color, label=name)
        band = keep & ~np.isnan(lo) & ~np.isnan(hi)
        ax.fill_between(snr[band], np.maximum(lo[band], BER_FLOOR),
                        np.maximum(hi[band], BER_FLOOR),
                        color=color, alpha=0.2, linewidth=0)
    ax.set_ylim(BER_FLOOR, 1.0)
    ax.legend(loc="lower left")
    return fig


def _render_nmse(rows: list[dict], spec: FigureSpec) -> Figure:
    """Train/test NMSE heatmaps over (reservoir size x window)."""
    sizes = sorted({int(r["n_neurons"]) for r in rows})
    wins = _ordered_unique((r["win_delay"], r["win_doppler"]) for r in rows)
    train = np.full((len(sizes), len(wins)), np.nan)
    test = np.full_like(train, np.nan)
    for r in rows:
        i = sizes.index(int(r["n_neurons"]))
        j = wins.index((r["win_delay"], r["win_doppler"]))
        train[i, j] = _float(r, "train_nmse")
        test[i, j] = _float(r, "test_nmse")

    fig = Figure(figsize=(8.0, 4.0), dpi=_DPI)
    axes = fig.subplots(1, 2)
    for ax, mat, label in ((axes[0], train, "training NMSE"),
                           (axes[1], test, "test NMSE")):
        im = ax.imshow(mat, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(wins)),
                      [f"({d},{k})" for d, k in wins], rotation=45)
        ax.set_yticks(range(len(sizes)), [str(s) for s in sizes])
        ax.set_xlabel(spec.xlabel or "window (delay, Doppler)")
        ax.set_ylabel(spec.ylabel or "reservoir size")
        ax.set_title(label)
        fig.colorbar(im, ax=ax, shrink=0.9)
    if spec.title:
        fig.suptitle(spec.title)
    fig.subplots_adjust(bottom=0.2, wspace=0.35)
    return fig


def _render_complexity(rows: list[dict], spec: FigureSpec) -> Figure:
    """Operation counts against the delay-grid size, one curve per method."""
    fig, ax = _new_axes(spec, "delay bins M", "complex multiplications")
    methods = _ordered_unique(r["method"] for r in rows)
    for i, method in enumerate(methods):
        color = _COLORS[i % len(_COLORS)]
        for phase, style in (("test", "-"), ("train", "--")):
            sel = [r for r in rows
                   if r["method"] == method and r["phase"] == phase]
            if not sel:
                continue
            m = np.array([int(r["m"]) for r in sel])
            cnt = np.array([_float(r, "count") for r in sel])
            order = np.argsort(m)
            label = f"{method} ({phase})" if phase == "train" else method
            ax.loglog(m[order], cnt[order], style, marker="o", markersize=3,
                      linewidth=1.3, color=color, label=label)
    ax.legend(loc="upper left", fontsize=7, ncols=2)
    return fig


_RENDERERS = {"ber": _render_ber, "nmse": _render_nmse,
              "complexity": _render_complexity}


def render(spec: FigureSpec) -> Path:
    """Validate the CSV, draw the figure and write the image file.

    Validation failures raise before anything is written.  Re-rendering the
    same CSV produces byte-identical output.
    """
    rows = _read_rows(spec.csv_path, spec.kind)
    fig = _RENDERERS[spec.kind](rows, spec)
    out = Path(spec.out_path)
    fig.savefig(out, dpi=_DPI, metadata={"Software": None})
    return out
