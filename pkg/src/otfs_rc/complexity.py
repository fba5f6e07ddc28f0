"""Dominant-term operation counts for the compared detectors.

Counts are the number of complex multiplications for one subframe, keeping
only each method's dominant term with unit constants, split into a training
(or channel-estimation) phase and a testing (or detection) phase.  ``log``
terms use base 2.  ``virtual_taps`` is the estimated tap count including the
virtual taps produced by fractional delay/Doppler leakage; when not given it
defaults to the largest value the spike estimator can return, eta*M*N/2.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "METHODS",
    "PHASES",
    "ComplexityParams",
    "count",
    "CrossoverReport",
    "crossover_report",
    "complexity_table",
    "write_complexity_csv",
    "COMPLEXITY_SCHEMA",
]

METHODS = ("lmmse", "lmmse_low", "mpa", "lsmr", "rc1d", "rc2d")
PHASES = ("train", "test")

COMPLEXITY_SCHEMA = "complexity-v1"


@dataclass(frozen=True)
class ComplexityParams:
    """Everything the counts depend on."""

    m: int = 1024
    n: int = 14
    eta: float = 0.046875          # pilot overhead
    n_neurons: int = 6             # reservoir size N_n
    n_input: int = 56              # window size N_i
    n_forget_1d: int = 12          # |L_f|
    n_forget_delay: int = 2        # |L_m|
    n_forget_doppler: int = 2      # |L_n|
    num_reservoirs: int = 7        # V
    mpa_iters: int = 30            # N_iter
    alphabet_size: int = 4         # |A|
    lsmr_iters: int = 15           # I
    cancel_iters: int = 5          # K
    virtual_taps: float | None = None  # P~; default eta*M*N/2

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError("grid dimensions must be positive")
        if not 0 < self.eta <= 1:
            raise ValueError("pilot overhead must lie in (0, 1]")
        for name in ("n_neurons", "n_input", "n_forget_1d", "n_forget_delay",
                     "n_forget_doppler", "num_reservoirs", "mpa_iters",
                     "alphabet_size", "lsmr_iters", "cancel_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.virtual_taps is not None and self.virtual_taps <= 0:
            raise ValueError("virtual_taps must be positive")

    @property
    def p_taps(self) -> float:
        if self.virtual_taps is not None:
            return float(self.virtual_taps)
        return self.eta * self.m * self.n / 2.0


def count(method: str, phase: str, p: ComplexityParams) -> float:
    """Complex multiplications of one phase of one method."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    mn = float(p.m * p.n)
    train_pool = p.eta * mn
    ext = p.n_input + p.n_neurons

    if method == "lmmse":
        return train_pool if phase == "train" else mn**3
    if method == "lmmse_low":
        return train_pool if phase == "train" else mn * p.p_taps * np.log2(p.n)
    if method == "mpa":
        return train_pool if phase == "train" else (
            p.mpa_iters * p.alphabet_size * p.p_taps * mn
        )
    if method == "lsmr":
        return train_pool if phase == "train" else (
            p.lsmr_iters * p.cancel_iters * p.p_taps * mn
        )
    if method == "rc1d":
        if phase == "test":
            return ext * mn
        state_cost = p.n_neurons * ext * mn
        if ext <= train_pool / p.num_reservoirs:
            ls = (train_pool**2 / p.num_reservoirs + train_pool)
        else:
            ls = (ext * train_pool * p.num_reservoirs + train_pool)
        return state_cost + ext * ls * p.n_forget_1d
    # rc2d
    if phase == "test":
        return ext * mn
    state_cost = p.n_neurons * (p.n_input + 3 * p.n_neurons) * mn
    ls = ext * (train_pool**2 + train_pool)
    return state_cost + ls * (p.n_forget_delay + p.n_forget_doppler)


@dataclass(frozen=True)
class CrossoverReport:
    """Strict detection-phase inequalities putting the reservoir readout
    below each model-based method, plus the 1D-RC branch boundary flag."""

    ext_size: float            # N_i + N_n
    mpa_bound: float           # P~ * N_iter * |A|
    lsmr_bound: float          # P~ * I * K
    lmmse_low_bound: float     # P~ * log2 N
    beats_mpa: bool
    beats_lsmr: bool
    beats_lmmse_low: bool
    rc1d_on_branch_boundary: bool


def crossover_report(p: ComplexityParams) -> CrossoverReport:
    ext = float(p.n_input + p.n_neurons)
    mpa = p.p_taps * p.mpa_iters * p.alphabet_size
    lsmr = p.p_taps * p.lsmr_iters * p.cancel_iters
    low = p.p_taps * np.log2(p.n)
    return CrossoverReport(
        ext_size=ext,
        mpa_bound=mpa,
        lsmr_bound=lsmr,
        lmmse_low_bound=low,
        beats_mpa=ext < mpa,
        beats_lsmr=ext < lsmr,
        beats_lmmse_low=ext < low,
        rc1d_on_branch_boundary=bool(
            np.isclose(ext, p.eta * p.m * p.n / p.num_reservoirs)
        ),
    )


def complexity_table(base: ComplexityParams, m_values) -> list[dict]:
    """Counts for every method/phase over a sweep of delay-grid sizes."""
    rows = []
    for m in m_values:
        p = replace(base, m=int(m))
        for method in METHODS:
            for phase in PHASES:
                rows.append(
                    {
                        "method": method,
                        "phase": phase,
                        "m": p.m,
                        "n": p.n,
                        "count": count(method, phase, p),
                    }
                )
    return rows


def write_complexity_csv(rows: list[dict], path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "phase", "m", "n", "count"])
    for r in rows:
        writer.writerow([r["method"], r["phase"], r["m"], r["n"], repr(float(r["count"]))])
    with open(path, "w") as fh:
        fh.write(f"# schema: {COMPLEXITY_SCHEMA}\n")
        fh.write(buf.getvalue())
