"""Model-based baselines: LMMSE detection and spike channel estimation.

These detectors need channel knowledge.  :func:`lmmse_dd` consumes any
delay-Doppler kernel (true or estimated) by flattening it to the dense
MN x MN input/output matrix; :func:`estimate_csi_spike` reads integer taps
off a spike-pilot frame, from which :func:`lmmse_estimated` builds an
integer-tap kernel and solves.  Intended for desk-scale grids; the solve is
the full normal-equations system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from otfs_rc.channel import EffectiveChannel, integer_channel_cp, integer_channel_rcp
from otfs_rc.modem import OtfsConfig
from otfs_rc.numerics import vec, vec_inv
from otfs_rc.pilots import PilotPattern

__all__ = [
    "CsiEstimate",
    "lmmse_dd",
    "zf_dd",
    "estimate_csi_spike",
    "lmmse_estimated",
]

# complex-Gaussian magnitude: median = sigma * sqrt(ln 2)
_RAYLEIGH_MEDIAN = np.sqrt(np.log(2.0))


@dataclass(frozen=True)
class CsiEstimate:
    """Integer-tap channel estimate: (gain, delay bin, Doppler bin) triples
    plus the estimated per-sample noise variance."""

    taps: tuple
    noise_var: float


def lmmse_dd(y_grid: np.ndarray, heff: EffectiveChannel, noise_var: float) -> np.ndarray:
    """Linear MMSE estimate of the transmit grid under a known kernel.

    Solves (G^H G + noise_var I) x = G^H y on the vec-flattened grid.  A
    non-positive noise variance is floored at 1e-12 to keep the system
    well posed.
    """
    m, n = heff.cfg.m, heff.cfg.n
    if y_grid.shape != (m, n):
        raise ValueError(f"grid shape {y_grid.shape} != ({m}, {n})")
    var = max(float(noise_var), 1e-12)
    g = heff.as_matrix()
    gh = g.conj().T
    a = gh @ g
    a[np.diag_indices_from(a)] += var
    x = scipy.linalg.solve(a, gh @ vec(y_grid), assume_a="pos")
    return vec_inv(x, m, n)


def zf_dd(y_grid: np.ndarray, heff: EffectiveChannel) -> np.ndarray:
    """Zero-forcing estimate (pseudo-inverse of the flattened kernel)."""
    m, n = heff.cfg.m, heff.cfg.n
    x, *_ = np.linalg.lstsq(heff.as_matrix(), vec(y_grid), rcond=1e-10)
    return vec_inv(x, m, n)


def estimate_csi_spike(
    y_grid: np.ndarray,
    pattern: PilotPattern,
    cfg: OtfsConfig,
    threshold_factor: float = 3.0,
) -> CsiEstimate:
    """Integer-tap estimation from a spike-pilot frame.

    Every guard-region position whose magnitude exceeds
    ``threshold_factor * sigma_hat`` becomes one tap at the integer
    delay/Doppler offset from the spike, with the known per-position phase
    divided out of its gain.  ``sigma_hat`` is the Rayleigh-corrected median
    magnitude of the guard region (robust to the few tap positions).  A
    fractional path therefore shows up as several virtual integer taps.  The
    threshold is floored at 1e-12 of the spike amplitude so that a noiseless
    frame, whose guard median is numerical dust, does not promote round-off
    into taps.  If nothing clears the threshold the estimate falls back to a
    single tap at the spike position itself.
    """
    if pattern.kind != "spike" or pattern.spike_pos is None:
        raise ValueError("spike estimation needs a spike pilot pattern")
    if y_grid.shape != (cfg.m, cfg.n):
        raise ValueError(f"grid shape {y_grid.shape} != ({cfg.m}, {cfg.n})")
    l_p, k_p = pattern.spike_pos
    amp = 10.0 ** (pattern.spike_power_db / 20.0)

    guard_vals = np.abs(y_grid[pattern.mask])
    sigma = float(np.median(guard_vals) / _RAYLEIGH_MEDIAN)
    thresh = max(threshold_factor * sigma, 1e-12 * amp)

    zexp_rcp = 2j * np.pi / (cfg.m * cfg.n)
    zexp_cp = 2j * np.pi / (cfg.n * (cfg.m + cfg.n_cp))
    half_n = cfg.n // 2
    taps = []
    for l, k in zip(*np.nonzero(pattern.mask)):
        val = y_grid[l, k]
        if np.abs(val) <= thresh:
            continue
        d = (l - l_p) % cfg.m
        p = (k - k_p + half_n) % cfg.n - half_n
        if cfg.variant == "RCP":
            phase = np.exp(zexp_rcp * p * ((l - d) % cfg.m))
            if l < d:
                phase *= np.exp(-2j * np.pi * k / cfg.n)
        else:
            phase = np.exp(zexp_cp * p * (cfg.n_cp + l - d))
        taps.append((val / (amp * phase), int(d), int(p)))

    if not taps:
        taps = [(y_grid[l_p, k_p] / amp, 0, 0)]
    return CsiEstimate(tuple(taps), sigma**2)


def lmmse_estimated(y_grid: np.ndarray, csi: CsiEstimate, cfg: OtfsConfig) -> np.ndarray:
    """LMMSE detection through an integer-tap estimated kernel."""
    build = integer_channel_rcp if cfg.variant == "RCP" else integer_channel_cp
    return lmmse_dd(y_grid, build(csi.taps, cfg), csi.noise_var)
