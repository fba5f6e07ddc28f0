"""QAM mapping and OTFS (de)modulation.

Grids are M x N complex arrays indexed ``[delay, doppler]``.  With
rectangular transmit/receive pulses the modulator reduces to a Doppler-axis
IDFT followed by column stacking: ``s = vec(X @ F_N^H)``; the demodulator is
the reverse, ``Y = vec_inv(r) @ F_N``.

Two frame variants are supported:

* ``"RCP"``  - one cyclic prefix of ``n_cp`` samples for the whole frame;
  stream length ``M*N + n_cp``.
* ``"CP"``   - a cyclic prefix per Doppler column (one per multicarrier
  symbol); stream length ``(M + n_cp) * N``.

Constellations are Gray coded per axis with unit average energy.  For QPSK
bits ``00`` map to ``(1+1j)/sqrt(2)`` and ``11`` to ``(-1-1j)/sqrt(2)``; the
first half of each symbol's bits selects the in-phase level, the second half
the quadrature level, and within an axis bit 0 selects the positive extreme.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from otfs_rc.numerics import dft_matrix, vec, vec_inv

__all__ = [
    "MODULATIONS",
    "OtfsConfig",
    "constellation",
    "bits_per_symbol",
    "qam_map",
    "qam_demap_nearest",
    "modulate",
    "demodulate",
]

#: modulation name -> bits per axis
MODULATIONS = {"QPSK": 1, "16QAM": 2, "64QAM": 3}


@dataclass(frozen=True)
class OtfsConfig:
    """Static parameters of one OTFS link."""

    m: int = 64
    n: int = 14
    delta_f_hz: float = 15e3
    carrier_hz: float = 4e9
    variant: str = "RCP"
    n_cp: int = 8
    modulation: str = "QPSK"

    def __post_init__(self) -> None:
        if self.m < 2 or self.n < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.m}x{self.n}")
        if self.variant not in ("RCP", "CP"):
            raise ValueError(f"unknown frame variant {self.variant!r}")
        if not 0 <= self.n_cp <= self.m:
            raise ValueError(f"n_cp must lie in [0, M], got {self.n_cp}")
        if self.modulation not in MODULATIONS:
            raise ValueError(f"unknown modulation {self.modulation!r}")
        if self.delta_f_hz <= 0 or self.carrier_hz <= 0:
            raise ValueError("subcarrier spacing and carrier must be positive")

    @property
    def frame_len(self) -> int:
        """Stream length in samples, cyclic prefixes included."""
        if self.variant == "RCP":
            return self.m * self.n + self.n_cp
        return (self.m + self.n_cp) * self.n

    @property
    def grid_size(self) -> int:
        return self.m * self.n

    @property
    def bits_per_frame(self) -> int:
        return self.grid_size * bits_per_symbol(self.modulation)


def bits_per_symbol(modulation: str) -> int:
    if modulation not in MODULATIONS:
        raise ValueError(f"unknown modulation {modulation!r}")
    return 2 * MODULATIONS[modulation]


def _gray_pam(q: int) -> np.ndarray:
    """PAM levels for q bits, indexed by bit label (MSB first).

    Level order +(2^q - 1) ... -(2^q - 1) walks the binary-reflected Gray
    sequence, so neighbouring levels differ in exactly one bit and the first
    bit acts as the sign bit.
    """
    levels = np.empty(2**q)
    for pos in range(2**q):
        label = pos ^ (pos >> 1)
        levels[label] = (2**q - 1) - 2 * pos
    return levels


@lru_cache(maxsize=None)
def constellation(modulation: str) -> np.ndarray:
    """Unit-energy constellation points indexed by the bit label.

    The label of a symbol is its bits read MSB-first as an integer.
    """
    q = MODULATIONS.get(modulation)
    if q is None:
        raise ValueError(f"unknown modulation {modulation!r}")
    pam = _gray_pam(q)
    scale = np.sqrt(2.0 * (4**q - 1) / 3.0)
    points = (pam[:, None] + 1j * pam[None, :]) / scale
    return points.reshape(-1)  # label = (i_label << q) | q_label


def qam_map(bits: np.ndarray, modulation: str) -> np.ndarray:
    """Map a flat 0/1 array to constellation symbols.

    Length must be a multiple of the bits per symbol.
    """
    bits = np.asarray(bits)
    bps = bits_per_symbol(modulation)
    if bits.ndim != 1 or bits.size % bps:
        raise ValueError(f"bit count {bits.size} not a multiple of {bps}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0 or 1")
    weights = 1 << np.arange(bps - 1, -1, -1)
    labels = bits.reshape(-1, bps) @ weights
    return constellation(modulation)[labels]


def qam_demap_nearest(symbols: np.ndarray, modulation: str) -> np.ndarray:
    """Nearest-neighbour hard demapping back to bits.

    Distance ties resolve to the lowest constellation index.
    """
    symbols = np.asarray(symbols).reshape(-1)
    points = constellation(modulation)
    bps = bits_per_symbol(modulation)
    # (n_sym, n_points) distances; argmin takes the first (lowest) index on ties
    d2 = np.abs(symbols[:, None] - points[None, :]) ** 2
    labels = np.argmin(d2, axis=1)
    shifts = np.arange(bps - 1, -1, -1)
    return ((labels[:, None] >> shifts[None, :]) & 1).astype(np.uint8).reshape(-1)


def modulate(x_grid: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """Delay-Doppler grid -> time-domain sample stream (prefix included)."""
    if x_grid.shape != (cfg.m, cfg.n):
        raise ValueError(f"grid shape {x_grid.shape} != ({cfg.m}, {cfg.n})")
    s = x_grid @ dft_matrix(cfg.n).conj().T
    if cfg.variant == "RCP":
        core = vec(s)
        return np.concatenate([core[len(core) - cfg.n_cp:], core])
    # CP: prefix each column with its own trailing samples
    blocks = [np.concatenate([s[cfg.m - cfg.n_cp:, j], s[:, j]]) for j in range(cfg.n)]
    return np.concatenate(blocks)


def demodulate(stream: np.ndarray, cfg: OtfsConfig) -> np.ndarray:
    """Time-domain sample stream -> delay-Doppler grid (prefix dropped)."""
    stream = np.asarray(stream).reshape(-1)
    if stream.size != cfg.frame_len:
        raise ValueError(f"stream length {stream.size} != {cfg.frame_len}")
    if cfg.variant == "RCP":
        r = vec_inv(stream[cfg.n_cp:], cfg.m, cfg.n)
    else:
        blocks = stream.reshape(cfg.n, cfg.m + cfg.n_cp)
        r = blocks[:, cfg.n_cp:].T
    return r @ dft_matrix(cfg.n)
