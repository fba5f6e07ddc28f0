"""Pilot patterns and frame assembly.

Both supported patterns occupy the same support: a contiguous block of
``n_pilot_rows`` delay rows, centred on the delay axis, spanning every
Doppler column.  The overhead is therefore ``n_pilot_rows / M`` regardless
of pattern kind.

* ``blockwise`` - every pilot position carries a random constellation
  symbol (unit average energy), suitable for the learning-based detectors.
* ``spike``     - a single high-power pilot at the centre of the block,
  all other pilot positions exactly zero (the guard region), suitable for
  impulse-response channel estimation.

Data symbols fill the remaining positions in vec (column-stacking) order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from otfs_rc.modem import OtfsConfig, bits_per_symbol, constellation, qam_demap_nearest, qam_map
from otfs_rc.numerics import vec, vec_inv

__all__ = [
    "PilotPattern",
    "FramePlan",
    "blockwise_mask",
    "spike_mask",
    "assemble_frame",
    "extract_data_symbols",
    "extract_data_bits",
    "papr",
]


@dataclass(frozen=True)
class PilotPattern:
    """Pilot layout for one grid size."""

    kind: str
    mask: np.ndarray  # bool (M, N), True at pilot positions
    n_pilot_rows: int
    block_start_row: int
    spike_pos: tuple[int, int] | None = None
    spike_power_db: float = 0.0

    @property
    def overhead(self) -> float:
        """Fraction of grid positions spent on pilots (eta)."""
        return float(self.mask.sum()) / self.mask.size

    @property
    def num_data(self) -> int:
        return int((~self.mask).sum())


@dataclass(frozen=True)
class FramePlan:
    """One assembled transmit frame."""

    pattern: PilotPattern
    x_grid: np.ndarray   # full M x N grid, pilots + data
    x_pilot: np.ndarray  # pilot contribution only (zero off the mask)
    bits: np.ndarray     # the data bits carried by x_grid


def _block_rows(cfg: OtfsConfig, n_pilot_rows: int) -> tuple[int, np.ndarray]:
    if not 1 <= n_pilot_rows <= cfg.m:
        raise ValueError(f"pilot rows must lie in [1, {cfg.m}], got {n_pilot_rows}")
    start = (cfg.m - n_pilot_rows) // 2
    mask = np.zeros((cfg.m, cfg.n), dtype=bool)
    mask[start:start + n_pilot_rows, :] = True
    return start, mask


def blockwise_mask(cfg: OtfsConfig, n_pilot_rows: int) -> PilotPattern:
    """Centred block of pilot rows filled with random symbols at assembly."""
    start, mask = _block_rows(cfg, n_pilot_rows)
    return PilotPattern("blockwise", mask, n_pilot_rows, start)


def spike_mask(cfg: OtfsConfig, n_pilot_rows: int, spike_power_db: float) -> PilotPattern:
    """Same support as blockwise, single spike at the centre of the block."""
    start, mask = _block_rows(cfg, n_pilot_rows)
    pos = (start + n_pilot_rows // 2, cfg.n // 2)
    return PilotPattern("spike", mask, n_pilot_rows, start, pos, spike_power_db)


def assemble_frame(
    bits: np.ndarray, pattern: PilotPattern, cfg: OtfsConfig, seed
) -> FramePlan:
    """Place data bits and pilot content on the grid.

    ``seed`` drives the blockwise pilot symbols (ignored for spike frames)
    so that a frame is reproducible from (bits, pattern, seed) alone.
    """
    bits = np.asarray(bits).reshape(-1)
    bps = bits_per_symbol(cfg.modulation)
    need = pattern.num_data * bps
    if bits.size != need:
        raise ValueError(f"expected {need} data bits, got {bits.size}")
    if pattern.mask.shape != (cfg.m, cfg.n):
        raise ValueError("pattern mask does not match the grid size")

    mask_f = vec(pattern.mask)
    x_flat = np.zeros(cfg.m * cfg.n, dtype=complex)
    x_flat[~mask_f] = qam_map(bits, cfg.modulation)

    pilot_flat = np.zeros_like(x_flat)
    if pattern.kind == "blockwise":
        rng = np.random.default_rng(seed)
        points = constellation(cfg.modulation)
        pilot_flat[mask_f] = rng.choice(points, size=int(mask_f.sum()))
    elif pattern.kind == "spike":
        amp = 10.0 ** (pattern.spike_power_db / 20.0)
        spike = np.zeros((cfg.m, cfg.n), dtype=complex)
        spike[pattern.spike_pos] = amp
        pilot_flat = vec(spike)
    else:
        raise ValueError(f"unknown pattern kind {pattern.kind!r}")

    x_pilot = vec_inv(pilot_flat, cfg.m, cfg.n)
    x_grid = vec_inv(x_flat + pilot_flat, cfg.m, cfg.n)
    return FramePlan(pattern, x_grid, x_pilot, bits.astype(np.uint8))


def extract_data_symbols(grid: np.ndarray, pattern: PilotPattern) -> np.ndarray:
    """Data-position symbols in vec order (the order assemble_frame used)."""
    return vec(grid)[~vec(pattern.mask)]


def extract_data_bits(grid: np.ndarray, pattern: PilotPattern, modulation: str) -> np.ndarray:
    """Hard-demap the data positions of an estimated grid."""
    return qam_demap_nearest(extract_data_symbols(grid, pattern), modulation)


def papr(stream: np.ndarray) -> float:
    """Peak-to-average power ratio of a sample stream, in dB."""
    stream = np.asarray(stream).reshape(-1)
    if stream.size == 0:
        raise ValueError("cannot compute PAPR of an empty stream")
    power = np.abs(stream) ** 2
    mean = power.mean()
    if mean == 0:
        raise ValueError("cannot compute PAPR of an all-zero stream")
    return float(10.0 * np.log10(power.max() / mean))
