"""Shared transforms for the delay-Doppler grid.

Conventions used throughout the package:

* DFT matrices are unitary, entry ``(r, c) = exp(-2j*pi*r*c/M) / sqrt(M)``.
* ``vec`` stacks columns, so ``vec(X)[n*M + m] == X[m, n]`` for an M x N grid.
* The periodic sinc ``dirichlet(M, x)`` is the average of M unit phasors,
  ``(1/M) * sum_m exp(2j*pi*m*x/M)``; it is 1 at x = 0 (mod M) and vanishes at
  every other integer.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "dft_matrix",
    "isfft",
    "sfft",
    "vec",
    "vec_inv",
    "dirichlet",
]

# Below this the closed-form denominator sin(pi*x/M) is too small to divide by
# and the direct M-term sum is used instead.
_SINGULAR_TOL = 1e-9


def dft_matrix(m: int) -> np.ndarray:
    """Unitary M-point DFT matrix.

    Parameters
    ----------
    m : int
        Transform size, must be positive.

    Returns
    -------
    np.ndarray
        Complex (m, m) matrix with entry (r, c) = exp(-2j*pi*r*c/m)/sqrt(m).
    """
    if m <= 0:
        raise ValueError(f"DFT size must be positive, got {m}")
    idx = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / m) / np.sqrt(m)


def isfft(x_dd: np.ndarray) -> np.ndarray:
    """Inverse symplectic finite Fourier transform, F_M @ X @ F_N^H.

    Maps an M x N delay-Doppler grid to the time-frequency grid.
    """
    m, n = x_dd.shape
    return dft_matrix(m) @ x_dd @ dft_matrix(n).conj().T


def sfft(x_tf: np.ndarray) -> np.ndarray:
    """Symplectic finite Fourier transform, F_M^H @ X @ F_N.

    Inverse of :func:`isfft`.
    """
    m, n = x_tf.shape
    return dft_matrix(m).conj().T @ x_tf @ dft_matrix(n)


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: vec(X)[n*M + m] = X[m, n]."""
    if x.ndim != 2:
        raise ValueError(f"vec expects a 2-D array, got shape {x.shape}")
    return x.reshape(-1, order="F")


def vec_inv(x: np.ndarray, m: int, n: int) -> np.ndarray:
    """Inverse of :func:`vec` for an M x N grid."""
    x = np.asarray(x)
    if x.size != m * n:
        raise ValueError(f"cannot reshape {x.size} samples into {m}x{n}")
    return x.reshape((m, n), order="F")


def dirichlet(m: int, x) -> np.ndarray | complex:
    """Periodic sinc S_M(x) = (1/M) * sum_{k=0}^{M-1} exp(2j*pi*k*x/M).

    Closed form (1/M) * exp(1j*pi*(M-1)*x/M) * sin(pi*x)/sin(pi*x/M) away
    from the removable singularities at x = 0 (mod M), where the direct sum
    is evaluated instead.  M-periodic in x; equals 1 at x = 0 (mod M) and 0
    at all other integers.

    Parameters
    ----------
    m : int
        Period, must be positive.
    x : float or array_like
        Evaluation points (may be fractional and negative).

    Returns
    -------
    complex scalar or complex ndarray matching the shape of ``x``.
    """
    if m <= 0:
        raise ValueError(f"period must be positive, got {m}")
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)

    den = np.sin(np.pi * x_arr / m)
    near = np.abs(den) < _SINGULAR_TOL
    safe_den = np.where(near, 1.0, den)
    out = (
        np.exp(1j * np.pi * (m - 1) * x_arr / m)
        * np.sin(np.pi * x_arr)
        / (m * safe_den)
    )
    if np.any(near):
        xs = x_arr[near]
        k = np.arange(m)
        out[near] = np.mean(np.exp(2j * np.pi * np.outer(xs, k) / m), axis=1)
    return out[0] if scalar else out
