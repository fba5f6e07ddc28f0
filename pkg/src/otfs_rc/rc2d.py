"""Two-dimensional reservoir-computing detector on the delay-Doppler grid.

One small recurrent network is trained per received frame on the pilot
positions and then read out over the whole grid; no channel estimate is
formed.  The receive grid is phase-compensated, every position is expanded
into a rectangular window of past delay/Doppler samples, the windowed tensor
is circularly padded, and a two-dimensional state recursion

    u[m,n] = f(W_in y[m,n] + W_up u[m-1,n] + W_diag u[m-1,n-1] + W_left u[m,n-1])

is run over the padded grid with zero boundary states, where f acts as tanh
separately on real and imaginary parts.  The readout sees the extended state
(input window stacked on reservoir state).  Training solves a masked least
squares against the known pilot symbols while searching an output alignment
("forget") offset per axis: Doppler offset first with the delay offset fixed
at its smallest candidate, then the delay offset at the chosen Doppler
offset.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from otfs_rc.modem import OtfsConfig
from otfs_rc.numerics import vec
from otfs_rc.pilots import FramePlan, extract_data_bits

__all__ = [
    "Rc2dParams",
    "Rc2dModel",
    "Rc2dResult",
    "init_rc2d",
    "phase_compensate",
    "window_2d",
    "circular_pad_2d",
    "rc2d_states",
    "rc2d_train",
    "rc2d_predict",
    "rc2d_detect",
]


@dataclass(frozen=True)
class Rc2dParams:
    """Hyper-parameters of the grid-domain reservoir detector."""

    n_neurons: int = 6
    win_delay: int = 4       # window length along the delay axis
    win_doppler: int = 14    # window length along the Doppler axis
    comp_rows: int = 7       # delay rows phase-compensated (RCP variant only)
    forget_delay: tuple = (7, 8)
    forget_doppler: tuple = (13, 14)
    spectral_radius: float = 0.9
    sparsity: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_neurons < 1:
            raise ValueError("need at least one neuron")
        if self.win_delay < 1 or self.win_doppler < 1:
            raise ValueError("window lengths must be at least 1")
        if self.comp_rows < 0:
            raise ValueError("comp_rows must be non-negative")
        if not 0 < self.spectral_radius < 1:
            raise ValueError("spectral radius must lie in (0, 1)")
        if not 0 <= self.sparsity <= 1:
            raise ValueError("sparsity must lie in [0, 1]")
        for name, s in (("forget_delay", self.forget_delay),
                        ("forget_doppler", self.forget_doppler)):
            if len(s) == 0 or any(int(v) != v or v < 0 for v in s):
                raise ValueError(f"{name} must be a non-empty set of ints >= 0")

    @property
    def n_input(self) -> int:
        return self.win_delay * self.win_doppler


@dataclass
class Rc2dModel:
    """Exactly one network: fixed random weights plus the learned readout."""

    w_in: np.ndarray
    w_up: np.ndarray
    w_diag: np.ndarray
    w_left: np.ndarray
    w_out: np.ndarray | None = None
    forget_pair: tuple[int, int] | None = None
    residuals: dict = field(default_factory=dict)  # (m_f, n_f) -> squared residual


def _scaled_sparse(rng: np.random.Generator, size: int, sparsity: float,
                   radius: float) -> np.ndarray:
    w = rng.uniform(-1.0, 1.0, size=(size, size))
    w[rng.random((size, size)) < sparsity] = 0.0
    r = np.max(np.abs(np.linalg.eigvals(w)))
    if r > 1e-12:
        w *= radius / r
    return w


def init_rc2d(params: Rc2dParams) -> Rc2dModel:
    """Draw the fixed weights: dense uniform input weights, sparse recurrent
    weights rescaled to the requested spectral radius."""
    rng = np.random.default_rng(params.seed)
    w_in = rng.uniform(-1.0, 1.0, size=(params.n_neurons, params.n_input))
    mats = [
        _scaled_sparse(rng, params.n_neurons, params.sparsity, params.spectral_radius)
        for _ in range(3)
    ]
    return Rc2dModel(w_in, *mats)


def _ctanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(x.real) + 1j * np.tanh(x.imag)


def phase_compensate(y_grid: np.ndarray, comp_rows: int, cfg: OtfsConfig) -> np.ndarray:
    """Undo the Doppler-dependent wrap phase on the first comp_rows delay rows.

    The whole-frame-prefix variant attaches exp(-2j*pi*k/N) to grid positions
    whose delay index wrapped; rows below the expected channel delay spread
    are multiplied by the conjugate phase.  The per-symbol-prefix variant has
    no such term and is returned unchanged.
    """
    if cfg.variant != "RCP" or comp_rows == 0:
        return np.array(y_grid, copy=True)
    out = np.array(y_grid, copy=True)
    ramp = np.exp(2j * np.pi * np.arange(cfg.n) / cfg.n)
    out[:min(comp_rows, cfg.m), :] *= ramp[None, :]
    return out


def window_2d(y_grid: np.ndarray, win_delay: int, win_doppler: int) -> np.ndarray:
    """Stack each position's rectangular history window into an input fiber.

    Output shape (win_delay*win_doppler, M, N);
    fiber[b*win_doppler + a, l, k] = y[l-b, k-a], zero outside the grid, so
    entry 0 is the position itself, entries walk back first along Doppler
    then along delay.
    """
    m, n = y_grid.shape
    if win_delay > m or win_doppler > n:
        raise ValueError("window larger than the grid")
    out = np.zeros((win_delay * win_doppler, m, n), dtype=complex)
    for b in range(win_delay):
        for a in range(win_doppler):
            blk = out[b * win_doppler + a]
            blk[b:, a:] = y_grid[:m - b, :n - a]
    return out


def circular_pad_2d(y_win: np.ndarray, pad_delay: int, pad_doppler: int) -> np.ndarray:
    """Append wrapped leading fibers: pad_delay rows and pad_doppler columns
    copied from the start of each axis (corner from the leading corner)."""
    _, m, n = y_win.shape
    if pad_delay > m or pad_doppler > n:
        raise ValueError("cannot pad beyond one full period")
    top = np.concatenate([y_win, y_win[:, :, :pad_doppler]], axis=2)
    bottom = np.concatenate(
        [y_win[:, :pad_delay, :], y_win[:, :pad_delay, :pad_doppler]], axis=2
    )
    return np.concatenate([top, bottom], axis=1)


def rc2d_states(y_padded: np.ndarray, model: Rc2dModel, scan: str = "doppler-outer") -> np.ndarray:
    """Run the 2-D recursion and return the extended state tensor.

    Input (N_i, Mp, Np); output (N_i + N_n, Mp, Np) with the input fibers
    stacked on top of the reservoir states.  Out-of-range neighbour states
    are zero.  ``scan`` picks the evaluation order; both orders respect the
    (up, diagonal, left) dependencies, so the result is identical.
    """
    n_i, mp, np_ = y_padded.shape
    n_n = model.w_in.shape[0]
    drive = np.einsum("ij,jmn->imn", model.w_in, y_padded)
    states = np.zeros((n_n, mp, np_), dtype=complex)
    zero = np.zeros(n_n, dtype=complex)

    def step(m: int, n: int) -> None:
        up = states[:, m - 1, n] if m > 0 else zero
        left = states[:, m, n - 1] if n > 0 else zero
        diag = states[:, m - 1, n - 1] if (m > 0 and n > 0) else zero
        states[:, m, n] = _ctanh(
            drive[:, m, n] + model.w_up @ up + model.w_diag @ diag + model.w_left @ left
        )

    if scan == "doppler-outer":
        for n in range(np_):
            for m in range(mp):
                step(m, n)
    elif scan == "delay-outer":
        for m in range(mp):
            for n in range(np_):
                step(m, n)
    else:
        raise ValueError(f"unknown scan order {scan!r}")
    return np.concatenate([y_padded, states], axis=0)


def _flatten_grid(ext: np.ndarray, m_f: int, n_f: int, m: int, n: int) -> np.ndarray:
    """Truncate the padded extended tensor at offset (m_f, n_f) and flatten
    the grid in vec order: column j = n*M + m."""
    sub = ext[:, m_f:m_f + m, n_f:n_f + n]
    return sub.transpose(0, 2, 1).reshape(ext.shape[0], m * n)


def rc2d_train(
    ext: np.ndarray,
    x_pilot: np.ndarray,
    mask: np.ndarray,
    model: Rc2dModel,
    forget_delay,
    forget_doppler,
) -> Rc2dModel:
    """Masked least-squares readout with the two-stage alignment search.

    Stage 1 fixes the delay offset at min(forget_delay) and sweeps the
    Doppler offsets; stage 2 sweeps the delay offsets at the chosen Doppler
    offset.  Ties pick the smaller offset.  The model is updated in place
    (w_out, forget_pair, residuals) and returned.
    """
    m, n = x_pilot.shape
    target = vec(x_pilot)
    cols = vec(np.asarray(mask, dtype=bool))
    if not cols.any():
        raise ValueError("pilot mask selects no training positions")
    if cols.sum() < ext.shape[0]:
        warnings.warn(
            f"{int(cols.sum())} pilot positions for {ext.shape[0]} readout "
            "weights; the fit is underdetermined",
            stacklevel=2,
        )
    b = target[cols]

    def fit(m_f: int, n_f: int):
        a = _flatten_grid(ext, m_f, n_f, m, n)[:, cols]
        w, *_ = np.linalg.lstsq(a.T, b, rcond=1e-10)
        res = float(np.linalg.norm(w @ a - b) ** 2)
        return w, res

    m_f0 = int(min(forget_delay))
    best_n, best_res = None, np.inf
    for n_f in sorted(int(v) for v in forget_doppler):
        w, res = fit(m_f0, n_f)
        model.residuals[(m_f0, n_f)] = res
        if res < best_res:
            best_n, best_res = n_f, res

    best_m, best_res, best_w = None, np.inf, None
    for m_f in sorted(int(v) for v in forget_delay):
        w, res = fit(m_f, best_n)
        model.residuals[(m_f, best_n)] = res
        if res < best_res:
            best_m, best_res, best_w = m_f, res, w

    model.w_out = best_w
    model.forget_pair = (best_m, best_n)
    return model


def rc2d_predict(ext: np.ndarray, model: Rc2dModel, m: int, n: int) -> np.ndarray:
    """Read the trained output over the whole grid (soft symbol estimates)."""
    if model.w_out is None or model.forget_pair is None:
        raise ValueError("model has no trained readout")
    m_f, n_f = model.forget_pair
    flat = model.w_out @ _flatten_grid(ext, m_f, n_f, m, n)
    return flat.reshape(n, m).T  # undo vec order


@dataclass
class Rc2dResult:
    bits: np.ndarray
    x_soft: np.ndarray
    model: Rc2dModel
    train_nmse: float
    test_nmse: float


def rc2d_detect(
    y_grid: np.ndarray, plan: FramePlan, params: Rc2dParams, cfg: OtfsConfig
) -> Rc2dResult:
    """Train on the frame's pilots and detect its data symbols."""
    if max(params.forget_delay) > cfg.m or max(params.forget_doppler) > cfg.n:
        raise ValueError("forget offsets cannot exceed one grid period")
    y_c = phase_compensate(y_grid, params.comp_rows, cfg)
    windowed = window_2d(y_c, params.win_delay, params.win_doppler)
    padded = circular_pad_2d(
        windowed, int(max(params.forget_delay)), int(max(params.forget_doppler))
    )
    model = init_rc2d(params)
    ext = rc2d_states(padded, model)
    rc2d_train(ext, plan.x_pilot, plan.pattern.mask, model,
               params.forget_delay, params.forget_doppler)
    x_soft = rc2d_predict(ext, model, cfg.m, cfg.n)

    mask = plan.pattern.mask
    train_nmse = _masked_nmse(x_soft, plan.x_grid, mask)
    test_nmse = _masked_nmse(x_soft, plan.x_grid, ~mask)
    bits = extract_data_bits(x_soft, plan.pattern, cfg.modulation)
    return Rc2dResult(bits, x_soft, model, train_nmse, test_nmse)


def _masked_nmse(est: np.ndarray, ref: np.ndarray, mask: np.ndarray) -> float:
    num = np.linalg.norm((est - ref)[mask]) ** 2
    den = np.linalg.norm(ref[mask]) ** 2
    return float(num / den) if den > 0 else float("nan")
