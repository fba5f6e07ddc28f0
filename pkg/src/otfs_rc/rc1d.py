"""Time-domain reservoir detector with parallel per-segment networks.

The baseline learning detector: the prefix-stripped received stream is cut
into ``num_reservoirs`` contiguous segments and an independent single-input
echo-state network equalizes each one.  With a block of pilot delay rows,
row m of the time-domain frame depends only on row m of the transmit grid,
so the transmitted time samples at pilot rows are known exactly; each
network trains on the known samples inside its segment (least squares over
a searched forget alignment) and then predicts its whole segment.  The
predicted stream is OTFS-demodulated and hard-quantized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from otfs_rc.modem import OtfsConfig, qam_demap_nearest
from otfs_rc.numerics import dft_matrix, vec, vec_inv
from otfs_rc.pilots import FramePlan, extract_data_bits

__all__ = [
    "Rc1dParams",
    "Rc1dModel",
    "Rc1dResult",
    "init_rc1d",
    "window_1d",
    "pad_zeros",
    "rc1d_states",
    "rc1d_train",
    "rc1d_predict",
    "rc1d_detect",
]


@dataclass(frozen=True)
class Rc1dParams:
    n_neurons: int = 12
    window: int = 10
    num_reservoirs: int = 7
    forget_set: tuple = tuple(range(0, 23, 2))
    spectral_radius: float = 0.9
    sparsity: float = 0.6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_neurons < 1 or self.window < 1 or self.num_reservoirs < 1:
            raise ValueError("n_neurons, window and num_reservoirs must be >= 1")
        if not 0 < self.spectral_radius < 1:
            raise ValueError("spectral radius must lie in (0, 1)")
        if not 0 <= self.sparsity <= 1:
            raise ValueError("sparsity must lie in [0, 1]")
        if len(self.forget_set) == 0 or any(int(v) != v or v < 0 for v in self.forget_set):
            raise ValueError("forget_set must be a non-empty set of ints >= 0")


@dataclass
class Rc1dModel:
    w_in: np.ndarray
    w_res: np.ndarray
    w_out: np.ndarray | None = None
    forget_len: int | None = None
    residuals: dict = field(default_factory=dict)  # forget length -> residual


def init_rc1d(params: Rc1dParams, seed_offset: int = 0) -> Rc1dModel:
    """Fixed weights for one reservoir; ``seed_offset`` separates the
    parallel reservoirs of one detector."""
    rng = np.random.default_rng(params.seed + seed_offset)
    n_i = params.window
    w_in = rng.uniform(-1.0, 1.0, size=(params.n_neurons, n_i))
    w_res = rng.uniform(-1.0, 1.0, size=(params.n_neurons, params.n_neurons))
    w_res[rng.random(w_res.shape) < params.sparsity] = 0.0
    r = np.max(np.abs(np.linalg.eigvals(w_res)))
    if r > 1e-12:
        w_res *= params.spectral_radius / r
    return Rc1dModel(w_in, w_res)


def window_1d(y: np.ndarray, n_win: int) -> np.ndarray:
    """Sliding-history input: out[a, t] = y[t - a], zero before t = 0."""
    y = np.asarray(y)
    if y.ndim == 1:
        y = y[None, :]
    n_rows, length = y.shape
    if n_win < 1:
        raise ValueError("window must be at least 1")
    out = np.zeros((n_rows * n_win, length), dtype=complex)
    for r in range(n_rows):
        for a in range(n_win):
            out[r * n_win + a, a:] = y[r, :length - a]
    return out


def pad_zeros(y_win: np.ndarray, n_pad: int) -> np.ndarray:
    """Append n_pad all-zero columns (state run-out for the forget search)."""
    if n_pad < 0:
        raise ValueError("pad length must be non-negative")
    return np.concatenate(
        [y_win, np.zeros((y_win.shape[0], n_pad), dtype=y_win.dtype)], axis=1
    )


def rc1d_states(y_padded: np.ndarray, model: Rc1dModel) -> np.ndarray:
    """u(t) = f(W_in y(t) + W_res u(t-1)), u(-1) = 0; returns [input; state]."""
    n_n, length = model.w_in.shape[0], y_padded.shape[1]
    drive = model.w_in @ y_padded
    states = np.zeros((n_n, length), dtype=complex)
    u = np.zeros(n_n, dtype=complex)
    for t in range(length):
        x = drive[:, t] + model.w_res @ u
        u = np.tanh(x.real) + 1j * np.tanh(x.imag)
        states[:, t] = u
    return np.concatenate([y_padded, states], axis=0)


def rc1d_train(
    ext: np.ndarray,
    target: np.ndarray,
    model: Rc1dModel,
    forget_set,
    mask: np.ndarray | None = None,
) -> Rc1dModel:
    """Least-squares readout over the best forget alignment.

    For forget length l_f the readout at padded-time l_f + t predicts
    target[t]; the fit and its residual are restricted to ``mask`` when
    given.  Ties pick the smallest l_f.
    """
    target = np.asarray(target).reshape(-1)
    length = target.size
    if mask is None:
        mask = np.ones(length, dtype=bool)
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != length:
        raise ValueError("mask length must match the target")
    if not mask.any():
        raise ValueError("training mask selects no positions")
    b = target[mask]

    best = (np.inf, None, None)
    for l_f in sorted(int(v) for v in forget_set):
        if l_f + length > ext.shape[1]:
            raise ValueError(
                f"forget length {l_f} needs {l_f + length} state columns, "
                f"have {ext.shape[1]}"
            )
        a = ext[:, l_f:l_f + length][:, mask]
        w, *_ = np.linalg.lstsq(a.T, b, rcond=1e-10)
        res = float(np.linalg.norm(w @ a - b) ** 2)
        model.residuals[l_f] = res
        if res < best[0]:
            best = (res, l_f, w)
    model.forget_len = best[1]
    model.w_out = best[2]
    return model


def rc1d_predict(ext: np.ndarray, model: Rc1dModel, length: int) -> np.ndarray:
    if model.w_out is None or model.forget_len is None:
        raise ValueError("model has no trained readout")
    l_f = model.forget_len
    return model.w_out @ ext[:, l_f:l_f + length]


@dataclass
class Rc1dResult:
    bits: np.ndarray
    x_soft: np.ndarray
    models: list
    train_nmse: float
    test_nmse: float


def rc1d_detect(
    stream: np.ndarray, plan: FramePlan, params: Rc1dParams, cfg: OtfsConfig
) -> Rc1dResult:
    """Equalize one received frame and return its data bits."""
    stream = np.asarray(stream).reshape(-1)
    if stream.size != cfg.frame_len:
        raise ValueError(f"stream length {stream.size} != {cfg.frame_len}")
    mn = cfg.m * cfg.n
    if mn % params.num_reservoirs:
        raise ValueError(
            f"{params.num_reservoirs} reservoirs cannot evenly split {mn} samples"
        )
    if cfg.variant == "RCP":
        core = stream[cfg.n_cp:]
    else:
        core = vec(stream.reshape(cfg.n, cfg.m + cfg.n_cp)[:, cfg.n_cp:].T)

    # transmitted time samples, known exactly on the pilot delay rows
    s_train = vec(plan.x_pilot @ dft_matrix(cfg.n).conj().T)
    known = vec(plan.pattern.mask)

    seg = mn // params.num_reservoirs
    l_max = int(max(params.forget_set))
    s_hat = np.empty(mn, dtype=complex)
    models = []
    err_num = err_den = 0.0
    for v in range(params.num_reservoirs):
        lo, hi = v * seg, (v + 1) * seg
        seg_mask = known[lo:hi]
        if not seg_mask.any():
            raise ValueError(f"segment {v} contains no pilot samples")
        model = init_rc1d(params, seed_offset=v)
        ext = rc1d_states(pad_zeros(window_1d(core[lo:hi], params.window), l_max), model)
        rc1d_train(ext, s_train[lo:hi], model, params.forget_set, mask=seg_mask)
        pred = rc1d_predict(ext, model, seg)
        s_hat[lo:hi] = pred
        err_num += np.linalg.norm((pred - s_train[lo:hi])[seg_mask]) ** 2
        err_den += np.linalg.norm(s_train[lo:hi][seg_mask]) ** 2
        models.append(model)

    x_soft = vec_inv(s_hat, cfg.m, cfg.n) @ dft_matrix(cfg.n)
    data = ~plan.pattern.mask
    diff = np.linalg.norm((x_soft - plan.x_grid)[data]) ** 2
    test_nmse = float(diff / np.linalg.norm(plan.x_grid[data]) ** 2)
    bits = extract_data_bits(x_soft, plan.pattern, cfg.modulation)
    return Rc1dResult(bits, x_soft, models,
                      float(err_num / err_den) if err_den else float("nan"),
                      test_nmse)
