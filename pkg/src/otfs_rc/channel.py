"""Time-varying multipath channel and its delay-Doppler domain kernels.

A channel realization is a set of paths ``(gain h_i, delay ell_i, doppler
kappa_i)`` with delays in samples and Dopplers in Doppler-bin units, both
possibly fractional.  Three independent routes from transmitted grid X to
received grid Y are provided and cross-checked in the tests:

1. the sample-level stream simulators :func:`apply_time_rcp` /
   :func:`apply_time_cp` (what the harness runs),
2. the dense matrix oracle :func:`oracle_rcp` built from cyclic delay and
   Doppler operators conjugated into the delay-Doppler domain,
3. the closed-form position-dependent kernels
   :func:`effective_channel_rcp` / :func:`effective_channel_cp`, whose
   integer-delay/-Doppler reductions are implemented separately in
   :func:`integer_channel_rcp` / :func:`integer_channel_cp`.

Phase conventions: ``z = exp(2j*pi/(M*N))`` for the whole-frame-prefix (RCP)
variant and ``z_cp = exp(2j*pi/(N*(M+n_cp)))`` for the per-symbol-prefix (CP)
variant.  Doppler phase is referenced to the path arrival time, i.e. the
modulator applies ``exp(2j*pi*nu*(t - tau))``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from otfs_rc.modem import OtfsConfig
from otfs_rc.numerics import dft_matrix, dirichlet, vec_inv

__all__ = [
    "PathChannel",
    "random_channel",
    "delay_operator",
    "doppler_operator",
    "time_channel_matrix",
    "oracle_rcp",
    "EffectiveChannel",
    "effective_channel_rcp",
    "effective_channel_cp",
    "integer_channel_rcp",
    "integer_channel_cp",
    "apply_dd",
    "apply_time_rcp",
    "apply_time_cp",
    "add_awgn",
]

# dense 4-D kernels above this many entries would not fit comfortably in RAM
_DENSE_KERNEL_LIMIT = 30_000_000


@dataclass(frozen=True)
class PathChannel:
    """One multipath realization: parallel arrays of equal length."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self) -> None:
        gains = np.asarray(self.gains, dtype=complex).reshape(-1)
        delays = np.asarray(self.delays, dtype=float).reshape(-1)
        dopplers = np.asarray(self.dopplers, dtype=float).reshape(-1)
        if not len(gains) == len(delays) == len(dopplers):
            raise ValueError("gains, delays and dopplers must have equal length")
        if len(gains) == 0:
            raise ValueError("a channel needs at least one path")
        if np.any(delays < 0):
            raise ValueError("path delays must be non-negative")
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "dopplers", dopplers)

    @property
    def num_paths(self) -> int:
        return len(self.gains)

    @property
    def max_delay(self) -> float:
        return float(self.delays.max())

    def to_json(self) -> str:
        """Text record; floats round-trip exactly through repr."""
        return json.dumps(
            {
                "gains_re": self.gains.real.tolist(),
                "gains_im": self.gains.imag.tolist(),
                "delays": self.delays.tolist(),
                "dopplers": self.dopplers.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PathChannel":
        d = json.loads(text)
        gains = np.asarray(d["gains_re"]) + 1j * np.asarray(d["gains_im"])
        return cls(gains, np.asarray(d["delays"]), np.asarray(d["dopplers"]))


def random_channel(
    rng: np.random.Generator,
    num_paths: int,
    max_delay: float,
    max_doppler: float,
    integer_delays: bool = False,
    delays=None,
    power_profile_db=None,
) -> PathChannel:
    """Draw a channel: complex Gaussian gains normalized to unit total power,
    delays uniform on [0, max_delay] (or uniform integers when requested),
    Dopplers uniform on [-max_doppler, max_doppler].

    ``delays`` fixes the tap positions instead of drawing them, and
    ``power_profile_db`` gives each tap a mean power (standardized test
    channels pair a fixed delay line with a decaying profile; total power
    still normalizes to one exactly).
    """
    if num_paths < 1:
        raise ValueError("num_paths must be at least 1")
    gains = rng.normal(size=num_paths) + 1j * rng.normal(size=num_paths)
    if power_profile_db is not None:
        profile = np.asarray(power_profile_db, dtype=float)
        if profile.shape != (num_paths,):
            raise ValueError("power_profile_db must have one entry per path")
        gains *= 10.0 ** (profile / 20.0)
    gains /= np.linalg.norm(gains)
    if delays is not None:
        delays = np.asarray(delays, dtype=float)
        if delays.shape != (num_paths,):
            raise ValueError("delays must have one entry per path")
    elif integer_delays:
        delays = rng.integers(0, int(max_delay) + 1, size=num_paths).astype(float)
    else:
        delays = rng.uniform(0.0, max_delay, size=num_paths)
    dopplers = rng.uniform(-max_doppler, max_doppler, size=num_paths)
    return PathChannel(gains, delays, dopplers)


# ---------------------------------------------------------------------------
# time-domain operators and the matrix oracle (RCP variant)
# ---------------------------------------------------------------------------


def delay_operator(ell: float, mn: int) -> np.ndarray:
    """Cyclic (possibly fractional) delay over an mn-sample block.

    ``F^H diag(exp(-2j*pi*ell*t/mn)) F`` with F the unitary DFT; for integer
    ell this is the permutation shifting samples down by ell.
    """
    f = dft_matrix(mn)
    ramp = np.exp(-2j * np.pi * ell * np.arange(mn) / mn)
    return f.conj().T @ (ramp[:, None] * f)


def doppler_operator(kappa: float, mn: int) -> np.ndarray:
    """Diagonal Doppler progression diag(exp(2j*pi*kappa*t/mn))."""
    return np.diag(np.exp(2j * np.pi * kappa * np.arange(mn) / mn))


def time_channel_matrix(chan: PathChannel, mn: int) -> np.ndarray:
    """Sum over paths of h_i * Delay(ell_i) @ Doppler(kappa_i).

    Doppler is applied first, so its phase is referenced to t - tau.
    """
    h = np.zeros((mn, mn), dtype=complex)
    for g, ell, kap in zip(chan.gains, chan.delays, chan.dopplers):
        h += g * delay_operator(ell, mn) @ doppler_operator(kap, mn)
    return h


def oracle_rcp(chan: PathChannel, cfg: OtfsConfig) -> np.ndarray:
    """Dense MN x MN delay-Doppler input/output map for the RCP variant.

    Conjugates the time-domain channel by the modulator pair:
    ``(F_N kron I_M) @ H_time @ (F_N^H kron I_M)``.  Reference route only;
    cost is O((MN)^3)-ish, intended for small grids.
    """
    mn = cfg.m * cfg.n
    o = np.kron(dft_matrix(cfg.n), np.eye(cfg.m))
    return o @ time_channel_matrix(chan, mn) @ o.conj().T


# ---------------------------------------------------------------------------
# closed-form delay-Doppler kernels
# ---------------------------------------------------------------------------


class EffectiveChannel:
    """Position-dependent delay-Doppler kernel H_{l,k}[l', k'].

    The received grid is ``Y[l,k] = sum_{l',k'} H_{l,k}[l',k'] *
    X[(l-l') mod M, (k-k') mod N]``.  Rows are evaluated lazily through
    :meth:`row`; :meth:`dense` materializes the full (M, N, M, N) tensor and
    is memory-guarded for large grids.  For the CP variant the kernel does
    not depend on k.
    """

    def __init__(self, cfg: OtfsConfig, row_fn, k_invariant: bool, label: str):
        self.cfg = cfg
        self._row_fn = row_fn
        self.k_invariant = k_invariant
        self.label = label
        self._row_cache: dict[tuple[int, int], np.ndarray] = {}
        self._dense: np.ndarray | None = None

    def row(self, l: int, k: int) -> np.ndarray:
        """Kernel slice H_{l,k}[:, :] of shape (M, N)."""
        key = (l, 0) if self.k_invariant else (l, k)
        got = self._row_cache.get(key)
        if got is None:
            got = self._row_fn(key[0], key[1])
            self._row_cache[key] = got
        return got

    def dense(self) -> np.ndarray:
        """Full (M, N, M, N) kernel tensor."""
        if self._dense is None:
            m, n = self.cfg.m, self.cfg.n
            if m * n * m * n > _DENSE_KERNEL_LIMIT:
                raise ValueError(
                    f"dense kernel for {m}x{n} grid exceeds the memory guard; "
                    "use row() instead"
                )
            out = np.empty((m, n, m, n), dtype=complex)
            for l in range(m):
                for k in range(n):
                    out[l, k] = self.row(l, k)
            self._dense = out
        return self._dense

    def as_matrix(self) -> np.ndarray:
        """Flatten to the MN x MN map G with vec ordering (column stacking).

        Row index k*M + l, column index k''*M + l'' where (l'', k'') is the
        transmit position, i.e. ``vec(Y) = G @ vec(X)``.
        """
        m, n = self.cfg.m, self.cfg.n
        g = np.zeros((m * n, m * n), dtype=complex)
        lsrc = np.arange(m)
        ksrc = np.arange(n)
        for l in range(m):
            lcol = (l - lsrc) % m  # transmit delay row hit by offset l'
            for k in range(n):
                kcol = (k - ksrc) % n
                cols = (kcol[None, :] * m + lcol[:, None]).reshape(-1)
                g[k * m + l, cols] = self.row(l, k).reshape(-1)
        return g


def _alpha_row(l: int, k: int, m: int, n: int) -> np.ndarray:
    """Wrap factor over l': exp(-2j*pi*k/N) where l < l', else 1."""
    out = np.ones(m, dtype=complex)
    out[np.arange(m) > l] = np.exp(-2j * np.pi * k / n)
    return out


def effective_channel_rcp(chan: PathChannel, cfg: OtfsConfig) -> EffectiveChannel:
    """Fractional-delay/-Doppler kernel of the whole-frame-prefix variant.

    H_{l,k}[l',k'] = sum_i h_i * alpha_{l'}[l,k]
                     * z^{k*(l'-ell_i) + kappa_i*((l-l') mod M)}
                     * S_M(l'-ell_i) * S_N(kappa_i-k')
    with z = exp(2j*pi/(MN)) and S the periodic sinc.
    """
    _check_delays(chan, cfg)
    m, n = cfg.m, cfg.n
    lp = np.arange(m)
    kp = np.arange(n)
    # per-path factors that do not depend on (l, k)
    sm = np.stack([dirichlet(m, lp - ell) for ell in chan.delays])  # (P, M)
    sn = np.stack([dirichlet(n, kap - kp) for kap in chan.dopplers])  # (P, N)
    zexp = 2j * np.pi / (m * n)

    def row(l: int, k: int) -> np.ndarray:
        alpha = _alpha_row(l, k, m, n)
        acc = np.zeros((m, n), dtype=complex)
        for g, ell, kap, sm_p, sn_p in zip(
            chan.gains, chan.delays, chan.dopplers, sm, sn
        ):
            phase = np.exp(zexp * (k * (lp - ell) + kap * ((l - lp) % m)))
            acc += g * np.outer(alpha * phase * sm_p, sn_p)
        return acc

    return EffectiveChannel(cfg, row, k_invariant=False, label="rcp-fractional")


def effective_channel_cp(chan: PathChannel, cfg: OtfsConfig) -> EffectiveChannel:
    """Fractional-delay/-Doppler kernel of the per-symbol-prefix variant.

    H_l[l',k'] = sum_i h_i * z_cp^{kappa_i*(n_cp + l - ell_i)}
                 * S_M(l'-ell_i) * S_N(kappa_i-k')
    with z_cp = exp(2j*pi/(N*(M+n_cp))); independent of k.
    """
    _check_delays(chan, cfg)
    m, n = cfg.m, cfg.n
    lp = np.arange(m)
    kp = np.arange(n)
    sm = np.stack([dirichlet(m, lp - ell) for ell in chan.delays])
    sn = np.stack([dirichlet(n, kap - kp) for kap in chan.dopplers])
    zexp = 2j * np.pi / (n * (m + cfg.n_cp))

    def row(l: int, _k: int) -> np.ndarray:
        acc = np.zeros((m, n), dtype=complex)
        for g, ell, kap, sm_p, sn_p in zip(
            chan.gains, chan.delays, chan.dopplers, sm, sn
        ):
            acc += g * np.exp(zexp * kap * (cfg.n_cp + l - ell)) * np.outer(sm_p, sn_p)
        return acc

    return EffectiveChannel(cfg, row, k_invariant=True, label="cp-fractional")


def integer_channel_rcp(taps, cfg: OtfsConfig) -> EffectiveChannel:
    """Integer-tap RCP kernel, written directly from the integer relation
    Y[l,k] = sum_i h_i * z^{k_i*((l-l_i) mod M)} * alpha_{l_i}[l,k]
             * X[(l-l_i) mod M, (k-k_i) mod N].

    ``taps`` is an iterable of (gain, delay, doppler) with integer delay in
    [0, M) and integer doppler.
    """
    m, n = cfg.m, cfg.n
    taps = [(complex(g), int(d), int(p)) for g, d, p in taps]
    for _, d, _ in taps:
        if not 0 <= d < m:
            raise ValueError(f"integer tap delay {d} outside [0, {m})")
    zexp = 2j * np.pi / (m * n)

    def row(l: int, k: int) -> np.ndarray:
        acc = np.zeros((m, n), dtype=complex)
        for g, d, p in taps:
            alpha = np.exp(-2j * np.pi * k / n) if l < d else 1.0
            acc[d, p % n] += g * alpha * np.exp(zexp * p * ((l - d) % m))
        return acc

    return EffectiveChannel(cfg, row, k_invariant=False, label="rcp-integer")


def integer_channel_cp(taps, cfg: OtfsConfig) -> EffectiveChannel:
    """Integer-tap CP kernel from
    Y[l,k] = sum_i h_i * z_cp^{k_i*(n_cp + l - l_i)} * X[(l-l_i) mod M, (k-k_i) mod N].
    """
    m, n = cfg.m, cfg.n
    taps = [(complex(g), int(d), int(p)) for g, d, p in taps]
    for _, d, _ in taps:
        if not 0 <= d < m:
            raise ValueError(f"integer tap delay {d} outside [0, {m})")
    zexp = 2j * np.pi / (n * (m + cfg.n_cp))

    def row(l: int, _k: int) -> np.ndarray:
        acc = np.zeros((m, n), dtype=complex)
        for g, d, p in taps:
            acc[d, p % n] += g * np.exp(zexp * p * (cfg.n_cp + l - d))
        return acc

    return EffectiveChannel(cfg, row, k_invariant=True, label="cp-integer")


def apply_dd(x_grid: np.ndarray, heff: EffectiveChannel) -> np.ndarray:
    """Apply a delay-Doppler kernel: the circular double sum over (l', k')."""
    m, n = heff.cfg.m, heff.cfg.n
    if x_grid.shape != (m, n):
        raise ValueError(f"grid shape {x_grid.shape} != ({m}, {n})")
    y = np.empty((m, n), dtype=complex)
    lsrc = np.arange(m)
    ksrc = np.arange(n)
    for l in range(m):
        xrows = x_grid[(l - lsrc) % m, :]
        for k in range(n):
            y[l, k] = np.sum(heff.row(l, k) * xrows[:, (k - ksrc) % n])
    return y


# ---------------------------------------------------------------------------
# sample-level stream simulators
# ---------------------------------------------------------------------------


def _check_delays(chan: PathChannel, cfg: OtfsConfig) -> None:
    if chan.max_delay >= cfg.m:
        raise ValueError(
            f"path delay {chan.max_delay} exceeds the delay grid span {cfg.m}"
        )
    if np.ceil(chan.max_delay) > cfg.n_cp:
        warnings.warn(
            f"path delay {chan.max_delay} exceeds the cyclic prefix "
            f"({cfg.n_cp} samples); the cyclic model no longer matches a "
            "linear channel",
            stacklevel=3,
        )


def apply_time_rcp(stream: np.ndarray, chan: PathChannel, cfg: OtfsConfig) -> np.ndarray:
    """Pass an RCP-variant stream through the channel (noise-free).

    The prefix makes the frame cyclic over its M*N core, so each path acts as
    the diagonal Doppler progression followed by the cyclic fractional delay,
    both over the core; the emitted prefix is regenerated from the output
    core.  Matches :func:`oracle_rcp` exactly.
    """
    if cfg.variant != "RCP":
        raise ValueError("apply_time_rcp requires an RCP-variant config")
    stream = np.asarray(stream).reshape(-1)
    if stream.size != cfg.frame_len:
        raise ValueError(f"stream length {stream.size} != {cfg.frame_len}")
    _check_delays(chan, cfg)
    mn = cfg.m * cfg.n
    core = stream[cfg.n_cp:]
    t = np.arange(mn)
    out = np.zeros(mn, dtype=complex)
    for g, ell, kap in zip(chan.gains, chan.delays, chan.dopplers):
        dopplered = core * np.exp(2j * np.pi * kap * t / mn)
        spec = np.fft.fft(dopplered) * np.exp(-2j * np.pi * ell * t / mn)
        out += g * np.fft.ifft(spec)
    return np.concatenate([out[mn - cfg.n_cp:], out])


def apply_time_cp(stream: np.ndarray, chan: PathChannel, cfg: OtfsConfig) -> np.ndarray:
    """Pass a CP-variant stream through the channel (noise-free).

    Each per-symbol prefix absorbs the path delay, so the delay acts as the
    M-point cyclic fractional delay of every column core; the Doppler phase
    runs over the global prefix-included sample index t, referenced to the
    path arrival: exp(2j*pi*kappa*(t - ell)/(N*(M+n_cp))).  Output prefixes
    are regenerated from the delayed cores at their own global indices.
    """
    if cfg.variant != "CP":
        raise ValueError("apply_time_cp requires a CP-variant config")
    stream = np.asarray(stream).reshape(-1)
    if stream.size != cfg.frame_len:
        raise ValueError(f"stream length {stream.size} != {cfg.frame_len}")
    _check_delays(chan, cfg)
    m, n, n_cp = cfg.m, cfg.n, cfg.n_cp
    blk = m + n_cp
    cores = stream.reshape(n, blk)[:, n_cp:].T  # (M, N)
    # global sample index of every output position, cores and prefixes
    t_core = n_cp + np.arange(m)[:, None] + blk * np.arange(n)[None, :]
    t_cp = np.arange(n_cp)[:, None] + blk * np.arange(n)[None, :]
    zexp = 2j * np.pi / (n * blk)
    out_cores = np.zeros((m, n), dtype=complex)
    out_cps = np.zeros((n_cp, n), dtype=complex)
    fbin = np.arange(m)
    for g, ell, kap in zip(chan.gains, chan.delays, chan.dopplers):
        delayed = np.fft.ifft(
            np.fft.fft(cores, axis=0) * np.exp(-2j * np.pi * ell * fbin / m)[:, None],
            axis=0,
        )
        out_cores += g * delayed * np.exp(zexp * kap * (t_core - ell))
        if n_cp:
            out_cps += g * delayed[m - n_cp:, :] * np.exp(zexp * kap * (t_cp - ell))
    blocks = np.concatenate([out_cps, out_cores], axis=0)  # (blk, N)
    return blocks.T.reshape(-1)


def add_awgn(stream: np.ndarray, snr_db: float, seed) -> np.ndarray:
    """Add complex white Gaussian noise at per-sample variance 10^(-snr/10).

    The SNR is symbol energy over noise power with the average data symbol
    energy fixed at 1 by the modem.  ``seed`` is anything accepted by
    ``np.random.default_rng``; ``snr_db=inf`` returns a copy.
    """
    stream = np.asarray(stream)
    if np.isinf(snr_db):
        return stream.copy()
    var = 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = rng.normal(scale=np.sqrt(var / 2), size=(2,) + stream.shape)
    return stream + noise[0] + 1j * noise[1]
