"""Delay-Doppler link-level simulation with reservoir-computing detectors.

Modules: ``numerics`` (transforms), ``modem`` (grid <-> sample stream),
``channel`` (time-varying multipath, three equivalent routes), ``pilots``
(frame assembly), ``rc2d``/``rc1d`` (reservoir detectors), ``equalizers``
(LMMSE and spike CSI estimation), ``complexity`` (operation counts),
``harness`` (reproducible sweeps), ``cli`` (command line).
"""

from otfs_rc import (
    channel,
    complexity,
    equalizers,
    harness,
    modem,
    numerics,
    pilots,
    rc1d,
    rc2d,
)

__version__ = "0.1.0"

__all__ = [
    "channel",
    "complexity",
    "equalizers",
    "harness",
    "modem",
    "numerics",
    "pilots",
    "rc1d",
    "rc2d",
    "__version__",
]
