"""BPSK mapping, maximum-ratio combining and hard decisions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "CombinedStatistic",
    "ContractViolation",
    "bpsk_modulate",
    "mrc_combine",
    "bpsk_demodulate_hard",
]


class ContractViolation(ValueError):
    """Inputs violate the documented shape or value contract."""


@dataclass
class CombinedStatistic:
    """Real decision values and the post-combining SNR that goes with them."""

    decision_values: np.ndarray
    post_snr: np.ndarray


def bpsk_modulate(bits, p: float = 1.0) -> np.ndarray:
    """Map bit 0 to ``+sqrt(p)`` and bit 1 to ``-sqrt(p)``."""
    if not p > 0:
        raise ContractViolation("symbol energy must be positive")
    bits = np.asarray(bits)
    return np.sqrt(p) * (1.0 - 2.0 * bits)


def mrc_combine(branches: Sequence[tuple[np.ndarray, np.ndarray]], n0: float,
                p: float = 1.0) -> CombinedStatistic:
    """Maximum-ratio combine diversity branches carrying the same BPSK block.

    Parameters
    ----------
    branches : sequence of (observation, gain)
        ``observation`` has shape ``(..., n)``; ``gain`` broadcasts against
        the leading axes ``(...)``.  Each branch must carry noise of
        variance ``n0``.
    n0 : float
        Noise power per complex sample.
    p : float
        Symbol energy, only used for ``post_snr``.

    Returns
    -------
    CombinedStatistic
        ``Re(sum conj(g_i) y_i)`` and ``sum |g_i|^2 p / n0``.
    """
    if not branches:
        raise ContractViolation("need at least one branch")
    shape = np.shape(branches[0][0])
    total = np.zeros(shape, dtype=complex)
    gain_power = 0.0
    for obs, gain in branches:
        obs = np.asarray(obs)
        if obs.shape != shape:
            raise ContractViolation(f"branch shape {obs.shape} differs from {shape}")
        gain = np.asarray(gain)
        total = total + np.conj(gain)[..., None] * obs
        gain_power = gain_power + np.abs(gain) ** 2
    return CombinedStatistic(total.real, gain_power * p / n0)


def bpsk_demodulate_hard(stat) -> np.ndarray:
    """Sign detector; an exact zero decides bit 0."""
    values = stat.decision_values if isinstance(stat, CombinedStatistic) else np.asarray(stat)
    return (values < 0).astype(np.uint8)
