"""Reference schemes: direct transmission and 2x1 Alamouti.

Both use the same frame format as a MARC user (``k`` bits, or ``k`` bits +
CRC-16 convolutionally encoded) so error counts compare bit for bit.
Alamouti splits the energy ``p`` of each symbol period evenly over its two
antennas.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .channel import add_awgn, draw_gains
from .coding import conv_encode, crc_append, viterbi_decode_hard
from .phy import bpsk_modulate
from .protocol import FrameSetup
from .streams import TAG_BITS, FrameStream

__all__ = ["BaselineKind", "BaselineScheme", "TrialResult", "direct_trial", "alamouti_trial"]


class BaselineKind(Enum):
    DIRECT = "direct"
    ALAMOUTI = "alamouti"


@dataclass(frozen=True)
class BaselineScheme:
    kind: BaselineKind
    coded: bool = False


@dataclass
class TrialResult:
    """Bit errors (F,), importance weights (F,) and transmitted energy (F,)."""

    errors: np.ndarray
    weight: np.ndarray
    energy: np.ndarray
    decisions: Optional[np.ndarray] = None


def _source(stream: FrameStream, setup: FrameSetup):
    info = stream.bits(TAG_BITS, setup.k)
    payload = crc_append(info) if setup.coded else info
    blocks = conv_encode(payload, setup.code) if setup.coded else payload
    return info, blocks


def _finish(info, hard, setup: FrameSetup):
    if setup.coded:
        hard = viterbi_decode_hard(hard, setup.code)
    return (hard[:, : setup.k] != info).sum(axis=-1)


def direct_trial(stream: FrameStream, setup: FrameSetup) -> TrialResult:
    """One user talking to the destination over a single Rayleigh link."""
    info, blocks = _source(stream, setup)
    x = bpsk_modulate(blocks, setup.p)
    h, w = draw_gains(stream, setup.powers.omega_to_d, 1, setup.dest_bias)
    h = h[:, 0]
    y = add_awgn(stream, h[:, None] * x, setup.n0, slot=0)
    hard = ((np.conj(h)[:, None] * y).real < 0).astype(np.uint8)
    errors = _finish(info, hard, setup)
    return TrialResult(errors, w[:, 0], (x ** 2).sum(axis=-1), hard)


def alamouti_trial(stream: FrameStream, setup: FrameSetup) -> TrialResult:
    """2x1 Alamouti block code with linear combining.

    Symbol pairs ``(s1, s2)`` are sent as ``(s1, s2)`` then ``(-s2*, s1*)``
    at energy ``p/2`` per antenna; an odd block is padded with a zero bit.
    """
    info, blocks = _source(stream, setup)
    n = blocks.shape[-1]
    if n % 2:
        blocks = np.concatenate([blocks, np.zeros((blocks.shape[0], 1), np.uint8)], axis=-1)
    s = bpsk_modulate(blocks, setup.p / 2.0).astype(complex)
    s1, s2 = s[:, 0::2], s[:, 1::2]
    h, w = draw_gains(stream, setup.powers.omega_to_d, 2, setup.dest_bias)
    h1, h2 = h[:, 0, None], h[:, 1, None]
    r1 = add_awgn(stream, h1 * s1 + h2 * s2, setup.n0, slot=0)
    r2 = add_awgn(stream, -h1 * np.conj(s2) + h2 * np.conj(s1), setup.n0, slot=1)
    est1 = np.conj(h1) * r1 + h2 * np.conj(r2)
    est2 = np.conj(h2) * r1 - h1 * np.conj(r2)
    est = np.empty(s.shape, dtype=complex)
    est[:, 0::2] = est1
    est[:, 1::2] = est2
    hard = (est.real < 0).astype(np.uint8)[:, :n]
    errors = _finish(info, hard, setup)
    energy = 2.0 * (np.abs(s) ** 2).sum(axis=-1)
    return TrialResult(errors, np.prod(w, axis=1), energy, hard)
