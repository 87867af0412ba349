"""One TDMA frame of the relay-assisted multiple access scheme.

Slots ``0 .. U-1``: user ``u`` broadcasts its block, heard by the relay and
the destination.  Slot ``U``: the relay sends the sum of the re-encoded,
re-modulated blocks it decoded correctly (nothing if none).  The
destination learns which blocks were forwarded over an error-free side
channel.

Noise streams: destination copies of the user slots use slots
``0 .. U-1``, the relay's copies ``U .. 2U-1`` and the relay slot ``2U``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .channel import ChannelRealization, LinkPowers, add_awgn, draw_channel
from .coding import CRC_BITS, ConvCode, conv_encode, crc_append, crc_check, viterbi_decode_hard
from .detector import Detection, sic_detect
from .phy import ContractViolation, bpsk_modulate
from .streams import TAG_BITS, FrameStream

__all__ = [
    "FrameSetup",
    "State",
    "RelayState",
    "RelayDecision",
    "FrameSignals",
    "FrameBatch",
    "relay_process",
    "relay_transmit",
    "run_frame",
    "relay_trial",
    "detect_frame",
    "count_errors",
]


@dataclass(frozen=True)
class FrameSetup:
    """Everything needed to simulate frames at one operating point.

    ``p`` is the energy of each transmitted BPSK symbol and ``n0`` the
    noise power per complex sample, so ``p / n0`` is the per-symbol SNR.
    Uncoded frames carry ``k`` raw bits; coded frames ``k`` information
    bits plus a CRC-16, convolutionally encoded with a zero tail.
    """

    n_users: int = 2
    k: int = 50
    code: Optional[ConvCode] = None
    powers: LinkPowers = field(default_factory=LinkPowers)
    p: float = 1.0
    n0: float = 1.0
    ideal_urc: bool = True
    genie_sic: bool = False
    dest_bias: float = 1.0

    def __post_init__(self):
        if self.n_users < 1 or self.k < 1:
            raise ValueError("need at least one user and one bit")
        if not (self.p > 0 and self.n0 > 0):
            raise ValueError("p and n0 must be positive")

    @property
    def coded(self) -> bool:
        return self.code is not None

    @property
    def payload_len(self) -> int:
        return self.k + CRC_BITS if self.coded else self.k

    @property
    def block_len(self) -> int:
        return self.code.encoded_length(self.payload_len) if self.coded else self.k


class State(IntEnum):
    """Relay states: nothing decoded, only A, only B, both."""

    S0 = 0
    S1 = 1
    S2 = 2
    S3 = 3


@dataclass
class RelayState:
    """Relay state of a single two-user frame."""

    state: State
    decoded_a: Optional[np.ndarray] = None
    decoded_b: Optional[np.ndarray] = None


@dataclass
class RelayDecision:
    """Relay outcome for a frame batch.

    ``decoded[f, u]`` tells whether the relay accepted user ``u``'s block;
    ``payload[f, u]`` holds the accepted block (zeros otherwise).
    """

    decoded: np.ndarray
    payload: np.ndarray

    @property
    def state(self) -> np.ndarray:
        """State index ``sum_u decoded_u 2^u`` (S0..S3 for two users)."""
        weights = 1 << np.arange(self.decoded.shape[-1])
        return (self.decoded * weights).sum(axis=-1)

    def frame(self, index: int) -> RelayState:
        if self.decoded.shape[-1] != 2:
            raise ContractViolation("RelayState is defined for two users")
        dec = self.decoded[index]
        return RelayState(
            State(int(dec[0]) + 2 * int(dec[1])),
            self.payload[index, 0].copy() if dec[0] else None,
            self.payload[index, 1].copy() if dec[1] else None,
        )


@dataclass
class FrameSignals:
    """Destination observations: ``y_ud`` (F, U, N) and ``y_rd`` (F, N).

    ``y_rd`` holds pure noise in frames where the relay stayed silent.
    """

    y_ud: np.ndarray
    y_rd: np.ndarray

    @property
    def y_ad(self):
        return self.y_ud[:, 0]

    @property
    def y_bd(self):
        return self.y_ud[:, 1]


@dataclass
class FrameBatch:
    setup: FrameSetup
    channel: ChannelRealization
    info: np.ndarray            # (F, U, k)
    payload: np.ndarray         # (F, U, payload_len)
    symbols: np.ndarray         # (F, U, N) user transmissions
    relay: RelayDecision
    relay_components: np.ndarray  # (F, U, N) per-user part of the relay signal
    signals: FrameSignals

    @property
    def relay_signal(self) -> np.ndarray:
        return self.relay_components.sum(axis=1)

    def energy(self) -> np.ndarray:
        """Total transmitted energy of each frame (users plus relay)."""
        users = (self.symbols ** 2).sum(axis=(1, 2))
        return users + (np.abs(self.relay_signal) ** 2).sum(axis=-1)


def relay_process(y_ur, h_ur, setup: FrameSetup, truth=None) -> RelayDecision:
    """Decode each user's block at the relay and decide what to forward.

    Coded blocks are matched-filtered, Viterbi-decoded and accepted when
    the CRC checks.  Uncoded blocks have no CRC; they are accepted when
    they equal ``truth`` (a perfect error detector), which is required.
    """
    y_ur = np.asarray(y_ur)
    h_ur = np.asarray(h_ur)
    hard = ((np.conj(h_ur)[..., None] * y_ur).real < 0).astype(np.uint8)
    if setup.coded:
        payload = viterbi_decode_hard(hard, setup.code)
        decoded = crc_check(payload)
    else:
        if truth is None:
            raise ContractViolation("uncoded relay decisions need the true blocks for error detection")
        payload = hard
        decoded = (hard == np.asarray(truth)).all(axis=-1)
    payload = np.where(decoded[..., None], payload, 0).astype(np.uint8)
    return RelayDecision(np.asarray(decoded, dtype=bool), payload)


def relay_transmit(decision: RelayDecision, setup: FrameSetup) -> np.ndarray:
    """Per-user components of the relay signal, shape (F, U, N).

    Each accepted block is re-encoded and modulated at energy ``p``; the
    transmitted signal is their sum (``relay_components.sum(axis=1)``).
    """
    blocks = conv_encode(decision.payload, setup.code) if setup.coded else decision.payload
    return bpsk_modulate(blocks, setup.p) * decision.decoded[..., None]


def run_frame(setup: FrameSetup, stream: FrameStream) -> FrameBatch:
    """Simulate the transmissions of every frame covered by ``stream``."""
    n_users, k = setup.n_users, setup.k
    channel = draw_channel(stream, setup.powers, n_users, setup.dest_bias)
    info = stream.bits(TAG_BITS, n_users * k).reshape(stream.n_frames, n_users, k)
    payload = crc_append(info) if setup.coded else info
    blocks = conv_encode(payload, setup.code) if setup.coded else payload
    x = bpsk_modulate(blocks, setup.p)

    y_ud = np.empty(x.shape, dtype=complex)
    y_ur = np.empty(x.shape, dtype=complex)
    for u in range(n_users):
        y_ud[:, u] = add_awgn(stream, channel.h_ud[:, u, None] * x[:, u], setup.n0, slot=u)
        y_ur[:, u] = add_awgn(stream, channel.h_ur[:, u, None] * x[:, u], setup.n0, slot=n_users + u)

    if setup.ideal_urc:
        relay = RelayDecision(np.ones((stream.n_frames, n_users), dtype=bool), payload.copy())
    else:
        relay = relay_process(y_ur, channel.h_ur, setup, truth=payload)
    components = relay_transmit(relay, setup)
    y_rd = add_awgn(stream, channel.h_rd[:, None] * components.sum(axis=1), setup.n0, slot=2 * n_users)
    return FrameBatch(setup, channel, info, payload, x, relay, components, FrameSignals(y_ud, y_rd))


def relay_trial(setup: FrameSetup, stream: FrameStream) -> RelayDecision:
    """Relay decisions only, skipping everything the destination sees.

    Uses the same random numbers as :func:`run_frame`, so for the same
    stream the decisions agree with ``run_frame(...).relay``.
    """
    n_users, k = setup.n_users, setup.k
    channel = draw_channel(stream, setup.powers, n_users, setup.dest_bias)
    info = stream.bits(TAG_BITS, n_users * k).reshape(stream.n_frames, n_users, k)
    payload = crc_append(info) if setup.coded else info
    blocks = conv_encode(payload, setup.code) if setup.coded else payload
    x = bpsk_modulate(blocks, setup.p)
    y_ur = np.empty(x.shape, dtype=complex)
    for u in range(n_users):
        y_ur[:, u] = add_awgn(stream, channel.h_ur[:, u, None] * x[:, u], setup.n0, slot=n_users + u)
    return relay_process(y_ur, channel.h_ur, setup, truth=payload)


def detect_frame(batch: FrameBatch) -> Detection:
    """Run the destination receiver on a simulated batch."""
    s = batch.setup
    return sic_detect(
        batch.signals.y_ud, batch.signals.y_rd, batch.relay.decoded,
        batch.channel.h_ud, batch.channel.h_rd, s.n0, s.p, code=s.code,
        genie_symbols=batch.relay_components if s.genie_sic else None,
    )


def count_errors(batch: FrameBatch, detection: Detection) -> np.ndarray:
    """Information-bit errors per frame and user, shape (F, U)."""
    k = batch.setup.k
    return (detection.payload[..., :k] != batch.info).sum(axis=-1)
