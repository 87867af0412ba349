"""Destination-side detection: nulling, maximum-ratio combining and SIC.

The destination stacks its direct observations ``y_uD`` and the relay
observation ``y_RD``.  User ``u`` has signature ``h_uD e_u + h_RD e_R``.
To detect ``u`` while other users ``v`` are still present, the stack is
projected onto the null space of the interferers' signatures: ``e_u`` is
already orthogonal to them, and within ``span{e_v, e_R}`` the remaining
null direction is ``w = e_R - sum_v conj(h_RD / h_vD) e_v``.  MRC of the two
projected branches gives SNR

    (|h_uD|^2 + 1 / (sum_v 1/|h_vD|^2 + 1/|h_RD|^2)) P / N0,

the quantity used to pick the detection order.  After a user is decided
its relay contribution ``h_RD x_u`` is subtracted from ``y_RD``.

All functions carry a leading frame axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coding import ConvCode, conv_encode, viterbi_decode_hard
from .phy import CombinedStatistic, ContractViolation, bpsk_modulate, mrc_combine

__all__ = [
    "DegenerateChannelError",
    "NullingBasis",
    "DetectionOrder",
    "Detection",
    "build_nulling_basis",
    "project_and_mrc",
    "order_users",
    "sic_detect",
]

_TINY = 1e-300


class DegenerateChannelError(ValueError):
    """The interferer direction vanishes, so there is nothing to null."""


@dataclass
class NullingBasis:
    """Orthonormal pair spanning the null space of an interferer direction.

    Projections are taken with the conjugate transpose, ``u^H y``.
    """

    u1: np.ndarray
    u2: np.ndarray

    def project(self, stacked: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project a stack of shape ``(..., 3, n)`` onto ``u1`` and ``u2``."""
        return (np.einsum("...i,...in->...n", np.conj(self.u1), stacked),
                np.einsum("...i,...in->...n", np.conj(self.u2), stacked))


def build_nulling_basis(interferer_direction) -> NullingBasis:
    """Null-space basis for an interferer with signature ``(0, g_1, g_2)``.

    Returns ``u1 = (0, -conj(g_2), conj(g_1)) / ||g||`` and ``u2 = (1, 0, 0)``.
    """
    d = np.asarray(interferer_direction, dtype=complex)
    if d.shape[-1] != 3:
        raise ContractViolation("interferer direction must be a 3-vector")
    if np.any(d[..., 0] != 0):
        raise ContractViolation("interferer must not reach the first observation")
    norm = np.sqrt(np.abs(d[..., 1]) ** 2 + np.abs(d[..., 2]) ** 2)
    if np.any(norm <= _TINY):
        raise DegenerateChannelError("interferer direction is zero")
    u1 = np.stack([np.zeros_like(d[..., 0]), -np.conj(d[..., 2]), np.conj(d[..., 1])], axis=-1)
    u1 = u1 / norm[..., None]
    u2 = np.zeros_like(d)
    u2[..., 0] = 1.0
    return NullingBasis(u1, u2)


def project_and_mrc(y_ad, y_bd, y_rd, h_ad, h_bd, h_rd, n0: float, p: float = 1.0,
                    user: int = 0) -> CombinedStatistic:
    """Two-user nulling detector for user A (``user=0``) or B (``user=1``).

    The stack ``(y_own, y_other, y_rd)`` is projected on the null space of
    the other user's signature and both projected branches are MRC
    combined.  Frames whose interferer direction vanishes fall back to the
    direct branch alone.
    """
    if user == 0:
        y_own, y_oth, h_own, h_oth = y_ad, y_bd, h_ad, h_bd
    elif user == 1:
        y_own, y_oth, h_own, h_oth = y_bd, y_ad, h_bd, h_ad
    else:
        raise ContractViolation("user must be 0 or 1")
    h_own, h_oth, h_rd = (np.asarray(v, dtype=complex) for v in (h_own, h_oth, h_rd))
    y_own = np.asarray(y_own)
    stacked = np.stack(np.broadcast_arrays(y_own, y_oth, y_rd), axis=-2)

    deg = np.abs(h_oth) ** 2 + np.abs(h_rd) ** 2 <= _TINY
    safe_oth = np.where(deg, 1.0, h_oth)
    direction = np.stack(np.broadcast_arrays(np.zeros_like(safe_oth), safe_oth, h_rd), axis=-1)
    basis = build_nulling_basis(direction)
    branch1, branch2 = basis.project(stacked)
    signature = np.stack(np.broadcast_arrays(h_own, np.zeros_like(h_own), h_rd), axis=-1)
    g1 = np.einsum("...i,...i->...", np.conj(basis.u1), signature)
    g1 = np.where(deg, 0.0, g1)
    g2 = np.einsum("...i,...i->...", np.conj(basis.u2), signature)
    return mrc_combine([(branch1, g1), (branch2, g2)], n0, p)


def _stage_metric(gain_pow: np.ndarray, relay_pow: np.ndarray, remaining: np.ndarray) -> np.ndarray:
    # |h_u|^2 + 1 / (sum_{v in remaining, v != u} 1/|h_v|^2 + 1/|h_R|^2), -inf outside `remaining`
    with np.errstate(divide="ignore"):
        inv = np.where(remaining, 1.0 / gain_pow, 0.0)
        others = inv.sum(axis=-1, keepdims=True) - inv
        metric = gain_pow + 1.0 / (others + 1.0 / relay_pow[..., None])
    return np.where(remaining, metric, -np.inf)


@dataclass
class DetectionOrder:
    """Detection order assuming error-free cancellation.

    ``order[f, i]`` is the user detected at stage ``i`` and
    ``stage_snr[f, i]`` its post-detection SNR.
    """

    order: np.ndarray
    stage_snr: np.ndarray

    @property
    def first_user(self):
        return self.order[..., 0]

    @property
    def second_user(self):
        return self.order[..., 1]

    @property
    def first_snr(self):
        return self.stage_snr[..., 0]

    @property
    def second_snr(self):
        return self.stage_snr[..., 1]


def order_users(h_ud, h_rd, snr0: float = 1.0) -> DetectionOrder:
    """Greedy max-SNR detection order over all users.

    Ties go to the smaller user index.
    """
    h_ud = np.atleast_2d(np.asarray(h_ud, dtype=complex))
    h_rd = np.atleast_1d(np.asarray(h_rd, dtype=complex))
    n_frames, n_users = h_ud.shape
    if n_users < 2:
        raise ContractViolation("ordering needs at least two users")
    gain_pow = np.abs(h_ud) ** 2
    relay_pow = np.abs(h_rd) ** 2
    remaining = np.ones_like(gain_pow, dtype=bool)
    rows = np.arange(n_frames)
    order = np.empty((n_frames, n_users), dtype=np.int64)
    snr = np.empty((n_frames, n_users))
    for i in range(n_users):
        metric = _stage_metric(gain_pow, relay_pow, remaining)
        u = np.argmax(metric, axis=-1)
        order[:, i] = u
        snr[:, i] = metric[rows, u] * snr0
        remaining[rows, u] = False
    return DetectionOrder(order, snr)


@dataclass
class Detection:
    """Output of :func:`sic_detect`.

    ``values``/``post_snr`` are the decision statistics per user, ``bits``
    the hard channel-bit decisions and ``payload`` the decoded block
    (equal to ``bits`` when uncoded).  ``stage[f, u]`` is the SIC stage at
    which the user was detected, ``-1`` for direct-only detection.
    """

    values: np.ndarray
    post_snr: np.ndarray
    bits: np.ndarray
    payload: np.ndarray
    stage: np.ndarray


def sic_detect(y_ud, y_rd, relay_mask, h_ud, h_rd, n0: float, p: float = 1.0,
               code: Optional[ConvCode] = None, genie_symbols=None) -> Detection:
    """Detect every user of a frame batch.

    Parameters
    ----------
    y_ud : ndarray, shape (F, U, N)
        Direct observations at the destination.
    y_rd : ndarray, shape (F, N)
        Relay observation (ignored for users the relay did not forward).
    relay_mask : ndarray of bool, shape (F, U)
        Users whose blocks the relay forwarded (the relay state).
    h_ud, h_rd : ndarray
        Channel gains, shapes (F, U) and (F,).
    n0, p : float
        Noise power and symbol energy.
    code : ConvCode, optional
        When given, cancellation uses the Viterbi-decoded and re-encoded
        block; otherwise raw hard decisions.
    genie_symbols : ndarray, shape (F, U, N), optional
        Symbols the relay actually sent per user; when given they are
        cancelled instead of the receiver's own decisions.

    Notes
    -----
    Users outside ``relay_mask`` are detected from their direct link.  The
    others go through successive nulling/cancellation in max-SNR order; the
    last one sees no interferer and reduces to two-branch MRC.
    """
    y_ud = np.asarray(y_ud)
    y_r = np.array(y_rd, dtype=complex, copy=True)
    n_frames, n_users, n_sym = y_ud.shape
    relay_mask = np.asarray(relay_mask, dtype=bool)
    h_ud = np.asarray(h_ud, dtype=complex)
    h_rd = np.asarray(h_rd, dtype=complex)
    if relay_mask.shape != (n_frames, n_users) or h_ud.shape != (n_frames, n_users):
        raise ContractViolation("inconsistent frame/user dimensions")
    gain_pow = np.abs(h_ud) ** 2
    relay_pow = np.abs(h_rd) ** 2

    values = (np.conj(h_ud)[..., None] * y_ud).real
    post_snr = gain_pow * p / n0
    stage = np.full((n_frames, n_users), -1, dtype=np.int64)
    payload_len = code.info_length(n_sym) if code is not None else n_sym
    payload = np.zeros((n_frames, n_users, payload_len), dtype=np.uint8)
    decided = np.zeros((n_frames, n_users), dtype=bool)

    remaining = relay_mask.copy()
    for i in range(n_users):
        active = np.flatnonzero(remaining.any(axis=1))
        if active.size == 0:
            break
        rem = remaining[active]
        g_pow = gain_pow[active]
        metric = _stage_metric(g_pow, relay_pow[active], rem)
        u = np.argmax(metric, axis=-1)
        rows = np.arange(active.size)

        interferers = rem.copy()
        interferers[rows, u] = False
        h_act = h_ud[active]
        hr = h_rd[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(interferers, hr[:, None] / h_act, 0.0)
            norm = np.sqrt(1.0 + (np.abs(ratio) ** 2).sum(axis=-1))
        degenerate = ~np.isfinite(norm)
        ratio[degenerate] = 0.0
        norm[degenerate] = 1.0
        relay_branch = (y_r[active] - np.einsum("fu,fun->fn", ratio, y_ud[active])) / norm[:, None]
        relay_gain = np.where(degenerate, 0.0, hr / norm)

        stat = mrc_combine([(y_ud[active, u], h_act[rows, u]), (relay_branch, relay_gain)], n0, p)
        values[active, u] = stat.decision_values
        post_snr[active, u] = stat.post_snr
        stage[active, u] = i

        hard = (stat.decision_values < 0).astype(np.uint8)
        if code is not None:
            dec = viterbi_decode_hard(hard, code)
            payload[active, u] = dec
            decided[active, u] = True
        if genie_symbols is not None:
            x_hat = np.asarray(genie_symbols)[active, u]
        elif code is not None:
            x_hat = bpsk_modulate(conv_encode(dec, code), p)
        else:
            x_hat = bpsk_modulate(hard, p)
        y_r[active] -= hr[:, None] * x_hat
        remaining[active, u] = False

    bits = (values < 0).astype(np.uint8)
    if code is None:
        payload = bits
    else:
        todo = ~decided
        if todo.any():
            payload[todo] = viterbi_decode_hard(bits[todo], code)
    return Detection(values, post_snr, bits, payload, stage)
