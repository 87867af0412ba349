"""Rayleigh block-fading gains and complex AWGN.

Gains are circularly-symmetric complex Gaussian with ``E|h|^2`` equal to the
link's mean power, drawn by inverse transform (exponential power, uniform
phase) so that each frame consumes a fixed number of uniforms.

Optionally the destination links are drawn from a defensive mixture
``(1 - q) f + q f_beta`` where ``f_beta`` has its mean scaled by ``beta``.
The returned likelihood ratio ``weight`` keeps error-rate estimates
unbiased while deep fades (the events that dominate the error rate at high
SNR) are sampled far more often.  The mixture keeps every weight below
``(1 - q)^-L``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .streams import TAG_CHANNEL, FrameStream, noise_tag

__all__ = [
    "LinkPowers",
    "ChannelRealization",
    "draw_channel",
    "draw_gains",
    "add_awgn",
    "complex_noise",
]

MIXTURE_FRACTION = 0.5


@dataclass(frozen=True)
class LinkPowers:
    """Mean of ``|h|^2`` on user->relay and on user/relay->destination links."""

    omega_to_r: float = 1.0
    omega_to_d: float = 1.0

    def __post_init__(self):
        if not (self.omega_to_r > 0 and self.omega_to_d > 0):
            raise ValueError("link powers must be positive")

    @classmethod
    def from_urc_offset(cls, offset_db: float, omega_to_d: float = 1.0) -> "LinkPowers":
        """User->relay links ``offset_db`` better than the destination links."""
        return cls(omega_to_d * 10.0 ** (offset_db / 10.0), omega_to_d)


@dataclass
class ChannelRealization:
    """Block-fading gains of a batch of frames.

    ``h_ud[f, u]`` is user ``u`` -> destination, ``h_ur[f, u]`` user ``u`` ->
    relay and ``h_rd[f]`` relay -> destination.  ``weight[f]`` is the
    importance-sampling likelihood ratio of the frame (1 without biasing).
    """

    h_ud: np.ndarray
    h_ur: np.ndarray
    h_rd: np.ndarray
    weight: np.ndarray

    @property
    def n_users(self) -> int:
        return self.h_ud.shape[-1]

    @property
    def h_ad(self):
        return self.h_ud[..., 0]

    @property
    def h_bd(self):
        return self.h_ud[..., 1]

    @property
    def h_ar(self):
        return self.h_ur[..., 0]

    @property
    def h_br(self):
        return self.h_ur[..., 1]


def _gains(u_sel, u_mag, u_phase, mean, bias):
    scale = np.where(u_sel < MIXTURE_FRACTION, bias, 1.0) if bias < 1.0 else 1.0
    power = -mean * scale * np.log(u_mag)
    h = np.sqrt(power) * np.exp(2j * np.pi * u_phase)
    if bias < 1.0:
        x = power / mean
        q = MIXTURE_FRACTION
        weight = 1.0 / ((1.0 - q) + (q / bias) * np.exp(-x * (1.0 / bias - 1.0)))
    else:
        weight = np.ones_like(power)
    return h, weight


def draw_gains(stream: FrameStream, mean, n_links: int, bias: float = 1.0,
               tag: int = TAG_CHANNEL) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n_links`` independent Rayleigh gains per frame.

    Returns the gains, shape ``(n_frames, n_links)``, and the per-link
    likelihood ratios of the same shape.
    """
    u = stream.uniform(tag, 3 * n_links).reshape(stream.n_frames, n_links, 3)
    return _gains(u[..., 0], u[..., 1], u[..., 2], np.asarray(mean, dtype=float), bias)


def draw_channel(stream: FrameStream, powers: LinkPowers, n_users: int = 2,
                 dest_bias: float = 1.0) -> ChannelRealization:
    """Draw the ``2 * n_users + 1`` gains of a MARC frame batch.

    Parameters
    ----------
    stream : FrameStream
        Frames to draw for.
    powers : LinkPowers
        Mean link powers.
    n_users : int
        Number of users sharing the relay.
    dest_bias : float
        Mean-power scaling of the biased mixture component on the
        destination links; ``1`` disables importance sampling.
    """
    if not 0.0 < dest_bias <= 1.0:
        raise ValueError("dest_bias must be in (0, 1]")
    n_links = 2 * n_users + 1
    u = stream.uniform(TAG_CHANNEL, 3 * n_links).reshape(stream.n_frames, n_links, 3)
    dest = np.r_[0:n_users, 2 * n_users]
    relay = np.arange(n_users, 2 * n_users)
    h_d, w_d = _gains(u[:, dest, 0], u[:, dest, 1], u[:, dest, 2], powers.omega_to_d, dest_bias)
    h_r, _ = _gains(u[:, relay, 0], u[:, relay, 1], u[:, relay, 2], powers.omega_to_r, 1.0)
    return ChannelRealization(
        h_ud=h_d[:, :n_users],
        h_ur=h_r,
        h_rd=h_d[:, n_users],
        weight=np.prod(w_d, axis=1),
    )


def complex_noise(stream: FrameStream, slot: int, shape: tuple[int, ...], n0: float) -> np.ndarray:
    """Circular complex Gaussian noise with ``E|n|^2 = n0``.

    ``shape`` excludes the leading frame axis.
    """
    count = int(np.prod(shape))
    u = stream.uniform(noise_tag(slot), 2 * count)
    radius = np.sqrt(-n0 * np.log(u[:, :count]))
    noise = radius * np.exp(2j * np.pi * u[:, count:])
    return noise.reshape((stream.n_frames,) + tuple(shape))


def add_awgn(stream: FrameStream, signal, n0: float, slot: int = 0) -> np.ndarray:
    """Return ``signal + noise`` for a batch of frames.

    ``signal`` has a leading frame axis matching ``stream``; noise of each
    ``slot`` comes from its own stream so separate slots never share draws.
    """
    signal = np.asarray(signal)
    if signal.shape[0] != stream.n_frames:
        raise ValueError("signal's leading axis must match the stream's frame count")
    return signal + complex_noise(stream, slot, signal.shape[1:], n0)
