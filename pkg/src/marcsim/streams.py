"""Counter-based random streams addressed by (seed, frame index, tag).

Every random quantity of a frame is read from a Philox stream keyed by
``(seed, tag)`` at a counter offset proportional to the frame index.  Each
tag consumes a fixed number of 64-bit words per frame, so frame ``i`` sees
the same numbers whether it is generated alone or inside any batch, and no
matter how many frames were produced before it.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

__all__ = ["FrameStream", "TAG_CHANNEL", "TAG_BITS", "noise_tag"]

TAG_CHANNEL = 1
TAG_BITS = 2
TAG_CALIBRATION = 3
_TAG_NOISE = 1 << 16

_MASK64 = (1 << 64) - 1


def noise_tag(slot: int) -> int:
    """Tag of the AWGN stream for transmission slot ``slot``."""
    return _TAG_NOISE + int(slot)


def _padded(count: int) -> int:
    return -(-count // 4) * 4


class FrameStream:
    """Random source for the consecutive frames ``[first_frame, first_frame + n_frames)``.

    All draws have a leading axis of length ``n_frames``.
    """

    def __init__(self, seed: int, first_frame: int = 0, n_frames: int = 1):
        if n_frames < 1:
            raise ValueError("n_frames must be positive")
        if first_frame < 0:
            raise ValueError("first_frame must be non-negative")
        self.seed = int(seed) & _MASK64
        self.first_frame = int(first_frame)
        self.n_frames = int(n_frames)

    def __repr__(self) -> str:
        return (f"FrameStream(seed={self.seed}, first_frame={self.first_frame}, "
                f"n_frames={self.n_frames})")

    def frame(self, index: int) -> "FrameStream":
        """Stream for the single frame at absolute position ``index``."""
        return FrameStream(self.seed, index, 1)

    def _bitgen(self, tag: int, per_frame: int) -> tuple[Philox, int]:
        width = _padded(per_frame)
        counter = self.first_frame * (width // 4)
        return Philox(key=[self.seed, int(tag)], counter=counter), width

    def uniform(self, tag: int, per_frame: int) -> np.ndarray:
        """Uniform draws in ``(0, 1]`` with shape ``(n_frames, per_frame)``."""
        bitgen, width = self._bitgen(tag, per_frame)
        # Generator.random consumes exactly one 64-bit word per double.
        u = 1.0 - Generator(bitgen).random(self.n_frames * width)
        return u.reshape(self.n_frames, width)[:, :per_frame]

    def bits(self, tag: int, per_frame: int) -> np.ndarray:
        """Fair random bits (``uint8``) with shape ``(n_frames, per_frame)``."""
        words = -(-per_frame // 64)
        bitgen, width = self._bitgen(tag, words)
        raw = bitgen.random_raw(self.n_frames * width).reshape(self.n_frames, width)[:, :words]
        unpacked = np.unpackbits(np.ascontiguousarray(raw).view(np.uint8), axis=1)
        return unpacked[:, :per_frame]
