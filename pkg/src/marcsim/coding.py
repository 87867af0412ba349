"""Feedforward convolutional codes, hard-decision Viterbi decoding and CRC-16.

Generators are written in octal with the most significant digit on the
oldest register tap, so ``[5, 7, 7]`` is ``(101, 111, 111)``.  Codewords are
terminated with ``K - 1`` zeros and the decoder forces the trellis to start
and end in state 0.

All functions accept a leading batch of blocks: inputs of shape ``(..., n)``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .phy import ContractViolation

__all__ = [
    "ConvCode",
    "SearchBudgetExceeded",
    "conv_encode",
    "viterbi_decode_hard",
    "crc_append",
    "crc_check",
    "crc_remainder",
    "compute_distance_spectrum",
    "CRC_BITS",
]

CRC_POLY = 0x1021
CRC_BITS = 16


class SearchBudgetExceeded(RuntimeError):
    """The trellis search ran past its iteration budget."""


@dataclass(frozen=True)
class ConvCode:
    """Rate ``1/len(generators)`` feedforward convolutional code.

    ``generators`` holds the tap masks as plain integers (bit ``j`` is the
    tap on the input delayed by ``j``); use :meth:`from_octal` to build one
    from the usual octal notation.
    """

    generators: tuple[int, ...]
    constraint_length: int = field(default=0)

    def __post_init__(self):
        gens = tuple(int(g) for g in self.generators)
        if not gens or any(g <= 0 for g in gens):
            raise ValueError("generators must be nonzero")
        object.__setattr__(self, "generators", gens)
        if self.constraint_length == 0:
            object.__setattr__(self, "constraint_length", max(g.bit_length() for g in gens))
        if max(g.bit_length() for g in gens) > self.constraint_length:
            raise ValueError("generator longer than the constraint length")

    @classmethod
    def from_octal(cls, generators: Sequence[int | str]) -> "ConvCode":
        """Build from octal digits, e.g. ``[5, 7, 7]`` or ``["133", "171"]``."""
        return cls(tuple(int(str(g), 8) for g in generators))

    @property
    def octal(self) -> list[str]:
        return [format(g, "o") for g in self.generators]

    @property
    def n_out(self) -> int:
        return len(self.generators)

    @property
    def rate(self) -> Fraction:
        return Fraction(1, self.n_out)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    def encoded_length(self, n_info: int) -> int:
        return (n_info + self.memory) * self.n_out

    def info_length(self, n_coded: int) -> int:
        if n_coded % self.n_out or n_coded // self.n_out < self.memory:
            raise ContractViolation(f"{n_coded} coded bits do not form a terminated codeword")
        return n_coded // self.n_out - self.memory

    @cached_property
    def _trellis(self):
        # reg = (state << 1) | input, bit 0 holds the current input
        n_states, mem = self.n_states, self.memory
        regs = (np.arange(n_states)[:, None] << 1) | np.arange(2)[None, :]
        out = np.stack([_parity(regs & g) for g in self.generators], axis=-1).astype(np.uint8)
        next_state = regs & (n_states - 1)
        # predecessor of next state ns through branch b: (ns >> 1) | (b << (mem - 1))
        ns = np.arange(n_states)
        high = (1 << (mem - 1)) if mem > 0 else 0
        pred = np.stack([ns >> 1, (ns >> 1) | high], axis=1)
        inp = ns & 1
        pred_out = out[pred, inp[:, None]]          # (n_states, 2, n_out)
        return next_state, out, pred, pred_out

    @cached_property
    def spectrum(self) -> tuple[int, int]:
        return compute_distance_spectrum(self)

    @property
    def d_free(self) -> int:
        return self.spectrum[0]

    @property
    def b_dfree(self) -> int:
        return self.spectrum[1]


def _parity(v):
    v = np.asarray(v, dtype=np.int64)
    p = np.zeros_like(v)
    while np.any(v):
        p ^= v & 1
        v = v >> 1
    return p


def conv_encode(info, code: ConvCode) -> np.ndarray:
    """Encode ``info`` (shape ``(..., k)``) into ``(..., (k + K - 1) * n_out)`` bits."""
    info = np.asarray(info, dtype=np.uint8)
    mem = code.memory
    padded = np.concatenate([info, np.zeros(info.shape[:-1] + (mem,), np.uint8)], axis=-1)
    steps = padded.shape[-1]
    streams = []
    for g in code.generators:
        acc = np.zeros_like(padded)
        for j in range(code.constraint_length):
            if (g >> j) & 1:
                acc[..., j:] ^= padded[..., : steps - j]
        streams.append(acc)
    return np.stack(streams, axis=-1).reshape(info.shape[:-1] + (steps * code.n_out,))


def viterbi_decode_hard(received, code: ConvCode) -> np.ndarray:
    """Minimum-Hamming-distance decoding over the terminated trellis.

    Returns the information bits (tail removed), shape ``(..., k)``.  When
    two survivors tie, the one from the smaller predecessor state wins.
    """
    received = np.asarray(received, dtype=np.uint8)
    n_coded = received.shape[-1]
    k = code.info_length(n_coded)
    lead = received.shape[:-1]
    steps = k + code.memory
    r = received.reshape(-1, steps, code.n_out)
    n_blocks = r.shape[0]
    _, _, pred, pred_out = code._trellis
    n_states = code.n_states

    big = np.iinfo(np.int32).max // 4
    metric = np.full((n_blocks, n_states), big, dtype=np.int32)
    metric[:, 0] = 0
    choice = np.empty((steps, n_blocks, n_states), dtype=bool)
    for t in range(steps):
        # branch metric for every (next state, branch): (n_blocks, n_states, 2)
        bm = (r[:, t, None, None, :] ^ pred_out[None]).sum(axis=-1, dtype=np.int32)
        cand = metric[:, pred] + bm
        pick = cand[..., 1] < cand[..., 0]
        choice[t] = pick
        metric = np.where(pick, cand[..., 1], cand[..., 0])
        np.minimum(metric, big, out=metric)

    decoded = np.empty((n_blocks, steps), dtype=np.uint8)
    state = np.zeros(n_blocks, dtype=np.int64)
    rows = np.arange(n_blocks)
    for t in range(steps - 1, -1, -1):
        decoded[:, t] = state & 1
        state = pred[state, choice[t, rows, state].astype(np.int64)]
    return decoded[:, :k].reshape(lead + (k,))


def crc_remainder(bits) -> np.ndarray:
    """Remainder of ``M(x) x^16`` modulo the CCITT polynomial, as an integer array."""
    bits = np.asarray(bits, dtype=np.uint8)
    reg = np.zeros(bits.shape[:-1], dtype=np.uint32)
    for i in range(bits.shape[-1]):
        fb = ((reg >> 15) & 1) ^ bits[..., i]
        reg = (reg << 1) & 0xFFFF
        reg ^= np.where(fb.astype(bool), CRC_POLY, 0).astype(np.uint32)
    return reg


def crc_append(bits) -> np.ndarray:
    """Append the 16 CRC bits (most significant first)."""
    bits = np.asarray(bits, dtype=np.uint8)
    rem = crc_remainder(bits)
    shifts = np.arange(CRC_BITS - 1, -1, -1, dtype=np.uint32)
    tail = ((rem[..., None] >> shifts) & 1).astype(np.uint8)
    return np.concatenate([bits, tail], axis=-1)


def crc_check(bits):
    """True where the block (payload + CRC) has a zero remainder."""
    ok = crc_remainder(bits) == 0
    return bool(ok) if ok.ndim == 0 else ok


def compute_distance_spectrum(code: ConvCode, max_expansions: int = 2_000_000) -> tuple[int, int]:
    """Free distance and number of weight-``d_free`` error events.

    Error events leave state 0 with input 1 and return to state 0 for the
    first time.  ``d_free`` comes from a Dijkstra search over the state
    graph, the multiplicity from a path count restricted to weights up to
    ``d_free``.
    """
    if code.constraint_length > 10:
        raise ValueError("distance search supports constraint length <= 10")
    next_state, out, _, _ = code._trellis
    weight = out.sum(axis=-1)
    if code.memory == 0:
        return int(weight[0, 1]), 1

    start = int(next_state[0, 1])
    w0 = int(weight[0, 1])
    if start == 0:
        return w0, 1
    best = {start: w0}
    heap = [(w0, start)]
    d_free = None
    expansions = 0
    while heap:
        w, s = heapq.heappop(heap)
        if w > best.get(s, w):
            continue
        expansions += 1
        if expansions > max_expansions:
            raise SearchBudgetExceeded("free-distance search exceeded its budget")
        for x in (0, 1):
            ns = int(next_state[s, x])
            nw = w + int(weight[s, x])
            if ns == 0:
                d_free = nw if d_free is None else min(d_free, nw)
                continue
            if nw < best.get(ns, np.inf):
                best[ns] = nw
                heapq.heappush(heap, (nw, ns))
    if d_free is None:
        raise SearchBudgetExceeded("no path remerges with the zero state")

    # count events of weight exactly d_free: counts[state][w] for paths not yet remerged
    counts = {start: {w0: 1}} if w0 <= d_free else {}
    multiplicity = 0
    for _ in range(max_expansions):
        if not counts:
            break
        nxt: dict[int, dict[int, int]] = {}
        for s, by_w in counts.items():
            for x in (0, 1):
                ns = int(next_state[s, x])
                bw = int(weight[s, x])
                for w, c in by_w.items():
                    nw = w + bw
                    if nw > d_free:
                        continue
                    if ns == 0:
                        if nw == d_free:
                            multiplicity += c
                        continue
                    slot = nxt.setdefault(ns, {})
                    slot[nw] = slot.get(nw, 0) + c
        counts = nxt
    else:
        # zero-weight cycles outside state 0: catastrophic code
        raise SearchBudgetExceeded("path enumeration did not terminate (catastrophic code?)")
    return d_free, multiplicity
