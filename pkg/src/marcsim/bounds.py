"""Upper bounds on the per-user bit error probability of the two-user scheme.

The bounds apply ``Q(x) <= exp(-x^2 / 2) / 2`` to the conditional error
probability of every relay state and average over the fading with Laplace
transforms ``E[exp(-s X)]`` of the post-detection SNR variables:

* a single Rayleigh branch ``|h|^2 ~ Exp(rate)``,
* two-branch MRC ``|h_1|^2 + |h_2|^2`` (product of two such transforms),
* the projected branch ``Z = uv / (u + v)`` of the nulling receiver.

All rates here are exponential *rates*; a link of mean power ``omega`` has
rate ``1 / omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import integrate, special

from .special import DomainError, bessel_k, gauss_2f1, q_function

__all__ = [
    "StateProbs",
    "CodeConstants",
    "BoundInputs",
    "state_probs",
    "lemma1_pdf",
    "lemma1_cdf",
    "laplace_exp",
    "laplace_z",
    "laplace_z_quadrature",
    "theorem1_bound",
    "theorem2_bound",
    "exact_q_state_bep",
    "diversity_slope",
]

_GAMMA_2_5 = 0.75 * math.sqrt(math.pi)


@dataclass(frozen=True)
class StateProbs:
    """Probabilities of the four relay states (none, A only, B only, both)."""

    p0: float
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        vals = (self.p0, self.p1, self.p2, self.p3)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise DomainError(f"state probabilities out of [0, 1]: {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise DomainError(f"state probabilities do not sum to 1: {vals}")

    @classmethod
    def ideal(cls) -> "StateProbs":
        return cls(0.0, 0.0, 0.0, 1.0)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p0, self.p1, self.p2, self.p3)


@dataclass(frozen=True)
class CodeConstants:
    """Code parameters entering the coded bound."""

    rate: float
    d_free: int
    b_dfree: int
    k: int

    @property
    def alpha(self) -> float:
        return 2.0 ** (self.d_free / 2.0) * self.b_dfree / self.k

    @property
    def snr_scale(self) -> float:
        return self.rate * self.d_free / 2.0

    @classmethod
    def from_code(cls, code, k: int) -> "CodeConstants":
        return cls(float(code.rate), code.d_free, code.b_dfree, k)


@dataclass(frozen=True)
class BoundInputs:
    snr0: float
    omega_rate: float = 1.0
    probs: StateProbs = StateProbs.ideal()
    coded: Optional[CodeConstants] = None

    def __post_init__(self):
        if not (self.snr0 > 0 and self.omega_rate > 0):
            raise DomainError("snr0 and omega_rate must be positive")


def state_probs(p_ar: float, p_br: float) -> StateProbs:
    """Relay-state probabilities from the per-user relay decoding failure rates."""
    for v in (p_ar, p_br):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"failure probability out of [0, 1]: {v}")
    return StateProbs(
        p0=p_ar * p_br,
        p1=(1.0 - p_ar) * p_br,
        p2=p_ar * (1.0 - p_br),
        p3=(1.0 - p_ar) * (1.0 - p_br),
    )


def lemma1_pdf(z, lam: float):
    """Density of ``uv / (u + v)`` for independent ``u, v ~ Exp(rate lam)``."""
    z = np.asarray(z, dtype=float)
    x = 2.0 * lam * z
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = 2.0 * lam * xp * np.exp(-xp) * (bessel_k(0, xp) + bessel_k(1, xp))
    return float(out) if out.ndim == 0 else out


def lemma1_cdf(z, lam: float):
    """Distribution function of ``uv / (u + v)``; ``1 - x e^-x K_1(x)`` with ``x = 2 lam z``."""
    z = np.asarray(z, dtype=float)
    x = 2.0 * lam * z
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    tail = np.zeros_like(xp)
    live = xp < 700.0
    tail[live] = xp[live] * np.exp(-xp[live]) * bessel_k(1, xp[live])
    out[pos] = 1.0 - tail
    return float(out) if out.ndim == 0 else out


def laplace_exp(s: float, lam: float) -> float:
    """``E[exp(-s X)]`` for ``X ~ Exp(rate lam)``."""
    if s < 0:
        raise DomainError("transform argument must be non-negative")
    return lam / (lam + s)


def laplace_z(s: float, lam: float) -> float:
    """``E[exp(-s Z)]`` for ``Z = uv / (u + v)``, closed form.

    Integrating the density term by term against ``exp(-s z)`` gives::

        sqrt(pi) / Gamma(5/2) * [ 4 lam^2 / (4 lam + s)^2 * F(2, 1/2; 5/2; w)
                                 + 32 lam^3 / (4 lam + s)^3 * F(3, 3/2; 5/2; w) ]

    with ``w = s / (4 lam + s)``.
    """
    if s < 0:
        raise DomainError("transform argument must be non-negative")
    denom = 4.0 * lam + s
    w = s / denom
    pref = math.sqrt(math.pi) / _GAMMA_2_5
    order0 = 4.0 * lam ** 2 / denom ** 2 * gauss_2f1(2.0, 0.5, 2.5, w)
    order1 = 32.0 * lam ** 3 / denom ** 3 * gauss_2f1(3.0, 1.5, 2.5, w)
    return pref * (order0 + order1)


def laplace_z_quadrature(s: float, lam: float) -> float:
    """Reference value of :func:`laplace_z` by numerical integration of the density.

    The integrand is built from scipy's exponentially scaled Bessel
    functions, so the check is independent of :func:`bessel_k`.
    """
    def f(z):
        x = 2.0 * lam * z
        return 2.0 * lam * x * math.exp(-s * z - 2.0 * x) * (special.k0e(x) + special.k1e(x))

    # The density is concentrated on a scale of 1/lam; the exponential on 1/s.
    scale = 1.0 / (lam + s)
    pieces = [0.0, scale, 10 * scale, 100 * scale, np.inf]
    return sum(integrate.quad(f, a, b, limit=200, epsabs=0.0, epsrel=1e-11)[0]
               for a, b in zip(pieces[:-1], pieces[1:]))


def _uncoded(snr: float, lam: float, probs: StateProbs) -> float:
    phi_h = laplace_exp(snr, lam)
    phi_z = laplace_z(snr, lam)
    p0, p1, p2, p3 = probs.as_tuple()
    direct_and_mrc = 0.5 * ((p0 + p2) * phi_h + p1 * phi_h ** 2)
    nulling = 0.25 * p3 * (phi_h * phi_z + phi_h ** 2)
    return direct_and_mrc + nulling


def theorem1_bound(inputs: BoundInputs) -> float:
    """Uncoded bit error probability bound (error-free relay cooperation)."""
    return _uncoded(inputs.snr0, inputs.omega_rate, inputs.probs)


def theorem2_bound(inputs: BoundInputs) -> float:
    """Hard-decision Viterbi bit error rate bound.

    ``alpha_c`` times the uncoded bound evaluated at
    ``snr0 * rate * d_free / 2``.
    """
    if inputs.coded is None:
        raise DomainError("coded bound needs code constants")
    c = inputs.coded
    return c.alpha * _uncoded(inputs.snr0 * c.snr_scale, inputs.omega_rate, inputs.probs)


def exact_q_state_bep(snr0: float, lam: float, state: int) -> float:
    """Per-user BEP of one relay state with the exact Q function (diagnostics).

    States 0/2 are the direct link, state 1 two-branch MRC, state 3 the
    equal mix of the nulling branch and two-branch MRC used by the bound.
    Craig's form ``Q(sqrt(2x)) = (1/pi) int_0^{pi/2} exp(-x / sin^2 t) dt``
    turns each average into one integral over the transforms.
    """
    if state not in (0, 1, 2, 3):
        raise DomainError(f"unknown relay state {state!r}")

    def craig(transform):
        def f(t):
            st = math.sin(t)
            return transform(snr0 / (st * st)) if st > 0 else 0.0
        return integrate.quad(f, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-10, limit=200)[0] / math.pi

    if state in (0, 2):
        return craig(lambda s: laplace_exp(s, lam))
    mrc = craig(lambda s: laplace_exp(s, lam) ** 2)
    if state == 1:
        return mrc
    null = craig(lambda s: laplace_exp(s, lam) * laplace_z(s, lam))
    return 0.5 * (mrc + null)


def diversity_slope(points: Iterable[tuple[float, float]]) -> float:
    """Least-squares slope of ``log10(ber)`` against ``snr_db / 10``.

    The diversity order estimate is the negated slope.
    """
    pts = list(points)
    if len(pts) < 3:
        raise DomainError("need at least three points")
    snr_db = np.array([p[0] for p in pts], dtype=float)
    ber = np.array([p[1] for p in pts], dtype=float)
    if np.any(~(ber > 0)):
        raise DomainError("BER values must be positive")
    slope, _ = np.polyfit(snr_db / 10.0, np.log10(ber), 1)
    return float(slope)
