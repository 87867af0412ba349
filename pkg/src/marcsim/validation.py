"""Acceptance checks of the simulator and the analytic bounds.

Each ``criterion_*`` function runs one check and returns a
:class:`CriterionResult`.  ``Budget`` sets the Monte Carlo sample sizes:
``FULL`` is the size the tolerances are stated for, ``QUICK`` a smoke-test
size for interactive use.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .bounds import diversity_slope, laplace_z, laplace_z_quadrature, lemma1_cdf
from .coding import ConvCode, compute_distance_spectrum, conv_encode, viterbi_decode_hard
from .sweep import SweepConfig, points_csv, relay_calibration, run_bound, run_sweep

__all__ = ["Budget", "QUICK", "FULL", "CriterionResult", "CRITERIA", "run_all", "format_table"]


@dataclass(frozen=True)
class Budget:
    cdf_draws: int
    uncoded_frames: int
    coded_frames: int
    urc_frames: int
    calibration_frames: int
    three_user_frames: int
    state_frames: int
    determinism_frames: int


FULL = Budget(
    cdf_draws=10_000_000, uncoded_frames=40_000, coded_frames=20_000, urc_frames=40_000,
    calibration_frames=100_000, three_user_frames=20_000, state_frames=200_000, determinism_frames=4_000,
)
QUICK = Budget(
    cdf_draws=1_000_000, uncoded_frames=4_000, coded_frames=2_000, urc_frames=4_000,
    calibration_frames=10_000, three_user_frames=2_000, state_frames=20_000, determinism_frames=1_000,
)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    limit_seconds: float = math.inf

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number}. {self.title}: {self.detail} ({self.seconds:.1f}s / {self.limit_seconds:.0f}s)"


def _timed(number: int, title: str, limit: float):
    def wrap(fn: Callable[..., tuple[bool, str]]):
        def run(budget: Budget = FULL) -> CriterionResult:
            t0 = time.perf_counter()
            ok, detail = fn(budget)
            dt = time.perf_counter() - t0
            if dt > limit:
                ok, detail = False, detail + f"; exceeded runtime limit"
            return CriterionResult(number, title, bool(ok), detail, dt, limit)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _uncoded_grid():
    return tuple(float(x) for x in range(0, 41, 2))


def _coded_grid():
    return tuple(x / 2 for x in range(0, 51, 5))


def _fixed_frames(frames: int, **kw) -> SweepConfig:
    # every point runs exactly `frames` frames
    kw.setdefault("batch_frames", min(2000, frames))
    return SweepConfig(max_frames=frames, target_bit_errors=2 ** 62, fading_is=True, **kw)


def _reliable(points, max_rel: float = 0.1):
    return [p for p in points if p.ber > 0 and p.relative_error <= max_rel]


def _top_slope(points, n: int = 3) -> float:
    good = sorted(_reliable(points), key=lambda p: p.snr_db)[-n:]
    if len(good) < n:
        return math.nan
    return diversity_slope((p.snr_db, p.ber) for p in good)


@_timed(1, "Harmonic-type CDF vs Monte Carlo", 60)
def criterion_cdf(budget: Budget):
    """Empirical CDF of ``uv/(u+v)`` against the closed form, 3 sigma binomial."""
    rng = np.random.default_rng(20240611)
    worst = 0.0
    zs = np.array([0.1, 0.5, 1.0, 2.0])
    for lam in (0.5, 1.0, 2.0):
        below = np.zeros(zs.size, dtype=np.int64)
        n = budget.cdf_draws
        for start in range(0, n, 1_000_000):
            m = min(1_000_000, n - start)
            u = rng.exponential(1.0 / lam, m)
            v = rng.exponential(1.0 / lam, m)
            z = u * v / (u + v)
            below += (z[:, None] <= zs[None, :]).sum(axis=0)
        emp = below / n
        exact = lemma1_cdf(zs, lam)
        sigma = np.sqrt(exact * (1 - exact) / n)
        worst = max(worst, float(np.max(np.abs(emp - exact) / sigma)))
    return worst <= 3.0, f"max deviation {worst:.2f} sigma over 12 (z, lambda) pairs"


@_timed(2, "Transform closed form vs quadrature", 1)
def criterion_transform(budget: Budget):
    """``laplace_z`` against numerical integration of the density."""
    pairs = list(itertools.product([0.1, 1.0, 10.0, 1000.0], [0.5, 1.0, 2.0]))
    worst = max(abs(laplace_z(s, lam) / laplace_z_quadrature(s, lam) - 1.0) for s, lam in pairs)
    return worst <= 1e-6, f"max relative error {worst:.1e} over {len(pairs)} pairs"


@_timed(3, "Uncoded bound dominates simulation", 600)
def criterion_uncoded_bound(budget: Budget):
    """Uncoded two-user scheme, ideal relay, genie cancellation, 0-40 dB."""
    cfg = _fixed_frames(budget.uncoded_frames, scheme="marc", snr_grid_db=_uncoded_grid(), genie_sic=True)
    points = run_sweep(cfg)
    bounds = [b.bound for b in run_bound(cfg)]
    violations = [p.snr_db for p, b in zip(points, bounds) if b < p.ber - 3.0 * p.std_err]
    ratio = bounds[-1] / points[-1].ber
    ok = not violations and ratio <= 4.0
    return ok, (f"violations at {violations or 'none'}; bound/sim at 40 dB = {ratio:.2f} "
                f"(sim rel. s.e. {points[-1].relative_error:.1%})")


def _looseness(points, bounds) -> float:
    # mean log10(bound / sim) over reliably estimated points
    logs = [math.log10(b.bound / p.ber) for p, b in zip(points, bounds) if p.ber > 0 and p.relative_error <= 0.2]
    return float(np.mean(logs)) if logs else math.nan


@_timed(4, "Coded bound dominates simulation", 1200)
def criterion_coded_bound(budget: Budget):
    """[5,7,7] code, k = 50, 0-25 dB, ideal, +3 dB and 0 dB user-relay links."""
    details, ok, loose = [], True, []
    for urc, frames in (("ideal", budget.coded_frames), (3.0, budget.urc_frames), (0.0, budget.urc_frames)):
        cfg = _fixed_frames(frames, scheme="marc", coded=True, snr_grid_db=_coded_grid(), genie_sic=True,
                            urc_offset_db=urc, calibration_frames=budget.calibration_frames)
        points = run_sweep(cfg)
        bounds = run_bound(cfg)
        bad = [p.snr_db for p, b in zip(points, bounds) if b.bound < p.ber - 3.0 * p.std_err]
        finite = all(math.isfinite(b.bound) and b.bound < 1.0 for b in bounds)
        loose.append(_looseness(points, bounds))
        ok &= not bad and finite
        name = urc if urc == "ideal" else f"+{urc:g}dB"
        details.append(f"{name}: violations {bad or 'none'}, mean log10(bound/sim) {loose[-1]:.3f}")
    increasing = all(b > a for a, b in zip(loose, loose[1:]))
    details.append("looseness " + ("increases" if increasing else "does NOT increase") + " as URC degrades")
    return ok and increasing, "; ".join(details)


@_timed(5, "Diversity order of MARC, direct, Alamouti", 900)
def criterion_diversity(budget: Budget):
    """Fitted high-SNR slopes of the uncoded schemes (real receiver)."""
    slopes = {}
    for scheme in ("marc", "direct", "alamouti"):
        cfg = _fixed_frames(budget.uncoded_frames, scheme=scheme, snr_grid_db=_uncoded_grid())
        slopes[scheme] = _top_slope(run_sweep(cfg))
    m, d, a = slopes["marc"], slopes["direct"], slopes["alamouti"]
    ok = (-2.2 <= m <= -1.8 and -1.2 <= d <= -0.8 and -2.2 <= a <= -1.8
          and abs(m - a) <= 0.1 * abs(a))
    return ok, f"slopes MARC {m:.3f}, direct {d:.3f}, Alamouti {a:.3f}"


@_timed(6, "Three-user MARC diversity", 1200)
def criterion_three_users(budget: Budget):
    """Coded three-user scheme with an ideal relay, users pooled."""
    grid = tuple(x / 2 for x in range(0, 61, 5))
    cfg = _fixed_frames(budget.three_user_frames, scheme="marc3", coded=True, snr_grid_db=grid)
    slope = _top_slope(run_sweep(cfg))
    return -2.2 <= slope <= -1.8, f"pooled slope {slope:.3f}"


@_timed(7, "Code analysis and Viterbi optimality", 60)
def criterion_code(budget: Budget):
    """Free distance of [5,7,7] and Viterbi vs exhaustive ML at k = 8."""
    code = ConvCode.from_octal([5, 7, 7])
    d_free, _ = compute_distance_spectrum(code)
    k = 8
    msgs = ((np.arange(2 ** k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    book = conv_encode(msgs, code)
    rng = np.random.default_rng(7)
    received = book.copy()
    for row in received:
        row[rng.choice(row.size, 3, replace=False)] ^= 1
    decoded = viterbi_decode_hard(received, code)
    dist_all = (received[:, None, :] ^ book[None, :, :]).sum(axis=-1)
    ml = dist_all.min(axis=1)
    vit = (conv_encode(decoded, code) ^ received).sum(axis=-1)
    mismatches = int((vit != ml).sum())
    return d_free == 8 and mismatches == 0, f"d_free = {d_free}; {mismatches}/256 non-ML decisions"


@_timed(8, "Relay state probabilities factorise", 300)
def criterion_states(budget: Budget):
    """Observed state frequencies vs products of per-user failure rates."""
    worst, parts = 0.0, []
    for urc in (3.0, 0.0):
        cfg = SweepConfig(scheme="marc", coded=True, urc_offset_db=urc, batch_frames=5000)
        cal = relay_calibration(cfg, 5.0, budget.state_frames, seed=99)
        n = cal.frames
        pa, pb = cal.p_ar, cal.p_br
        expect = np.array([pa * pb, (1 - pa) * pb, pa * (1 - pb), (1 - pa) * (1 - pb)])
        observed = np.array(cal.state_counts) / n
        sigma = np.sqrt(np.maximum(expect * (1 - expect), 1e-300) / n)
        dev = float(np.max(np.abs(observed - expect) / sigma))
        worst = max(worst, dev)
        parts.append(f"+{urc:g}dB: p_AR {pa:.4f}, p_BR {pb:.4f}, max {dev:.2f} sigma")
    return worst <= 3.0, "; ".join(parts)


@_timed(9, "Sweep output independent of worker count", 300)
def criterion_determinism(budget: Budget):
    """CSV bytes of a small sweep with 1, 4 and 16 workers."""
    base = SweepConfig(scheme="marc", coded=True, urc_offset_db=3.0, snr_grid_db=(4.0, 8.0, 12.0),
                       target_bit_errors=100, max_frames=budget.determinism_frames,
                       batch_frames=max(1, budget.determinism_frames // 16), seed=12345)
    outputs = [points_csv(p.row() for p in run_sweep(replace(base, workers=w))) for w in (1, 4, 16)]
    same = all(o == outputs[0] for o in outputs)
    return same, "identical" if same else "outputs differ"


CRITERIA = [
    criterion_cdf, criterion_transform, criterion_uncoded_bound, criterion_coded_bound, criterion_diversity,
    criterion_three_users, criterion_code, criterion_states, criterion_determinism,
]


def run_all(budget: Budget = FULL, only=None) -> list[CriterionResult]:
    chosen = CRITERIA if not only else [CRITERIA[i - 1] for i in only]
    return [c(budget) for c in chosen]


def format_table(results) -> str:
    return "\n".join(r.line() for r in results)
