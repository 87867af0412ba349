"""Monte Carlo sweep engine, bound curves and figure presets.

A sweep point is simulated in fixed batches of consecutive frames.  Batch
``j`` always covers frames ``[j * batch_frames, (j + 1) * batch_frames)`` and
the stop rule is applied to batch prefixes in order, so the reported numbers
do not depend on how many worker processes evaluated the batches.  All SNR
points reuse the same frame streams (common random numbers).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from functools import lru_cache
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
import yaml

from .baselines import alamouti_trial, direct_trial
from .bounds import BoundInputs, CodeConstants, StateProbs, state_probs, theorem1_bound, theorem2_bound
from .channel import LinkPowers
from .coding import ConvCode
from .protocol import FrameSetup, count_errors, detect_frame, relay_trial, run_frame
from .streams import FrameStream

__all__ = [
    "ConfigError",
    "SweepConfig",
    "BerPoint",
    "BoundPoint",
    "load_config",
    "run_sweep",
    "run_bound",
    "relay_calibration",
    "figure",
    "figure_configs",
    "bound_rows",
    "wilson_interval",
    "RelayCalibration",
    "FIGURES",
    "CSV_HEADER",
    "write_points_csv",
    "points_csv",
    "write_manifest",
]

SCHEMES = ("marc", "marc3", "direct", "alamouti")
CSV_HEADER = ("scheme", "snr_db", "ebn0_db", "frames", "bits", "bit_errors", "ber",
              "ci_low", "ci_high", "p0", "p1", "p2", "p3")
_Z95 = 1.959963984540054
_CALIBRATION_SALT = 0x9E3779B97F4A7C15


class ConfigError(ValueError):
    """Invalid sweep configuration; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@lru_cache(maxsize=None)
def _code(generators: tuple[int, ...]) -> ConvCode:
    return ConvCode.from_octal(generators)


def _is_int(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)


def _numeric(v):
    # YAML 1.1 reads "1e6" as a string
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def _is_real(v) -> bool:
    return (_is_int(v) or isinstance(v, (float, np.floating))) and math.isfinite(float(v))


@dataclass(frozen=True)
class SweepConfig:
    """One simulated curve.

    ``snr_grid_db`` is ``P / N0`` per transmitted symbol in dB.  A point
    stops once ``target_bit_errors`` raw bit errors (and ``min_frames``
    frames) are reached, or at ``max_frames``.  ``urc_offset_db`` is how much
    stronger the user->relay links are than the links to the destination,
    or ``"ideal"`` for a relay that always decodes.  ``fading_is`` turns on
    importance sampling of the destination fading.
    """

    scheme: str = "marc"
    coded: bool = False
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    max_frames: int = 10_000_000
    target_bit_errors: int = 200
    k: int = 50
    generators: tuple[int, ...] = (5, 7, 7)
    urc_offset_db: Any = "ideal"
    genie_sic: bool = False
    seed: int = 1
    workers: int = 1
    fading_is: bool = False
    batch_frames: int = 2000
    min_frames: int = 0
    calibration_frames: int = 50_000
    label: Optional[str] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"must be one of {', '.join(SCHEMES)}, got {self.scheme!r}")
        for name in ("coded", "genie_sic", "fading_is"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(name, "must be true or false")
        grid = self.snr_grid_db
        if isinstance(grid, (str, bytes)) or not isinstance(grid, Iterable):
            raise ConfigError("snr_grid_db", "must be a list of numbers")
        grid = tuple(grid)
        if not grid:
            raise ConfigError("snr_grid_db", "must not be empty")
        if not all(_is_real(v) for v in grid):
            raise ConfigError("snr_grid_db", "entries must be finite numbers")
        object.__setattr__(self, "snr_grid_db", tuple(float(v) for v in grid))
        for name in ("max_frames", "target_bit_errors", "k", "workers", "batch_frames", "calibration_frames"):
            v = _numeric(getattr(self, name))
            if isinstance(v, float) and v.is_integer():
                v = int(v)
                object.__setattr__(self, name, v)
            if not _is_int(v) or v < 1:
                raise ConfigError(name, "must be a positive integer")
        if not _is_int(self.min_frames) or self.min_frames < 0:
            raise ConfigError("min_frames", "must be a non-negative integer")
        if not _is_int(self.seed) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an integer in [0, 2^64)")
        gens = self.generators
        if isinstance(gens, (str, bytes)) or not isinstance(gens, Iterable):
            raise ConfigError("generators", "must be a list of octal numbers")
        try:
            code = ConvCode.from_octal(list(gens))
        except ValueError as exc:
            raise ConfigError("generators", f"not valid octal generators ({exc})") from None
        object.__setattr__(self, "generators", tuple(int(str(g)) for g in gens))
        if code.constraint_length > 10:
            raise ConfigError("generators", "constraint length above 10 is not supported")
        urc = self.urc_offset_db
        if urc != "ideal":
            if not _is_real(urc):
                raise ConfigError("urc_offset_db", "must be a number (dB) or 'ideal'")
            object.__setattr__(self, "urc_offset_db", float(urc))
            if self.scheme == "marc3":
                raise ConfigError("urc_offset_db", "the three-user scheme is simulated with an ideal relay only")
        if self.label is not None and not isinstance(self.label, str):
            raise ConfigError("label", "must be a string")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SweepConfig":
        if not isinstance(data, Mapping):
            raise ConfigError("<root>", "config must be a key/value mapping")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(str(key), "unknown key")
        return cls(**dict(data))

    def to_mapping(self) -> dict:
        out = asdict(self)
        out["snr_grid_db"] = list(self.snr_grid_db)
        out["generators"] = list(self.generators)
        return out

    @property
    def ideal_urc(self) -> bool:
        return self.urc_offset_db == "ideal"

    @property
    def n_users(self) -> int:
        return {"marc": 2, "marc3": 3}.get(self.scheme, 1)

    @property
    def code(self) -> Optional[ConvCode]:
        return _code(self.generators) if self.coded else None

    @property
    def powers(self) -> LinkPowers:
        return LinkPowers() if self.ideal_urc else LinkPowers.from_urc_offset(self.urc_offset_db)

    @property
    def curve_name(self) -> str:
        if self.label:
            return self.label
        name = f"{self.scheme}-{'coded' if self.coded else 'uncoded'}"
        if self.scheme == "marc" and not self.ideal_urc:
            name += f"-urc{self.urc_offset_db:+g}dB"
        return name

    def setup(self, snr_db: float) -> FrameSetup:
        n0 = 10.0 ** (-snr_db / 10.0)
        bias = min(1.0, n0 / self.powers.omega_to_d) if self.fading_is else 1.0
        return FrameSetup(
            n_users=max(self.n_users, 1), k=self.k, code=self.code, powers=self.powers,
            p=1.0, n0=n0, ideal_urc=self.ideal_urc, genie_sic=self.genie_sic, dest_bias=bias,
        )


def load_config(path) -> SweepConfig:
    """Read a flat YAML mapping into a :class:`SweepConfig`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML ({exc})") from None
    if data is None:
        data = {}
    if isinstance(data, Mapping):
        for key, value in data.items():
            if isinstance(value, Mapping):
                raise ConfigError(str(key), "nested mappings are not allowed")
    return SweepConfig.from_mapping(data)


@dataclass
class _Tally:
    """Sums over one or more batches of one SNR point."""

    frames: int = 0
    raw_errors: int = 0
    weighted: float = 0.0
    weighted_sq: float = 0.0
    energy: float = 0.0
    states: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))
    user_weighted: Optional[np.ndarray] = None

    def add(self, other: "_Tally") -> None:
        self.frames += other.frames
        self.raw_errors += other.raw_errors
        self.weighted += other.weighted
        self.weighted_sq += other.weighted_sq
        self.energy += other.energy
        self.states = self.states + other.states
        if self.user_weighted is None:
            self.user_weighted = other.user_weighted.copy()
        else:
            self.user_weighted = self.user_weighted + other.user_weighted


def _run_batch(config: SweepConfig, snr_db: float, batch: int) -> _Tally:
    first = batch * config.batch_frames
    n = min(config.batch_frames, config.max_frames - first)
    stream = FrameStream(config.seed, first, n)
    setup = config.setup(snr_db)
    states = np.zeros(4, dtype=np.int64)
    if config.scheme in ("direct", "alamouti"):
        trial = direct_trial if config.scheme == "direct" else alamouti_trial
        res = trial(stream, setup)
        errors = res.errors[:, None]
        weight, energy = res.weight, res.energy
    else:
        fb = run_frame(setup, stream)
        errors = count_errors(fb, detect_frame(fb))
        weight, energy = fb.channel.weight, fb.energy()
        if config.scheme == "marc":
            states = np.bincount(fb.relay.state, minlength=4).astype(np.int64)
        else:
            # three users, ideal relay: every frame has all blocks forwarded
            states[3] = n
    per_frame = weight * errors.sum(axis=1)
    return _Tally(
        frames=n,
        raw_errors=int(errors.sum()),
        weighted=float(per_frame.sum()),
        weighted_sq=float((per_frame ** 2).sum()),
        energy=float(energy.sum()),
        states=states,
        user_weighted=(weight[:, None] * errors).sum(axis=0).astype(float),
    )


@dataclass(frozen=True)
class BerPoint:
    """Measured bit error rate at one SNR.

    ``bit_errors`` counts raw errors; ``ber`` is the (importance-weighted)
    estimate.  ``std_err`` is the standard error from the spread of the
    per-frame error counts, which, unlike a per-bit binomial model, accounts
    for errors arriving in bursts within a fading block.  ``p0..p3`` are the
    observed relay-state frequencies (NaN for schemes without a relay).
    """

    scheme: str
    snr_db: float
    ebn0_db: float
    frames: int
    bits: int
    bit_errors: int
    ber: float
    ci_low: float
    ci_high: float
    p0: float
    p1: float
    p2: float
    p3: float
    capped: bool = False
    std_err: float = 0.0
    user_ber: tuple[float, ...] = ()

    @property
    def relative_error(self) -> float:
        return self.std_err / self.ber if self.ber > 0 else math.inf

    def row(self) -> list:
        return [getattr(self, name) for name in CSV_HEADER]


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    phat = errors / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


def _make_point(config: SweepConfig, snr_db: float, tally: _Tally, capped: bool) -> BerPoint:
    users = max(config.n_users, 1)
    bits_per_frame = users * config.k
    bits = tally.frames * bits_per_frame
    ber = tally.weighted / bits
    f = tally.frames
    var = max(tally.weighted_sq - tally.weighted ** 2 / f, 0.0) / (f - 1) if f > 1 else 0.0
    std_err = math.sqrt(var / f) / bits_per_frame
    if config.fading_is:
        lo, hi = max(0.0, ber - _Z95 * std_err), min(1.0, ber + _Z95 * std_err)
    else:
        lo, hi = wilson_interval(tally.raw_errors, bits)
    n0 = 10.0 ** (-snr_db / 10.0)
    ebn0 = tally.energy / bits / n0
    if config.scheme in ("marc", "marc3"):
        probs = tuple(float(c) / f for c in tally.states)
    else:
        probs = (math.nan,) * 4
    return BerPoint(
        scheme=config.curve_name, snr_db=snr_db, ebn0_db=10.0 * math.log10(ebn0),
        frames=f, bits=bits, bit_errors=tally.raw_errors, ber=ber, ci_low=lo, ci_high=hi,
        p0=probs[0], p1=probs[1], p2=probs[2], p3=probs[3], capped=capped, std_err=std_err,
        user_ber=tuple(float(v) / (f * config.k) for v in tally.user_weighted),
    )


def _done(config: SweepConfig, tally: _Tally) -> bool:
    if tally.frames >= config.max_frames:
        return True
    return tally.raw_errors >= config.target_bit_errors and tally.frames >= config.min_frames


def run_sweep(config: SweepConfig) -> list[BerPoint]:
    """Simulate every SNR point of ``config`` until its stop rule fires.

    Batches are scheduled ``workers`` at a time per unfinished point and
    consumed strictly in batch order, so results are identical for any
    worker count.
    """
    n_points = len(config.snr_grid_db)
    tallies = [_Tally() for _ in range(n_points)]
    next_batch = [0] * n_points
    finished = [False] * n_points
    chunk = config.workers
    executor = ProcessPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        while not all(finished):
            jobs = []
            for i in range(n_points):
                if finished[i]:
                    continue
                for _ in range(chunk):
                    b = next_batch[i]
                    if b * config.batch_frames >= config.max_frames:
                        break
                    jobs.append((i, b))
                    next_batch[i] += 1
            args = [(config, config.snr_grid_db[i], b) for i, b in jobs]
            if executor is None:
                results = [_run_batch(*a) for a in args]
            else:
                results = list(executor.map(_run_batch, *zip(*args)))
            for (i, _), res in zip(jobs, results):
                if finished[i]:
                    continue
                tallies[i].add(res)
                finished[i] = _done(config, tallies[i])
    finally:
        if executor is not None:
            executor.shutdown()
    return [
        _make_point(config, snr, t, capped=t.raw_errors < config.target_bit_errors)
        for snr, t in zip(config.snr_grid_db, tallies)
    ]


@dataclass(frozen=True)
class RelayCalibration:
    """Relay decoding failure rates measured at one SNR."""

    snr_db: float
    frames: int
    p_ar: float
    p_br: float
    state_counts: tuple[int, int, int, int]


def relay_calibration(config: SweepConfig, snr_db: float, frames: Optional[int] = None,
                      seed: Optional[int] = None) -> RelayCalibration:
    """Estimate ``p_AR`` and ``p_BR`` by simulating the user->relay slots only.

    Uses its own random streams (a salted seed), independent of the sweep.
    """
    if config.scheme != "marc" or config.ideal_urc:
        raise ConfigError("urc_offset_db", "calibration needs the two-user scheme with a finite URC offset")
    frames = config.calibration_frames if frames is None else frames
    seed = (config.seed ^ _CALIBRATION_SALT) if seed is None else seed
    setup = replace(config.setup(snr_db), dest_bias=1.0)
    failures = np.zeros(2, dtype=np.int64)
    counts = np.zeros(4, dtype=np.int64)
    for first in range(0, frames, config.batch_frames):
        n = min(config.batch_frames, frames - first)
        decision = relay_trial(setup, FrameStream(seed, first, n))
        failures += (~decision.decoded).sum(axis=0)
        counts += np.bincount(decision.state, minlength=4)
    return RelayCalibration(snr_db, frames, failures[0] / frames, failures[1] / frames,
                            tuple(int(c) for c in counts))


@dataclass(frozen=True)
class BoundPoint:
    snr_db: float
    bound: float
    probs: StateProbs
    ebn0_db: float

    def __iter__(self):
        return iter((self.snr_db, self.bound))


def _pooled_bound(snr0: float, probs: StateProbs, coded: Optional[CodeConstants]) -> float:
    # user B sees the roles of the single-user states swapped
    swapped = StateProbs(probs.p0, probs.p2, probs.p1, probs.p3)
    fn = theorem2_bound if coded is not None else theorem1_bound
    return 0.5 * (fn(BoundInputs(snr0, 1.0, probs, coded)) + fn(BoundInputs(snr0, 1.0, swapped, coded)))


def run_bound(config: SweepConfig) -> list[BoundPoint]:
    """Evaluate the analytic bound of the two-user scheme on the SNR grid.

    Ideal URC uses ``p3 = 1``; otherwise ``p_AR`` and ``p_BR`` come from a
    relay calibration run at every SNR.  Coded configurations use the
    convolutional-code bound.  The destination links have unit mean power,
    so the exponential rate is 1.
    """
    if config.scheme != "marc":
        raise ConfigError("scheme", "bounds exist for the two-user scheme only")
    coded = CodeConstants.from_code(config.code, config.k) if config.coded else None
    setup0 = config.setup(0.0)
    out = []
    for snr_db in config.snr_grid_db:
        if config.ideal_urc:
            probs = StateProbs.ideal()
        else:
            cal = relay_calibration(config, snr_db)
            probs = state_probs(cal.p_ar, cal.p_br)
        snr0 = 10.0 ** (snr_db / 10.0)
        forwarded = probs.p1 + probs.p2 + 2.0 * probs.p3
        ebn0 = setup0.block_len * (2.0 + forwarded) * snr0 / (2.0 * config.k)
        out.append(BoundPoint(snr_db, _pooled_bound(snr0, probs, coded), probs, 10.0 * math.log10(ebn0)))
    return out


def bound_rows(name: str, bounds: Sequence[BoundPoint]) -> list[list]:
    return [[name, b.snr_db, b.ebn0_db, 0, 0, 0, b.bound, b.bound, b.bound, *b.probs.as_tuple()]
            for b in bounds]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def points_csv(rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_points_csv(path, rows: Iterable[Sequence]) -> str:
    """Write rows under the standard header; returns the file's sha256."""
    text = points_csv(rows)
    Path(path).write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def write_manifest(path, configs: Mapping[str, dict], artifacts: Mapping[str, str],
                   capped: Mapping[str, list], extra: Optional[dict] = None) -> None:
    manifest = {
        "configs": dict(configs),
        "artifacts": {name: {"sha256": digest} for name, digest in sorted(artifacts.items())},
        "capped_points": {k: v for k, v in capped.items() if v},
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# Figure presets: (curve name, kind, config overrides).  "sim" curves are
# Monte Carlo sweeps, "bound" curves analytic.
_UNCODED_GRID = tuple(float(x) for x in range(0, 41, 4))
_CODED_GRID = tuple(x / 2 for x in range(0, 51, 5))

FIGURES: dict[str, list[tuple[str, str, dict]]] = {
    "fig3": [
        ("marc-uncoded-sim", "sim", dict(scheme="marc")),
        ("marc-uncoded-bound", "bound", dict(scheme="marc")),
        ("direct-uncoded", "sim", dict(scheme="direct")),
        ("alamouti-uncoded", "sim", dict(scheme="alamouti")),
    ],
    "fig4": [
        ("marc-coded-sim", "sim", dict(scheme="marc", coded=True)),
        ("marc-coded-bound", "bound", dict(scheme="marc", coded=True)),
        ("direct-coded", "sim", dict(scheme="direct", coded=True)),
    ],
    "fig5": [
        item
        for urc, tag in (("ideal", "ideal"), (6.0, "urc+6dB"), (3.0, "urc+3dB"), (0.0, "urc+0dB"))
        for item in (
            (f"marc-coded-{tag}-sim", "sim", dict(scheme="marc", coded=True, urc_offset_db=urc)),
            (f"marc-coded-{tag}-bound", "bound", dict(scheme="marc", coded=True, urc_offset_db=urc)),
        )
    ],
    "fig6": [
        (f"marc-coded-{tag}-sim", "sim", dict(scheme="marc", coded=True, urc_offset_db=urc))
        for urc, tag in (("ideal", "ideal"), (3.0, "urc+3dB"), (0.0, "urc+0dB"))
    ] + [
        ("direct-coded", "sim", dict(scheme="direct", coded=True)),
        ("alamouti-coded", "sim", dict(scheme="alamouti", coded=True)),
    ],
    "fig7": [
        ("marc3-coded-sim", "sim", dict(scheme="marc3", coded=True)),
        ("marc-coded-sim", "sim", dict(scheme="marc", coded=True)),
        ("direct-coded", "sim", dict(scheme="direct", coded=True)),
        ("alamouti-coded", "sim", dict(scheme="alamouti", coded=True)),
    ],
}


def figure_configs(name: str, **overrides) -> list[tuple[str, str, SweepConfig]]:
    """Curve configurations of a figure preset."""
    if name not in FIGURES:
        raise ConfigError("figure", f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    out = []
    for curve, kind, preset in FIGURES[name]:
        grid = _CODED_GRID if preset.get("coded") else _UNCODED_GRID
        data = dict(snr_grid_db=grid, fading_is=True, label=curve)
        data.update(preset)
        data.update(overrides)
        out.append((curve, kind, SweepConfig.from_mapping(data)))
    return out


def figure(name: str, out_dir, **overrides) -> dict[str, Path]:
    """Run a figure preset and write one CSV per curve plus ``manifest.json``.

    ``overrides`` are applied to every curve's configuration (e.g.
    ``max_frames`` for a quick run, ``seed``, ``workers``).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths, hashes, configs, capped = {}, {}, {}, {}
    for curve, kind, cfg in figure_configs(name, **overrides):
        if kind == "sim":
            points = run_sweep(cfg)
            rows = [p.row() for p in points]
            capped[curve] = [p.snr_db for p in points if p.capped]
        else:
            rows = bound_rows(curve, run_bound(cfg))
        path = out_dir / f"{curve}.csv"
        hashes[path.name] = write_points_csv(path, rows)
        configs[curve] = {"kind": kind, **cfg.to_mapping()}
        paths[curve] = path
    manifest = out_dir / "manifest.json"
    write_manifest(manifest, configs, hashes, capped, extra={"figure": name})
    paths["manifest"] = manifest
    return paths
