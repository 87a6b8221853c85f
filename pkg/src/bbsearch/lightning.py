"""Simulated Lightning channel balance probing.

A probe is a fake payment of ``amount`` sats along one direction of a
channel; it succeeds exactly when ``amount <= balance``. Success reads as
sign ``-1`` (the balance is at or above the probe) and failure as ``+1``,
so the probe is a sign oracle over amounts and both searches run on the
bracket ``[0, capacity]``.

Per-channel priors come from a KDE over an ensemble of balance
predictions. The ensemble here is synthetic: every member predicts the
true balance plus a shared bias and independent Gaussian noise, both in
units of channel capacity.

Snapshot files are JSON arrays of channel objects::

    [{"id": "chan-0", "capacity": 1000000, "balance": 250000,
      "prediction_samples": [240000.0, ...]}]

``prediction_samples`` is optional; missing samples are generated from a
:class:`SyntheticPredictorConfig`.
"""

from __future__ import annotations

import json
import math
import time
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from bbsearch.density import KDE, DensityError, fit_kde
from bbsearch.experiments import ExperimentReport, ReportRow
from bbsearch.search import SignOracle, bbs_search, classic_search

__all__ = [
    "DEFAULT_EPSILONS",
    "Channel",
    "SnapshotError",
    "SyntheticPredictorConfig",
    "ProbeOracle",
    "load_snapshot",
    "save_snapshot",
    "synthetic_snapshot",
    "generate_predictions",
    "build_channel_prior",
    "run_probing_comparison",
]

DEFAULT_EPSILONS = tuple(2**k for k in range(7, 15))  # 128 ... 16384 sats
CAPACITY_UNIT = 2**15


class SnapshotError(ValueError):
    """A snapshot file that cannot be parsed or violates channel invariants."""


@dataclass(frozen=True)
class Channel:
    id: str
    capacity: int
    balance: int
    prediction_samples: tuple[float, ...] = ()

    def __post_init__(self):
        ctx = f"channel {self.id!r}"
        if not isinstance(self.capacity, (int, np.integer)) or isinstance(self.capacity, bool) or self.capacity <= 0:
            raise SnapshotError(f"{ctx}: capacity must be a positive integer, got {self.capacity!r}")
        if not isinstance(self.balance, (int, np.integer)) or isinstance(self.balance, bool):
            raise SnapshotError(f"{ctx}: balance must be an integer, got {self.balance!r}")
        if not 0 <= self.balance <= self.capacity:
            raise SnapshotError(f"{ctx}: balance {self.balance} outside [0, {self.capacity}]")
        samples = tuple(float(s) for s in self.prediction_samples)
        bad = [s for s in samples if not (0 <= s <= self.capacity)]
        if bad:
            raise SnapshotError(f"{ctx}: prediction sample {bad[0]} outside [0, {self.capacity}]")
        object.__setattr__(self, "capacity", int(self.capacity))
        object.__setattr__(self, "balance", int(self.balance))
        object.__setattr__(self, "prediction_samples", samples)

    @property
    def proportion(self) -> float:
        return self.balance / self.capacity

    def to_dict(self) -> dict:
        d = {"id": self.id, "capacity": self.capacity, "balance": self.balance}
        if self.prediction_samples:
            d["prediction_samples"] = list(self.prediction_samples)
        return d


@dataclass(frozen=True)
class SyntheticPredictorConfig:
    """Stand-in for a tree ensemble's per-member balance predictions."""

    n_trees: int = 100
    noise_std_fraction: float = 0.1
    bias_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n_trees) < 2:
            raise ValueError(f"n_trees must be >= 2, got {self.n_trees}")
        if not 0 < self.noise_std_fraction <= 1:
            raise ValueError(f"noise_std_fraction must lie in (0, 1], got {self.noise_std_fraction}")
        if not -1 <= self.bias_fraction <= 1:
            raise ValueError(f"bias_fraction must lie in [-1, 1], got {self.bias_fraction}")

    def to_dict(self) -> dict:
        return {
            "n_trees": int(self.n_trees),
            "noise_std_fraction": float(self.noise_std_fraction),
            "bias_fraction": float(self.bias_fraction),
            "seed": int(self.seed),
        }


class ProbeOracle(SignOracle):
    """Fake payments against one channel direction."""

    def __init__(self, channel: Channel):
        super().__init__(channel.balance)
        self.channel = channel

    def probe(self, amount: int) -> bool:
        """Send ``amount``; True when the payment would succeed."""
        self.probe_count += 1
        return amount <= self.channel.balance

    def sign(self, x: int) -> int:
        return -1 if self.probe(x) else 1

    __call__ = sign


def _channel_from_obj(i: int, obj) -> Channel:
    if not isinstance(obj, dict):
        raise SnapshotError(f"channel[{i}]: expected an object, got {type(obj).__name__}")
    cid = obj.get("id", f"#{i}")
    for key in ("id", "capacity", "balance"):
        if key not in obj:
            raise SnapshotError(f"channel[{i}] (id={cid!r}): missing field {key!r}")
    samples = obj.get("prediction_samples") or ()
    if not isinstance(samples, (list, tuple)):
        raise SnapshotError(f"channel[{i}] (id={cid!r}): prediction_samples must be a list")
    try:
        return Channel(str(obj["id"]), obj["capacity"], obj["balance"], tuple(samples))
    except SnapshotError as exc:
        raise SnapshotError(f"channel[{i}]: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise SnapshotError(f"channel[{i}] (id={cid!r}): {exc}") from None


def load_snapshot(path, predictor: SyntheticPredictorConfig | None = None) -> list[Channel]:
    """Read and validate a snapshot file.

    Channels without prediction samples get synthetic ones when
    ``predictor`` is given.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, list):
        raise SnapshotError(f"{path}: snapshot must be a JSON array of channels")
    channels = [_channel_from_obj(i, obj) for i, obj in enumerate(data)]
    seen = set()
    for ch in channels:
        if ch.id in seen:
            raise SnapshotError(f"{path}: duplicate channel id {ch.id!r}")
        seen.add(ch.id)
    if predictor is not None:
        channels = [ch if ch.prediction_samples else _with_predictions(ch, predictor) for ch in channels]
    return channels


def save_snapshot(channels: Sequence[Channel], path) -> None:
    Path(path).write_text(json.dumps([ch.to_dict() for ch in channels], indent=1))


def _channel_rng(seed: int, channel_id: str) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(channel_id.encode())])


def generate_predictions(channel: Channel, config: SyntheticPredictorConfig) -> np.ndarray:
    """``n_trees`` clipped predictions ``y + (bias + noise * z) * c``; deterministic per (seed, id)."""
    z = _channel_rng(config.seed, channel.id).standard_normal(int(config.n_trees))
    c = channel.capacity
    raw = channel.balance + (config.bias_fraction + config.noise_std_fraction * z) * c
    return np.clip(raw, 0.0, float(c))


def _with_predictions(channel: Channel, config: SyntheticPredictorConfig) -> Channel:
    return replace(channel, prediction_samples=tuple(generate_predictions(channel, config).tolist()))


def synthetic_snapshot(n: int = 89, seed: int = 0, predictor: SyntheticPredictorConfig | None = None) -> list[Channel]:
    """Random channels with capacities ``j * 2**15`` sats, ``j`` log-uniform in [4, 256].

    Capacities on this grid keep every bracket width exact down to the
    smallest default tolerance, so doubling the tolerance removes exactly
    one classic probe per channel. Balances are a uniform share of capacity.
    """
    if n < 1:
        raise ValueError(f"need at least one channel, got {n}")
    rng = np.random.default_rng(seed)
    units = np.clip(np.round(np.exp(rng.uniform(math.log(4), math.log(256), n))), 4, 256).astype(np.int64)
    capacities = units * CAPACITY_UNIT
    balances = np.floor(rng.uniform(0.0, 1.0, n) * capacities).astype(np.int64)
    channels = [Channel(f"chan-{i:03d}", int(c), int(y)) for i, (c, y) in enumerate(zip(capacities, balances))]
    if predictor is not None:
        channels = [_with_predictions(ch, predictor) for ch in channels]
    return channels


def build_channel_prior(channel: Channel) -> KDE:
    """Gaussian KDE (Silverman bandwidth) over the channel's prediction samples."""
    if len(channel.prediction_samples) < 2:
        raise DensityError(f"channel {channel.id!r} needs at least 2 prediction samples")
    return fit_kde(channel.prediction_samples, "auto")


def run_probing_comparison(
    channels: Sequence[Channel],
    epsilons: Sequence[int] = DEFAULT_EPSILONS,
    predictor: SyntheticPredictorConfig | None = None,
) -> ExperimentReport:
    """Probes to resolve each channel balance, classic vs KDE-prior BBS.

    Channels whose prior cannot be built are listed under
    ``notes["failures"]`` and left out of every row.
    """
    start = time.perf_counter()
    if not channels:
        raise ValueError("need at least one channel")
    epsilons = [int(e) for e in epsilons]
    if not epsilons or any(e < 1 for e in epsilons):
        raise ValueError(f"epsilons must be >= 1, got {epsilons}")
    predictor = predictor or SyntheticPredictorConfig()

    failures = []
    usable = []
    for ch in channels:
        if not ch.prediction_samples:
            ch = _with_predictions(ch, predictor)
        try:
            usable.append((ch, build_channel_prior(ch)))
        except DensityError as exc:
            failures.append({"id": ch.id, "error": str(exc)})
    if not usable:
        raise ValueError("no channel produced a usable prior")

    rows = []
    bracket_misses = 0
    probe_mismatches = 0
    for eps in epsilons:
        basic, bbs, exhausted = [], [], 0
        for ch, prior in usable:
            for search, extra in ((classic_search, ()), (bbs_search, (prior,))):
                oracle = ProbeOracle(ch)
                out = search(0, ch.capacity, *extra, oracle, eps) if extra else search(0, ch.capacity, oracle, eps)
                if not out.final_low <= ch.balance <= out.final_high:
                    bracket_misses += 1
                if oracle.probe_count != out.steps:
                    probe_mismatches += 1
                (bbs if extra else basic).append(out.steps)
                exhausted += out.prior_exhausted
        rows.append(ReportRow.from_steps(eps, basic, bbs, exhausted))

    caps = np.array([ch.capacity for ch, _ in usable], dtype=float)
    notes = {
        "n_channels": len(usable),
        "failures": failures,
        "bracket_misses": bracket_misses,
        "probe_count_mismatches": probe_mismatches,
        "capacity_min": int(caps.min()),
        "capacity_max": int(caps.max()),
        "capacity_log2_mean": float(np.mean(np.log2(caps))),
        "bandwidth_rule": "silverman",
    }
    config = {"n_channels": len(channels), "epsilons": epsilons, "predictor": predictor.to_dict()}
    return ExperimentReport(rows, config, int(predictor.seed), notes, time.perf_counter() - start)
