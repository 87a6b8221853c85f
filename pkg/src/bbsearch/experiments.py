"""Simulated step-count comparisons between classic search and BBS.

Targets are ``floor`` of draws from the search-space distribution, redrawn
when they fall outside the search bounds. Every target is searched by
both algorithms on identical bounds for every tolerance, and the report
keeps the mean and population standard deviation of the step counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from bbsearch import kernels
from bbsearch.density import (
    KDE,
    DensityError,
    DensityModel,
    Exponential,
    GaussianMixture,
    Histogram,
    KlShiftSpec,
    Normal,
    Uniform,
    density_from_dict,
    kl_shifted_normal,
)

__all__ = [
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ReportRow",
    "ExperimentReport",
    "make_bounds",
    "sample_targets",
    "draw_targets",
    "compare_steps",
    "run_comparison",
    "run_kld_drift",
    "percent_decrease",
    "preset",
    "PRESETS",
]

CSV_COLUMNS = ("epsilon", "percent_decrease", "basic_mean", "basic_std", "bbs_mean", "bbs_std")
DEFAULT_TAIL_MASS = 1e-5
MAX_REDRAW_ROUNDS = 1000


def make_bounds(distribution: DensityModel, multiplier: float = 4.2, tail_mass: float = DEFAULT_TAIL_MASS) -> tuple[int, int]:
    """Integer search bounds covering the bulk of ``distribution``.

    Normal: ``[floor(mu - k sigma), ceil(mu + k sigma)]``. Mixtures and
    KDEs: the same rule applied to the lowest and highest component.
    Exponential: ``[0, ceil(-scale * ln(tail_mass))]``. Uniform and
    histogram: their support, rounded outward.
    """
    k = float(multiplier)
    if not k > 0:
        raise ValueError(f"bounds multiplier must be positive, got {multiplier}")
    d = distribution
    if isinstance(d, Normal):
        lo, hi = math.floor(d.mu - k * d.sigma), math.ceil(d.mu + k * d.sigma)
    elif isinstance(d, (GaussianMixture, KDE)):
        _, means, sigmas, _ = d.kernel_params()
        lo = math.floor(float(np.min(means - k * sigmas)))
        hi = math.ceil(float(np.max(means + k * sigmas)))
    elif isinstance(d, Exponential):
        if not 0 < tail_mass < 1:
            raise ValueError(f"tail mass must lie in (0, 1), got {tail_mass}")
        lo, hi = 0, math.ceil(-d.scale * math.log(tail_mass))
    elif isinstance(d, (Uniform, Histogram)):
        a, b = d.support
        lo, hi = math.floor(a), math.ceil(b)
    else:
        raise TypeError(f"no bounds rule for {type(d).__name__}")
    if not lo < hi:
        raise ValueError(f"degenerate bounds [{lo}, {hi}]")
    return lo, hi


def draw_targets(distribution: DensityModel, n: int, seed, bounds: tuple[int, int] | None = None):
    """Integer targets plus the number of out-of-bounds redraws."""
    n = int(n)
    if n < 1:
        raise ValueError(f"need at least one target, got {n}")
    lo, hi = bounds if bounds is not None else make_bounds(distribution)
    rng = np.random.default_rng(seed)
    targets = np.floor(distribution.sample(rng, n)).astype(np.int64)
    redraws = 0
    for _ in range(MAX_REDRAW_ROUNDS):
        bad = np.flatnonzero((targets < lo) | (targets > hi))
        if bad.size == 0:
            return targets, redraws
        redraws += bad.size
        targets[bad] = np.floor(distribution.sample(rng, bad.size)).astype(np.int64)
    raise ValueError(f"could not draw {n} targets inside [{lo}, {hi}]; the bounds hold almost no mass")


def sample_targets(distribution: DensityModel, n: int, seed, bounds: tuple[int, int] | None = None) -> np.ndarray:
    return draw_targets(distribution, n, seed, bounds)[0]


def percent_decrease(basic_mean: float, bbs_mean: float) -> float:
    if basic_mean == 0:
        return 0.0
    return 100.0 * (basic_mean - bbs_mean) / basic_mean


def _prior_to_json(prior):
    if isinstance(prior, str):
        return prior
    if isinstance(prior, KlShiftSpec):
        return {"kind": "kl_shift", "mu1": prior.mu1, "sigma1": prior.sigma1, "divergence": prior.divergence}
    return prior.to_dict()


def _prior_from_json(obj):
    if isinstance(obj, str):
        return obj
    if obj.get("kind") == "kl_shift":
        return KlShiftSpec(obj["mu1"], obj["sigma1"], obj["divergence"])
    return density_from_dict(obj)


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulated comparison.

    ``prior`` is ``"true"`` (the target distribution itself), ``"uniform"``
    (flat over the bounds), a :class:`KlShiftSpec`, or an explicit density.
    ``bounds`` overrides :func:`make_bounds` when given.
    """

    distribution: DensityModel
    n_targets: int
    epsilons: tuple[int, ...]
    seed: int = 0
    prior: object = "true"
    bounds_multiplier: float = 4.2
    tail_mass: float = DEFAULT_TAIL_MASS
    bounds: tuple[int, int] | None = None

    def __post_init__(self):
        eps = tuple(int(e) for e in self.epsilons)
        if not eps:
            raise ValueError("need at least one epsilon")
        if any(e < 1 for e in eps):
            raise ValueError(f"epsilons must be >= 1, got {list(eps)}")
        if any(b <= a for a, b in zip(eps, eps[1:])):
            raise ValueError(f"epsilons must be strictly increasing, got {list(eps)}")
        if int(self.n_targets) < 1:
            raise ValueError(f"n_targets must be >= 1, got {self.n_targets}")
        if isinstance(self.prior, str) and self.prior not in ("true", "uniform"):
            raise ValueError(f"prior must be 'true', 'uniform', a KL shift or a density, got {self.prior!r}")
        object.__setattr__(self, "epsilons", eps)
        object.__setattr__(self, "n_targets", int(self.n_targets))
        object.__setattr__(self, "seed", int(self.seed))
        if self.bounds is not None:
            object.__setattr__(self, "bounds", (int(self.bounds[0]), int(self.bounds[1])))

    def resolved_bounds(self) -> tuple[int, int]:
        if self.bounds is not None:
            return self.bounds
        return make_bounds(self.distribution, self.bounds_multiplier, self.tail_mass)

    def resolved_prior(self) -> DensityModel:
        if isinstance(self.prior, KlShiftSpec):
            return kl_shifted_normal(self.prior)
        if self.prior == "true":
            return self.distribution
        if self.prior == "uniform":
            return Uniform(*self.resolved_bounds())
        return self.prior

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "n_targets": self.n_targets,
            "epsilons": list(self.epsilons),
            "seed": self.seed,
            "prior": _prior_to_json(self.prior),
            "bounds_multiplier": self.bounds_multiplier,
            "tail_mass": self.tail_mass,
            "bounds": list(self.bounds) if self.bounds is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(
                distribution=density_from_dict(d["distribution"]),
                n_targets=d["n_targets"],
                epsilons=tuple(d["epsilons"]),
                seed=d.get("seed", 0),
                prior=_prior_from_json(d.get("prior", "true")),
                bounds_multiplier=d.get("bounds_multiplier", 4.2),
                tail_mass=d.get("tail_mass", DEFAULT_TAIL_MASS),
                bounds=tuple(d["bounds"]) if d.get("bounds") else None,
            )
        except KeyError as exc:
            raise ValueError(f"experiment config is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ReportRow:
    epsilon: int
    basic_mean: float
    basic_std: float
    bbs_mean: float
    bbs_std: float
    percent_decrease: float
    prior_exhausted: int = 0
    divergence: float | None = None

    @classmethod
    def from_steps(cls, epsilon, basic, bbs, exhausted=0, divergence=None) -> "ReportRow":
        basic_mean, bbs_mean = float(np.mean(basic)), float(np.mean(bbs))
        return cls(
            epsilon=int(epsilon),
            basic_mean=basic_mean,
            basic_std=float(np.std(basic)),
            bbs_mean=bbs_mean,
            bbs_std=float(np.std(bbs)),
            percent_decrease=percent_decrease(basic_mean, bbs_mean),
            prior_exhausted=int(exhausted),
            divergence=None if divergence is None else float(divergence),
        )


@dataclass
class ExperimentReport:
    rows: list[ReportRow]
    config: dict
    seed: int
    notes: dict = field(default_factory=dict)
    runtime: float = field(default=0.0, compare=False)

    @property
    def columns(self) -> tuple[str, ...]:
        if any(r.divergence is not None for r in self.rows):
            return ("divergence",) + CSV_COLUMNS
        return CSV_COLUMNS

    def row(self, epsilon: int | None = None, divergence: float | None = None) -> ReportRow:
        for r in self.rows:
            if (epsilon is None or r.epsilon == epsilon) and (divergence is None or r.divergence == divergence):
                return r
        raise KeyError(f"no report row for epsilon={epsilon}, divergence={divergence}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        writer.writerow(cols)
        for r in self.rows:
            writer.writerow([repr(getattr(r, c)) for c in cols])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [{c: getattr(r, c) for c in self.columns} | {"prior_exhausted": r.prior_exhausted} for r in self.rows],
            "config": self.config,
            "seed": self.seed,
            "notes": self.notes,
            "runtime_seconds": self.runtime,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        rows = []
        for r in d["rows"]:
            rows.append(
                ReportRow(
                    epsilon=int(r["epsilon"]),
                    basic_mean=r["basic_mean"],
                    basic_std=r["basic_std"],
                    bbs_mean=r["bbs_mean"],
                    bbs_std=r["bbs_std"],
                    percent_decrease=r["percent_decrease"],
                    prior_exhausted=int(r.get("prior_exhausted", 0)),
                    divergence=r.get("divergence"),
                )
            )
        return cls(rows, d["config"], int(d["seed"]), d.get("notes", {}), d.get("runtime_seconds", 0.0))

    def format_table(self) -> str:
        lead = "KLD" if "divergence" in self.columns else "eps"
        lines = [f"{lead:>8}  {'decrease':>9}  {'basic mean steps':>17}  {'BBS mean steps':>17}"]
        for r in self.rows:
            key = f"{r.divergence:g}" if r.divergence is not None else str(r.epsilon)
            lines.append(
                f"{key:>8}  {r.percent_decrease:8.2f}%  "
                f"{r.basic_mean:8.2f} ± {r.basic_std:<6.2f}  {r.bbs_mean:8.2f} ± {r.bbs_std:<6.2f}"
            )
        return "\n".join(lines)


def compare_steps(low, high, targets, epsilons: Iterable[int], prior: DensityModel, *, backend=None) -> dict:
    """Per-target step counts ``{eps: (basic, bbs, exhausted)}``."""
    out = {}
    for eps in epsilons:
        basic = kernels.classic_steps(low, high, targets, eps, backend=backend)
        bbs, exhausted = kernels.bbs_steps(low, high, targets, eps, prior, backend=backend)
        out[int(eps)] = (basic, bbs, exhausted)
    return out


def _notes(lo, hi, redraws, prior) -> dict:
    notes = {"bounds": [lo, hi], "redraws": int(redraws), "backend": kernels.BACKEND}
    if isinstance(prior, KDE):
        # full sample lists would swamp the report
        notes["prior"] = {"kind": "kde", "n_samples": len(prior.samples), "bandwidth": prior.bandwidth}
    else:
        notes["prior"] = prior.to_dict()
    return notes


def run_comparison(config: ExperimentConfig, *, backend=None) -> ExperimentReport:
    """Step-count statistics of both searches for every configured epsilon."""
    start = time.perf_counter()
    lo, hi = config.resolved_bounds()
    prior = config.resolved_prior()
    targets, redraws = draw_targets(config.distribution, config.n_targets, config.seed, (lo, hi))
    rows = []
    for eps, (basic, bbs, exhausted) in compare_steps(lo, hi, targets, config.epsilons, prior, backend=backend).items():
        rows.append(ReportRow.from_steps(eps, basic, bbs, int(exhausted.sum())))
    return ExperimentReport(
        rows=rows,
        config=config.to_dict(),
        seed=config.seed,
        notes=_notes(lo, hi, redraws, prior),
        runtime=time.perf_counter() - start,
    )


def run_kld_drift(
    mu: float,
    sigma: float,
    epsilon: int,
    n: int,
    divergences: Sequence[float],
    seed,
    *,
    bounds_multiplier: float = 4.2,
    backend=None,
) -> ExperimentReport:
    """BBS under priors shifted a given KL divergence away from ``N(mu, sigma)``.

    The classic baseline is computed once and shared by every row.
    """
    start = time.perf_counter()
    divergences = [float(d) for d in divergences]
    if not divergences:
        raise ValueError("need at least one divergence")
    if any(not (d >= 0 and math.isfinite(d)) for d in divergences):
        raise DensityError(f"divergences must be nonnegative, got {divergences}")
    truth = Normal(mu, sigma)
    lo, hi = make_bounds(truth, bounds_multiplier)
    targets, redraws = draw_targets(truth, n, seed, (lo, hi))
    basic = kernels.classic_steps(lo, hi, targets, epsilon, backend=backend)
    rows = []
    for d in divergences:
        prior = kl_shifted_normal(KlShiftSpec(mu, sigma, d))
        bbs, exhausted = kernels.bbs_steps(lo, hi, targets, epsilon, prior, backend=backend)
        rows.append(ReportRow.from_steps(epsilon, basic, bbs, int(exhausted.sum()), divergence=d))
    config = {
        "mu": float(mu),
        "sigma": float(sigma),
        "epsilon": int(epsilon),
        "n_targets": int(n),
        "divergences": divergences,
        "bounds_multiplier": float(bounds_multiplier),
        "seed": int(seed),
    }
    notes = {"bounds": [lo, hi], "redraws": int(redraws), "backend": kernels.BACKEND}
    return ExperimentReport(rows, config, int(seed), notes, time.perf_counter() - start)


SIMULATED_EPSILONS = tuple(range(1, 33))

# The bimodal multiplier and exponential tail mass reproduce the deterministic
# basic-step entries of the reference tables; the defaults (4.2, 1e-4) do not.
PRESETS = {
    "normal": dict(distribution=Normal(0.0, 10000.0), n_targets=500),
    "normal-small": dict(distribution=Normal(0.0, 100.0), n_targets=1000),
    "bimodal": dict(distribution=GaussianMixture.bimodal(0.0, 1000.0, 4000.0, 1000.0, 0.5), n_targets=1000, bounds_multiplier=2.9),
    "exponential": dict(distribution=Exponential(10000.0), n_targets=1000, tail_mass=1e-5),
}
KLD_PRESET = dict(mu=0.0, sigma=1000.0, epsilon=10, n=200, divergences=tuple(round(0.05 * i, 2) for i in range(20)))


def preset(name: str, **overrides) -> ExperimentConfig:
    """Configuration reproducing one of the reference step-count tables."""
    try:
        params = dict(PRESETS[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    params.setdefault("epsilons", SIMULATED_EPSILONS)
    params.update(overrides)
    return ExperimentConfig(**params)
