"""``bbsearch`` command line: simulated tables, KL drift, channel probing, tree export.

Exit codes: 0 success, 1 runtime failure, 2 usage error. When ``--seed``
is omitted the ``BBS_SEED`` environment variable is used, then 0.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from bbsearch import __version__
from bbsearch.density import DensityError, Exponential, GaussianMixture, KlShiftSpec, Normal, Uniform
from bbsearch.experiments import PRESETS, SIMULATED_EPSILONS, ExperimentConfig, draw_targets, run_comparison, run_kld_drift
from bbsearch.lightning import (
    DEFAULT_EPSILONS as LIGHTNING_EPSILONS,
    SnapshotError,
    SyntheticPredictorConfig,
    load_snapshot,
    run_probing_comparison,
    synthetic_snapshot,
)
from bbsearch.search import SignOracle, bbs_search, classic_search
from bbsearch.tree import TreeAggregate

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

DIST_PARAMS = {
    "normal": ("mu", "sigma"),
    "exponential": ("scale",),
    "uniform": ("low", "high"),
    "bimodal": ("mu1", "sigma1", "mu2", "sigma2", "w1"),
}


class UsageError(Exception):
    """Bad flag values that argparse itself cannot catch."""


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- flag parsing helpers ----


def parse_params(text: str | None) -> dict[str, float]:
    """``"mu=0,sigma=10000"`` -> ``{"mu": 0.0, "sigma": 10000.0}``."""
    out: dict[str, float] = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"--params entries must look like key=value, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"--params value for {key!r} is not a number: {value!r}") from None
    return out


def build_distribution(name: str, params: dict[str, float]):
    expected = DIST_PARAMS[name]
    missing = [k for k in expected if k not in params]
    unknown = sorted(set(params) - set(expected))
    if missing or unknown:
        raise UsageError(f"--dist {name} takes params {','.join(expected)}; missing {missing}, unknown {unknown}")
    p = params
    try:
        if name == "normal":
            return Normal(p["mu"], p["sigma"])
        if name == "exponential":
            return Exponential(p["scale"])
        if name == "uniform":
            return Uniform(p["low"], p["high"])
        return GaussianMixture.bimodal(p["mu1"], p["sigma1"], p["mu2"], p["sigma2"], p["w1"])
    except DensityError as exc:
        raise UsageError(str(exc)) from None


def parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag} must be a comma separated list of integers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} is empty")
    return values


def check_epsilons(values) -> list[int]:
    bad = [e for e in values if e < 1]
    if bad:
        raise UsageError(f"epsilon must be >= 1, got {bad[0]}")
    return sorted(set(values))


def resolve_epsilons(args, default) -> list[int]:
    if args.eps_list is not None:
        if args.eps_min is not None or args.eps_max is not None:
            raise UsageError("use either --eps-list or --eps-min/--eps-max, not both")
        return check_epsilons(parse_int_list(args.eps_list, "--eps-list"))
    if args.eps_min is None and args.eps_max is None:
        return list(default)
    lo = args.eps_min if args.eps_min is not None else min(default)
    hi = args.eps_max if args.eps_max is not None else max(default)
    check_epsilons([lo, hi])
    if hi < lo:
        raise UsageError(f"--eps-max {hi} is below --eps-min {lo}")
    return list(range(lo, hi + 1))


def parse_grid(text: str) -> list[float]:
    """``"0:0.95:0.05"`` (inclusive range) or ``"0,0.1,0.5"``."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if not step > 0:
                raise UsageError(f"--d-grid step must be positive, got {step}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(max(count, 0))]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --d-grid {text!r}; use start:stop:step or a comma list") from None
    if not values:
        raise UsageError(f"--d-grid {text!r} is empty")
    bad = [d for d in values if not (d >= 0 and math.isfinite(d))]
    if bad:
        raise UsageError(f"divergences must be nonnegative, got {bad[0]}")
    return values


def parse_bounds(text: str | None):
    if text is None:
        return None
    values = parse_int_list(text, "--bounds")
    if len(values) != 2 or values[0] >= values[1]:
        raise UsageError(f"--bounds needs LOW,HIGH with LOW < HIGH, got {text!r}")
    return tuple(values)


def resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("BBS_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"BBS_SEED must be an integer, got {env!r}") from None


def emit(report_text: str, table: str, out) -> None:
    """Write the report to ``out`` (``-`` for stdout) and show the table."""
    if out == "-":
        sys.stdout.write(report_text)
        return
    if out is not None:
        write_atomic(out, report_text)
    print(table)


def _render(report, fmt: str) -> str:
    return report.to_csv() if fmt == "csv" else report.to_json() + "\n"


# ---- commands ----


def _distribution_from_args(args):
    if args.dist is None:
        raise UsageError("--dist is required unless --preset or --config is given")
    return build_distribution(args.dist, parse_params(args.params))


def _simulate_config(args) -> ExperimentConfig:
    seed = resolve_seed(args)
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read --config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"--config {args.config} is not valid JSON: {exc.msg}") from None
        if args.seed is not None or "seed" not in data:
            data["seed"] = seed
        return ExperimentConfig.from_dict(data)

    params: dict = {}
    if args.preset is not None:
        params.update(PRESETS[args.preset])
    if args.dist is not None or args.preset is None:
        params["distribution"] = _distribution_from_args(args)
    if args.n is not None:
        params["n_targets"] = args.n
    params.setdefault("n_targets", 500)
    if args.bounds_multiplier is not None:
        params["bounds_multiplier"] = args.bounds_multiplier
    if args.tail_mass is not None:
        params["tail_mass"] = args.tail_mass
    params["bounds"] = parse_bounds(args.bounds)
    params["epsilons"] = resolve_epsilons(args, SIMULATED_EPSILONS)
    params["seed"] = seed
    prior = args.prior
    if prior.startswith("kl:"):
        dist = params["distribution"]
        if not isinstance(dist, Normal):
            raise UsageError("--prior kl:D needs --dist normal")
        try:
            d = float(prior[3:])
        except ValueError:
            raise UsageError(f"--prior kl:D needs a number, got {prior!r}") from None
        if not d >= 0:
            raise UsageError(f"divergence must be nonnegative, got {d}")
        prior = KlShiftSpec(dist.mu, dist.sigma, d)
    elif prior not in ("true", "uniform"):
        raise UsageError(f"--prior must be true, uniform or kl:D, got {prior!r}")
    params["prior"] = prior
    return ExperimentConfig(**params)


def cmd_simulate(args) -> int:
    try:
        config = _simulate_config(args)
    except (DensityError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    report = run_comparison(config)
    emit(_render(report, args.format), report.format_table(), args.out)
    return EXIT_OK


def cmd_kld_drift(args) -> int:
    if args.eps < 1:
        raise UsageError(f"epsilon must be >= 1, got {args.eps}")
    if not args.sigma > 0:
        raise UsageError(f"--sigma must be positive, got {args.sigma}")
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    grid = parse_grid(args.d_grid)
    report = run_kld_drift(args.mu, args.sigma, args.eps, args.n, grid, resolve_seed(args), bounds_multiplier=args.bounds_multiplier)
    emit(_render(report, args.format), report.format_table(), args.out)
    return EXIT_OK


def _parse_synthetic(text: str) -> int:
    value = text.split("=", 1)[1] if text.startswith("n=") else text
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"--synthetic takes a channel count such as n=89, got {text!r}") from None
    if n < 1:
        raise UsageError(f"--synthetic needs at least one channel, got {n}")
    return n


def cmd_lightning(args) -> int:
    seed = resolve_seed(args)
    epsilons = resolve_epsilons(args, LIGHTNING_EPSILONS)
    try:
        predictor = SyntheticPredictorConfig(args.n_trees, args.noise_std_fraction, args.bias_fraction, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.snapshot is not None:
        if not Path(args.snapshot).is_file():
            raise UsageError(f"snapshot file not found: {args.snapshot}")
        channels = load_snapshot(args.snapshot, predictor)
    else:
        channels = synthetic_snapshot(_parse_synthetic(args.synthetic), seed, predictor)
    report = run_probing_comparison(channels, epsilons, predictor)
    emit(_render(report, args.format), report.format_table(), args.out)
    for failure in report.notes["failures"]:
        print(f"warning: channel {failure['id']} skipped: {failure['error']}", file=sys.stderr)
    return EXIT_OK


def build_tree(distribution, n: int, epsilon: int, algo: str, seed: int, bounds=None, prior: str = "true") -> tuple[TreeAggregate, dict]:
    """Aggregate ``n`` searches over targets drawn from ``distribution``."""
    config = ExperimentConfig(distribution, n, (epsilon,), seed, prior, bounds=bounds)
    lo, hi = config.resolved_bounds()
    density = config.resolved_prior()
    targets, _ = draw_targets(distribution, n, seed, (lo, hi))
    cache = {}
    tree = TreeAggregate(lo, hi)
    for t in targets.tolist():
        out = cache.get(t)
        if out is None:
            oracle = SignOracle(t)
            if algo == "basic":
                out = classic_search(lo, hi, oracle, epsilon)
            else:
                out = bbs_search(lo, hi, density, oracle, epsilon)
            cache[t] = out
        tree.add(out)
    meta = {
        "tool": f"bbsearch {__version__}",
        "algo": algo,
        "distribution": distribution.to_dict(),
        "prior": prior if algo == "bbs" else None,
        "bounds": [lo, hi],
        "epsilon": int(epsilon),
        "n": int(n),
        "seed": int(seed),
    }
    return tree, meta


def cmd_tree(args) -> int:
    if args.eps < 1:
        raise UsageError(f"epsilon must be >= 1, got {args.eps}")
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    distribution = _distribution_from_args(args)
    try:
        tree, meta = build_tree(distribution, args.n, args.eps, args.algo, resolve_seed(args), parse_bounds(args.bounds), args.prior)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    dot = tree.to_dot(meta)
    depths = tree.terminal_depths()
    summary = "depth  terminations\n" + "\n".join(f"{d:>5}  {depths[d]:>12}" for d in sorted(depths))
    emit(dot, summary, args.out)
    return EXIT_OK


# ---- parser ----


def _add_eps_flags(p, default_text: str) -> None:
    p.add_argument("--eps-list", help=f"comma separated tolerances (default {default_text})")
    p.add_argument("--eps-min", type=int, help="smallest tolerance of an inclusive integer range")
    p.add_argument("--eps-max", type=int, help="largest tolerance of an inclusive integer range")


def _add_common(p, formats=True) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $BBS_SEED, else 0)")
    p.add_argument("--out", help="output file; '-' writes the report to stdout instead of the table")
    if formats:
        p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_dist(p) -> None:
    p.add_argument("--dist", choices=sorted(DIST_PARAMS), help="target distribution")
    p.add_argument(
        "--params",
        help="distribution parameters as key=value pairs: "
        + "; ".join(f"{k}: {','.join(v)}" for k, v in DIST_PARAMS.items()),
    )
    p.add_argument("--bounds", help="explicit search bounds LOW,HIGH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbsearch", description="Classic vs median-split binary search experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="step counts for targets drawn from a distribution")
    _add_dist(p)
    p.add_argument("--preset", choices=sorted(PRESETS), help="reference configuration; explicit flags override it")
    p.add_argument("--config", help="JSON experiment config file (replaces the distribution flags)")
    p.add_argument("--n", type=int, help="number of targets (default 500)")
    p.add_argument("--prior", default="true", help="true, uniform, or kl:D for a normal prior shifted by divergence D")
    p.add_argument("--bounds-multiplier", type=float, help="bounds half-width in standard deviations (default 4.2)")
    p.add_argument("--tail-mass", type=float, help="exponential upper-tail mass left outside the bounds (default 1e-5)")
    _add_eps_flags(p, "1..32")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kld-drift", help="BBS with normal priors shifted by a KL divergence")
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1000.0)
    p.add_argument("--eps", type=int, default=10)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--d-grid", default="0:0.95:0.05", help="divergences as start:stop:step or a comma list")
    p.add_argument("--bounds-multiplier", type=float, default=4.2)
    _add_common(p)
    p.set_defaults(func=cmd_kld_drift)

    p = sub.add_parser("lightning", help="probe counts to locate channel balances")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--snapshot", help="JSON snapshot of channels")
    src.add_argument("--synthetic", default="n=89", help="generate n random channels, e.g. n=89 (default)")
    p.add_argument("--n-trees", type=int, default=100, help="predictions per channel")
    p.add_argument("--noise-std-fraction", type=float, default=0.1, help="prediction noise std as a share of capacity")
    p.add_argument("--bias-fraction", type=float, default=0.0, help="prediction bias as a share of capacity")
    _add_eps_flags(p, "128,256,...,16384")
    _add_common(p)
    p.set_defaults(func=cmd_lightning)

    p = sub.add_parser("tree", help="aggregate search trees as a DOT graph")
    _add_dist(p)
    p.add_argument("--n", type=int, default=10000, help="number of searches (default 10000)")
    p.add_argument("--eps", type=int, required=True, help="stopping tolerance")
    p.add_argument("--algo", choices=("basic", "bbs"), default="bbs")
    p.add_argument("--prior", choices=("true", "uniform"), default="true")
    _add_common(p, formats=False)
    p.set_defaults(func=cmd_tree)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on malformed flags
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bbsearch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SnapshotError, DensityError, ValueError, RuntimeError, OSError) as exc:
        print(f"bbsearch {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
