"""Classical and median-split (Bayesian) binary search over integer brackets.

A step is one sign evaluation. Both searches check the bracket width
before probing, so a bracket that is already within tolerance costs
nothing. The sign convention is ``+1`` when the probe lies above the
target and ``-1`` otherwise; ``+1`` moves ``high`` down to the probe and
``-1`` moves ``low`` up to it, so ``low <= target <= high`` holds
throughout for a target inside the starting bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from bbsearch.density import DensityModel, EmptyBracketError, TruncatedDensity
from bbsearch.kernels import halvings, max_probes

__all__ = [
    "NOT_BRACKETING",
    "PRIOR_EXHAUSTED",
    "SignOracle",
    "ProbeRecord",
    "SearchOutcome",
    "SearchState",
    "classic_search",
    "bbs_search",
    "find_median",
    "quantize",
]

NOT_BRACKETING = "not-bracketing"
PRIOR_EXHAUSTED = "prior-exhausted"


class SignOracle:
    """Compares probe points against a hidden integer target."""

    def __init__(self, target: int):
        self._target = int(target)
        self.probe_count = 0

    def sign(self, x: int) -> int:
        self.probe_count += 1
        return 1 if x > self._target else -1

    __call__ = sign

    def in_bracket(self, low: int, high: int) -> bool:
        """Whether the target lies in ``[low, high]``; not counted as a probe."""
        return low <= self._target <= high


@dataclass(frozen=True)
class ProbeRecord:
    x: int
    sign: int
    bracket: int  # high - low after applying this probe

    def to_dict(self) -> dict:
        return {"x": self.x, "sign": self.sign, "bracket": self.bracket}


@dataclass(frozen=True)
class SearchOutcome:
    steps: int
    final_low: int
    final_high: int
    trace: tuple[ProbeRecord, ...] = ()
    flags: tuple[str, ...] = ()

    @property
    def prior_exhausted(self) -> bool:
        return PRIOR_EXHAUSTED in self.flags

    @property
    def bracketing(self) -> bool:
        return NOT_BRACKETING not in self.flags

    def brackets(self, low: int, high: int) -> list[tuple[int, int]]:
        """Replay the trace from ``[low, high]``: the bracket before every probe, then the final one."""
        out = [(low, high)]
        for rec in self.trace:
            low, high = (low, rec.x) if rec.sign > 0 else (rec.x, high)
            out.append((low, high))
        return out

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "final_low": self.final_low,
            "final_high": self.final_high,
            "flags": list(self.flags),
            "trace": [r.to_dict() for r in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchOutcome":
        trace = tuple(ProbeRecord(int(r["x"]), int(r["sign"]), int(r["bracket"])) for r in d["trace"])
        return cls(int(d["steps"]), int(d["final_low"]), int(d["final_high"]), trace, tuple(d["flags"]))


@dataclass
class SearchState:
    low: int
    high: int
    epsilon: int
    prior: TruncatedDensity | None = None
    flags: list[str] = field(default_factory=list)
    steps: int = 0
    cap: int = 0

    @property
    def done(self) -> bool:
        return self.high - self.low <= self.epsilon

    def apply(self, x: int, sign: int) -> None:
        if sign > 0:
            self.high = x
        else:
            self.low = x


def quantize(x: float, low: int, high: int) -> int:
    """Round half-down to an integer, then clamp into ``[low + 1, high - 1]``."""
    m = math.ceil(x - 0.5)
    return min(max(m, low + 1), high - 1)


def find_median(density: TruncatedDensity, low: int, high: int) -> int:
    """Integer probe point splitting the mass of ``density`` on ``[low, high]`` in half.

    For ``high - low >= 2`` the result lies strictly inside the bracket, so
    every probe shrinks it.
    """
    if (density.low, density.high) != (low, high):
        density = density.truncate(low, high)
    return quantize(density.median(), low, high)


def _validate(low, high, epsilon) -> tuple[int, int, int]:
    if int(low) != low or int(high) != high:
        raise ValueError("bracket endpoints must be integers")
    low, high, epsilon = int(low), int(high), int(epsilon)
    if not low < high:
        raise ValueError(f"need low < high, got [{low}, {high}]")
    if epsilon < 1:
        raise ValueError(f"epsilon must be >= 1, got {epsilon}")
    return low, high, epsilon


def _run(state: SearchState, oracle, choose: Callable[[SearchState], int], refresh) -> SearchOutcome:
    in_bracket = getattr(oracle, "in_bracket", None)
    if in_bracket is not None and not in_bracket(state.low, state.high):
        state.flags.append(NOT_BRACKETING)
    state.cap = cap = max_probes(state.high - state.low, state.epsilon)
    trace = []
    while not state.done:
        if len(trace) >= cap:
            raise RuntimeError(f"search exceeded its cap of {cap} probes")
        x = choose(state)
        s = oracle.sign(x)
        state.apply(x, s)
        state.steps += 1
        trace.append(ProbeRecord(x, s, state.high - state.low))
        if not state.done:
            refresh(state)
    return SearchOutcome(len(trace), state.low, state.high, tuple(trace), tuple(state.flags))


def _midpoint(state: SearchState) -> int:
    return (state.low + state.high) // 2


def classic_search(low: int, high: int, oracle, epsilon: int) -> SearchOutcome:
    """Floor-midpoint binary search until ``high - low <= epsilon``."""
    state = SearchState(*_validate(low, high, epsilon))
    return _run(state, oracle, _midpoint, lambda s: None)


def _truncate_or_exhaust(state: SearchState, density) -> None:
    try:
        state.prior = density.truncate(state.low, state.high)
    except EmptyBracketError:
        state.prior = None
        state.flags.append(PRIOR_EXHAUSTED)


def bbs_search(low: int, high: int, prior: DensityModel | TruncatedDensity, oracle, epsilon: int) -> SearchOutcome:
    """Binary search that probes at the median of ``prior`` truncated to the bracket.

    When the prior has no mass left on the bracket, or when the remaining
    probe budget only covers plain halving, the search continues with floor
    midpoints and the outcome carries the ``prior-exhausted`` flag.
    """
    state = SearchState(*_validate(low, high, epsilon))
    if not state.done:
        _truncate_or_exhaust(state, prior)

    def choose(st: SearchState) -> int:
        if st.prior is not None and st.steps + halvings(st.high - st.low, st.epsilon) >= st.cap:
            # only plain halving still fits in the probe cap
            st.prior = None
            st.flags.append(PRIOR_EXHAUSTED)
        if st.prior is None:
            return _midpoint(st)
        return find_median(st.prior, st.low, st.high)

    def refresh(st: SearchState) -> None:
        if st.prior is not None:
            _truncate_or_exhaust(st, st.prior)

    return _run(state, oracle, choose, refresh)
