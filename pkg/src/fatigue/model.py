"""Core types for repeated choice with frequency-dependent fatigue.

A decision maker picks one action per period. Taking action ``a`` at period
``t`` pays ``(1 - gamma * phi) * u(a)``, where ``phi`` is the share of the
first ``t - 1`` periods in which ``a`` was chosen. This module holds the
problem description, histories with exact count bookkeeping, frequency
vectors, stage/average payoff evaluation and running-extrema traces.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

SIMPLEX_TOL = 1e-12


class SpecError(ValueError):
    """Raised for malformed problem descriptions."""


class InvariantViolation(AssertionError):
    """A mathematical guarantee was observed to fail at runtime."""


@dataclass(frozen=True)
class ProblemSpec:
    """Actions with basic payoffs and a fatigue factor in (0, 1]."""

    actions: tuple[str, ...]
    payoffs: tuple[float, ...]
    gamma: float

    def __post_init__(self):
        if len(self.actions) == 0:
            raise SpecError("at least one action is required")
        if len(self.actions) != len(self.payoffs):
            raise SpecError("actions and payoffs differ in length")
        if len(set(self.actions)) != len(self.actions):
            dup = sorted({a for a in self.actions if self.actions.count(a) > 1})
            raise SpecError(f"duplicate action name(s): {', '.join(dup)}")
        for a, u in zip(self.actions, self.payoffs):
            if not isinstance(a, str) or not a:
                raise SpecError(f"action identifiers must be non-empty strings, got {a!r}")
            if not math.isfinite(u):
                raise SpecError(f"payoff of {a!r} must be finite, got {u!r}")
            if u < 0:
                raise SpecError(f"payoff of {a!r} must be nonnegative, got {u!r}")
        g = self.gamma
        if not math.isfinite(g) or g <= 0:
            raise SpecError(
                f"gamma must be strictly positive (gamma = 0 removes fatigue and is excluded), got {g!r}"
            )
        if g > 1:
            raise SpecError(f"gamma must be at most 1, got {g!r}")

    @property
    def n(self) -> int:
        return len(self.actions)

    def index(self, action: str) -> int:
        try:
            return self.actions.index(action)
        except ValueError:
            raise KeyError(f"unknown action {action!r}") from None

    def payoff(self, action: str) -> float:
        return self.payoffs[self.index(action)]

    @property
    def max_payoff(self) -> float:
        return max(self.payoffs)

    def as_dict(self) -> dict[str, Any]:
        return {
            "actions": [{"name": a, "payoff": u} for a, u in zip(self.actions, self.payoffs)],
            "gamma": self.gamma,
        }


def _as_float(value, what: str) -> float:
    if isinstance(value, bool):
        raise SpecError(f"{what} must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise SpecError(f"{what} must be a number, got {value!r}") from None


def validate_spec(raw, gamma=None) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from a loose description.

    Accepted shapes::

        validate_spec({"a": 1, "b": 10}, gamma=1.0)
        validate_spec([("a", 1), ("b", 10)], gamma=1.0)
        validate_spec({"actions": [{"name": "a", "payoff": 1}], "gamma": 0.5})

    Raises :class:`SpecError` for an empty action set, negative or
    non-finite payoffs, gamma outside (0, 1] and duplicate names.
    """
    if isinstance(raw, ProblemSpec):
        return raw if gamma is None else ProblemSpec(raw.actions, raw.payoffs, _as_float(gamma, "gamma"))

    if isinstance(raw, Mapping) and "actions" in raw:
        extra = set(raw) - {"actions", "gamma"}
        if extra:
            raise SpecError(f"unknown key(s) in spec: {', '.join(sorted(map(str, extra)))}")
        if gamma is None:
            if "gamma" not in raw:
                raise SpecError("gamma is required")
            gamma = raw["gamma"]
        pairs = []
        entries = raw["actions"]
        if not isinstance(entries, Sequence) or isinstance(entries, str):
            raise SpecError("actions must be a list")
        for i, entry in enumerate(entries):
            if not isinstance(entry, Mapping):
                raise SpecError(f"actions[{i}] must be a mapping with name and payoff")
            extra = set(entry) - {"name", "payoff"}
            if extra:
                raise SpecError(f"unknown key(s) in actions[{i}]: {', '.join(sorted(map(str, extra)))}")
            if "name" not in entry or "payoff" not in entry:
                raise SpecError(f"actions[{i}] needs both name and payoff")
            pairs.append((entry["name"], entry["payoff"]))
    elif isinstance(raw, Mapping):
        pairs = list(raw.items())
    else:
        pairs = [tuple(p) for p in raw]

    if gamma is None:
        raise SpecError("gamma is required")
    actions = tuple(str(a) if not isinstance(a, str) else a for a, _ in pairs)
    payoffs = tuple(_as_float(u, f"payoff of {a!r}") for a, u in pairs)
    return ProblemSpec(actions, payoffs, _as_float(gamma, "gamma"))


@dataclass(frozen=True)
class FrequencyVector:
    """A point of the simplex over ``actions`` (or the all-zero vector)."""

    actions: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.actions) != len(self.weights):
            raise ValueError("actions and weights differ in length")
        for a, w in zip(self.actions, self.weights):
            if not (-SIMPLEX_TOL <= w <= 1 + SIMPLEX_TOL):
                raise ValueError(f"weight of {a!r} outside [0, 1]: {w!r}")
        total = math.fsum(self.weights)
        if not (abs(total - 1.0) <= SIMPLEX_TOL or all(w == 0 for w in self.weights)):
            raise ValueError(f"weights must sum to 1 (or all be zero), got sum {total!r}")

    @classmethod
    def zeros(cls, actions: Sequence[str]) -> FrequencyVector:
        return cls(tuple(actions), (0.0,) * len(actions))

    @classmethod
    def from_counts(cls, actions: Sequence[str], counts: Sequence[int]) -> FrequencyVector:
        t = sum(counts)
        if t == 0:
            return cls.zeros(actions)
        return cls(tuple(actions), tuple(c / t for c in counts))

    @classmethod
    def from_mapping(cls, actions: Sequence[str], weights, tol: float = 1e-9) -> FrequencyVector:
        """Coerce a mapping or sequence into a simplex point over ``actions``.

        The input must lie on the simplex within ``tol``; it is then
        renormalized so the stored weights satisfy the strict invariant.
        """
        if isinstance(weights, FrequencyVector):
            if weights.actions != tuple(actions):
                weights = weights.as_dict()
            else:
                return weights
        if isinstance(weights, Mapping):
            unknown = set(weights) - set(actions)
            if unknown:
                raise ValueError(f"unknown action(s) in frequency vector: {sorted(unknown)}")
            w = [float(weights.get(a, 0.0)) for a in actions]
        else:
            w = [float(v) for v in weights]
            if len(w) != len(actions):
                raise ValueError(f"expected {len(actions)} weights, got {len(w)}")
        if any(not math.isfinite(v) or v < -tol for v in w):
            raise ValueError(f"frequency vector has negative or non-finite entries: {w}")
        total = math.fsum(w)
        if abs(total - 1.0) > tol:
            raise ValueError(f"frequency vector not on the simplex (sum = {total!r})")
        w = [max(v, 0.0) for v in w]
        total = math.fsum(w)
        return cls(tuple(actions), tuple(v / total for v in w))

    def __getitem__(self, action: str) -> float:
        return self.weights[self.actions.index(action)]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.actions, self.weights))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(a for a, w in zip(self.actions, self.weights) if w > 0)


class History:
    """A finite sequence of actions with incrementally maintained counts.

    Periods are numbered from 1 as in the model. Steps are stored as action
    indices into ``actions``.
    """

    __slots__ = ("actions", "_index", "_steps", "_counts", "_cum")

    def __init__(self, actions: Sequence[str], steps: Iterable[str] = ()):
        self.actions = tuple(actions)
        if len(set(self.actions)) != len(self.actions):
            raise ValueError("duplicate action names")
        self._index = {a: i for i, a in enumerate(self.actions)}
        self._steps: list[int] = []
        self._counts = [0] * len(self.actions)
        self._cum = None
        self.extend(steps)

    @classmethod
    def from_indices(cls, actions: Sequence[str], indices: Iterable[int]) -> History:
        h = cls(actions)
        n = len(h.actions)
        steps = [int(i) for i in indices]
        for i in steps:
            if not 0 <= i < n:
                raise ValueError(f"action index {i} out of range")
        h._steps = steps
        counts = [0] * n
        for i in steps:
            counts[i] += 1
        h._counts = counts
        return h

    def append(self, action: str) -> None:
        try:
            i = self._index[action]
        except KeyError:
            raise KeyError(f"unknown action {action!r}") from None
        self._steps.append(i)
        self._counts[i] += 1
        self._cum = None

    def append_index(self, i: int) -> None:
        self._steps.append(i)
        self._counts[i] += 1
        self._cum = None

    def extend(self, actions: Iterable[str]) -> None:
        for a in actions:
            self.append(a)

    def __len__(self) -> int:
        return len(self._steps)

    @property
    def length(self) -> int:
        return len(self._steps)

    def __iter__(self):
        acts = self.actions
        return (acts[i] for i in self._steps)

    def __eq__(self, other) -> bool:
        if not isinstance(other, History):
            return NotImplemented
        return self.actions == other.actions and self._steps == other._steps

    def __repr__(self) -> str:
        head = ",".join(self.actions[i] for i in self._steps[:12])
        more = ",..." if len(self._steps) > 12 else ""
        return f"History(len={len(self)}, steps=({head}{more}))"

    def action_at(self, t: int) -> str:
        """Action chosen in period ``t`` (1-based)."""
        if not 1 <= t <= len(self._steps):
            raise IndexError(f"period {t} outside 1..{len(self._steps)}")
        return self.actions[self._steps[t - 1]]

    @property
    def steps(self) -> tuple[str, ...]:
        return tuple(self)

    @property
    def indices(self) -> np.ndarray:
        return np.asarray(self._steps, dtype=np.int64)

    def index_list(self) -> list[int]:
        return list(self._steps)

    @property
    def counts(self) -> dict[str, int]:
        return dict(zip(self.actions, self._counts))

    def count_vector(self) -> tuple[int, ...]:
        return tuple(self._counts)

    def recount(self) -> dict[str, int]:
        """Counts recomputed from the raw steps, for auditing ``counts``."""
        fresh = [0] * len(self.actions)
        for i in self._steps:
            fresh[i] += 1
        return dict(zip(self.actions, fresh))

    def prefix_counts(self, t: int) -> tuple[int, ...]:
        """Occurrence counts over periods ``1..t``."""
        if not 0 <= t <= len(self._steps):
            raise IndexError(f"prefix length {t} outside 0..{len(self._steps)}")
        if t == len(self._steps):
            return tuple(self._counts)
        return tuple(int(c) for c in self.cumulative_counts()[t])

    def cumulative_counts(self) -> np.ndarray:
        """Array of shape ``(len + 1, |A|)``; row ``t`` holds counts over ``1..t``."""
        if self._cum is None:
            n = len(self.actions)
            cum = np.zeros((len(self._steps) + 1, n), dtype=np.int64)
            if self._steps:
                idx = self.indices
                onehot = np.zeros((len(idx), n), dtype=np.int64)
                onehot[np.arange(len(idx)), idx] = 1
                np.cumsum(onehot, axis=0, out=cum[1:])
            self._cum = cum
        return self._cum

    def prefix(self, t: int) -> History:
        if not 0 <= t <= len(self._steps):
            raise IndexError(f"prefix length {t} outside 0..{len(self._steps)}")
        return History.from_indices(self.actions, self._steps[:t])

    def copy(self) -> History:
        return History.from_indices(self.actions, self._steps)


def stage_value(u: float, gamma: float, count: int, t: int) -> float:
    """Stage payoff of an action with basic payoff ``u`` chosen ``count``
    times in the previous ``t`` periods.

    Every evaluator in the package funnels through this exact expression so
    that independently computed totals agree bit for bit.
    """
    if t == 0:
        return u
    return (1.0 - gamma * (count / t)) * u


def _check_actions(spec: ProblemSpec, h: History) -> None:
    if h.actions != spec.actions:
        raise ValueError(f"history actions {h.actions} do not match spec actions {spec.actions}")


def frequency(h: History, t: int) -> FrequencyVector:
    """Empirical frequencies over the first ``t`` periods; all zeros at ``t = 0``."""
    if not 0 <= t <= len(h):
        raise IndexError(f"t = {t} outside 0..{len(h)}")
    return FrequencyVector.from_counts(h.actions, h.prefix_counts(t))


def stage_payoff(spec: ProblemSpec, h: History, t: int) -> float:
    if not 1 <= t <= len(h):
        raise IndexError(f"t = {t} outside 1..{len(h)}")
    _check_actions(spec, h)
    i = h._steps[t - 1]
    count = h.prefix_counts(t - 1)[i]
    return stage_value(spec.payoffs[i], spec.gamma, count, t - 1)


def stage_payoffs(spec: ProblemSpec, h: History, T: int | None = None) -> np.ndarray:
    """Vector of stage payoffs for periods ``1..T`` computed from scratch."""
    _check_actions(spec, h)
    T = len(h) if T is None else T
    if not 0 <= T <= len(h):
        raise IndexError(f"T = {T} outside 0..{len(h)}")
    idx = h.indices[:T]
    cum = h.cumulative_counts()
    before = cum[np.arange(T), idx]
    u = np.asarray(spec.payoffs, dtype=float)[idx]
    t = np.arange(T)
    out = u.copy()
    pos = t > 0
    out[pos] = (1.0 - spec.gamma * (before[pos] / t[pos])) * u[pos]
    return out


def average_utility(spec: ProblemSpec, h: History, T: int) -> float:
    """Mean stage payoff over periods ``1..T`` (from scratch, compensated sum)."""
    if not 1 <= T <= len(h):
        raise IndexError(f"T = {T} outside 1..{len(h)}")
    return math.fsum(stage_payoffs(spec, h, T)) / T


HistorySource = Union[History, Iterable[str]]


@dataclass
class UtilityTrace:
    """Streaming record of the average utilities ``U^1, U^2, ...``.

    ``times``/``values`` hold the retained points (every ``keep_every``-th
    period plus the last one). ``running_min``/``running_max`` are exact
    extrema over all periods ``T > burn_in`` regardless of decimation.
    """

    length: int
    burn_in: int
    keep_every: int
    times: np.ndarray
    values: np.ndarray
    running_min: float
    running_max: float
    argmin: int
    argmax: int
    final: float
    counts: tuple[int, ...] = field(default=())

    def value_at(self, T: int) -> float:
        """Retained ``U^T``; raises if period ``T`` was decimated away."""
        pos = np.searchsorted(self.times, T)
        if pos >= len(self.times) or self.times[pos] != T:
            raise KeyError(f"U^{T} not retained (keep_every={self.keep_every})")
        return float(self.values[pos])


def _iter_indices(spec: ProblemSpec, source: HistorySource):
    if isinstance(source, History):
        _check_actions(spec, source)
        return iter(source._steps)
    lookup = {a: i for i, a in enumerate(spec.actions)}

    def gen():
        for a in source:
            try:
                yield lookup[a]
            except KeyError:
                raise KeyError(f"generator produced unknown action {a!r}") from None

    return gen()


def utility_trace(
    spec: ProblemSpec,
    source: HistorySource,
    T_max: int,
    burn_in: int | None = None,
    keep_every: int = 1,
) -> UtilityTrace:
    """Stream ``U^T`` for ``T = 1..T_max`` with O(1) work per period.

    ``source`` is a :class:`History` or any iterable of action names (a
    generator is consumed lazily). ``burn_in`` defaults to ``T_max // 10``.
    """
    if T_max < 1:
        raise ValueError("T_max must be >= 1")
    if keep_every < 1:
        raise ValueError("keep_every must be >= 1")
    if burn_in is None:
        burn_in = T_max // 10
    if not 0 <= burn_in < T_max:
        raise ValueError(f"burn_in must lie in [0, T_max), got {burn_in}")

    u = spec.payoffs
    g = spec.gamma
    counts = [0] * spec.n
    it = _iter_indices(spec, source)
    n_keep = T_max // keep_every + 1
    times = np.empty(n_keep, dtype=np.int64)
    values = np.empty(n_keep, dtype=float)
    kept = 0
    # Neumaier-compensated running total
    total = 0.0
    comp = 0.0
    lo, hi = math.inf, -math.inf
    arg_lo = arg_hi = 0
    avg = 0.0
    for t in range(T_max):
        try:
            i = next(it)
        except StopIteration:
            raise ValueError(f"history source exhausted after {t} steps (needed {T_max})") from None
        x = u[i] if t == 0 else (1.0 - g * (counts[i] / t)) * u[i]
        counts[i] += 1
        s = total + x
        if abs(total) >= abs(x):
            comp += (total - s) + x
        else:
            comp += (x - s) + total
        total = s
        T = t + 1
        avg = (total + comp) / T
        if T > burn_in:
            if avg < lo:
                lo, arg_lo = avg, T
            if avg > hi:
                hi, arg_hi = avg, T
        if T % keep_every == 0:
            times[kept] = T
            values[kept] = avg
            kept += 1
    if kept == 0 or times[kept - 1] != T_max:
        times[kept] = T_max
        values[kept] = avg
        kept += 1
    return UtilityTrace(
        length=T_max,
        burn_in=burn_in,
        keep_every=keep_every,
        times=times[:kept].copy(),
        values=values[:kept].copy(),
        running_min=lo,
        running_max=hi,
        argmin=arg_lo,
        argmax=arg_hi,
        final=avg,
        counts=tuple(counts),
    )


def empirical_limits(trace: UtilityTrace, burn_in: int | None = None) -> tuple[float, float]:
    """``(min, max)`` of ``U^T`` over ``T > burn_in``.

    These are finite-horizon *estimates* of the lim inf and lim sup of the
    average utilities of the underlying infinite history; they are exact
    only in the limit and may over- or undershoot at any finite length.
    """
    if burn_in is None:
        burn_in = trace.burn_in
    if burn_in >= trace.length:
        raise ValueError(f"burn_in {burn_in} must be smaller than the trace length {trace.length}")
    if burn_in == trace.burn_in:
        return trace.running_min, trace.running_max
    if trace.keep_every != 1:
        raise ValueError("a decimated trace only supports its own burn_in")
    tail = trace.values[burn_in:]
    return float(tail.min()), float(tail.max())
