"""History generators, block statistics and pairwise-swap improvement.

Generators come in two flavours: ``iter_*`` functions yield action names
forever (feed them to :func:`fatigue.model.utility_trace`), ``generate_*``
functions materialize a :class:`History` of a given length.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .model import (
    FrequencyVector,
    History,
    InvariantViolation,
    ProblemSpec,
    stage_payoffs,
    stage_value,
)
from .stationary import optimal_stationary

# ---------------------------------------------------------------------------
# generators


def iter_greedy(spec: ProblemSpec) -> Iterator[str]:
    """Myopic strategy: maximize the current stage payoff, first action wins ties."""
    u, g, acts = spec.payoffs, spec.gamma, spec.actions
    n = spec.n
    counts = [0] * n
    t = 0
    while True:
        best, best_v = 0, -math.inf
        for a in range(n):
            v = stage_value(u[a], g, counts[a], t)
            if v > best_v:
                best, best_v = a, v
        counts[best] += 1
        t += 1
        yield acts[best]


def generate_greedy(spec: ProblemSpec, T: int) -> History:
    if T < 1:
        raise ValueError("T must be >= 1")
    return History(spec.actions, itertools.islice(iter_greedy(spec), T))


def _tracking_order(spec: ProblemSpec, target: FrequencyVector) -> list[int]:
    # candidates restricted to the target support; ties go to higher payoff,
    # then input order
    sup = [i for i, w in enumerate(target.weights) if w > 0]
    return sorted(sup, key=lambda i: (-spec.payoffs[i], i))


def iter_tracking(spec: ProblemSpec, target) -> Iterator[str]:
    """Pick the action whose frequency falls furthest below ``target``."""
    x = FrequencyVector.from_mapping(spec.actions, target)
    order = _tracking_order(spec, x)
    w = x.weights
    acts = spec.actions
    counts = [0] * spec.n
    t = 0  # periods so far
    while True:
        best, best_key = order[0], math.inf
        for a in order:
            key = counts[a] - t * w[a] if t else -w[a]
            if key < best_key:
                best, best_key = a, key
        counts[best] += 1
        t += 1
        yield acts[best]


def generate_tracking(spec: ProblemSpec, target, T: int) -> History:
    if T < 1:
        raise ValueError("T must be >= 1")
    return History(spec.actions, itertools.islice(iter_tracking(spec, target), T))


def iter_doubling_blocks(actions: Sequence[str] = ("a", "b")) -> Iterator[str]:
    """``a, b, a`` followed by blocks ``3*2^m + 1 .. 3*2^(m+1)`` for
    ``m = 0, 1, 2, ...``, filled with ``b`` for even ``m`` and ``a`` for odd ``m``.

    Each block is as long as the whole history before it.
    """
    a, b = actions
    yield a
    yield b
    yield a
    m = 0
    while True:
        fill = b if m % 2 == 0 else a
        for _ in range(3 * 2**m):
            yield fill
        m += 1


def generate_doubling_blocks(T: int, actions: Sequence[str] = ("a", "b")) -> History:
    if T < 3:
        raise ValueError("T must be >= 3")
    return History(tuple(actions), itertools.islice(iter_doubling_blocks(actions), T))


def iter_geometric_blocks(actions: Sequence[str], ratio: float, first: int = 1) -> Iterator[str]:
    """Alternate blocks of two actions, each block ``ratio`` times the history so far."""
    if ratio <= 0:
        raise ValueError("ratio must be positive")
    a, b = actions
    t = 0
    k = 0
    length = first
    while True:
        fill = a if k % 2 == 0 else b
        for _ in range(length):
            yield fill
        t += length
        k += 1
        length = max(1, math.ceil(ratio * t))


def apportion(x: FrequencyVector, m: int) -> list[int]:
    """Largest-remainder rounding of ``m * x`` to integers summing to ``m``."""
    raw = [w * m for w in x.weights]
    base = [math.floor(r) for r in raw]
    short = m - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:short]:
        base[i] += 1
    return base


def stationary_cycle(spec: ProblemSpec, x=None, max_denominator: int = 1000) -> tuple[str, ...]:
    """One period of a cyclic history realizing (a rational rounding of) ``x``.

    ``x`` defaults to the optimal stationary frequencies. The cycle length is
    the smallest ``m <= max_denominator`` at which apportionment reproduces
    ``x`` to 1e-12, else ``max_denominator``. Within the cycle actions are laid
    out by the tracking rule, restricted to remaining quota.
    """
    fv = optimal_stationary(spec).x if x is None else FrequencyVector.from_mapping(spec.actions, x)
    counts = None
    for m in range(1, max_denominator + 1):
        c = apportion(fv, m)
        if max(abs(ci / m - w) for ci, w in zip(c, fv.weights)) <= 1e-12:
            counts = c
            break
    if counts is None:
        m = max_denominator
        counts = apportion(fv, m)
    target = [c / m for c in counts]
    order = sorted(range(spec.n), key=lambda i: (-spec.payoffs[i], i))
    have = [0] * spec.n
    cycle = []
    for t in range(m):
        best, best_key = None, math.inf
        for a in order:
            if have[a] >= counts[a]:
                continue
            key = have[a] - t * target[a] if t else -target[a]
            if key < best_key:
                best, best_key = a, key
        have[best] += 1
        cycle.append(spec.actions[best])
    return tuple(cycle)


def iter_cyclic(cycle: Sequence[str]) -> Iterator[str]:
    return itertools.cycle(cycle)


def generate_cyclic(spec: ProblemSpec, T: int, cycle: Sequence[str] | None = None) -> History:
    cycle = stationary_cycle(spec) if cycle is None else tuple(cycle)
    return History(spec.actions, itertools.islice(itertools.cycle(cycle), T))


# ---------------------------------------------------------------------------
# block statistics


@dataclass(frozen=True)
class BlockStats:
    """Statistics of the block of periods ``t1 + 1 .. t2``.

    ``W`` is the realized mean stage payoff, ``p`` the within-block action
    frequencies, ``U_tilde`` the approximation that freezes frequencies at
    their value after ``t1``, and ``bound = 2 (t2 - t1)/t1 * gamma * sum(u)``
    caps ``|W - U_tilde|``.
    """

    t1: int
    t2: int
    W: float
    p: FrequencyVector
    U_tilde: float
    bound: float

    @property
    def gap(self) -> float:
        return abs(self.W - self.U_tilde)


def block_stats(spec: ProblemSpec, h: History, t1: int, t2: int) -> BlockStats:
    if not (1 <= t1 < t2 <= len(h)):
        raise ValueError(f"need 1 <= t1 < t2 <= {len(h)}, got t1={t1}, t2={t2}")
    stages = stage_payoffs(spec, h, t2)[t1:t2]
    L = t2 - t1
    W = math.fsum(stages) / L
    cum = h.cumulative_counts()
    before = cum[t1]
    within = cum[t2] - before
    p = FrequencyVector.from_counts(spec.actions, [int(c) for c in within])
    g = spec.gamma
    U_tilde = math.fsum(
        pw * (1.0 - g * (int(c) / t1)) * u for pw, c, u in zip(p.weights, before, spec.payoffs)
    )
    bound = 2.0 * (L / t1) * g * math.fsum(spec.payoffs)
    if abs(W - U_tilde) > bound:
        raise InvariantViolation(
            f"block ({t1}, {t2}]: |W - U~| = {abs(W - U_tilde)!r} exceeds bound {bound!r}"
        )
    return BlockStats(t1, t2, W, p, U_tilde, bound)


# ---------------------------------------------------------------------------
# swaps


class SwapError(ValueError):
    """A requested swap violates one of its preconditions."""


@dataclass(frozen=True)
class SwapRecord:
    """Exchange of an earlier action (period ``t``) with a later one (period ``s``).

    ``guaranteed_gain`` is the lower bound
    ``gamma (s - t) / ((s - 1) T) * (phi_early u_early - phi_late u_late)``
    with both frequencies taken before period ``t``; ``actual_gain`` is the
    realized change of ``U^T``.
    """

    t: int
    s: int
    action_early: str
    action_late: str
    guaranteed_gain: float
    actual_gain: float
    T: int


def _swap_bound(spec: ProblemSpec, a: int, b: int, ca: int, cb: int, t: int, s: int, T: int) -> Fraction:
    if t == 1:
        return Fraction(0)
    g = Fraction(spec.gamma)
    lead = Fraction(ca, t - 1) * Fraction(spec.payoffs[a]) - Fraction(cb, t - 1) * Fraction(spec.payoffs[b])
    return g * Fraction(s - t, (s - 1) * T) * lead


def _window_gain(spec: ProblemSpec, steps: Sequence[int], t: int, s: int, T: int, ca: int, cb: int) -> float:
    """Change in ``U^T`` from swapping periods ``t`` and ``s`` (1-based).

    Only periods ``t..s`` can change; elsewhere the prefix counts of the two
    actions agree. ``ca``/``cb`` are their counts over ``1..t-1``.
    """
    a, b = steps[t - 1], steps[s - 1]
    u, g = spec.payoffs, spec.gamma
    diffs = [stage_value(u[b], g, cb, t - 1) - stage_value(u[a], g, ca, t - 1)]
    # old history: a at t; new: b at t
    old_a, old_b = ca + 1, cb
    new_a, new_b = ca, cb + 1
    for r in range(t + 1, s):
        c = steps[r - 1]
        if c == b:
            diffs.append(stage_value(u[b], g, new_b, r - 1) - stage_value(u[b], g, old_b, r - 1))
            old_b += 1
            new_b += 1
    diffs.append(stage_value(u[a], g, new_a, s - 1) - stage_value(u[b], g, old_b, s - 1))
    return math.fsum(diffs) / T


def _check_swap(steps: Sequence[int], actions, t: int, s: int, T: int) -> None:
    n = len(steps)
    if not 1 <= t < s:
        raise SwapError(f"need 1 <= t < s, got t={t}, s={s}")
    if s > n:
        raise SwapError(f"s={s} beyond history length {n}")
    if not s <= T <= n:
        raise SwapError(f"need s <= T <= {n}, got T={T}")
    a, b = steps[t - 1], steps[s - 1]
    if a == b:
        raise SwapError(f"periods {t} and {s} hold the same action {actions[a]!r}")
    for r in range(t + 1, s):
        if steps[r - 1] == a:
            raise SwapError(
                f"action {actions[a]!r} reoccurs at period {r} between t={t} and s={s}"
            )
        if steps[r - 1] == b:
            # its stage payoff would drop by gamma u(b)/(r-1), which the bound ignores
            raise SwapError(
                f"action {actions[b]!r} also occurs at period {r} between t={t} and s={s}"
            )


def apply_swap(spec: ProblemSpec, h: History, t: int, s: int, T: int) -> tuple[History, SwapRecord]:
    """Swap periods ``t < s`` and certify the average-payoff bound at horizon ``T``.

    Preconditions: the two periods hold different actions and neither of
    the two actions occurs strictly between them. Only the stages at ``t``
    and ``s`` then change, which is what the bound accounts for; with the
    later action also in between the bound can fail (for example
    ``(a, a, b, b)`` with ``t = 2``, ``s = 4``).
    """
    steps = h.index_list()
    _check_swap(steps, spec.actions, t, s, T)
    a, b = steps[t - 1], steps[s - 1]
    cum = h.cumulative_counts()
    ca, cb = int(cum[t - 1, a]), int(cum[t - 1, b])
    bound = _swap_bound(spec, a, b, ca, cb, t, s, T)
    gain = _window_gain(spec, steps, t, s, T, ca, cb)
    if gain < float(bound) - 1e-12:
        raise InvariantViolation(f"swap ({t}, {s}) gained {gain!r} < guaranteed {float(bound)!r}")
    steps[t - 1], steps[s - 1] = b, a
    rec = SwapRecord(t, s, spec.actions[a], spec.actions[b], float(bound), gain, T)
    return History.from_indices(spec.actions, steps), rec


@dataclass(frozen=True)
class SwapPassConfig:
    """Window ``(T1, T]`` open to swaps and the beneficial-switch margin.

    ``high``/``low`` default to the best- and worst-paying actions in the
    optimal stationary support; ``threshold`` defaults to
    ``(u(high) - u(low)) / (4 gamma)``.
    """

    T1: int
    T: int
    threshold: float | None = None
    high: str | None = None
    low: str | None = None

    def __post_init__(self):
        if not self.T > self.T1 >= 1:
            raise ValueError(f"need T > T1 >= 1, got T1={self.T1}, T={self.T}")
        if self.threshold is not None and not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold!r}")


def extreme_support_actions(spec: ProblemSpec) -> tuple[str, str] | None:
    """``(best, worst)`` payoff actions of the optimal stationary support, or
    ``None`` when all support payoffs coincide."""
    sup = optimal_stationary(spec).support
    hi = max(sup, key=lambda a: (spec.payoff(a), -spec.index(a)))
    lo = min(sup, key=lambda a: (spec.payoff(a), spec.index(a)))
    if spec.payoff(hi) == spec.payoff(lo):
        return None
    return hi, lo


def default_threshold(spec: ProblemSpec, high: str, low: str) -> float:
    return (spec.payoff(high) - spec.payoff(low)) / (4.0 * spec.gamma)


def default_swap_config(
    spec: ProblemSpec, h: History, T: int, cycle_length: int, tol: float = 1e-3
) -> SwapPassConfig:
    """Config whose ``T1`` is the first multiple of ``cycle_length`` with
    frequencies within ``tol`` of the optimal stationary ones, capped at ``T/2``."""
    x = optimal_stationary(spec).x.weights
    cum = h.cumulative_counts()
    cap = max(1, T // 2)
    T1 = None
    for t1 in range(cycle_length, cap + 1, cycle_length):
        if max(abs(int(c) / t1 - w) for c, w in zip(cum[t1], x)) <= tol:
            T1 = t1
            break
    if T1 is None:
        T1 = cap
    return SwapPassConfig(T1=T1, T=T)


def beneficial_swap_pass(
    spec: ProblemSpec, h: History, config: SwapPassConfig
) -> tuple[History, list[SwapRecord]]:
    """Move the low action earlier and the high action later while it pays.

    Scans left to right for the first ``low`` at ``s`` in ``(T1, T]`` whose
    last preceding ``high`` at ``t > T1`` satisfies
    ``phi(high) u(high) - phi(low) u(low) >= threshold`` (frequencies before
    ``t``), swaps the two and repeats until no such pair is left. Every swap
    moves a ``low`` strictly earlier, so the pass terminates. Periods up to
    ``T1`` and after ``T`` are never touched.
    """
    T, T1 = config.T, config.T1
    if len(h) < T:
        raise ValueError(f"history of length {len(h)} does not reach T={T}")
    if config.high is None or config.low is None:
        pair = extreme_support_actions(spec)
        if pair is None:
            return h.copy(), []
        high, low = pair
    else:
        high, low = config.high, config.low
    hi_i, lo_i = spec.index(high), spec.index(low)
    if spec.payoffs[hi_i] == spec.payoffs[lo_i]:
        return h.copy(), []
    thr = config.threshold if config.threshold is not None else default_threshold(spec, high, low)
    u_hi, u_lo = spec.payoffs[hi_i], spec.payoffs[lo_i]

    steps = h.index_list()
    cum = h.cumulative_counts()
    # hi_cum[k], lo_cum[k]: occurrences within periods 1..k
    hi_cum = cum[:, hi_i].copy()
    lo_cum = cum[:, lo_i].copy()
    log: list[SwapRecord] = []

    pos = T1 + 1
    last_hi = 0
    while pos <= T:
        c = steps[pos - 1]
        if c == hi_i:
            last_hi = pos
        elif c == lo_i and last_hi > T1:
            t = last_hi
            k = t - 1
            margin = (hi_cum[k] / k) * u_hi - (lo_cum[k] / k) * u_lo
            if margin >= thr:
                s = pos
                bound = _swap_bound(spec, hi_i, lo_i, int(hi_cum[k]), int(lo_cum[k]), t, s, T)
                gain = _window_gain(spec, steps, t, s, T, int(hi_cum[k]), int(lo_cum[k]))
                if gain < float(bound) - 1e-12:
                    raise InvariantViolation(f"swap ({t}, {s}) gained {gain!r} < guaranteed {float(bound)!r}")
                steps[t - 1], steps[s - 1] = lo_i, hi_i
                hi_cum[t:s] -= 1
                lo_cum[t:s] += 1
                log.append(SwapRecord(t, s, high, low, float(bound), gain, T))
                # re-examine the low action just moved to t; nothing before t changed
                pos = t
                last_hi = 0
                for r in range(t - 1, T1, -1):
                    if steps[r - 1] == hi_i:
                        last_hi = r
                        break
                continue
        pos += 1
    return History.from_indices(spec.actions, steps), log


def cumulative_gain(log: Sequence[SwapRecord]) -> float:
    return math.fsum(r.guaranteed_gain for r in log)


# ---------------------------------------------------------------------------
# run-length interchange format


def dump_rle(h: History) -> str:
    """One ``action:count`` line per maximal run of equal actions."""
    lines = []
    for i, grp in itertools.groupby(h.index_list()):
        lines.append(f"{h.actions[i]}:{sum(1 for _ in grp)}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_rle(text: str, actions: Sequence[str] | None = None) -> History:
    """Parse the run-length format; ``#`` starts a comment.

    Without ``actions`` the action set is the names in order of first
    appearance.
    """
    runs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, count = line.rpartition(":")
        name = name.strip()
        if not sep or not name:
            raise ValueError(f"line {lineno}: expected 'action:count', got {line!r}")
        try:
            k = int(count)
        except ValueError:
            raise ValueError(f"line {lineno}: count {count.strip()!r} is not an integer") from None
        if k < 1:
            raise ValueError(f"line {lineno}: count must be positive")
        runs.append((name, k))
    if actions is None:
        actions = list(dict.fromkeys(name for name, _ in runs))
    idx = {a: i for i, a in enumerate(actions)}
    steps = []
    for name, k in runs:
        if name not in idx:
            raise ValueError(f"unknown action {name!r} in history")
        steps.extend([idx[name]] * k)
    return History.from_indices(tuple(actions), steps)


def write_rle(h: History, path) -> None:
    Path(path).write_text(dump_rle(h))


def read_rle(path, actions: Sequence[str] | None = None) -> History:
    return load_rle(Path(path).read_text(), actions)


def empirical_deviation(h: History, target: FrequencyVector) -> np.ndarray:
    """``max_a |phi(a | h^t) - target(a)|`` for ``t = 1..len(h)``."""
    cum = h.cumulative_counts()[1:]
    t = np.arange(1, len(h) + 1)[:, None]
    return np.max(np.abs(cum / t - target.as_array()[None, :]), axis=1)
