"""Discounted frequencies and the dual-discount utility.

Past use is weighted geometrically by ``lambda`` (recent periods count more)
and future stage payoffs by ``delta``. Values over infinite histories are
reported as :class:`ValueInterval` brackets: a truncated sum plus the
largest possible contribution of the truncated tail.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .model import FrequencyVector, History, ProblemSpec
from .stationary import optimal_stationary
from .trajectories import iter_tracking

MAX_DEPTH = 1_000_000
MERGE_RESOLUTION = 1e-6


@dataclass(frozen=True)
class DiscountParams:
    lambda_: float
    delta: float

    def __post_init__(self):
        for name, v in (("lambda", self.lambda_), ("delta", self.delta)):
            if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 < v < 1.0):
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v!r}")


def _normalizer(lam: float, t: int) -> float:
    """``(1 - lam) / (1 - lam^(t-1))``; accurate for ``lam`` close to 1."""
    return (1.0 - lam) / -math.expm1((t - 1) * math.log(lam))


class DiscountedState:
    """Discounted usage before period ``t``.

    ``raw[a] = sum_{s <= t-1} lam^(t-1-s) * 1{a_s = a}``, updated as
    ``raw <- lam * raw + e_chosen``. The state at ``t = 1`` is all zeros.
    """

    __slots__ = ("actions", "lam", "t", "raw")

    def __init__(self, actions: Sequence[str], lam: float):
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda must lie strictly inside (0, 1), got {lam!r}")
        self.actions = tuple(actions)
        self.lam = lam
        self.t = 1
        self.raw = np.zeros(len(self.actions))

    def update(self, i: int) -> None:
        self.raw *= self.lam
        self.raw[i] += 1.0
        self.t += 1

    @property
    def normalizer(self) -> float:
        return 0.0 if self.t == 1 else _normalizer(self.lam, self.t)

    def weights(self) -> np.ndarray:
        return self.raw * self.normalizer

    def frequency(self) -> FrequencyVector:
        if self.t == 1:
            return FrequencyVector.zeros(self.actions)
        return FrequencyVector.from_mapping(self.actions, self.weights().tolist(), tol=1e-9)


def discounted_frequency(h: History, t: int, lam: float) -> FrequencyVector:
    """``phi^lambda(. | h^{t-1})`` evaluated from scratch."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie strictly inside (0, 1), got {lam!r}")
    if not 1 <= t <= len(h) + 1:
        raise ValueError(f"t={t} outside 1..{len(h) + 1}")
    if t == 1:
        return FrequencyVector.zeros(h.actions)
    idx = h.indices[: t - 1]
    # weight lam^(t-1-s) for period s = 1..t-1
    w = np.exp(np.arange(t - 2, -1, -1) * math.log(lam))
    raw = np.bincount(idx, weights=w, minlength=len(h.actions))
    return FrequencyVector.from_mapping(h.actions, (raw * _normalizer(lam, t)).tolist(), tol=1e-9)


@dataclass(frozen=True)
class ValueInterval:
    """``lower <= value <= upper`` for the quantity named in ``scope``.

    ``certified`` is true when the bracket is guaranteed for that quantity;
    a search that pruned or merged states only brackets the best history it
    evaluated, not the optimum over all histories.
    """

    lower: float
    upper: float
    depth: int
    tail_bound: float
    slack: float = 0.0
    certified: bool = True
    budget_exhausted: bool = False
    scope: str = "history"
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower!r} exceeds upper {self.upper!r}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, v: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= v <= self.upper + tol


def _stage_weights(delta: float, H: int) -> np.ndarray:
    return (1.0 - delta) * np.exp(np.arange(H) * math.log(delta))


def discounted_utility(spec: ProblemSpec, source, params: DiscountParams, H: int) -> ValueInterval:
    """Bracket ``U^{lambda,delta}`` of a history from its first ``H`` periods.

    ``source`` is a :class:`History` or an iterable of action names that
    supplies at least ``H`` actions.
    """
    if H < 1:
        raise ValueError("H must be >= 1")
    it = iter(source)
    st = DiscountedState(spec.actions, params.lambda_)
    u, g = spec.payoffs, spec.gamma
    stages = np.empty(H)
    for k in range(H):
        try:
            name = next(it)
        except StopIteration:
            raise ValueError(f"history ended after {k} periods, need H={H}") from None
        i = spec.index(name)
        phi = st.raw[i] * st.normalizer
        stages[k] = (1.0 - g * phi) * u[i]
        st.update(i)
    trunc = math.fsum(stages * _stage_weights(params.delta, H))
    tail = params.delta**H * spec.max_payoff
    return ValueInterval(trunc, _round_up(trunc + tail, tail), H, tail)


def _round_up(x: float, tail: float) -> float:
    # keep the upper end strictly above the lower one when a tiny tail is absorbed
    return math.nextafter(x, math.inf) if tail > 0 else x


def iter_discounted_greedy(spec: ProblemSpec, lam: float) -> Iterator[str]:
    """Maximize the stage payoff computed from discounted frequencies."""
    st = DiscountedState(spec.actions, lam)
    u, g = spec.payoffs, spec.gamma
    while True:
        w = st.weights()
        best, best_v = 0, -math.inf
        for a in range(spec.n):
            v = (1.0 - g * w[a]) * u[a]
            if v > best_v:
                best, best_v = a, v
        st.update(best)
        yield spec.actions[best]


@dataclass(frozen=True)
class SearchBudget:
    """Limits for :func:`discounted_value`.

    ``depth`` overrides the truncation horizon; otherwise it is the smallest
    ``H`` with ``delta^H * max u <= eps_tail`` (default ``1e-3 * max u``),
    capped at ``max_depth``.
    """

    beam_width: int = 256
    depth: int | None = None
    eps_tail: float | None = None
    max_depth: int = MAX_DEPTH

    def __post_init__(self):
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.eps_tail is not None and not self.eps_tail > 0:
            raise ValueError("eps_tail must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def truncation_depth(spec: ProblemSpec, delta: float, budget: SearchBudget) -> tuple[int, bool]:
    """``(H, exhausted)``; ``exhausted`` when the cap cut the requested depth."""
    if budget.depth is not None:
        want = budget.depth
    else:
        top = spec.max_payoff
        if top == 0:
            return 1, False
        eps = budget.eps_tail if budget.eps_tail is not None else 1e-3 * top
        want = max(1, math.ceil(math.log(eps / top) / math.log(delta)))
    if want > budget.max_depth:
        return budget.max_depth, True
    return want, False


@dataclass
class BeamOutcome:
    value: float
    history: History | None
    pruned: bool
    merged: bool


def beam_search(spec: ProblemSpec, params: DiscountParams, H: int, width: int) -> BeamOutcome:
    """Keep the ``width`` best partial histories per depth.

    Partial histories are ranked by accumulated value minus an estimate of
    the fatigue they pass on: the discounted loss if play continued at the
    optimal stationary frequencies ``x*`` while the current usage decays,
    ``(1 - delta) delta^t / (1 - lambda delta) * gamma * sum_a x*_a u_a phi_a``.
    States whose discounted frequencies agree after rounding to
    ``MERGE_RESOLUTION`` are merged, keeping the better-ranked one. Ties go
    to candidate position, so results are deterministic.
    """
    n = spec.n
    lam, delta = params.lambda_, params.delta
    u = np.asarray(spec.payoffs)
    g = spec.gamma
    wts = _stage_weights(delta, H)
    raw = np.zeros((1, n))
    acc = np.zeros(1)
    keep_path = width * H <= 20_000_000
    parents: list[np.ndarray] = []
    moves: list[np.ndarray] = []
    pruned = merged = False
    eye = np.eye(n)
    drag = g * optimal_stationary(spec).x.as_array() * u / (1.0 - lam * delta)
    for k in range(H):
        t = k + 1
        norm = 0.0 if t == 1 else _normalizer(lam, t)
        stage = (1.0 - g * (raw * norm)) * u[None, :]
        cand_acc = (acc[:, None] + wts[k] * stage).ravel()
        cand_raw = (lam * raw[:, None, :] + eye[None, :, :]).reshape(-1, n)
        phi_next = cand_raw * _normalizer(lam, t + 1)
        score = cand_acc - (1.0 - delta) * delta**t * (phi_next @ drag)
        order = np.argsort(-score, kind="stable")
        key = np.round(phi_next[order] / MERGE_RESOLUTION).astype(np.int64)
        _, first = np.unique(key, axis=0, return_index=True)
        if len(first) < len(order):
            merged = True
        first.sort()
        survivors = order[first]
        if len(survivors) > width:
            pruned = True
            survivors = survivors[:width]
        if keep_path:
            parents.append((survivors // n).astype(np.int32))
            moves.append((survivors % n).astype(np.int8))
        raw = cand_raw[survivors]
        acc = cand_acc[survivors]
    best = int(np.argmax(acc))  # first index wins ties
    history = None
    if keep_path:
        path = []
        j = best
        for k in range(H - 1, -1, -1):
            path.append(int(moves[k][j]))
            j = int(parents[k][j])
        history = History.from_indices(spec.actions, path[::-1])
    return BeamOutcome(float(acc[best]), history, pruned, merged)


@dataclass
class DiscountedSearch:
    interval: ValueInterval
    candidates: dict[str, ValueInterval]
    best: str
    best_history: History | None = None


def discounted_value(
    spec: ProblemSpec, params: DiscountParams, budget: SearchBudget | None = None
) -> DiscountedSearch:
    """Bracket ``V^{lambda,delta}`` by the best of several candidate histories.

    Candidates: tracking the optimal stationary frequencies, greedy on
    discounted frequencies, and a beam search. ``lower`` is the best
    truncated value; ``upper = lower + delta^H max u``, which bounds the
    infinite-horizon value of every evaluated candidate. The interval is
    certified for the optimum itself only when the beam search never pruned
    or merged a state (for example with a single action).
    """
    budget = budget or SearchBudget()
    H, exhausted = truncation_depth(spec, params.delta, budget)
    x = optimal_stationary(spec).x
    cands: dict[str, ValueInterval] = {
        "tracking": discounted_utility(spec, iter_tracking(spec, x), params, H),
        "greedy": discounted_utility(spec, iter_discounted_greedy(spec, params.lambda_), params, H),
    }
    beam = beam_search(spec, params, H, budget.beam_width)
    histories: dict[str, History | None] = {"tracking": None, "greedy": None, "beam": beam.history}
    if beam.history is not None:
        cands["beam"] = discounted_utility(spec, beam.history, params, H)
    else:
        tail = params.delta**H * spec.max_payoff
        cands["beam"] = ValueInterval(beam.value, _round_up(beam.value + tail, tail), H, tail)
    best = max(cands, key=lambda k: cands[k].lower)
    lower = cands[best].lower
    tail = params.delta**H * spec.max_payoff
    exhaustive = not (beam.pruned or beam.merged)
    notes = []
    if beam.merged:
        notes.append("beam merged states with equal rounded discounted frequencies")
    if beam.pruned:
        notes.append("beam pruned states; upper bound covers evaluated candidates only")
    if exhausted:
        notes.append(f"truncation depth capped at {H}")
    interval = ValueInterval(
        lower=lower,
        upper=_round_up(lower + tail, tail),
        depth=H,
        tail_bound=tail,
        slack=0.0,
        certified=exhaustive,
        budget_exhausted=exhausted,
        scope="optimum" if exhaustive else "best candidate",
        notes=tuple(notes),
    )
    return DiscountedSearch(interval, cands, best, histories.get(best))


def default_delta(lam: float) -> float:
    """Future discount paired with ``lam`` in patience sweeps."""
    return max(0.99, 1.0 - (1.0 - lam) / 4.0)


@dataclass
class PatienceRow:
    lambda_: float
    delta: float
    v_star: float
    lower: float
    upper: float
    certified: bool

    @property
    def excess_lower(self) -> float:
        return self.lower - self.v_star

    @property
    def excess_upper(self) -> float:
        return self.upper - self.v_star


@dataclass
class PatienceSweep:
    rows: list[PatienceRow] = field(default_factory=list)

    @property
    def upper_excess_nonincreasing(self) -> bool:
        ex = [r.excess_upper for r in self.rows]
        return all(b <= a for a, b in zip(ex, ex[1:]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "delta", "V_star", "lower", "upper", "excess_lower", "excess_upper"])
        for r in self.rows:
            w.writerow(
                [format(v, ".17g") for v in (r.lambda_, r.delta, r.v_star, r.lower, r.upper, r.excess_lower, r.excess_upper)]
            )
        return buf.getvalue()


def _resolve_deltas(lams: Sequence[float], delta_rule) -> list[float]:
    if delta_rule is None:
        return [default_delta(l) for l in lams]
    if callable(delta_rule):
        return [float(delta_rule(l)) for l in lams]
    if isinstance(delta_rule, Mapping):
        return [float(delta_rule[l]) for l in lams]
    ds = [float(d) for d in delta_rule]
    if len(ds) != len(lams):
        raise ValueError("delta list must match the lambda grid in length")
    return ds


def patience_sweep(
    spec: ProblemSpec,
    lambda_grid: Iterable[float],
    delta_rule: Callable[[float], float] | Mapping | Sequence[float] | None = None,
    budget: SearchBudget | None = None,
) -> PatienceSweep:
    """:func:`discounted_value` along a grid of ``lambda`` with paired ``delta``."""
    lams = [float(l) for l in lambda_grid]
    if not lams:
        raise ValueError("lambda grid is empty")
    deltas = _resolve_deltas(lams, delta_rule)
    v_star = optimal_stationary(spec).value
    out = PatienceSweep()
    for lam, d in zip(lams, deltas):
        res = discounted_value(spec, DiscountParams(lam, d), budget)
        iv = res.interval
        out.rows.append(PatienceRow(lam, d, v_star, iv.lower, iv.upper, iv.certified))
    return out
