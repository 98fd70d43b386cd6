"""Exact finite-horizon optimum ``v^T`` by dynamic programming over counts.

The stage payoff of choosing ``a`` after ``t`` periods depends only on how
often ``a`` was chosen so far, so the best total payoff of reaching a count
vector does not depend on the order in which the counts were accumulated.
The DP therefore runs over the lattice ``{n in N^A : sum(n) = t}``, layer by
layer, instead of over ``|A|^T`` histories.

Totals are accumulated left to right with plain float additions, the same
way :func:`v_enumerate` does. Because ``fl(x + s)`` is monotone in ``x``,
the DP maximum equals the enumeration maximum bit for bit.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .model import History, ProblemSpec, stage_value
from .stationary import optimal_stationary

DEFAULT_STATE_CAP = 200_000_000
ENUMERATION_CAP = 100_000_000


class LatticeTooLarge(RuntimeError):
    """The requested horizon exceeds the configured state or history cap."""


@dataclass(frozen=True)
class HorizonResult:
    T: int
    value: float
    witness: History
    states_expanded: int


def lattice_size(n_actions: int, T: int) -> int:
    """Total number of count vectors over all layers ``t = 0..T``."""
    return comb(T + n_actions, n_actions)


def _binomials(N: int, K: int) -> np.ndarray:
    tab = np.zeros((N + 1, K + 1), dtype=np.int64)
    for i in range(N + 1):
        for k in range(min(i, K) + 1):
            tab[i, k] = comb(i, k)
    return tab


def _rank(states: np.ndarray, t: int, binom: np.ndarray) -> np.ndarray:
    """Lexicographic rank of each row among compositions of ``t`` into ``n`` parts."""
    n = states.shape[1]
    r = np.zeros(states.shape[0], dtype=np.int64)
    rem = np.full(states.shape[0], t, dtype=np.int64)
    for i in range(n - 1):
        k = n - 1 - i
        c = states[:, i]
        # compositions whose i-th part is smaller than c
        r += binom[rem + k, k] - binom[rem - c + k, k]
        rem = rem - c
    return r


def _tie_order(spec: ProblemSpec) -> list[int]:
    return sorted(range(spec.n), key=lambda i: (-spec.payoffs[i], i))


def _lattice_dp(spec: ProblemSpec, T: int, record=(), keep_choices: bool = True, state_cap: int = DEFAULT_STATE_CAP):
    """Run the DP to layer ``T``.

    Returns ``(final_states, final_totals, choices, best_by_layer, expanded)``
    where ``best_by_layer[t]`` is the best total over layer ``t`` for each ``t``
    in ``record``.
    """
    n = spec.n
    size = lattice_size(n, T)
    if size > state_cap:
        raise LatticeTooLarge(
            f"count lattice for |A|={n}, T={T} has {size} states (cap {state_cap}); "
            "reduce T or the number of actions"
        )
    binom = _binomials(T + n + 1, n)
    u = np.asarray(spec.payoffs, dtype=np.float64)
    g = spec.gamma
    order = _tie_order(spec)
    record = set(record)

    states = np.zeros((1, n), dtype=np.int64)
    totals = np.zeros(1, dtype=np.float64)
    choices: list[np.ndarray] = []
    best: dict[int, float] = {}
    expanded = 1
    for t in range(T):
        m = comb(t + 1 + n - 1, n - 1)
        nxt_states = np.empty((m, n), dtype=np.int64)
        nxt_totals = np.full(m, -np.inf)
        cands = []
        for a in range(n):
            c = states[:, a]
            if t == 0:
                stage = np.full(states.shape[0], u[a])
            else:
                stage = (1.0 - g * (c / t)) * u[a]
            cand = totals + stage
            moved = states.copy()
            moved[:, a] += 1
            r = _rank(moved, t + 1, binom)
            nxt_states[r] = moved
            np.maximum.at(nxt_totals, r, cand)
            cands.append((r, cand))
        if keep_choices:
            ch = np.full(m, -1, dtype=np.int8)
            for a in order:
                r, cand = cands[a]
                hit = (cand == nxt_totals[r]) & (ch[r] < 0)
                ch[r[hit]] = a
            choices.append(ch)
        states, totals = nxt_states, nxt_totals
        expanded += m
        if t + 1 in record:
            best[t + 1] = float(totals.max())
    return states, totals, choices, best, expanded


def _argmax_in_order(spec: ProblemSpec, states: np.ndarray, totals: np.ndarray) -> int:
    top = totals.max()
    idx = np.flatnonzero(totals == top)
    if len(idx) == 1:
        return int(idx[0])
    # deterministic: prefer more weight on high payoffs
    order = _tie_order(spec)
    keys = [tuple(-int(states[i, a]) for a in order) for i in idx]
    return int(idx[min(range(len(idx)), key=keys.__getitem__)])


def v_exact(spec: ProblemSpec, T: int, state_cap: int = DEFAULT_STATE_CAP) -> HorizonResult:
    """Maximal average payoff over all histories of length ``T`` with a witness."""
    if T < 1:
        raise ValueError("T must be >= 1")
    states, totals, choices, _, expanded = _lattice_dp(spec, T, state_cap=state_cap)
    i = _argmax_in_order(spec, states, totals)
    value = float(totals[i]) / T
    binom = _binomials(T + spec.n + 1, spec.n)
    state = states[i].copy()
    rev = []
    for t in range(T, 0, -1):
        r = int(_rank(state[None, :], t, binom)[0])
        a = int(choices[t - 1][r])
        rev.append(a)
        state[a] -= 1
    witness = History.from_indices(spec.actions, rev[::-1])
    return HorizonResult(T, value, witness, expanded)


def v_enumerate(spec: ProblemSpec, T: int, cap: int = ENUMERATION_CAP) -> HorizonResult:
    """Brute-force maximum of ``U^T`` over all ``|A|^T`` histories."""
    if T < 1:
        raise ValueError("T must be >= 1")
    n = spec.n
    if n**T > cap:
        raise LatticeTooLarge(f"|A|^T = {n}^{T} exceeds enumeration cap {cap}")
    u = spec.payoffs
    g = spec.gamma
    # enumerate a short prefix in Python, the suffix as numpy columns
    L = T
    while L > 1 and n**L > 1 << 17:
        L -= 1
    P = T - L
    suffix = np.array(list(itertools.product(range(n), repeat=L)), dtype=np.int64).reshape(-1, L)
    rows = np.arange(suffix.shape[0])
    u_arr = np.asarray(u, dtype=np.float64)
    best_total, best_hist = -math.inf, None
    for prefix in itertools.product(range(n), repeat=P):
        counts = [0] * n
        total = 0.0
        for t, a in enumerate(prefix):
            total = total + stage_value(u[a], g, counts[a], t)
            counts[a] += 1
        totals = np.full(suffix.shape[0], total)
        cnt = np.tile(np.asarray(counts, dtype=np.int64), (suffix.shape[0], 1))
        for j in range(L):
            t = P + j
            a = suffix[:, j]
            if t == 0:
                stage = u_arr[a]
            else:
                stage = (1.0 - g * (cnt[rows, a] / t)) * u_arr[a]
            totals = totals + stage
            cnt[rows, a] += 1
        k = int(np.argmax(totals))
        if totals[k] > best_total:
            best_total = float(totals[k])
            best_hist = list(prefix) + suffix[k].tolist()
    witness = History.from_indices(spec.actions, best_hist)
    return HorizonResult(T, best_total / T, witness, n**T)


@dataclass
class ConvergenceTable:
    """``v^T`` along a grid of horizons.

    ``cauchy_window`` is ``max |v^S - v^T|`` over the last half of the grid,
    a heuristic stopping signal rather than a certified error bound.
    ``exceeds_stationary`` lists the horizons where ``v^T > V* + margin``.
    """

    rows: list[tuple[int, float, float]]
    cauchy_window: float
    v_star: float
    margin: float
    exceeds_stationary: list[int] = field(default_factory=list)

    @property
    def min_excess(self) -> float:
        return min(v for _, v, _ in self.rows) - self.v_star

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "v_T", "delta"])
        for T, v, d in self.rows:
            w.writerow([T, format(v, ".17g"), "" if math.isnan(d) else format(d, ".17g")])
        return buf.getvalue()


def v_convergence(
    spec: ProblemSpec, T_grid: Sequence[int], margin: float = 0.0, state_cap: int = DEFAULT_STATE_CAP
) -> ConvergenceTable:
    """Evaluate ``v^T`` for every ``T`` in an increasing grid with one DP pass."""
    grid = [int(T) for T in T_grid]
    if not grid:
        raise ValueError("T grid is empty")
    if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("T grid must be strictly increasing positive integers")
    _, _, _, best, _ = _lattice_dp(spec, grid[-1], record=grid, keep_choices=False, state_cap=state_cap)
    rows = []
    prev = math.nan
    for T in grid:
        v = best[T] / T
        rows.append((T, v, v - prev if not math.isnan(prev) else math.nan))
        prev = v
    tail = [v for _, v, _ in rows[len(rows) // 2:]]
    window = max(tail) - min(tail)
    v_star = optimal_stationary(spec).value
    flags = [T for T, v, _ in rows if v > v_star + margin]
    return ConvergenceTable(rows, window, v_star, margin, flags)
