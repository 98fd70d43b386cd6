"""Optimal and greedy stationary frequencies.

Both problems reduce to a one-dimensional search for a water level ``mu``:

* optimal stationary frequencies maximize ``sum_a x_a (1 - gamma x_a) u_a``
  over the simplex; the KKT conditions give
  ``x_a = max(0, (1 - mu / u_a) / (2 gamma))``;
* the greedy strategy's limit frequencies equalize stage payoffs
  ``(1 - gamma x_a) u_a = mu`` on its support, i.e. the same formula with
  ``gamma`` in place of ``2 gamma``.

``mu`` is located by bisection; the support found that way is then solved
in closed form so the returned frequencies sum to one to rounding.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .model import FrequencyVector, ProblemSpec, validate_spec

MU_TOL = 1e-13
MAX_BISECTIONS = 200
# frequencies at or below this are treated as exactly zero (boundary cases)
ZERO_MASS = 1e-12


@dataclass(frozen=True)
class StationarySolution:
    x: FrequencyVector
    value: float
    support: tuple[str, ...]
    multiplier: float
    gamma: float


@dataclass(frozen=True)
class GreedySolution:
    x: FrequencyVector
    value: float
    support: tuple[str, ...]
    level: float


def _mass(payoffs: Sequence[float], mu: float, factor: float) -> float:
    return math.fsum(max(0.0, (1.0 - mu / u) / factor) for u in payoffs if u > 0)


def _water_fill(payoffs: Sequence[float], factor: float) -> tuple[list[float], float]:
    """Solve ``x_a = max(0, (1 - mu/u_a)/factor)``, ``sum x = 1``.

    Zero-payoff actions take mass only if the positive ones cannot fill the
    simplex at ``mu = 0``; the residual is then split evenly among them.
    """
    n = len(payoffs)
    pos = [i for i, u in enumerate(payoffs) if u > 0]
    zeros = [i for i, u in enumerate(payoffs) if u == 0]
    if not pos:
        # every x is optimal; the even split is the canonical choice
        return [1.0 / n] * n, 0.0

    pay = [payoffs[i] for i in pos]
    inv_sum = math.fsum(1.0 / u for u in pay)
    lo = min(0.0, (len(pos) - factor) / inv_sum)
    hi = max(pay)
    if zeros and _mass(pay, 0.0, factor) <= 1.0:
        x = [0.0] * n
        for i in pos:
            x[i] = 1.0 / factor
        residual = 1.0 - len(pos) / factor
        for i in zeros:
            x[i] = residual / len(zeros)
        return x, 0.0
    if zeros:
        lo = max(lo, 0.0)

    # mass is nonincreasing in mu: mass(lo) >= 1 >= mass(hi) = 0
    for _ in range(MAX_BISECTIONS):
        if hi - lo <= MU_TOL:
            break
        mid = 0.5 * (lo + hi)
        if _mass(pay, mid, factor) >= 1.0:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)

    # polish: exact solve on the active set, then re-derive the active set
    # from the new level until it is consistent (payoffs below the bisection
    # tolerance can otherwise be missed)
    active = [i for i in pos if payoffs[i] > mu]
    if not active:
        active = [max(pos, key=lambda i: payoffs[i])]

    def weight(i, act):
        # (1 - level/u_i)/factor with level/u_i = (|act| - factor)/sum_j u_i/u_j;
        # the ratio form stays accurate for tiny or subnormal payoffs
        r = math.fsum(payoffs[i] / payoffs[j] for j in act)
        if r == 0.0:
            # u_i negligible next to the active payoffs
            return -math.inf if len(act) > factor else math.inf
        return (1.0 - (len(act) - factor) / r) / factor

    for _ in range(2 * n + 2):
        again = [i for i in pos if weight(i, active) > ZERO_MASS]
        if not again:
            again = [max(pos, key=lambda i: payoffs[i])]
        if again == active:
            break
        active = again
    level = (len(active) - factor) / math.fsum(1.0 / payoffs[i] for i in active)
    xs = {i: weight(i, active) for i in active}
    x = [0.0] * n
    for i in active:
        x[i] = max(xs[i], 0.0)
    total = math.fsum(x)
    return [v / total for v in x], level


def stationary_value(spec: ProblemSpec, x) -> float:
    """Limit average utility ``sum_a x_a (1 - gamma x_a) u_a`` of frequencies ``x``.

    ``x`` may be a :class:`FrequencyVector`, a mapping or a sequence; it must
    lie on the simplex within 1e-9.
    """
    fv = FrequencyVector.from_mapping(spec.actions, x, tol=1e-9)
    g = spec.gamma
    return math.fsum(w * (1.0 - g * w) * u for w, u in zip(fv.weights, spec.payoffs))


def optimal_stationary(spec: ProblemSpec) -> StationarySolution:
    """Unique maximizer of the stationary value over the simplex."""
    x, mu = _water_fill(spec.payoffs, 2.0 * spec.gamma)
    fv = FrequencyVector(spec.actions, tuple(x))
    support = tuple(a for a, w in zip(spec.actions, x) if w > 0)
    return StationarySolution(fv, stationary_value(spec, fv), support, mu, spec.gamma)


def greedy_fixed_point(spec: ProblemSpec) -> GreedySolution:
    """Limit frequencies of the stage-payoff-maximizing (greedy) strategy.

    On the support all stage payoffs coincide at the returned ``level``. An
    action exactly at the inclusion threshold gets frequency zero and is left
    out of the support.
    """
    if all(u == 0 for u in spec.payoffs):
        # every stage pays zero; ties go to the first action forever
        x = (1.0,) + (0.0,) * (spec.n - 1)
        fv = FrequencyVector(spec.actions, x)
        return GreedySolution(fv, 0.0, (spec.actions[0],), 0.0)
    x, mu = _water_fill(spec.payoffs, spec.gamma)
    fv = FrequencyVector(spec.actions, tuple(x))
    support = tuple(a for a, w in zip(spec.actions, x) if w > 0)
    return GreedySolution(fv, stationary_value(spec, fv), support, mu)


def payoff_order(spec: ProblemSpec) -> list[int]:
    """Action indices sorted by basic payoff, best first (stable on ties)."""
    return sorted(range(spec.n), key=lambda i: -spec.payoffs[i])


def top_cumulative(spec: ProblemSpec, x: FrequencyVector) -> list[float]:
    """Cumulative mass on the ``k`` best-paying actions, ``k = 1..|A|``."""
    out, acc = [], 0.0
    for i in payoff_order(spec):
        acc += x.weights[i]
        out.append(acc)
    return out


@dataclass(frozen=True)
class FosdViolation:
    gamma_low: float
    gamma_high: float
    k: int
    excess: float


@dataclass
class FatigueSweep:
    gammas: list[float]
    solutions: list[StationarySolution]
    cumulative: list[list[float]]
    violations: list[FosdViolation]

    @property
    def ok(self) -> bool:
        return not self.violations


def fatigue_sweep(payoffs, gamma_grid: Sequence[float], tol: float = 1e-9, threads: int = 1) -> FatigueSweep:
    """Optimal stationary solutions along an increasing grid of fatigue factors.

    For each adjacent pair ``gamma < gamma'`` checks that the mass on the top
    ``k`` actions (sorted by payoff) does not increase, i.e. the lower-fatigue
    optimum first-order stochastically dominates the higher-fatigue one.
    """
    grid = [float(g) for g in gamma_grid]
    if not grid:
        raise ValueError("gamma grid is empty")
    for g in grid:
        if not 0 < g <= 1:
            raise ValueError(f"gamma grid value outside (0, 1]: {g!r}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("gamma grid must be strictly increasing")

    base = payoffs if isinstance(payoffs, ProblemSpec) else validate_spec(payoffs, gamma=1.0)
    specs = [ProblemSpec(base.actions, base.payoffs, g) for g in grid]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sols = list(pool.map(optimal_stationary, specs))
    else:
        sols = [optimal_stationary(s) for s in specs]
    cums = [top_cumulative(s, sol.x) for s, sol in zip(specs, sols)]
    violations = []
    for j in range(len(grid) - 1):
        for k, (lo_c, hi_c) in enumerate(zip(cums[j], cums[j + 1]), start=1):
            if hi_c > lo_c + tol:
                violations.append(FosdViolation(grid[j], grid[j + 1], k, hi_c - lo_c))
    return FatigueSweep(grid, sols, cums, violations)
