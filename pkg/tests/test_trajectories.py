import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_spec, specs
from fatigue import (
    History,
    InvariantViolation,
    SwapPassConfig,
    average_utility,
    frequency,
    generate_doubling_blocks,
    generate_greedy,
    generate_tracking,
    optimal_stationary,
    utility_trace,
    v_enumerate,
    validate_spec,
)
from fatigue.model import stage_payoffs
from fatigue.trajectories import (
    SwapError,
    apply_swap,
    apportion,
    beneficial_swap_pass,
    block_stats,
    default_swap_config,
    dump_rle,
    empirical_deviation,
    generate_cyclic,
    iter_doubling_blocks,
    iter_geometric_blocks,
    load_rle,
    stationary_cycle,
)


class TestGreedy:
    def test_low_fatigue_constant_b(self):
        s = validate_spec({"a": 1, "b": 10}, gamma=0.5)
        assert generate_greedy(s, 100).steps == ("b",) * 100

    def test_single_action(self):
        s = validate_spec({"c": 3}, gamma=0.7)
        assert generate_greedy(s, 20).steps == ("c",) * 20

    def test_frequencies_converge(self, ab1):
        T = 200_000
        h = generate_greedy(ab1, T)
        a, b = h.count_vector()
        assert abs(a / T - 1 / 11) <= 1e-3 and abs(b / T - 10 / 11) <= 1e-3

    def test_first_action_wins_ties(self):
        s = validate_spec({"a": 5, "b": 5}, gamma=1.0)
        assert generate_greedy(s, 4).steps == ("a", "b", "a", "b")

    def test_indifference_gap_shrinks(self, ab1):
        # stage payoffs of the support actions approach each other
        h = generate_greedy(ab1, 50_000)
        gaps = []
        for T in (500, 5000, 50_000):
            a, b = h.prefix_counts(T)
            gaps.append(abs((1 - a / T) * 1 - (1 - b / T) * 10))
        assert gaps[0] >= gaps[1] >= gaps[2] and gaps[2] < 1e-3


class TestTracking:
    def test_even_split(self, ab1):
        h = generate_tracking(ab1, (0.5, 0.5), 10)
        assert h.count_vector() == (5, 5)

    def test_point_mass(self, ab1):
        assert generate_tracking(ab1, {"a": 1.0, "b": 0.0}, 30).steps == ("a",) * 30

    def test_off_simplex(self, ab1):
        with pytest.raises(ValueError):
            generate_tracking(ab1, (0.7, 0.7), 10)

    def test_optimal_value(self, ab1):
        x = optimal_stationary(ab1).x
        h = generate_tracking(ab1, x, 200_000)
        assert abs(average_utility(ab1, h, len(h)) - 2.75) <= 1e-3

    @given(specs(n_max=5), st.integers(1, 2000), st.integers(0, 2**32 - 1))
    def test_deviation_bound(self, s, T, seed):
        rng = np.random.default_rng(seed)
        x = rng.dirichlet(np.ones(s.n))
        if rng.random() < 0.3:
            x[rng.integers(s.n)] = 0
            x = x / x.sum() if x.sum() > 0 else np.eye(s.n)[0]
        h = generate_tracking(s, x.tolist(), T)
        from fatigue import FrequencyVector

        dev = empirical_deviation(h, FrequencyVector.from_mapping(s.actions, x.tolist()))
        t = np.arange(1, T + 1)
        assert np.all(dev <= s.n / t + 1e-12)


class TestDoubling:
    def test_prefix(self):
        assert "".join(generate_doubling_blocks(13).steps) == "abab" "bb" "aaaaaa" "b"

    def test_three(self):
        assert generate_doubling_blocks(3).steps == ("a", "b", "a")

    def test_too_short(self):
        with pytest.raises(ValueError):
            generate_doubling_blocks(2)

    def test_block_ends(self):
        T = 3 * 2**12
        h = generate_doubling_blocks(T)
        # blocks end at 3*2^(m+1); a-blocks for odd m
        for m in range(0, 11):
            end = 3 * 2 ** (m + 1)
            a, _ = h.prefix_counts(end)
            expect = 2 / 3 if m % 2 == 1 else 1 / 3
            assert abs(a / end - expect) <= 2 / end
            assert h.action_at(end) == ("a" if m % 2 == 1 else "b")

    def test_limit_points(self, ab1):
        tr = utility_trace(ab1, iter_doubling_blocks(), 3 * 2**16)
        lo, hi = tr.running_min, tr.running_max
        assert abs(lo - (8 / 3) * math.log(2)) < 5e-2
        assert abs(hi - (14 / 3) * math.log(2)) < 5e-2


def block_oracle(spec, h, t1, t2):
    stages = stage_payoffs(spec, h, t2)
    W = math.fsum(stages[t1:t2]) / (t2 - t1)
    before = h.prefix_counts(t1)
    after = h.prefix_counts(t2)
    p = [(b - a) / (t2 - t1) for a, b in zip(before, after)]
    U = math.fsum(pi * (1 - spec.gamma * c / t1) * u for pi, c, u in zip(p, before, spec.payoffs))
    return W, p, U


class TestBlockStats:
    def test_constant_history(self):
        s = validate_spec({"a": 3}, gamma=0.6)
        h = History(s.actions, ["a"] * 50)
        bs = block_stats(s, h, 10, 20)
        assert bs.p.weights == (1.0,)
        assert bs.gap <= bs.bound

    def test_doubling_b_block(self, ab1):
        h = generate_doubling_blocks(3 * 2**9)
        bs = block_stats(ab1, h, 3 * 2**8, 3 * 2**9)  # m = 8, a b-block
        assert bs.p.weights == (0.0, 1.0)
        assert bs.gap <= 2 * (bs.t2 - bs.t1) / bs.t1 * 1.0 * 11

    def test_matches_oracle(self, rng):
        s = random_spec(rng, n_max=4, n_min=2)
        h = History.from_indices(s.actions, rng.integers(0, s.n, size=3000))
        for _ in range(100):
            t1 = int(rng.integers(1, 2999))
            t2 = int(rng.integers(t1 + 1, 3001))
            bs = block_stats(s, h, t1, t2)
            W, p, U = block_oracle(s, h, t1, t2)
            assert abs(bs.W - W) <= 1e-12 and abs(bs.U_tilde - U) <= 1e-12
            assert np.allclose(bs.p.weights, p, atol=1e-15)
            assert bs.bound == pytest.approx(2 * (t2 - t1) / t1 * s.gamma * sum(s.payoffs))

    @pytest.mark.parametrize("t1,t2", [(0, 5), (5, 5), (6, 5), (3, 11)])
    def test_index_order(self, ab1, t1, t2):
        with pytest.raises(ValueError):
            block_stats(ab1, History(ab1.actions, "ababababab"), t1, t2)


def swap_oracle(spec, h, t, s, T):
    """Independent evaluation of the guaranteed gain and the realized one."""
    steps = list(h.steps)
    a, b = steps[t - 1], steps[s - 1]
    ca = steps[: t - 1].count(a)
    cb = steps[: t - 1].count(b)
    if t == 1:
        bound = Fraction(0)
    else:
        lead = Fraction(ca, t - 1) * Fraction(spec.payoff(a)) - Fraction(cb, t - 1) * Fraction(spec.payoff(b))
        bound = Fraction(spec.gamma) * Fraction(s - t, (s - 1) * T) * lead
    new = steps.copy()
    new[t - 1], new[s - 1] = b, a
    gain = average_utility(spec, History(spec.actions, new), T) - average_utility(spec, h, T)
    return float(bound), gain, tuple(new)


def random_valid_swap(rng, h):
    """``(t, s)`` with different actions and neither occurring strictly between."""
    steps = h.index_list()
    n = len(steps)
    for t in rng.permutation(np.arange(1, n)).tolist():
        seen = set()
        cands = []
        for r in range(t + 1, n + 1):
            c = steps[r - 1]
            if c == steps[t - 1]:
                break
            if c not in seen:
                cands.append(r)
                seen.add(c)
        if cands:
            return t, int(rng.choice(cands))
    return None


class TestSwap:
    def test_empty_prefix(self, ab1):
        h = History(ab1.actions, "abba")
        new, rec = apply_swap(ab1, h, 1, 2, 4)
        assert rec.guaranteed_gain == 0.0
        assert rec.actual_gain >= 0.0
        assert new.steps == ("b", "a", "b", "a")

    def test_later_action_in_between_breaks_bound(self, ab1):
        # only "a" is excluded between t and s here; the extra "b" at 3 loses
        h = History(ab1.actions, "aabb")
        bound, gain, _ = swap_oracle(ab1, h, 2, 4, 4)
        assert bound == pytest.approx(1 / 6) and gain == pytest.approx(-0.25)
        with pytest.raises(SwapError, match="also occurs"):
            apply_swap(ab1, h, 2, 4, 4)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_random(self, rng, n):
        spec = random_spec(rng, n_max=n, n_min=n)
        for _ in range(200):
            pick = None
            while pick is None:
                h = History.from_indices(spec.actions, rng.integers(0, n, size=int(rng.integers(3, 300))))
                pick = random_valid_swap(rng, h)
            t, s = pick
            T = int(rng.integers(s, len(h) + 1))
            new, rec = apply_swap(spec, h, t, s, T)
            bound, gain, steps = swap_oracle(spec, h, t, s, T)
            assert new.steps == steps
            assert abs(rec.guaranteed_gain - bound) <= 1e-15
            assert abs(rec.actual_gain - gain) <= 1e-12
            assert gain >= bound - 1e-12

    @pytest.mark.parametrize(
        "hist,t,s,T,clause",
        [
            ("abab", 2, 2, 4, "t < s"),
            ("abab", 1, 3, 4, "same action"),
            ("aaba", 1, 3, 4, "reoccurs"),
            ("abab", 1, 2, 1, "s <= T"),
            ("abab", 1, 6, 6, "beyond"),
        ],
    )
    def test_precondition_errors(self, ab1, hist, t, s, T, clause):
        with pytest.raises(SwapError, match=clause):
            apply_swap(ab1, History(ab1.actions, hist), t, s, T)


class TestSwapPass:
    def test_gain_on_cycle(self, ab1):
        cyc = stationary_cycle(ab1)
        T = 1000
        h = generate_cyclic(ab1, T, cyc)
        cfg = default_swap_config(ab1, h, T, len(cyc))
        out, log = beneficial_swap_pass(ab1, h, cfg)
        before = average_utility(ab1, h, T)
        after = average_utility(ab1, out, T)
        # eta = ((1 - q)/64) * phi(low) * gamma * threshold with q = 3/4, phi(low) = 1/2
        eta = (1 - 0.75) / 64 * 0.5 * 1.0 * (10 - 1) / 4
        assert after - before >= 2 * eta
        assert abs((after - before) - math.fsum(r.actual_gain for r in log)) <= 1e-9
        assert math.fsum(r.guaranteed_gain for r in log) <= after - before + 1e-9

    def test_protected_prefix_and_counts(self, ab1, rng):
        h = History.from_indices(ab1.actions, rng.integers(0, 2, size=400))
        cfg = SwapPassConfig(T1=100, T=300)
        out, log = beneficial_swap_pass(ab1, h, cfg)
        assert out.steps[:100] == h.steps[:100]
        assert out.steps[300:] == h.steps[300:]
        assert out.prefix_counts(300) == h.prefix_counts(300)
        lo_in = h.steps[100:300].count("a")
        hi_in = h.steps[100:300].count("b")
        assert len(log) <= lo_in * hi_in

    def test_monotone(self, ab1, rng):
        h = History.from_indices(ab1.actions, rng.integers(0, 2, size=300))
        cfg = SwapPassConfig(T1=20, T=300)
        out, log = beneficial_swap_pass(ab1, h, cfg)
        cur = h.index_list()
        prev = average_utility(ab1, h, 300)
        for r in log:
            i, j = ab1.index(r.action_early), ab1.index(r.action_late)
            assert cur[r.t - 1] == i and cur[r.s - 1] == j
            cur[r.t - 1], cur[r.s - 1] = j, i
            now = average_utility(ab1, History.from_indices(ab1.actions, cur), 300)
            assert now - prev >= r.guaranteed_gain - 1e-12
            prev = now
        assert History.from_indices(ab1.actions, cur) == out

    def test_equal_payoffs_noop(self):
        s = validate_spec({"a": 2, "b": 2}, gamma=1.0)
        h = History(s.actions, "abababab")
        out, log = beneficial_swap_pass(s, h, SwapPassConfig(1, 8))
        assert out == h and log == []

    @pytest.mark.parametrize("T", [8, 10, 12, 14])
    def test_bounded_by_optimum(self, ab1, T):
        h = generate_cyclic(ab1, T)
        out, _ = beneficial_swap_pass(ab1, h, SwapPassConfig(1, T))
        assert average_utility(ab1, out, T) <= v_enumerate(ab1, T).value + 1e-12

    def test_history_too_short(self, ab1):
        with pytest.raises(ValueError):
            beneficial_swap_pass(ab1, History(ab1.actions, "ab"), SwapPassConfig(1, 5))

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            SwapPassConfig(T1=5, T=5)
        with pytest.raises(ValueError):
            SwapPassConfig(T1=1, T=5, threshold=0.0)


class TestCycle:
    def test_half(self, ab1):
        cyc = stationary_cycle(ab1)
        assert sorted(cyc) == ["a", "b"]

    def test_rational(self):
        s = validate_spec({"a": 1, "b": 10}, gamma=0.5)
        cyc = stationary_cycle(s)
        assert len(cyc) == 11 and cyc.count("a") == 1

    def test_apportion_sums(self, rng):
        from fatigue import FrequencyVector

        for _ in range(50):
            x = rng.dirichlet(np.ones(4))
            c = apportion(FrequencyVector(("a", "b", "c", "d"), tuple(x / x.sum())), 997)
            assert sum(c) == 997


class TestRle:
    @given(st.lists(st.sampled_from("abc"), max_size=200))
    def test_round_trip(self, steps):
        h = History(("a", "b", "c"), steps)
        assert load_rle(dump_rle(h), ("a", "b", "c")) == h

    def test_comments_and_blank_lines(self):
        h = load_rle("# header\na:2\n\nb:1  # trailing\n")
        assert h.steps == ("a", "a", "b")

    @pytest.mark.parametrize("text", ["a", "a:x", "a:0", ":3"])
    def test_malformed(self, text):
        with pytest.raises(ValueError):
            load_rle(text)

    def test_unknown_action(self):
        with pytest.raises(ValueError):
            load_rle("z:2", ("a", "b"))

    def test_evaluation_round_trip(self, ab1, tmp_path):
        from fatigue.trajectories import read_rle, write_rle

        h = generate_doubling_blocks(500)
        write_rle(h, tmp_path / "h.txt")
        back = read_rle(tmp_path / "h.txt", ab1.actions)
        assert average_utility(ab1, back, 500) == average_utility(ab1, h, 500)


def test_geometric_blocks_alternate():
    g = iter_geometric_blocks(("a", "b"), 1.0)
    first = [next(g) for _ in range(8)]
    assert first == ["a", "b", "a", "a", "b", "b", "b", "b"]
