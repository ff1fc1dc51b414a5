"""Exact enumeration oracle and its agreement with the simulators."""

from collections import defaultdict
from fractions import Fraction

import pytest

from pachoice.cli import (
    enumerate_exact,
    mc_multiset_distribution,
    total_variation,
)
from pachoice.fstats import ThresholdVector
from pachoice.model import ModelSpec

MIN2 = ModelSpec()
CLASSIC = ModelSpec(rule="classic")


def chain_f_distribution(m, k_max=6):
    """Exact F-vector distribution of the min-of-two vector chain after m
    edges, by recursion over the driven degree D with
    P(D = d) = (F(d)^2 - F(d+1)^2) / (2j)^2. Independent route vs the
    multiset enumeration."""
    out = defaultdict(Fraction)

    def rec(fv: ThresholdVector, prob: Fraction):
        if fv.j == m:
            out[fv.as_tuple()] += prob
            return
        twoj = 2 * fv.j
        for d in range(1, k_max):
            num = fv.counts[d] ** 2 - fv.counts[d + 1] ** 2
            if num == 0:
                continue
            p_d = Fraction(int(num), twoj * twoj)
            nxt = fv.copy()
            nxt.update_on_attach(d)
            rec(nxt, prob * p_d)

    rec(ThresholdVector.from_degrees([1, 1], k_max), Fraction(1))
    return dict(out)


class TestEnumerate:
    def test_m2_is_forced(self):
        res = enumerate_exact(2, MIN2)
        assert res.probs == {(2, 1, 1): Fraction(1)}

    def test_m3_min_choice(self):
        res = enumerate_exact(3, MIN2)
        assert res.probs == {
            (3, 1, 1, 1): Fraction(1, 4),
            (2, 2, 1, 1): Fraction(3, 4),
        }
        assert res.delta_dist() == {3: Fraction(1, 4), 2: Fraction(3, 4)}

    def test_m3_classic(self):
        res = enumerate_exact(3, CLASSIC)
        assert res.delta_dist()[3] == Fraction(1, 2)

    def test_m3_max_choice(self):
        res = enumerate_exact(3, ModelSpec(rule="max"))
        assert res.delta_dist()[3] == Fraction(3, 4)

    def test_m4_min_choice_hand_derived(self):
        res = enumerate_exact(4, MIN2)
        assert res.probs == {
            (4, 1, 1, 1, 1): Fraction(1, 16),
            (3, 2, 1, 1, 1): Fraction(25, 48),
            (2, 2, 2, 1, 1): Fraction(5, 12),
        }

    @pytest.mark.parametrize(
        "spec",
        [MIN2, CLASSIC, ModelSpec(rule="max"), ModelSpec(choices=3),
         ModelSpec(alpha=2.0)],
    )
    def test_probabilities_sum_to_one_exactly(self, spec):
        for m in (2, 4, 6):
            res = enumerate_exact(m, spec)
            assert res.exact
            assert res.total() == 1

    def test_float_alpha_sums_to_one(self):
        res = enumerate_exact(5, ModelSpec(alpha=1.5))
        assert not res.exact
        assert res.total() == pytest.approx(1.0, abs=1e-12)

    def test_state_space_guard(self):
        with pytest.raises(ValueError):
            enumerate_exact(7, MIN2)
        with pytest.raises(ValueError):
            enumerate_exact(0, MIN2)

    def test_f_dist_pushforward(self):
        res = enumerate_exact(3, MIN2)
        f = res.f_dist(4)
        assert f == {
            (6, 3, 3, 0): Fraction(1, 4),
            (6, 4, 0, 0): Fraction(3, 4),
        }

    def test_to_dict_round_trip(self):
        d = enumerate_exact(3, MIN2).to_dict()
        assert d["multisets"]["3,1,1,1"] == 0.25
        assert d["multisets_exact"]["2,2,1,1"] == "3/4"
        assert d["max_degree"]["3"] == 0.25


class TestChainEquivalence:
    """The vector-level chain and the tree enumeration agree exactly."""

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_chain_enumeration_matches_oracle(self, m):
        assert chain_f_distribution(m) == enumerate_exact(m, MIN2).f_dist(6)


class TestMonteCarloAgreement:
    """Production step law vs the oracle (light versions; the full 1e6-run
    checks live in the acceptance suite)."""

    @pytest.mark.parametrize("spec,seed", [(MIN2, 1), (CLASSIC, 2)])
    def test_multiset_frequencies(self, spec, seed):
        runs = 100_000
        for m in (2, 3, 4):
            counts = mc_multiset_distribution(spec, m, runs, seed=seed)
            emp = {k: v / runs for k, v in counts.items()}
            assert total_variation(emp, enumerate_exact(m, spec).probs) <= 0.02

    def test_python_fallback_agrees(self):
        runs = 30_000
        counts = mc_multiset_distribution(MIN2, 3, runs, seed=3, use_kernel=False)
        emp = {k: v / runs for k, v in counts.items()}
        assert total_variation(emp, enumerate_exact(3, MIN2).probs) <= 0.02

    def test_vector_chain_frequencies(self):
        from pachoice.rng import RandomSource

        runs = 100_000
        rng = RandomSource([4])
        counts: defaultdict = defaultdict(int)
        for _ in range(runs):
            fv = ThresholdVector.from_degrees([1, 1], 6)
            while fv.j < 4:
                fv.chain_step(rng.uniform())
            counts[fv.as_tuple()] += 1
        emp = {k: v / runs for k, v in counts.items()}
        assert total_variation(emp, chain_f_distribution(4)) <= 0.02


def test_total_variation_basics():
    assert total_variation({1: 0.5, 2: 0.5}, {1: 0.5, 2: 0.5}) == 0
    assert total_variation({1: 1.0}, {2: 1.0}) == 1.0
    assert total_variation({1: 0.75, 2: 0.25}, {1: 0.5, 2: 0.5}) == pytest.approx(0.25)
