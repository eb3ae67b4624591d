import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockcampus.econ import (
    EconParams,
    age_decay,
    rank_score,
    redeem_split,
    staff_multiplier,
    vote_delta,
    voter_weight,
)

P = EconParams()


def nested_floor_delta(base, w, d, s):
    # independent straight-line evaluation of the normative nesting,
    # exact rational arithmetic so the oracle has no float rounding of its own
    from fractions import Fraction

    step1 = math.floor(Fraction(base * w, 1000))
    step2 = math.floor(Fraction(step1 * d, 1000))
    return math.floor(Fraction(step2 * s, 1000))


class TestVoterWeight:
    def test_fresh_account_identity(self):
        assert voter_weight(P.initial_bateekh, P) == 1000

    def test_ceiling_clamp(self):
        assert voter_weight(101_000, P) == 2000

    def test_zero_bateekh(self):
        # 1000 + floor(-1000 / 100) = 990
        assert voter_weight(0, P) == 990

    def test_floor_clamp(self):
        assert voter_weight(0, EconParams(weight_min=995)) == 995

    @given(st.integers(0, 10**9))
    def test_bounds_and_monotone(self, b):
        w = voter_weight(b, P)
        assert P.weight_min <= w <= P.weight_max
        assert w <= voter_weight(b + 100, P)


class TestAgeDecay:
    def test_fresh_post(self):
        assert age_decay(0, P) == 1000

    def test_midpoint(self):
        assert age_decay(5_000, P) == 1000 - 375 == 625

    def test_floor(self):
        assert age_decay(10_000, P) == 250
        assert age_decay(10**7, P) == 250

    @given(st.integers(0, 10**6))
    def test_range_and_monotone(self, a):
        d = age_decay(a, P)
        assert 250 <= d <= 1000
        assert age_decay(a + 1, P) <= d


class TestStaffMultiplier:
    def test_no_ratings_neutral(self):
        assert staff_multiplier({}, P) == 1000

    def test_max_star_five(self):
        assert staff_multiplier({"r1": 3, "r2": 5}, P) == 600 + 200 * 5 == 1600

    def test_max_star_one(self):
        assert staff_multiplier({"r1": 1}, P) == 800

    def test_order_independent(self):
        assert staff_multiplier({"a": 2, "b": 4}, P) == staff_multiplier({"b": 4, "a": 2}, P)


class TestVoteDelta:
    def test_identity_multipliers(self):
        assert vote_delta(10_000, 1000, 1000, 1000) == 10_000

    def test_mixed_factors(self):
        expected = nested_floor_delta(10_000, 1500, 625, 1400)
        assert expected == 13_125
        assert vote_delta(10_000, 1500, 625, 1400) == expected

    def test_all_reducing(self):
        expected = nested_floor_delta(10_000, 500, 250, 800)
        assert expected == 1_000
        assert vote_delta(10_000, 500, 250, 800) == expected

    @given(
        st.integers(0, 100_000),
        st.integers(500, 2000),
        st.integers(250, 1000),
        st.integers(600, 1600),
    )
    def test_matches_independent_evaluation(self, base, w, d, s):
        assert vote_delta(base, w, d, s) == nested_floor_delta(base, w, d, s)


class TestRedeemSplit:
    def test_quarter(self):
        assert redeem_split(25) == (3, 22)

    def test_ten(self):
        assert redeem_split(10) == (1, 9)

    def test_one_all_burns(self):
        assert redeem_split(1) == (1, 0)

    def test_price_floor(self):
        with pytest.raises(ValueError):
            redeem_split(0)

    @given(st.integers(1, 10**6))
    def test_split_conserves(self, price):
        burn, treasury = redeem_split(price)
        assert burn + treasury == price
        assert burn == math.ceil(price / 10)


class TestRankScore:
    def test_engaged_post(self):
        assert rank_score(5, 1, {"a": 4, "b": 5}) == 10 * 4 + 20 * 9 == 220

    def test_no_engagement(self):
        assert rank_score(0, 0, {}) == 0

    def test_net_negative(self):
        assert rank_score(0, 3, {}) == -30


class TestEconParams:
    def test_bucket_sum_enforced(self):
        with pytest.raises(ValueError):
            EconParams(genesis_rewards_pool=1)

    def test_award_split_enforced(self):
        with pytest.raises(ValueError):
            EconParams(award_to_recipient=5)

    def test_defaults_round_trip(self):
        assert EconParams.from_dict(P.to_dict()) == P
