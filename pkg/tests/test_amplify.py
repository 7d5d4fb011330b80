import math
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import channels
from leakamp import (
    INFINITE,
    Channel,
    agreement,
    bsc_channel,
    leakage,
    noisy_example_channel,
    randomized_response_channel,
    statistical_distance,
)
from leakamp.amplify import (
    SWEEP_HEADER,
    agreement_bracket,
    amplified_leakage,
    amplified_sd,
    bounded_execution,
    bounded_output_distribution,
    delta_exact,
    delta_output_pairs,
    delta_simulate,
    delta_simulator,
    expected_calls_delta,
    expected_calls_lambda,
    full_pipeline,
    gap_amplification_params,
    lambda_simulate,
    predicted_agreement,
    simulate,
    success_probability,
    sweep_threshold,
    sweep_to_csv,
)
from leakamp.channel import conditioned_views
from leakamp.dist import eps_le, log_ratio_delta, product, repetition_bound
from leakamp.errors import EnumerationCapError, NegativeAgreementError, ParameterWindowError

NOISY = noisy_example_channel(F(1, 10), F(1, 5))


def output_pairs(c: Channel) -> dict:
    out = {}
    for _, oa, _, ob, w in c.atoms():
        out[(oa, ob)] = out.get((oa, ob), 0) + w
    return out


def assert_multinomial(stats, exact, k=4.0):
    n = stats.runs
    for (a, b), p in exact.items():
        p = float(p)
        sigma = math.sqrt(max(p * (1 - p), 1e-12) / n)
        got = stats.pair_counts[f"{a}{b}"] / n
        assert abs(got - p) <= k * sigma + 1e-12, (a, b, got, p)


class TestClosedForms:
    def test_zero(self):
        assert predicted_agreement(0, 7) == 0

    def test_two(self):
        assert predicted_agreement(F(1, 10), 2) == F(5, 26)

    def test_window(self):
        with pytest.raises(ParameterWindowError):
            predicted_agreement(F(1, 2), 2)

    @given(st.fractions(min_value=F(1, 10**4), max_value=F(1, 4)), st.integers(1, 64))
    def test_bracket(self, alpha, ell):
        assume(alpha * ell < F(1, 4))
        lo, hi = agreement_bracket(alpha, ell)
        assert lo <= predicted_agreement(alpha, ell) <= hi

    def test_bracket_absent(self):
        assert agreement_bracket(F(1, 10), 3) is None

    @given(st.fractions(min_value=0, max_value=F(2, 5)), st.integers(0, 5))
    def test_lambda_calls(self, alpha, depth):
        calls = expected_calls_lambda(alpha, depth)
        assert 2**depth <= calls <= 4**depth

    def test_lambda_depth1(self):
        assert expected_calls_lambda(F(1, 10), 1) == expected_calls_delta(F(1, 10), 2)


class TestParams:
    @pytest.mark.parametrize("alpha, ell", [(F(1, 16), 4), (F(1, 32), 4), (F(3, 64), 4)])
    def test_examples(self, alpha, ell):
        p = gap_amplification_params(alpha, F(1, 16))
        assert p.ell == ell and p.depth == 2

    def test_precondition(self):
        with pytest.raises(ParameterWindowError):
            gap_amplification_params(F(1, 10), F(1, 5))
        with pytest.raises(ParameterWindowError):
            gap_amplification_params(F(1, 100), F(1, 16))

    @given(st.fractions(min_value=F(1, 10**5), max_value=F(1, 8)).filter(lambda a: a < F(1, 8)), st.data())
    def test_product_range(self, alpha_max, data):
        alpha = data.draw(st.fractions(min_value=alpha_max / 2, max_value=alpha_max))
        p = gap_amplification_params(alpha, alpha_max)
        assert F(1, 16) <= p.ell * alpha <= F(1, 4)
        assert 2**p.depth == p.ell


class TestDeltaExact:
    def test_ell_one(self):
        assert agreement(delta_exact(NOISY, 1)) == agreement(NOISY)

    def test_noisy(self):
        assert agreement(delta_exact(NOISY, 2)) == F(5, 26)

    def test_cap(self):
        with pytest.raises(EnumerationCapError) as info:
            delta_exact(NOISY, 4, cap=100)
        assert info.value.exit_code == 3

    def test_negative(self):
        with pytest.raises(NegativeAgreementError):
            delta_exact(bsc_channel(F(4, 5)), 2)

    def test_output_pairs_match(self):
        for ell in (1, 2, 3):
            c = delta_exact(NOISY, ell)
            assert output_pairs(c) == dict(delta_output_pairs(NOISY, ell).items())

    @settings(max_examples=60, deadline=None)
    @given(channels(max_views=3), st.integers(1, 3))
    def test_agreement_matches_closed_form(self, c, ell):
        a = agreement(c)
        assume(0 <= a < F(1, 2))
        assert agreement(delta_exact(c, ell)) == predicted_agreement(a, ell)

    @settings(max_examples=40, deadline=None)
    @given(channels(max_views=3), st.integers(1, 3))
    def test_no_more_than_raw_product(self, c, ell):
        a = agreement(c)
        assume(0 <= a < F(1, 2) and a > -F(1, 2))
        assume(0 < a + F(1, 2) < 1)
        amp = leakage(delta_exact(c, ell), 0)
        for party, got in (("A", amp.eps_a), ("B", amp.eps_b)):
            eq, neq = conditioned_views(c, party)
            raw = leakage_of_products(eq, neq, ell)
            assert eps_le(got, raw, 1e-9)

    @settings(max_examples=40, deadline=None)
    @given(channels(max_views=3), st.integers(1, 3))
    def test_product_route_matches_exact(self, c, ell):
        a = agreement(c)
        assume(0 <= a and 0 < a + F(1, 2) < 1)
        exact = leakage(delta_exact(c, ell), 0)
        typed = amplified_leakage(c, ell, 0)
        for x, y in ((exact.eps_a, typed.eps_a), (exact.eps_b, typed.eps_b)):
            if x is INFINITE or y is INFINITE:
                assert x is y
            else:
                assert x == pytest.approx(y, abs=1e-9)
        amp = delta_exact(c, ell)
        sd_exact = max(statistical_distance(*conditioned_views(amp, p)) for p in ("A", "B"))
        assert sd_exact == amplified_sd(c, ell)

    @pytest.mark.parametrize("ell", [2, 3, 4])
    @pytest.mark.parametrize("delta_prime", [F(1, 10), F(1, 100)])
    def test_repetition_budget(self, ell, delta_prime):
        base = leakage(NOISY, 0)
        bound = repetition_bound(base.eps_max, 0, ell, delta_prime)
        amp = delta_exact(NOISY, ell)
        for p in ("A", "B"):
            assert log_ratio_delta(*conditioned_views(amp, p), bound.eta) <= bound.delta_out


def leakage_of_products(eq, neq, ell):
    from leakamp.dist import log_ratio_epsilon

    return log_ratio_epsilon(product(eq, ell), product(neq, ell), 0)


class TestMonteCarlo:
    @pytest.mark.parametrize("ell", [1, 2, 4])
    def test_delta_equivalence(self, ell):
        stats = delta_simulate(NOISY, ell, 10**5, seed=11)
        assert_multinomial(stats, dict(delta_output_pairs(NOISY, ell).items()))

    @pytest.mark.parametrize("depth", [0, 1, 2])
    def test_lambda_equivalence(self, depth):
        stats = lambda_simulate(NOISY, depth, 10**5, seed=12)
        assert_multinomial(stats, dict(delta_output_pairs(NOISY, 2**depth).items()))
        assert 2**depth <= stats.mean_channel_calls <= 4**depth

    def test_noisy_three_sigma(self):
        stats = delta_simulate(NOISY, 2, 10**5, seed=3)
        p = 9 / 13
        assert abs(stats.agree_count / stats.runs - p) <= 3 * math.sqrt(p * (1 - p) / stats.runs)

    def test_expected_rounds(self):
        stats = delta_simulate(NOISY, 4, 10**5, seed=5)
        rounds = stats.mean_channel_calls / 4
        want = float(1 / success_probability(F(1, 10), 4))
        # rounds are geometric, so the variance is (1-q)/q^2
        q = 1 / want
        assert abs(rounds - want) <= 4 * math.sqrt((1 - q) / q**2 / stats.runs)

    def test_lambda_expected_calls(self):
        stats = lambda_simulate(NOISY, 2, 10**5, seed=6)
        assert stats.mean_channel_calls == pytest.approx(float(expected_calls_lambda(F(1, 10), 2)), rel=0.02)

    def test_perfect_channel(self):
        c = Channel([("0", 0, "0", 0, F(1, 2)), ("1", 1, "1", 1, F(1, 2))])
        stats = delta_simulate(c, 4, 1000, seed=1)
        assert stats.agree_count == 1000 and stats.max_channel_calls == 4

    def test_depth_zero_is_direct(self):
        stats = lambda_simulate(NOISY, 0, 10**4, seed=2)
        assert stats.mean_channel_calls == 1 and stats.max_channel_calls == 1

    def test_determinism(self):
        a = delta_simulate(NOISY, 2, 5000, seed=99)
        b = delta_simulate(NOISY, 2, 5000, seed=99)
        assert a == b
        assert delta_simulate(NOISY, 2, 5000, seed=100) != a

    def test_workers_do_not_change_results(self):
        a = delta_simulate(NOISY, 2, 4000, seed=7)
        b = delta_simulate(NOISY, 2, 4000, seed=7, workers=3)
        assert a.to_json() == b.to_json()

    def test_merge_associative(self):
        from leakamp.amplify import _simulate_range

        sim = delta_simulator(NOISY, 2)
        x, y, z = (_simulate_range(sim, 1, a, b, None) for a, b in ((0, 10), (10, 25), (25, 40)))
        assert x.merge(y).merge(z).to_json() == x.merge(y.merge(z)).to_json()

    def test_max_iterations(self):
        stats = delta_simulate(bsc_channel(F(1, 2)), 8, 200, seed=1, max_iterations=1)
        # Pr[E] = 2^-7 per round, so a single round mostly truncates
        assert 0 < stats.truncated < 200


class TestBounded:
    def test_cap_above_runs(self):
        sim = delta_simulator(NOISY, 2)
        a = simulate(sim, 3000, seed=4)
        b = simulate(bounded_execution(sim, 10**9), 3000, seed=4)
        assert (a.pair_counts, a.total_calls, b.truncated) == (b.pair_counts, b.total_calls, 0)

    @pytest.mark.parametrize("ell", [2, 4])
    def test_one_round_cap(self, ell):
        _, t = bounded_output_distribution(NOISY, ell, ell)
        assert t == 1 - success_probability(F(1, 10), ell)
        stats = simulate(bounded_execution(delta_simulator(NOISY, ell), ell), 10**5, seed=8)
        sigma = math.sqrt(float(t * (1 - t)) / stats.runs)
        assert abs(stats.truncation_rate - float(t)) <= 4 * sigma

    def test_domain(self):
        with pytest.raises(ParameterWindowError):
            bounded_execution(delta_simulator(NOISY, 2), 0)

    @pytest.mark.parametrize("n", [2, 10, 100, 1000])
    def test_sd_within_one_over_n(self, n):
        cap = math.ceil(n * expected_calls_delta(F(1, 10), 2))
        mixed, _ = bounded_output_distribution(NOISY, 2, cap)
        assert statistical_distance(mixed, delta_output_pairs(NOISY, 2)) <= F(1, n)


class TestPipeline:
    def test_bsc(self):
        rep = full_pipeline(bsc_channel(F(1, 2) - F(1, 16)), F(1, 16))
        assert rep.amplify["in_window"] and rep.amplify["route"] == "exact"
        assert rep.leakage["profile"]["eps_max"] == 0
        assert rep.passed

    def test_zero_noise_hint(self):
        rep = full_pipeline(noisy_example_channel(F(1, 16), 0), F(1, 16))
        assert rep.passed

    def test_rr_reports_verdict(self):
        c = randomized_response_channel(0.5, calibrated=True)
        a = agreement(c)
        rep = full_pipeline(c, a)
        w = rep.wullschleger
        assert {"lhs", "rhs", "holds"} <= set(w) and not w["holds"]

    def test_product_route_agrees(self):
        c = noisy_example_channel(F(1, 16), F(1, 20))
        ex = full_pipeline(c, F(1, 16), route="exact")
        pr = full_pipeline(c, F(1, 16), route="product")
        assert ex.amplify["agreement"] == pr.amplify["agreement"]
        assert ex.swbsc == pr.swbsc
        assert ex.leakage["profile"]["eps_max"] == pytest.approx(pr.leakage["profile"]["eps_max"], abs=1e-9)

    def test_repetition_section(self):
        rep = full_pipeline(NOISY, F(1, 10), delta_prime=F(1, 100))
        assert rep.repetition["ell"] == 2
        assert rep.leakage["within_repetition_bound"]

    def test_stage_named(self):
        with pytest.raises(ParameterWindowError, match="stage params"):
            full_pipeline(NOISY, F(1, 16))


class TestSweep:
    def test_rows(self):
        rows = sweep_threshold([0.25], [0.01, 0.05, 0.1])
        assert len(rows) == 1
        r = rows[0]
        assert r.triviality_alpha == pytest.approx(
            float((1 - 2 / (1 + math.sqrt(2 * math.exp(0.25) - 1))) ** 2 / 2)
        )
        assert r.triv_ratio == pytest.approx(r.triviality_alpha / 0.0625)

    def test_empty(self):
        with pytest.raises(ParameterWindowError):
            sweep_threshold([0.1], [])

    def test_csv(self):
        text = sweep_to_csv(sweep_threshold([0.1, 0.2], [0.01, 0.1]))
        assert text.splitlines()[0] == ",".join(SWEEP_HEADER)
        assert text == sweep_to_csv(sweep_threshold([0.1, 0.2], [0.01, 0.1]))

    def test_zero_leakage_passes(self):
        rows = sweep_threshold([1e-9], [0.05, 0.1])
        assert rows[0].min_passing_alpha == 0.05
