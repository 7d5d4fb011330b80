import math
from fractions import Fraction as F

import pytest

from leakamp import (
    NoiseSpec,
    agreement,
    bsc_channel,
    check_eps_dp,
    leakage,
    measure_accuracy,
    noisy_example_channel,
    noisy_xor_functionality,
    randomized_response_channel,
    rr_agreement,
    rr_xor_functionality,
)
from leakamp.constructions import rr_flip_probability
from leakamp.errors import DomainError

XOR = lambda x, y: int(x, 2) ^ int(y, 2)


class TestBSC:
    def test_noiseless(self):
        assert agreement(bsc_channel(0)) == F(1, 2)

    def test_uniform_noise(self):
        c = bsc_channel(F(1, 2))
        assert agreement(c) == 0 and leakage(c, 0).eps_max == 0

    def test_noisy_zero_leakage(self):
        c = bsc_channel(F(3, 10))
        assert agreement(c) == F(1, 5) and leakage(c, 0).eps_max == 0

    def test_range(self):
        with pytest.raises(DomainError):
            bsc_channel(F(3, 2))


class TestNoisyExample:
    def test_sixteen_atoms(self):
        assert len(noisy_example_channel(F(1, 10), F(1, 5))) == 16

    def test_pure_noise_hint(self):
        c = noisy_example_channel(F(1, 10), 0)
        assert agreement(c) == F(1, 10) and leakage(c, 0).eps_max == 0

    def test_symmetric_leakage(self):
        prof = leakage(noisy_example_channel(F(1, 10), F(1, 5)), 0)
        assert prof.eps_a == prof.eps_b

    def test_zero_agreement(self):
        c = noisy_example_channel(0, F(1, 5))
        assert agreement(c) == 0
        leakage(c, 0)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 2.0])
    def test_hint_bias_sets_leakage(self, eps):
        c = noisy_example_channel(0.05, math.tanh(eps / 2) / 2)
        assert leakage(c, 0).eps_max == pytest.approx(eps, abs=1e-12)

    def test_noise_spec(self):
        assert NoiseSpec.half_minus(F(1, 10)).one_prob == F(2, 5)
        with pytest.raises(DomainError):
            NoiseSpec(F(3, 2))

    def test_range(self):
        with pytest.raises(DomainError):
            noisy_example_channel(F(3, 5), 0)


class TestRandomizedResponse:
    def test_noiseless_limit(self):
        assert float(agreement(randomized_response_channel(20))) == pytest.approx(0.5, abs=1e-8)

    def test_ln3(self):
        assert float(agreement(randomized_response_channel(math.log(3)))) == pytest.approx(1 / 8, abs=1e-15)

    @pytest.mark.parametrize("eps", [0.1, 0.25, 0.5, 1.0])
    def test_closed_form_agreement(self, eps):
        e = F(math.exp(eps))
        assert agreement(randomized_response_channel(eps)) == ((e - 1) / (e + 1)) ** 2 / 2

    @pytest.mark.parametrize("eps", [0.1, 0.25, 0.5, 1.0])
    def test_uncalibrated_leakage_closed_form(self, eps):
        # the own-flip bit alone separates the two conditionals
        prof = leakage(randomized_response_channel(eps), 0)
        assert prof.eps_max == pytest.approx(math.log((1 + math.exp(2 * eps)) / 2), abs=1e-12)

    @pytest.mark.parametrize("eps", [0.1, 0.25, 0.5, 1.0])
    def test_calibrated_is_eps_leaky(self, eps):
        c = randomized_response_channel(eps, calibrated=True)
        assert leakage(c, 0).eps_max <= eps + 1e-12
        assert leakage(c, 0).eps_max == pytest.approx(eps, abs=1e-12)
        assert agreement(c) == rr_agreement(eps, calibrated=True)

    def test_calibrated_ratio_positive(self):
        ratios = [float(rr_agreement(e, calibrated=True)) / e**2 for e in (0.1, 0.25, 0.5, 1.0)]
        assert min(ratios) > 0.06

    def test_float_backend(self):
        c = randomized_response_channel(0.5, exact=False)
        assert not c.exact
        assert agreement(c) == pytest.approx(math.tanh(0.25) ** 2 / 2, abs=1e-15)

    def test_flip_rate(self):
        assert rr_flip_probability(math.log(3)) == pytest.approx(F(1, 4), abs=1e-15)


class TestXorFunctionalities:
    def test_large_eps_correctness(self):
        rep = check_eps_dp(rr_xor_functionality(20))
        assert float(rep.avg_correctness_beta) == pytest.approx(0.5, abs=1e-8)

    def test_ln3_exact(self):
        assert check_eps_dp(rr_xor_functionality(math.log(3))).eps_measured == pytest.approx(math.log(3), abs=1e-14)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.5])
    def test_perfect_agreement(self, eps):
        assert check_eps_dp(rr_xor_functionality(eps)).avg_agreement == F(1, 2)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.5])
    def test_neighbour_ratios(self, eps):
        assert check_eps_dp(rr_xor_functionality(eps)).eps_measured <= eps + 1e-12

    def test_beta_target(self):
        f = rr_xor_functionality(1.0, beta_target=F(1, 20))
        rep = check_eps_dp(f)
        assert rep.avg_correctness_beta == F(1, 20)
        assert rep.eps_measured <= 1.0 + 1e-12
        with pytest.raises(DomainError):
            rr_xor_functionality(0.1, beta_target=F(1, 4))

    def test_noisy_xor(self):
        assert measure_accuracy(noisy_xor_functionality(F(1, 2)), XOR).avg_correctness_beta == F(1, 2)
        assert measure_accuracy(noisy_xor_functionality(0), XOR).avg_correctness_beta == 0
        acc = measure_accuracy(noisy_xor_functionality(F(1, 10)), XOR)
        assert acc.avg_correctness_beta == F(1, 10) and acc.worst_case_correctness == F(1, 10)
