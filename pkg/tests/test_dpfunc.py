import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from leakamp import (
    INFINITE,
    Dist,
    Functionality,
    agreement,
    check_eps_dp,
    dp_xor_to_channel,
    group_privacy,
    is_balanced,
    leakage,
    leakage_wrt_outputs_check,
    measure_accuracy,
    restrict_functionality,
)
from leakamp.constructions import (
    constant_functionality,
    exact_xor_functionality,
    noisy_xor_functionality,
    parity_functionality,
    revealing_xor_functionality,
    rr_xor_functionality,
)
from leakamp.dist import eps_le
from leakamp.dpfunc import bitstrings, functionality_from_json, functionality_to_json
from leakamp.errors import DomainError, ImperfectAgreementError, ValidationError

XOR = lambda x, y: int(x, 2) ^ int(y, 2)


@st.composite
def perfect_functionalities(draw, n=1, max_views=3):
    """Random functionalities whose two outputs always match."""
    cells = {}
    for x, y in itertools.product(bitstrings(n), repeat=2):
        k = draw(st.integers(1, max_views))
        ws = draw(st.lists(st.integers(1, 9), min_size=k, max_size=k))
        atoms = {}
        for i, w in enumerate(ws):
            o = draw(st.integers(0, 1))
            va = f"{o}:a{draw(st.integers(0, 2))}"
            vb = f"{o}:b{draw(st.integers(0, 2))}"
            atoms[(va, vb)] = atoms.get((va, vb), 0) + F(w, sum(ws))
        cells[(x, y)] = Dist(atoms.items())
    return Functionality(n, cells, XOR if n == 1 else None)


class TestCheckDP:
    def test_revealing(self):
        assert check_eps_dp(revealing_xor_functionality()).eps_measured is INFINITE

    def test_rr_ln3(self):
        assert check_eps_dp(rr_xor_functionality(math.log(3))).eps_measured == pytest.approx(math.log(3), abs=1e-14)

    def test_constant(self):
        rep = check_eps_dp(constant_functionality())
        assert rep.eps_measured == 0 and rep.neighbor_witness is None

    def test_witness_attains(self):
        f = noisy_xor_functionality(F(1, 10))
        rep = check_eps_dp(f)
        w = rep.neighbor_witness
        a = f.view_dist(*w.inputs, w.party).prob(w.view)
        b = f.view_dist(*w.neighbor, w.party).prob(w.view)
        assert abs(math.log(a / b)) == pytest.approx(rep.eps_measured)
        assert rep.eps_measured == pytest.approx(math.log(3 / 2))


class TestAccuracy:
    def test_noisy(self):
        acc = measure_accuracy(noisy_xor_functionality(F(1, 10)), XOR)
        assert (acc.avg_correctness_beta, acc.worst_case_correctness) == (F(1, 10), F(1, 10))

    def test_exact(self):
        assert measure_accuracy(exact_xor_functionality(), XOR).avg_correctness_beta == F(1, 2)

    def test_constant(self):
        assert measure_accuracy(constant_functionality(), XOR).avg_correctness_beta == 0

    def test_dimension_mismatch(self):
        from leakamp import TruthTable

        with pytest.raises(ValidationError):
            measure_accuracy(constant_functionality(), TruthTable(2, [[0] * 4] * 4))

    @settings(max_examples=40, deadline=None)
    @given(perfect_functionalities())
    def test_relabel_invariant(self, f):
        renamed = {
            k: Dist(((f"{va[0]}:R{va}", f"{vb[0]}:R{vb}"), w) for (va, vb), w in d.items())
            for k, d in f.cells.items()
        }
        g = Functionality(1, renamed, XOR)
        assert measure_accuracy(f, XOR) == measure_accuracy(g, XOR)


class TestDPXorChannel:
    def test_exact_xor(self):
        assert agreement(dp_xor_to_channel(exact_xor_functionality())) == F(1, 2)

    def test_noisy(self):
        assert agreement(dp_xor_to_channel(noisy_xor_functionality(F(1, 10)))) == F(1, 10)

    def test_rr_two_eps(self):
        assert leakage(dp_xor_to_channel(rr_xor_functionality(0.5)), 0).eps_max <= 1.0 + 1e-12

    def test_imperfect(self):
        cells = {(x, y): Dist({("0:", "1:"): F(1)}) for x in "01" for y in "01"}
        with pytest.raises(ImperfectAgreementError):
            dp_xor_to_channel(Functionality(1, cells))

    def test_width(self):
        with pytest.raises(ValidationError):
            dp_xor_to_channel(parity_functionality(2))

    @settings(max_examples=80, deadline=None)
    @given(perfect_functionalities())
    def test_induced_channel_bounds(self, f):
        rep = check_eps_dp(f)
        c = dp_xor_to_channel(f)
        assert is_balanced(c)
        assert agreement(c) == rep.avg_correctness_beta
        if 0 < agreement(c) + F(1, 2) < 1 and rep.eps_measured is not INFINITE:
            assert eps_le(leakage(c, 0).eps_max, 2 * rep.eps_measured, 1e-12)

    @settings(max_examples=60, deadline=None)
    @given(perfect_functionalities())
    def test_output_leakage(self, f):
        try:
            out = leakage_wrt_outputs_check(f)
        except ArithmeticError:
            return
        assert out.holds


class TestOutputLeakage:
    def test_constant(self):
        out = leakage_wrt_outputs_check(constant_functionality())
        assert out.eps_a == 0 and out.eps_b == 0

    def test_rr(self):
        out = leakage_wrt_outputs_check(rr_xor_functionality(0.5))
        assert out.eps_a <= 0.5 + 1e-12 and out.eps_b <= 0.5 + 1e-12

    def test_exact_xor_vacuous(self):
        out = leakage_wrt_outputs_check(exact_xor_functionality())
        assert out.eps_a is INFINITE and out.eps_dp is INFINITE and out.holds


class TestGroupPrivacy:
    def test_values(self):
        assert group_privacy(0.2, 1) == 0.2
        assert group_privacy(0.2, 3) == pytest.approx(0.6)
        assert group_privacy(0, 5) == 0

    def test_domain(self):
        with pytest.raises(DomainError):
            group_privacy(-1, 2)


class TestRestrict:
    def test_irrelevant_bits(self):
        r = restrict_functionality(rr_xor_functionality(0.5), "0", "0", "1", "1")
        assert check_eps_dp(r).eps_measured == 0

    def test_parity(self):
        r = restrict_functionality(parity_functionality(3), "000", "100", "000", "100")
        assert measure_accuracy(r, XOR).avg_correctness_beta == F(1, 2)

    def test_domain(self):
        with pytest.raises(DomainError):
            restrict_functionality(parity_functionality(2), "000", "01", "00", "01")

    @settings(max_examples=40, deadline=None)
    @given(st.data())
    def test_group_bound(self, data):
        n = 2
        cells = {}
        for x, y in itertools.product(bitstrings(n), repeat=2):
            # a constant output keeps every neighbouring ratio finite
            w = data.draw(st.integers(1, 9))
            cells[(x, y)] = Dist({("0:p", "0:p"): F(w, 10), ("0:q", "0:q"): F(10 - w, 10)})
        f = Functionality(n, cells)
        pick = lambda: data.draw(st.sampled_from(bitstrings(n)))
        x0, x1, y0, y1 = pick(), pick(), pick(), pick()
        eps = check_eps_dp(f).eps_measured
        d = max(sum(a != b for a, b in zip(x0, x1)), sum(a != b for a, b in zip(y0, y1)))
        r = check_eps_dp(restrict_functionality(f, x0, x1, y0, y1)).eps_measured
        assert r <= d * eps + 1e-12
        assert r <= n * eps + 1e-12


def test_json_roundtrip():
    f = rr_xor_functionality(0.5)
    g = functionality_from_json(functionality_to_json(f))
    assert all(g.cells[k] == f.cells[k] for k in f.cells)
    assert g.target("0", "1") == 1
