from __future__ import annotations

from fractions import Fraction

import pytest

from tollforge.basis import from_function, monomial
from tollforge.consttoll import (D2_POA, const_closed_form, const_d2_closed_form, const_design, u_bar)
from tollforge.errors import HypothesisViolation, ValidationError


@pytest.mark.parametrize("d,ref", [(1, 1 + 2 / 3 ** 0.5), (2, 16 / 3), (3, 18.36)])
def test_const_design_n100(d, ref):
    assert const_design([monomial(d, 100)]).poa == pytest.approx(ref, abs=0.01)


def test_quadratic_toll_is_three():
    res = const_design([monomial(2, 100)])
    assert res.tau[0] == pytest.approx(3.0, abs=1e-6)
    assert res.sigma[0] == pytest.approx(res.nu_star * res.tau[0])


@pytest.mark.parametrize("n", [10, 40])
def test_filtered_pairs_match_full_grid(n):
    for d in (1, 2, 3):
        b = [monomial(d, n)]
        assert const_design(b).rho_star == pytest.approx(const_design(b, full_grid=True).rho_star, abs=1e-10)


def test_closed_forms():
    assert u_bar(3) == 2
    assert const_closed_form(3).poa == Fraction(1212, 66)
    assert const_closed_form(4).poa == Fraction(111588, 1248)
    assert const_closed_form(5).poa == Fraction(1922184, 4092)
    assert const_closed_form(6).poa == Fraction(32963196, 9912)
    with pytest.raises(ValidationError):
        const_closed_form(2)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_closed_form_matches_lp(d):
    assert const_design([monomial(d, 100)]).poa == pytest.approx(float(const_closed_form(d).poa), rel=1e-9)


def test_d2_closed_form():
    assert D2_POA == Fraction(16, 3)
    assert const_d2_closed_form(1.0) == 3.0
    assert const_d2_closed_form(5.0, 2.0, 7.0) == 15.0
    assert const_d2_closed_form(0.0, 1.0, 1.0) == 0.0
    with pytest.raises(ValidationError):
        const_d2_closed_form(-1.0)


def test_rejects_concave_basis():
    with pytest.raises(HypothesisViolation):
        const_design([from_function("sat", 10, lambda x: 1 - 0.5 ** x)])
