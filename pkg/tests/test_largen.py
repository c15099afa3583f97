from __future__ import annotations

import math

import numpy as np
import pytest

from tollforge.errors import NoFiniteGamma, ValidationError
from tollforge.largen import (ExtendedMechanism, certified_rho, extend, extended_program,
                              gamma_for_nonneg, rho_infty, sandwich, solve_extended)
from tollforge.lp import row_violations


@pytest.mark.parametrize("d,n_bar,ref", [(1, 10, 2.011825), (2, 20, 5.100974), (3, 10, 15.530175)])
def test_lower_bounds(d, n_bar, ref):
    _, rho = solve_extended(d, n_bar)
    assert 1 / rho == pytest.approx(ref, abs=1e-5)


def test_validation():
    for bad in (3, 11, 2):
        with pytest.raises(ValidationError):
            solve_extended(1, bad)
    with pytest.raises(ValidationError):
        solve_extended(0, 10)
    with pytest.raises(ValidationError):
        solve_extended(1, 10, face="other")


def test_extend_seam_and_tail():
    f, _ = solve_extended(1, 40, "best")
    em = extend(f, 1, 40)
    assert em(20) == em.beta_ext * 20
    assert em(20) == f[19]
    f2, _ = solve_extended(2, 40, "best")
    em2 = extend(f2, 2, 40)
    assert em2.beta_ext >= 0 and em2(21) >= em2(20)


def test_zero_seam():
    em = extend(np.zeros(10), 1, 10)
    assert em.beta_ext == 0 and em(50) == 0


def test_rho_infty_is_min():
    assert rho_infty(0.4, 0.5, 1, 40) == pytest.approx(min(0.4, 0.5 - (1.05 ** 2) * 0.25 ** 2 * 4 / 4 * 1))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_n_bar_40_gap(d):
    lb, ub = sandwich(d, 40)
    assert ub - lb <= 1e-5


def test_sandwich_linear_n40():
    lb, ub = sandwich(1, 40)
    assert lb == pytest.approx(2.012067, abs=1e-6) and ub == pytest.approx(2.012067, abs=1e-6)


@pytest.mark.parametrize("d,n_bar,ref", [(1, 40, 2.012067), (2, 10, 5.316382), (3, 30, 15.684195)])
def test_upper_bound_examples(d, n_bar, ref):
    _, ub = sandwich(d, n_bar)
    assert ub == pytest.approx(ref, abs=1e-5)


@pytest.mark.parametrize("d,n_bar,ref", [(2, 30, (5.100974, 5.119149)), (3, 40, (15.550852, 15.550859))])
def test_sandwich_examples(d, n_bar, ref):
    lb, ub = sandwich(d, n_bar)
    assert lb == pytest.approx(ref[0], abs=1e-5) and ub == pytest.approx(ref[1], abs=1e-5)


@pytest.mark.parametrize("face", ["best", "vertex", "min"])
@pytest.mark.parametrize("d,n_bar", [(1, 10), (2, 20), (3, 40)])
def test_ub_above_lb(face, d, n_bar):
    lb, ub = sandwich(d, n_bar, face)
    assert ub >= lb - 1e-9


@pytest.mark.parametrize("d,n_bar", [(1, 10), (2, 20), (3, 20), (2, 40)])
def test_extension_feasible_at_larger_n(d, n_bar):
    """f_inf stays feasible at level rho_inf for the program at n = 2 n_bar and 4 n_bar."""
    f, rho = solve_extended(d, n_bar, "best")
    em = extend(f, d, n_bar)
    r_inf = rho_infty(min(rho, certified_rho(f, d, n_bar)), em.beta_ext, d, n_bar)
    for n in (2 * n_bar, 4 * n_bar):
        lp = extended_program(d, n)
        ft = em.table(n)
        w = np.concatenate([[r_inf], ft])
        rows = [i for i, rid in enumerate(lp.row_ids) if not (isinstance(rid, tuple) and rid[0] in ("cap", "mono"))]
        viol = row_violations(lp, w)[rows]
        assert viol.max() <= 1e-9


def test_certified_rho_rejects_infeasible():
    f, _ = solve_extended(1, 10)
    bad = f.copy()
    bad[3] = 100.0
    assert certified_rho(bad, 1, 10) == -math.inf


def test_gamma_trivial():
    em = ExtendedMechanism(1, 10, np.arange(1.0, 6.0) * 2, 2.0)
    assert gamma_for_nonneg(em, 100) == 1.0


def test_gamma_single_point():
    em = ExtendedMechanism(1, 10, np.array([0.5, 2.0, 3.0, 4.0, 5.0]), 1.0)
    assert gamma_for_nonneg(em, 3) >= 2.0


def test_gamma_linear_n40_exhaustive():
    f, _ = solve_extended(1, 40, "best")
    em = extend(f, 1, 40)
    g = gamma_for_nonneg(em, 400)
    x = np.arange(1, 401)
    assert np.all(g * em.table(400) >= x - 1e-12)


def test_gamma_errors():
    with pytest.raises(NoFiniteGamma):
        gamma_for_nonneg(ExtendedMechanism(1, 4, np.array([1.0, 2.0]), 0.0), 10)
    with pytest.raises(NoFiniteGamma):
        gamma_for_nonneg(ExtendedMechanism(1, 4, np.array([0.0, 2.0]), 1.0), 1)
