from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tollforge.basis import from_function, monomial
from tollforge.errors import LengthMismatch, NotMonotone, ValidationError
from tollforge.margcost import marginal_toll
from tollforge.poa import (InducedCost, check_monotone, in_triplet_set, poa_full, poa_monotone,
                           triplet_set)


def _brute_triplets(n):
    out = set()
    for x, y, z in itertools.product(range(n + 1), repeat=3):
        s = x + y + z
        if 1 <= s <= n and (x * y * z == 0 or s == n):
            out.add((x, y, z))
    return out


def test_small_triplet_sets():
    assert set(triplet_set(1)) == {(1, 0, 0), (0, 1, 0), (0, 0, 1)}
    assert len(triplet_set(2)) == 9
    assert in_triplet_set((1, 1, 1), 3) and not in_triplet_set((1, 1, 1), 4)


@pytest.mark.parametrize("n", range(1, 13))
def test_triplet_cardinality_matches_predicate(n):
    ts = triplet_set(n)
    assert set(ts) == _brute_triplets(n)
    assert len(ts) == len(set(ts))
    assert all(in_triplet_set(t, n) for t in ts)


def test_untolled_linear_and_quadratic():
    for d, ref, tol in ((1, 2.5, 0.01), (2, 9.58, 0.02)):
        b = monomial(d, 100)
        assert poa_full([b], [InducedCost.untolled(b)]).poa == pytest.approx(ref, abs=tol)


@pytest.mark.parametrize("n", [1, 3, 10])
def test_constant_basis_poa_one(n):
    b = monomial(0, n)
    assert poa_full([b], [InducedCost.untolled(b)]).poa == pytest.approx(1.0, abs=1e-9)
    assert poa_monotone([b], [InducedCost.untolled(b)]).poa == pytest.approx(1.0, abs=1e-9)


def test_monotone_matches_full_untolled_n100():
    b = monomial(1, 100)
    f = InducedCost.untolled(b)
    assert poa_monotone([b], [f]).rho == pytest.approx(poa_full([b], [f]).rho, abs=1e-9)


def test_marginal_linear():
    b = monomial(1, 100)
    f = marginal_toll(b).induced()
    assert f.f[:3] == (1.0, 3.0, 5.0)
    assert poa_monotone([b], [f]).poa == pytest.approx(3.0, abs=0.01)


def test_monotone_rejects_decreasing_f():
    b = monomial(1, 4)
    f = InducedCost(0, 4, (1.0, 3.0, 2.0, 4.0))
    with pytest.raises(NotMonotone):
        check_monotone(f)
    with pytest.raises(NotMonotone):
        poa_monotone([b], [f])


def test_input_validation():
    b = monomial(1, 4)
    with pytest.raises(LengthMismatch):
        poa_full([b], [])
    with pytest.raises(ValidationError):
        poa_full([b], [InducedCost.untolled(monomial(1, 5))])


def test_report_json():
    b = monomial(1, 5)
    rep = poa_full([b], [InducedCost.untolled(b)])
    js = rep.to_json()
    assert js["poa"] == pytest.approx(1 / js["rho"])
    assert rep.binding


def _random_case(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    m = int(rng.integers(1, 3))
    bases, fs = [], []
    for j in range(m):
        b = from_function(f"r{j}", n, lambda x, p=rng.uniform(0.5, 3.0), c=rng.uniform(0.1, 2): c + x ** p)
        f = np.cumsum(rng.uniform(0.05, 3.0, size=n))
        bases.append(b)
        fs.append(InducedCost(j, n, tuple(f)))
    return bases, fs


@pytest.mark.parametrize("seed", range(30))
def test_full_and_monotone_agree_randomized(seed):
    bases, fs = _random_case(seed)
    assert poa_monotone(bases, fs).rho == pytest.approx(poa_full(bases, fs).rho, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6))
def test_scaling_f_leaves_rho_unchanged(incs):
    n = len(incs)
    b = monomial(1, n)
    f = np.cumsum(np.asarray(incs) + 0.1)
    r1 = poa_full([b], [InducedCost(0, n, tuple(f))]).rho
    r2 = poa_full([b], [InducedCost(0, n, tuple(3.7 * f))]).rho
    assert r1 == pytest.approx(r2, abs=1e-8)
