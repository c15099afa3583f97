from __future__ import annotations

import json

import numpy as np
import pytest

from tollforge.basis import monomial
from tollforge.design import design_full, design_mechanism
from tollforge.errors import HypothesisViolation, IrrationalDual, TooLarge, ValidationError
from tollforge.oracle import (MAX_PROFILES, GameInstance, basis_tolls, build_const_lb_game,
                              build_pigou_example, build_tight_instance, enumerate_pure_nash,
                              marginal_tolls, player_cost, social_cost, solve_poa_dual)
from tollforge.poa import InducedCost, poa_full


def single_resource(tolls=None):
    return GameInstance(2, ((1, 1.0),), (((0,),), ((0,),)), tolls)


def test_social_cost_single_resource():
    assert social_cost(single_resource(), (0, 0)) == 4.0


def test_unused_resources_add_nothing():
    g = GameInstance(1, ((1, 1.0), (2, 5.0)), (((0,), ()),))
    assert social_cost(g, (0,)) == 1.0
    assert social_cost(g, (1,)) == 0.0


def test_player_cost_with_tolls():
    g = single_resource(np.array([[0.0, 1.0]]))
    assert player_cost(g, (0, 0), 0) == 3.0
    assert player_cost(single_resource(), (0, 0), 1) == 2.0


def test_player_cost_fixedgame():
    g = build_const_lb_game(3.0)
    c1 = 1 / 216
    assert player_cost(g, (0,) * 8, 0) == pytest.approx((216 * c1 + 6 * c1 * 3) / 8)


def test_pigou_untolled_and_marginal():
    g = build_pigou_example()
    assert social_cost(g, (0, 0)) == 2.0
    r = enumerate_pure_nash(g)
    assert r.worst_ne_cost == 2.0 and r.best_ne_cost == 2.0 and r.empirical_poa == 1.0
    rm = enumerate_pure_nash(g.with_tolls(marginal_tolls(g)))
    assert rm.worst_ne_cost == 6.0 and rm.min_cost == 2.0 and rm.empirical_poa == 3.0


def test_single_player_poa_one():
    g = GameInstance(1, ((1, 1.0), (1, 2.0)), (((0,), (1,)),))
    r = enumerate_pure_nash(g)
    assert r.pure_nash == ((0,),) and r.empirical_poa == 1.0


def test_two_players_two_links():
    g = GameInstance(2, ((1, 1.0), (1, 1.0)), (((0,), (1,)), ((0,), (1,))))
    r = enumerate_pure_nash(g)
    assert set(r.pure_nash) == {(0, 1), (1, 0)}
    assert r.worst_ne_cost == 2.0 and r.empirical_poa == 1.0 and r.n_profiles == 4


@pytest.mark.parametrize("tau", [3.0, 5.0, 20.0])
def test_const_lb_game_high(tau):
    g = build_const_lb_game(tau)
    r = enumerate_pure_nash(g)
    assert (0,) * 8 in r.pure_nash
    assert r.empirical_poa >= 16 / 3 - 1e-6


def test_const_lb_game_exact_at_three():
    assert enumerate_pure_nash(build_const_lb_game(3.0)).empirical_poa == pytest.approx(16 / 3, abs=1e-6)


@pytest.mark.parametrize("tau", [1.0, 2.0, 2.9])
def test_const_lb_game_low(tau):
    g = build_const_lb_game(tau)
    r = enumerate_pure_nash(g)
    assert (0, 0, 0) in r.pure_nash
    assert r.empirical_poa >= 16 / 3 - 1e-6


def test_const_lb_game_negative_coefficient():
    with pytest.raises(HypothesisViolation):
        build_const_lb_game(0.0)
    with pytest.raises(ValidationError):
        build_const_lb_game(3.0, d=3)


def test_too_large():
    P = 24
    g = GameInstance(P, ((1, 1.0), (1, 1.0)), tuple((((0,), (1,))) for _ in range(P)))
    assert 2 ** P > MAX_PROFILES
    with pytest.raises(TooLarge):
        enumerate_pure_nash(g)


def test_instance_validation():
    with pytest.raises(ValidationError):
        GameInstance(1, ((1, 1.0),), (((3,),),))
    with pytest.raises(ValidationError):
        GameInstance(2, ((1, 1.0),), (((0,),),))
    with pytest.raises(ValidationError):
        GameInstance(1, ((1, -1.0),), (((0,),),))
    with pytest.raises(ValidationError):
        GameInstance(1, ((1, 1.0),), ((),))


def test_json_round_trip():
    g = build_const_lb_game(3.0)
    back = GameInstance.from_json(json.loads(json.dumps(g.to_json())))
    assert back.actions == g.actions and back.resources == g.resources
    assert np.allclose(back.tolls, g.tolls)
    assert enumerate_pure_nash(back).to_json() == enumerate_pure_nash(g).to_json()


def test_social_cost_permutation_invariant():
    rng = np.random.default_rng(0)
    m = 5
    acts = tuple(tuple(tuple(int(e) for e in np.flatnonzero(rng.random(m) < 0.5)) for _ in range(2)) for _ in range(3))
    res = tuple((1, float(a)) for a in rng.uniform(0.5, 2, m))
    g = GameInstance(3, res, acts)
    perm = (2, 0, 1)
    gp = GameInstance(3, res, tuple(acts[p] for p in perm))
    for a in np.ndindex(2, 2, 2):
        ap = tuple(a[p] for p in perm)
        assert social_cost(g, a) == pytest.approx(social_cost(gp, ap))


def test_dual_n1():
    b = monomial(1, 1)
    assert solve_poa_dual([b], [InducedCost.untolled(b)]).value == pytest.approx(1.0)


def test_dual_strong_duality_n4():
    b = monomial(1, 4)
    dz = design_full(b)
    f = InducedCost(0, 4, tuple(dz.f_star))
    dual = solve_poa_dual([b], [f])
    assert dual.value == pytest.approx(dz.rho_star, abs=1e-8)
    assert dual.value == pytest.approx(poa_full([b], [f]).rho, abs=1e-8)
    assert len(dual.support()) <= 3


@pytest.mark.parametrize("n,tolled", [(2, False), (3, True), (2, True), (3, False), (4, True)])
def test_tight_instance(n, tolled):
    b = monomial(1, n)
    f = InducedCost(0, n, tuple(design_full(b).f_star)) if tolled else InducedCost.untolled(b)
    rho = poa_full([b], [f]).rho
    inst = build_tight_instance(solve_poa_dual([b], [f]), [b], n, [f])
    r = enumerate_pure_nash(inst)
    assert abs(r.empirical_poa - 1 / rho) <= 0.05
    assert r.empirical_poa <= 1 / rho + 1e-6


def test_tight_instance_singleton_support():
    b = monomial(1, 3)
    inst = build_tight_instance({(0, 1, 0, 0): 1.0}, [b], 3)
    assert all(len(al) == 2 for al in inst.actions)
    assert any(al[1] == () for al in inst.actions)
    enumerate_pure_nash(inst)


def test_irrational_dual():
    with pytest.raises(IrrationalDual):
        build_tight_instance({(0, 1, 1, 0): 2 ** 0.5 / 1000}, [monomial(1, 2)], 2)


def _random_game(rng, degrees, P):
    m = int(rng.integers(2, 6))
    res = tuple((int(rng.choice(degrees)), float(rng.uniform(0.2, 3.0))) for _ in range(m))
    acts = []
    for _ in range(P):
        k = int(rng.integers(1, 4))
        acts.append(tuple(tuple(int(e) for e in np.flatnonzero(rng.random(m) < 0.5)) or (int(rng.integers(m)),)
                          for _ in range(k)))
    return GameInstance(P, res, tuple(acts), bases=tuple(monomial(j, P) for j in range(max(degrees) + 1)))


@pytest.mark.parametrize("seed", range(25))
def test_random_games_never_exceed_lp_bound(seed):
    rng = np.random.default_rng(seed)
    P = int(rng.integers(2, 4))
    degrees = (0, 1)
    bases = [monomial(j, P) for j in degrees]
    g = _random_game(rng, degrees, P)
    untolled = enumerate_pure_nash(g)
    bound_u = poa_full(bases, [InducedCost.untolled(b, j) for j, b in enumerate(bases)]).poa
    assert untolled.empirical_poa <= bound_u + 1e-6
    mech, _ = design_mechanism(tuple(bases))
    tolled = enumerate_pure_nash(g.with_tolls(basis_tolls(g, mech.per_basis_tolls)))
    assert tolled.empirical_poa <= mech.poa + 1e-6
