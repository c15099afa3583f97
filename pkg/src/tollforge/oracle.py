"""Explicit small congestion games and brute-force equilibrium checks.

Resource e carries basis index j_e and coefficient alpha_e, so its cost at
load x is alpha_e * b_{j_e}(x).  Tolls, when present, are per-resource
tables tau_e(1..n_players).  Social cost excludes tolls; a player's cost
includes them.

Equilibria are pure and weak: a joint action is a Nash equilibrium unless
some player can lower its own cost by more than ``NE_TOL``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .basis import BasisTable, from_spec, monomial
from .errors import (HypothesisViolation, IrrationalDual, NoEquilibrium, TooLarge, UnboundedPoa,
                     ValidationError)
from .lp import EQ, LE, LinearProgram, solve
from .poa import InducedCost, _check_inputs, _triplet_array

NE_TOL = 1e-9
MAX_PROFILES = 10 ** 7
_CHUNK = 1 << 15


@dataclass(frozen=True, eq=False)
class GameInstance:
    n_players: int
    resources: tuple[tuple[int, float], ...]
    actions: tuple[tuple[tuple[int, ...], ...], ...]
    tolls: np.ndarray | None = None  # (n_resources, n_players): tau_e(1..n_players)
    bases: tuple[BasisTable, ...] = field(default=())

    def __post_init__(self) -> None:
        P = int(self.n_players)
        if P < 1:
            raise ValidationError("a game needs at least one player")
        res = tuple((int(j), float(a)) for j, a in self.resources)
        for j, a in res:
            if j < 0 or a < 0 or not math.isfinite(a):
                raise ValidationError(f"invalid resource (basis={j}, alpha={a})")
        m = len(res)
        if len(self.actions) != P:
            raise ValidationError(f"{len(self.actions)} action lists for {P} players")
        acts = []
        for i, alist in enumerate(self.actions):
            if len(alist) == 0:
                raise ValidationError(f"player {i} has no action")
            norm = []
            for a in alist:
                s = tuple(sorted(set(int(e) for e in a)))
                if any(e < 0 or e >= m for e in s):
                    raise ValidationError(f"player {i} references a resource outside 0..{m - 1}")
                norm.append(s)
            acts.append(tuple(norm))
        bases = tuple(self.bases)
        need = max((j for j, _ in res), default=-1) + 1
        if not bases:
            bases = tuple(monomial(j, P) for j in range(need))
        if len(bases) < need:
            raise ValidationError(f"resources use basis {need - 1} but only {len(bases)} bases given")
        for b in bases:
            if b.n < P:
                raise ValidationError(f"basis {b.name!r} tabulated up to {b.n} < {P} players")
        tolls = None
        if self.tolls is not None:
            tolls = np.asarray(self.tolls, dtype=float)
            if tolls.shape != (m, P):
                raise ValidationError(f"toll table shape {tolls.shape}, expected {(m, P)}")
        object.__setattr__(self, "n_players", P)
        object.__setattr__(self, "resources", res)
        object.__setattr__(self, "actions", tuple(acts))
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "tolls", tolls)

    @property
    def n_resources(self) -> int:
        return len(self.resources)

    def cost_table(self) -> np.ndarray:
        """alpha_e b(x) for x = 0..n_players, shape (m, P+1)."""
        P = self.n_players
        out = np.zeros((self.n_resources, P + 1))
        for e, (j, a) in enumerate(self.resources):
            out[e, 1:] = a * np.asarray(self.bases[j].values[:P])
        return out

    def toll_table(self) -> np.ndarray:
        out = np.zeros((self.n_resources, self.n_players + 1))
        if self.tolls is not None:
            out[:, 1:] = self.tolls
        return out

    def with_tolls(self, tolls) -> "GameInstance":
        return GameInstance(self.n_players, self.resources, self.actions, tolls, self.bases)

    def loads(self, a: Sequence[int]) -> np.ndarray:
        self._check_joint(a)
        x = np.zeros(self.n_resources, dtype=int)
        for i, k in enumerate(a):
            x[list(self.actions[i][k])] += 1
        return x

    def _check_joint(self, a: Sequence[int]) -> None:
        if len(a) != self.n_players:
            raise ValidationError(f"joint action has {len(a)} entries for {self.n_players} players")
        for i, k in enumerate(a):
            if not 0 <= k < len(self.actions[i]):
                raise ValidationError(f"player {i} has no action {k}")

    # JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        out = {
            "players": self.n_players,
            "resources": [{"basis": j, "alpha": a} for j, a in self.resources],
            "actions": [[list(a) for a in alist] for alist in self.actions],
        }
        if self.tolls is not None:
            out["tolls"] = self.tolls.tolist()
        default = tuple(monomial(j, self.n_players) for j in range(len(self.bases)))
        if self.bases != default:
            out["bases"] = [b.to_spec() for b in self.bases]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "GameInstance":
        try:
            P = int(obj["players"])
            resources = [(int(r["basis"]), float(r["alpha"])) for r in obj["resources"]]
            actions = obj["actions"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed instance JSON: {exc}") from exc
        bases = tuple(from_spec(s) for s in obj.get("bases", []))
        return cls(P, tuple(resources), actions, obj.get("tolls"), bases)


def social_cost(g: GameInstance, a: Sequence[int]) -> float:
    x = g.loads(a)
    c = g.cost_table()
    return float(np.sum(x * c[np.arange(g.n_resources), x]))


def player_cost(g: GameInstance, a: Sequence[int], i: int) -> float:
    x = g.loads(a)
    pc = g.cost_table() + g.toll_table()
    mine = list(g.actions[i][a[i]])
    return float(np.sum(pc[mine, x[mine]]))


@dataclass(frozen=True)
class EquilibriumReport:
    pure_nash: tuple[tuple[int, ...], ...]
    worst_ne_cost: float
    best_ne_cost: float
    min_cost: float
    empirical_poa: float
    n_profiles: int

    def to_json(self) -> dict:
        return {
            "pure_nash": [list(a) for a in self.pure_nash],
            "worst_ne_cost": self.worst_ne_cost,
            "best_ne_cost": self.best_ne_cost,
            "min_cost": self.min_cost,
            "empirical_poa": self.empirical_poa,
            "n_profiles": self.n_profiles,
        }


def _ratio(num: float, den: float) -> float:
    if den > 0:
        return num / den
    return 1.0 if num <= 0 else math.inf


def enumerate_pure_nash(g: GameInstance) -> EquilibriumReport:
    """Scan every joint action; profiles are visited in mixed-radix order (player 0 slowest)."""
    sizes = [len(al) for al in g.actions]
    total = math.prod(sizes)
    if total > MAX_PROFILES:
        raise TooLarge(f"{total} joint actions exceed the limit of {MAX_PROFILES}")
    m, P = g.n_resources, g.n_players
    inc = []
    for al in g.actions:
        M = np.zeros((len(al), m), dtype=np.int64)
        for k, a in enumerate(al):
            M[k, list(a)] = 1
        inc.append(M)
    cost = g.cost_table()
    pc = cost + g.toll_table()
    ar = np.arange(m)
    radix = np.array([math.prod(sizes[i + 1:]) for i in range(P)], dtype=np.int64)

    nash: list[tuple[int, ...]] = []
    worst, best, opt = -math.inf, math.inf, math.inf
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        A = (idx[:, None] // radix[None, :]) % np.array(sizes)[None, :]
        loads = np.zeros((len(idx), m), dtype=np.int64)
        for i in range(P):
            loads += inc[i][A[:, i]]
        sc = np.sum(loads * cost[ar, loads], axis=1)
        opt = min(opt, float(sc.min()))
        is_ne = np.ones(len(idx), dtype=bool)
        for i in range(P):
            mine = inc[i][A[:, i]]
            cur = np.sum(mine * pc[ar, loads], axis=1)
            base = loads - mine
            for k in range(sizes[i]):
                dev = inc[i][k]
                new = base + dev[None, :]
                c = np.sum(dev[None, :] * pc[ar, new], axis=1)
                is_ne &= ~(c < cur - NE_TOL)
        if is_ne.any():
            sel = np.flatnonzero(is_ne)
            nash.extend(tuple(int(v) for v in A[s]) for s in sel)
            worst = max(worst, float(sc[sel].max()))
            best = min(best, float(sc[sel].min()))
    if not nash:
        raise NoEquilibrium("no pure Nash equilibrium found")
    return EquilibriumReport(tuple(nash), worst, best, opt, _ratio(worst, opt), total)


def marginal_tolls(g: GameInstance) -> np.ndarray:
    """tau_e(x) = alpha_e (x - 1)(b(x) - b(x - 1))."""
    c = g.cost_table()
    x = np.arange(1, g.n_players + 1)
    return (x - 1)[None, :] * (c[:, 1:] - c[:, :-1])


def mechanism_tolls(g: GameInstance, mech) -> np.ndarray:
    """Tolls of a design.Mechanism, matching each game basis to the mechanism basis with equal values."""
    P = g.n_players
    if mech.n < P:
        raise ValidationError(f"mechanism covers n={mech.n} < {P} players")
    table = []
    for j, b in enumerate(g.bases):
        match = [k for k, mb in enumerate(mech.bases) if np.allclose(mb.values[:P], b.values[:P], rtol=1e-12, atol=0)]
        table.append(mech.per_basis_tolls[match[0]] if match else None)
    for j, _ in g.resources:
        if table[j] is None:
            raise ValidationError(f"mechanism has no basis matching {g.bases[j].name!r}")
    return basis_tolls(g, [t if t is not None else np.zeros(P) for t in table])


def basis_tolls(g: GameInstance, per_basis: Sequence[Sequence[float]]) -> np.ndarray:
    """tau_e(x) = alpha_e tau_{j_e}(x) for a local mechanism given per basis."""
    P = g.n_players
    out = np.zeros((g.n_resources, P))
    for e, (j, a) in enumerate(g.resources):
        if j >= len(per_basis):
            raise ValidationError(f"no toll table for basis {j}")
        t = np.asarray(per_basis[j], dtype=float)
        if t.size < P:
            raise ValidationError(f"toll table for basis {j} shorter than {P} players")
        out[e] = a * t[:P]
    return out


# instance builders ------------------------------------------------------------


def build_pigou_example() -> GameInstance:
    """Two origin-destination pairs on six unit-slope edges.

    Edges: 0 O1-D, 1 O1-L, 2 L-O2, 3 O2-D, 4 O2-R, 5 R-O1.  Player 0 goes
    O1 -> D directly or via L and O2; player 1 goes O2 -> D directly or via R
    and O1.
    """
    resources = tuple((1, 1.0) for _ in range(6))
    actions = (((0,), (1, 2, 3)), ((3,), (4, 5, 0)))
    return GameInstance(2, resources, actions)


def build_const_lb_game(tau: float, d: int = 2) -> GameInstance:
    """Ring game certifying PoA >= 16/3 for the constant toll alpha * tau on alpha x^2.

    Action 0 of each player is the equilibrium action, action 1 the optimal one.
    """
    if d != 2:
        raise ValidationError("the construction is for quadratic costs only (d=2)")
    if tau < 0:
        raise ValidationError("tau must be non-negative")
    if tau >= 3:
        P, ring, ne_len = 8, 8, 6
        c1 = 1.0 / 216.0
        c2 = (2 * tau + 59) / (108 * (1 + tau))
    else:
        P, ring, ne_len = 3, 3, 2
        c1 = 1.0 / 8.0
        c2 = (tau - 1) / (8 * (1 + tau))
        if c2 < 0:
            raise HypothesisViolation(
                f"tau={tau}: the 3-player construction needs tau >= 1 (coefficient {c2:.4f} < 0)"
            )
    resources = tuple((2, c1 / P) for _ in range(ring)) + tuple((2, c2 / P) for _ in range(P))
    actions = []
    for i in range(P):
        ne = tuple((i + t) % ring for t in range(ne_len))
        opt = tuple((i + t) % ring for t in range(ne_len, ring)) + (ring + i,)
        actions.append((ne, opt))
    tolls = np.array([[a * tau] * P for _, a in resources])
    return GameInstance(P, resources, tuple(actions), tolls)


@dataclass(frozen=True)
class DualSolution:
    theta: dict  # (x, y, z, j) -> weight
    value: float

    def support(self, tol: float = 1e-12) -> dict:
        return {k: v for k, v in self.theta.items() if v > tol}


def solve_poa_dual(bases: Sequence[BasisTable], fs: Sequence[InducedCost], n: int | None = None,
                   tol_feas: float = 1e-9) -> DualSolution:
    """min sum B(x+z) theta  s.t.  sum [f(x+y) y - f(x+y+1) z] theta <= 0,  sum B(x+y) theta = 1."""
    n = _check_inputs(bases, fs, n)
    T = _triplet_array(n)
    x, y, z = T[:, 0], T[:, 1], T[:, 2]
    keys, obj, gap, norm = [], [], [], []
    for j, (b, f) in enumerate(zip(bases, fs)):
        B, fp = b.load_cost(), f.padded()
        keys.extend((int(a), int(c), int(e), j) for a, c, e in T)
        obj.append(-B[x + z])
        gap.append(fp[x + y] * y - fp[x + y + 1] * z)
        norm.append(B[x + y])
    k = len(keys)
    A = np.vstack([np.concatenate(gap), np.concatenate(norm)])
    names = tuple(f"t{i}" for i in range(k))
    lp = LinearProgram(names, np.concatenate(obj), A, (LE, EQ), np.array([0.0, 1.0]), np.zeros(k))
    sol = solve(lp, tol_feas=tol_feas)
    if not sol.optimal:
        raise UnboundedPoa(f"dual program is {sol.status.value}")
    return DualSolution(dict(zip(keys, map(float, sol.primal))), -sol.objective_value)


def _rationalise(values: Sequence[float], tol: float = 1e-9, max_den: int = 10 ** 4,
                 max_common: int = 10 ** 8) -> list[Fraction]:
    """Round every entry to a fraction with denominator <= max_den, sharing a common denominator."""
    out = []
    for v in values:
        fr = Fraction(v).limit_denominator(max_den)
        if abs(float(fr) - v) > tol:
            raise IrrationalDual(f"theta entry {v!r} has no rational form within {tol}")
        out.append(fr)
    common = math.lcm(*(fr.denominator for fr in out))
    if common > max_common:
        raise IrrationalDual(f"common denominator {common} exceeds {max_common}")
    return out


def build_tight_instance(theta: DualSolution | dict, bases: Sequence[BasisTable], n: int,
                         fs: Sequence[InducedCost] | None = None) -> GameInstance:
    """Worst-case game from a dual solution.

    Every support entry (x, y, z, j) becomes n resources of coefficient
    theta/n.  Player p gets the two actions defined by the cyclic membership
    rules: resource i is in the first action iff x+y >= 1 + ((i-p) mod n)
    and in the second iff x+z >= 1 + ((i-p+z) mod n).  The first action
    loads each resource with x+y agents, the second with x+z.  Which one is
    the equilibrium is left to :func:`enumerate_pure_nash`.
    """
    th = theta.support() if isinstance(theta, DualSolution) else {k: v for k, v in theta.items() if v > 1e-12}
    if not th:
        raise ValidationError("empty dual support")
    keys = sorted(th)
    weights = _rationalise([th[k] for k in keys])
    resources, first, second = [], [[] for _ in range(n)], [[] for _ in range(n)]
    tolls = []
    for (x, y, z, j), w in zip(keys, weights):
        if j >= len(bases):
            raise ValidationError(f"support references basis {j}")
        alpha = float(w) / n
        tau = np.zeros(n)
        if fs is not None:
            tau = np.asarray(fs[j].f[:n]) - np.asarray(bases[j].values[:n])
        for i in range(n):
            e = len(resources)
            resources.append((j, alpha))
            tolls.append(alpha * tau)
            for p in range(n):
                if x + y >= 1 + ((i - p) % n):
                    first[p].append(e)
                if x + z >= 1 + ((i - p + z) % n):
                    second[p].append(e)
    actions = tuple((tuple(first[p]), tuple(second[p])) for p in range(n))
    bt = tuple(BasisTable(b.name, n, b.values[:n]) if b.n != n else b for b in bases)
    return GameInstance(n, tuple(resources), actions, np.array(tolls) if fs is not None else None, bt)
