"""Optimal local tolls, one basis at a time.

Three routes to the same rho*:

* :func:`design_full` - the program over the whole triplet set (any basis);
* :func:`design_simplified` - the (u, v) program, valid for convex strictly
  increasing bases (or x*b(x) strictly convex with b(n) > b(n-1));
* :func:`solve_rho_star` + :func:`design_recursion` - the explicit recursion
  for f given rho, with rho* located as the fixed point of the u = n family
  by bisection (instead of enumerating n-tuples of minimisers).

The optimal f is rarely unique: at n = 100 the optimal face is wide for
loads above ~n/4.  Both programs therefore report the componentwise-largest
optimal f, which is also the sequence the recursion produces.  The three
routes agree on rho to ~1e-12; on f they agree to ~1e-8 for n <= 20, while
at n = 100 the recursion amplifies rounding and they drift apart by up to
~1e-3 relative.

Tolls for a general cost sum_j alpha_j b_j are sum_j alpha_j tau_j.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import BasisTable, classify, common_n, from_spec
from .errors import (HypothesisViolation, IncompatibleBases, LengthMismatch, NegativityViolation,
                     NoFixedPoint, NumericalFailure, UnboundedPoa, ValidationError)
from .lp import GE, LinearProgram, solve
from .poa import _triplet_array


class Method(str, enum.Enum):
    FULL = "FullLp"
    SIMPLIFIED = "SimplifiedLp"
    RECURSION = "Recursion"


@dataclass(frozen=True, eq=False)
class OptimalDesign:
    basis: BasisTable
    rho_star: float
    f_star: np.ndarray
    method: Method
    basis_index: int = 0
    rho_f: float | None = None  # the rho at which f_star was extracted (<= rho_star)

    @property
    def tau_star(self) -> np.ndarray:
        return self.f_star - self.basis.array

    @property
    def poa(self) -> float:
        return 1.0 / self.rho_star


def _check_n(b: BasisTable, n: int | None) -> int:
    if n is not None and n != b.n:
        raise IncompatibleBases(f"basis is tabulated for n={b.n}, requested n={n}")
    return b.n


def _var_names(n: int) -> tuple[str, ...]:
    return ("rho",) + tuple(f"f{x}" for x in range(1, n + 1))


def _max_face(lp: LinearProgram, rho: float, tol_feas: float) -> tuple[np.ndarray, float] | None:
    """Componentwise-largest f with rho pinned just below rho*.

    Each row couples only f(u) and f(u+1), and the bound it places on f(u+1)
    grows with f(u), so the feasible f at fixed rho has a largest element:
    the one the recursion builds greedily.  Maximising sum(f) finds it.  The
    pin is relaxed by a few ulps when rounding makes rho* itself infeasible.
    """
    A, k = lp.A[:, 1:], lp.n_vars - 1
    for slack in (1e-12, 1e-11, 1e-10, 1e-9):
        pin = rho - slack * max(1.0, abs(rho))
        pinned = LinearProgram(lp.var_names[1:], np.ones(k), A, lp.relations,
                               lp.rhs - lp.A[:, 0] * pin, np.full(k, -np.inf))
        try:
            sol = solve(pinned, tol_feas=tol_feas)
        except NumericalFailure:
            continue
        if sol.optimal:
            return sol.primal, pin
    return None


def _finish(b: BasisTable, lp: LinearProgram, method: Method, tol_feas: float,
            tie_break: bool = True) -> OptimalDesign:
    sol = solve(lp, tol_feas=tol_feas)
    if not sol.optimal:
        raise UnboundedPoa(f"design program is {sol.status.value}")
    rho = float(sol.primal[0])
    if rho <= 0:
        raise UnboundedPoa(f"rho* = {rho:.3e} <= 0")
    f, rho_f = sol.primal[1:].copy(), rho
    if tie_break:
        top = _max_face(lp, rho, tol_feas)
        if top is not None:
            f, rho_f = top
    return OptimalDesign(b, rho, f, method, rho_f=rho_f)


def full_program(b: BasisTable) -> LinearProgram:
    n = b.n
    T = _triplet_array(n)
    x, y, z = T[:, 0], T[:, 1], T[:, 2]
    B = b.load_cost()
    A = np.zeros((len(T), n + 1))
    rows = np.arange(len(T))
    A[:, 0] = -B[x + y]
    # columns 1..n hold f(1..n); f(0) and f(n+1) are the zero conventions
    m = (x + y >= 1) & (x + y <= n)
    np.add.at(A, (rows[m], (x + y)[m]), y[m])
    m = x + y + 1 <= n
    np.add.at(A, (rows[m], (x + y + 1)[m]), -z[m])
    ids = tuple((int(a), int(c), int(e)) for a, c, e in T)
    return LinearProgram(_var_names(n), np.eye(n + 1)[0], A, (GE,) * len(T), -B[x + z],
                         np.full(n + 1, -np.inf), ids)


def design_full(b: BasisTable, n: int | None = None, tol_feas: float = 1e-9,
                tie_break: bool = True) -> OptimalDesign:
    """Maximise rho over (rho, f) subject to every triplet constraint.

    With ``tie_break`` the returned f* is the largest point of the optimal
    face (see :func:`_max_face`); otherwise it is the raw simplex vertex.
    """
    _check_n(b, n)
    if not classify(b).is_positive:
        raise HypothesisViolation(f"basis {b.name!r} must be positive on 1..n")
    return _finish(b, full_program(b), Method.FULL, tol_feas, tie_break)


def check_hypotheses(b: BasisTable) -> None:
    fl = classify(b)
    if not fl.is_positive:
        raise HypothesisViolation(f"basis {b.name!r} is not positive")
    if fl.is_discrete_convex and fl.is_strictly_increasing:
        return
    if fl.is_xb_strictly_convex and (b.n == 1 or b.values[-1] > b.values[-2]):
        return
    raise HypothesisViolation(
        f"basis {b.name!r} is neither convex and strictly increasing nor has strictly convex x*b(x)"
    )


def simplified_program(b: BasisTable) -> LinearProgram:
    n = b.n
    g = np.arange(n + 1)
    u, v = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
    B = b.load_cost()
    A = np.zeros((len(u), n + 1))
    rows = np.arange(len(u))
    A[:, 0] = -B[u]
    cu = np.minimum(u, n - v)
    cv = np.minimum(v, n - u)
    m = u >= 1
    np.add.at(A, (rows[m], u[m]), cu[m])
    m = u + 1 <= n
    np.add.at(A, (rows[m], (u + 1)[m]), -cv[m])
    ids = tuple((int(a), int(c)) for a, c in zip(u, v))
    return LinearProgram(_var_names(n), np.eye(n + 1)[0], A, (GE,) * len(u), -B[v],
                         np.full(n + 1, -np.inf), ids)


def design_simplified(b: BasisTable, n: int | None = None, tol_feas: float = 1e-9,
                      tie_break: bool = True) -> OptimalDesign:
    """The (u, v) program: B(v) - rho B(u) + min(u, n-v) f(u) - min(v, n-u) f(u+1) >= 0."""
    _check_n(b, n)
    check_hypotheses(b)
    return _finish(b, simplified_program(b), Method.SIMPLIFIED, tol_feas, tie_break)


def _recursion(b: BasisTable, rho: float) -> np.ndarray:
    n = b.n
    B = b.load_cost()
    v = np.arange(1, n + 1)
    f = np.empty(n)
    f[0] = b.values[0]
    for u in range(1, n):
        den = np.minimum(v, n - u)
        cand = (np.minimum(u, n - v) * f[u - 1] + B[v] - B[u] * rho) / den
        f[u] = cand[int(np.argmin(cand))]  # ties: smallest v
    return f


def design_recursion(b: BasisTable, n: int | None = None, rho: float = 1.0) -> np.ndarray:
    """f(1) = b(1); f(u+1) = min_v beta(u,v) f(u) + gamma(u,v) - delta(u,v) rho, v in 1..n.

    Any rho at or below rho* yields a mechanism with PoA at most 1/rho.
    """
    _check_n(b, n)
    check_hypotheses(b)
    return _recursion(b, float(rho))


def _phi(b: BasisTable, rho: float) -> float:
    n = b.n
    fn = _recursion(b, rho)[-1]
    v = np.arange(n + 1)
    return float(np.min(b.load_cost()[v] + (n - v) * fn) / (n * b.values[-1]))


def solve_rho_star(b: BasisTable, n: int | None = None, tol: float = 1e-12) -> float:
    """Fixed point of rho -> min_v [B(v) + (n-v) f_rho(n)] / (n b(n)), by bisection on [0, 1].

    f_rho(n) does not increase with rho, so phi(rho) - rho is strictly
    decreasing and the fixed point is unique when it exists.
    """
    _check_n(b, n)
    check_hypotheses(b)
    lo, hi = 0.0, 1.0
    if _phi(b, lo) < lo:
        raise NoFixedPoint("phi(0) < 0: no fixed point in [0, 1]")
    if _phi(b, hi) >= hi:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _phi(b, mid) >= mid:
            lo = mid
        else:
            hi = mid
    return lo


def design_by_recursion(b: BasisTable, n: int | None = None) -> OptimalDesign:
    rho = solve_rho_star(b, n)
    return OptimalDesign(b, rho, _recursion(b, rho), Method.RECURSION, rho_f=rho)


_DESIGNERS = {
    "full": design_full,
    "simplified": design_simplified,
    "recursion": design_by_recursion,
}


def design(b: BasisTable, method: str = "full", tol_feas: float | None = None) -> OptimalDesign:
    try:
        fn = _DESIGNERS[method]
    except KeyError:
        raise ValidationError(f"unknown method {method!r}; choose from {sorted(_DESIGNERS)}") from None
    if tol_feas is not None and method != "recursion":
        return fn(b, tol_feas=tol_feas)
    return fn(b)


@dataclass(frozen=True, eq=False)
class Mechanism:
    """Per-basis toll tables; the toll of sum_j alpha_j b_j is sum_j alpha_j tau_j."""

    bases: tuple[BasisTable, ...]
    per_basis_tolls: tuple[np.ndarray, ...]
    poa: float | None = None
    method: str | None = None

    def __post_init__(self) -> None:
        if len(self.bases) != len(self.per_basis_tolls):
            raise LengthMismatch(f"{len(self.bases)} bases but {len(self.per_basis_tolls)} toll tables")
        n = common_n(self.bases)
        tolls = tuple(np.asarray(t, dtype=float) for t in self.per_basis_tolls)
        for t in tolls:
            if t.shape != (n,):
                raise LengthMismatch(f"toll table of length {t.size} for n={n}")
        object.__setattr__(self, "bases", tuple(self.bases))
        object.__setattr__(self, "per_basis_tolls", tolls)

    @property
    def n(self) -> int:
        return self.bases[0].n

    def induced(self):
        from .poa import InducedCost
        return [InducedCost.from_tolls(b, t, j) for j, (b, t) in enumerate(zip(self.bases, self.per_basis_tolls))]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "bases": [b.to_spec() for b in self.bases],
            "tolls": [t.tolist() for t in self.per_basis_tolls],
            "poa": self.poa,
            "method": self.method,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Mechanism":
        try:
            n = int(obj["n"])
            bases = tuple(from_spec(s, n) for s in obj["bases"])
            tolls = tuple(np.asarray(t, dtype=float) for t in obj["tolls"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed mechanism JSON: {exc}") from exc
        return cls(bases, tolls, obj.get("poa"), obj.get("method"))


def combine(mech: Mechanism, alphas: Sequence[float]) -> np.ndarray:
    """Toll table of the cost sum_j alphas[j] * b_j."""
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (len(mech.bases),):
        raise LengthMismatch(f"{alphas.size} coefficients for {len(mech.bases)} bases")
    if np.any(alphas < 0):
        raise ValidationError("coefficients must be non-negative")
    return np.asarray(mech.per_basis_tolls).T @ alphas


def nonneg_variant(d: OptimalDesign, poa_opt: float) -> np.ndarray:
    """tau(x) = f*(x) * poa_opt - b(x).

    Scaling f* leaves the PoA unchanged, and with poa_opt the worst PoA over
    the mechanism's bases the result is non-negative.  Entries in
    [-1e-6, 0) are rounding noise and are clipped to zero.
    """
    tau = d.f_star * poa_opt - d.basis.array
    worst = float(tau.min())
    if worst < -1e-6:
        raise NegativityViolation(f"toll {worst:.3e} < 0 for basis {d.basis.name!r}")
    return np.maximum(tau, 0.0)


def design_mechanism(bases: Sequence[BasisTable], method: str = "full", nonneg: bool = False,
                     tol_feas: float | None = None) -> tuple[Mechanism, list[OptimalDesign]]:
    """Optimal per-basis tolls for a set of bases; PoA is the worst over the bases."""
    common_n(bases)
    designs = [design(b, method, tol_feas) for b in bases]
    poa = max(dz.poa for dz in designs)
    if nonneg:
        tolls = tuple(nonneg_variant(dz, poa) for dz in designs)
    else:
        tolls = tuple(dz.tau_star for dz in designs)
    return Mechanism(tuple(bases), tolls, poa, method + ("+nonneg" if nonneg else "")), designs
