"""Optimal tolls for any number of agents, monomial bases.

Solve a finite program at an even size n_bar with the extra rows
f(u) <= u^d and f(u) >= f(u-1), keep the head f(1..n_bar/2) and continue it
with the tail beta_ext * x^d.  The extended mechanism has PoA at most
1/rho_inf for every n, while 1/rho_opt of the finite program is a lower
bound on the optimum, which gives the (LB, UB) sandwich.

rho_inf = min{rho_f, g(beta_ext)} holds for *any* f feasible in the finite
program at level rho_f, not only for optimal ones.  The optimal face at
rho_opt is very thin, and g rises steeply in beta, so trading a sliver of
rho for a larger beta can tighten the bound a lot.  ``face`` selects f:

* ``"best"`` - maximise min{rho, g(beta)} jointly (tightest certified UB);
* ``"vertex"`` - whatever optimal vertex the simplex returns;
* ``"min"`` - the optimal point with the smallest f(n_bar/2).

The UB is always recomputed from the chosen f by :func:`certified_rho`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import monomial
from .design import simplified_program
from .errors import NoFiniteGamma, NumericalFailure, UnboundedPoa, ValidationError
from .lp import GE, LE, LinearProgram, solve

FACES = ("best", "vertex", "min")


def _validate(d: int, n_bar: int) -> None:
    if int(d) != d or d < 1:
        raise ValidationError(f"degree must be a positive integer, got {d!r}")
    if int(n_bar) != n_bar or n_bar < 4 or n_bar % 2:
        raise ValidationError(f"n_bar must be an even integer >= 4, got {n_bar!r}")


def extended_program(d: int, n_bar: int) -> LinearProgram:
    base = simplified_program(monomial(d, n_bar))
    k = n_bar + 1
    cap = np.zeros((n_bar, k))
    cap[np.arange(n_bar), np.arange(1, k)] = 1.0
    mono = np.zeros((n_bar - 1, k))
    u = np.arange(2, n_bar + 1)
    mono[np.arange(n_bar - 1), u] = 1.0
    mono[np.arange(n_bar - 1), u - 1] = -1.0
    A = np.vstack([base.A, cap, mono])
    rhs = np.concatenate([base.rhs, np.arange(1, k, dtype=float) ** d, np.zeros(n_bar - 1)])
    rel = base.relations + (LE,) * n_bar + (GE,) * (n_bar - 1)
    ids = base.row_ids + tuple(("cap", int(x)) for x in range(1, k)) + tuple(("mono", int(x)) for x in u)
    return LinearProgram(base.var_names, base.objective, A, rel, rhs, base.lower_bounds, ids)


def _g(beta: float, d: int, n_bar: int) -> float:
    return beta - d * (1 + 2 / n_bar) ** (d + 1) * (max(beta, 0.0) / (d + 1)) ** (1 + 1 / d)


def _dg(beta: float, d: int, n_bar: int) -> float:
    c = d * (1 + 2 / n_bar) ** (d + 1) * (1 + 1 / d) / (d + 1) ** (1 + 1 / d)
    return 1.0 - c * max(beta, 0.0) ** (1 / d)


def _face_extreme(lp: LinearProgram, rho: float, col: int, sense: float,
                  tol_feas: float) -> np.ndarray | None:
    """f optimising sense * f(col) with rho pinned a hair below rho_opt."""
    A, k = lp.A[:, 1:], lp.n_vars - 1
    obj = np.zeros(k)
    obj[col - 1] = sense
    for slack in (1e-12, 1e-11, 1e-10, 1e-9):
        pin = rho - slack * max(1.0, abs(rho))
        pinned = LinearProgram(lp.var_names[1:], obj, A, lp.relations, lp.rhs - lp.A[:, 0] * pin,
                               np.full(k, -np.inf))
        try:
            sol = solve(pinned, tol_feas=tol_feas)
        except NumericalFailure:
            continue
        if sol.optimal:
            return sol.primal
    return None


def _best_certificate(lp: LinearProgram, d: int, n_bar: int, beta0: float,
                      tol_feas: float, max_cuts: int = 60) -> np.ndarray | None:
    """f maximising min(rho, g(beta)) over the feasible set, by tangent cuts on concave g.

    Variables (t, rho, f); t <= rho and t <= g(b_k) + g'(b_k)(beta - b_k) for
    every cut point b_k.  Tangents overestimate the concave g, so the loop
    adds a cut at the LP's beta until g there reaches t.
    """
    half = n_bar // 2
    scale = float(half) ** d
    k = lp.n_vars + 1
    names = ("t",) + lp.var_names
    base = np.hstack([np.zeros((lp.n_rows, 1)), lp.A])
    link = np.zeros((1, k))
    link[0, 0], link[0, 1] = 1.0, -1.0
    peak = (d + 1) / (1 + 2 / n_bar) ** (d * (d + 1))
    cuts: list[np.ndarray] = []
    cut_rhs: list[float] = []

    def add_cut(beta: float) -> None:
        row = np.zeros(k)
        row[0] = 1.0
        row[1 + half] = -_dg(beta, d, n_bar) / scale
        cuts.append(row)
        cut_rhs.append(_g(beta, d, n_bar) - _dg(beta, d, n_bar) * beta)

    add_cut(peak)
    add_cut(max(beta0, 0.0))
    obj = np.zeros(k)
    obj[0] = 1.0
    f = None
    for _ in range(max_cuts):
        A = np.vstack([base, link, np.array(cuts)])
        rhs = np.concatenate([lp.rhs, [0.0], cut_rhs])
        rel = lp.relations + (LE,) * (1 + len(cuts))
        prog = LinearProgram(names, obj, A, rel, rhs, np.full(k, -np.inf))
        try:
            sol = solve(prog, tol_feas=tol_feas)
        except NumericalFailure:
            return f
        if not sol.optimal:
            return f
        t, f = sol.primal[0], sol.primal[2:].copy()
        beta = f[half - 1] / scale
        if _g(beta, d, n_bar) >= t - 1e-13:
            break
        add_cut(beta)
    return f


def solve_extended(d: int, n_bar: int, face: str = "vertex",
                   tol_feas: float = 1e-9) -> tuple[np.ndarray, float]:
    """(f(1..n_bar), rho_opt) of the finite program with cap and monotonicity rows.

    For ``face="best"`` the returned f is feasible at a level rho_f slightly
    below rho_opt; use :func:`certified_rho` to get it.
    """
    _validate(d, n_bar)
    if face not in FACES:
        raise ValidationError(f"face must be one of {FACES}, got {face!r}")
    lp = extended_program(d, n_bar)
    sol = solve(lp, tol_feas=tol_feas)
    if not sol.optimal:
        raise UnboundedPoa(f"extended program is {sol.status.value}")
    rho = float(sol.primal[0])
    f = sol.primal[1:].copy()
    if face == "vertex":
        return f, rho
    half = n_bar // 2
    f_lo = _face_extreme(lp, rho, half, -1.0, tol_feas)
    if f_lo is None:
        f_lo = f
    if face == "min":
        return f_lo, rho
    best = _best_certificate(lp, d, n_bar, f_lo[half - 1] / half ** d, tol_feas)
    return (f_lo if best is None else best), rho


def certified_rho(f, d: int, n_bar: int, tol: float = 1e-9) -> float:
    """Largest rho with (rho, f) feasible for the finite program.

    Rows without a rho term must already hold to relative slack ``tol``;
    otherwise -inf is returned.
    """
    lp = extended_program(d, n_bar)
    f = np.asarray(f, dtype=float)
    sign = np.array([1.0 if r == LE else -1.0 for r in lp.relations])
    # each row as  coef * rho <= slack
    slack = sign * (lp.rhs - lp.A[:, 1:] @ f)
    coef = sign * lp.A[:, 0]
    free = coef == 0
    scale = np.maximum(1.0, np.abs(lp.rhs))
    if np.any(slack[free] < -tol * scale[free]):
        return -math.inf
    pos = coef > 0
    return float(np.min(slack[pos] / coef[pos]))


@dataclass(frozen=True, eq=False)
class ExtendedMechanism:
    d: int
    n_bar: int
    f_head: np.ndarray
    beta_ext: float

    def __post_init__(self) -> None:
        head = np.asarray(self.f_head, dtype=float)
        if head.shape != (self.n_bar // 2,):
            raise ValidationError(f"head must hold f(1..{self.n_bar // 2})")
        if self.beta_ext < 0:
            raise ValidationError(f"beta_ext must be >= 0, got {self.beta_ext}")
        object.__setattr__(self, "f_head", head)

    def __call__(self, x: int) -> float:
        if x < 1:
            return 0.0
        if x <= self.n_bar // 2:
            return float(self.f_head[x - 1])
        return self.beta_ext * float(x) ** self.d

    def table(self, n: int) -> np.ndarray:
        """f_inf(1..n)."""
        x = np.arange(1, n + 1, dtype=float)
        out = self.beta_ext * x ** self.d
        h = min(n, self.n_bar // 2)
        out[:h] = self.f_head[:h]
        return out


def extend(f_opt, d: int, n_bar: int) -> ExtendedMechanism:
    """Keep f_opt(1..n_bar/2); continue with beta_ext x^d matching at the seam."""
    _validate(d, n_bar)
    f_opt = np.asarray(f_opt, dtype=float)
    half = n_bar // 2
    if f_opt.size < half:
        raise ValidationError(f"f_opt needs at least {half} entries")
    beta = max(0.0, float(f_opt[half - 1]) / half ** d)
    return ExtendedMechanism(d, n_bar, f_opt[:half].copy(), beta)


def rho_infty(rho_opt: float, beta_ext: float, d: int, n_bar: int) -> float:
    """min{rho_opt, beta - d (1+2/n_bar)^(d+1) (beta/(d+1))^(1+1/d)}."""
    return min(rho_opt, _g(beta_ext, d, n_bar))


def sandwich(d: int, n_bar: int, face: str = "best", tol_feas: float = 1e-9) -> tuple[float, float]:
    """(LB, UB) = (1/rho_opt, 1/rho_inf); UB is inf when rho_inf <= 0."""
    f, rho = solve_extended(d, n_bar, face, tol_feas)
    em = extend(f, d, n_bar)
    rho_f = min(rho, certified_rho(f, d, n_bar))
    r_inf = rho_infty(rho_f, em.beta_ext, d, n_bar)
    ub = 1.0 / r_inf if r_inf > 0 else math.inf
    return 1.0 / rho, ub


def gamma_for_nonneg(em: ExtendedMechanism, x_max: int) -> float:
    """Smallest gamma >= 1 with gamma f_inf(x) >= x^d for every x >= 1.

    Loads up to min(x_max, n_bar/2) are checked one by one.  On the tail
    f_inf(x) = beta_ext x^d, so gamma * beta_ext >= 1 covers every larger x
    at once.  Values below 1 are never returned: scaling f down is not needed
    to make tolls non-negative.
    """
    if x_max < 1:
        raise ValidationError("x_max must be >= 1")
    gamma = 1.0
    head = min(x_max, em.n_bar // 2)
    for x in range(1, head + 1):
        fx, need = em(x), float(x) ** em.d
        if fx <= 0:
            raise NoFiniteGamma(f"f_inf({x}) = {fx} <= 0 while x^d = {need}")
        gamma = max(gamma, need / fx)
    if x_max > em.n_bar // 2:
        if em.beta_ext <= 0:
            raise NoFiniteGamma("beta_ext = 0: the tail is identically zero")
        gamma = max(gamma, 1.0 / em.beta_ext)
    return gamma
