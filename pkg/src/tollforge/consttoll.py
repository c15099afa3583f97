"""Optimal congestion-independent (constant) tolls.

A constant toll tau_j shifts f_j = b_j + tau_j.  The program in (rho, nu,
sigma_j = nu * tau_j) is linear, and at the optimum sigma_j = (1 - nu) b_j(1),
which leaves only (rho, nu).  Pairs with v > u are dropped except (0, 1);
``full_grid=True`` keeps them for cross-checking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .basis import BasisTable, classify, common_n
from .errors import DegenerateNu, HypothesisViolation, UnboundedPoa, ValidationError
from .lp import GE, LE, LinearProgram, binding_rows, solve


@dataclass(frozen=True, eq=False)
class ConstTollDesign:
    rho_star: float
    nu_star: float
    tau: tuple[float, ...]
    sigma: tuple[float, ...]
    binding: tuple = ()

    @property
    def poa(self) -> float:
        return 1.0 / self.rho_star


def _check(b: BasisTable) -> None:
    fl = classify(b)
    ok = fl.is_positive and ((fl.is_discrete_convex and fl.is_nondecreasing) or fl.is_xb_strictly_convex)
    if not ok:
        raise HypothesisViolation(f"basis {b.name!r} is not positive, convex and nondecreasing")


def _pairs(n: int, full_grid: bool) -> np.ndarray:
    g = np.arange(n + 1)
    u, v = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
    keep = np.ones_like(u, bool) if full_grid else (v <= u) | ((u == 0) & (v == 1))
    return np.column_stack([u[keep], v[keep]])


def const_program(bases: Sequence[BasisTable], full_grid: bool = False) -> LinearProgram:
    n = common_n(bases)
    uv = _pairs(n, full_grid)
    u, v = uv[:, 0], uv[:, 1]
    blocks, rhs, ids = [], [], []
    for j, b in enumerate(bases):
        B, bp = b.load_cost(), b.padded()
        b1 = b.values[0]
        nu = np.where(u + v <= n, bp[u] * u - bp[u + 1] * v, bp[u] * (n - v) - bp[u + 1] * (n - u))
        blocks.append(np.column_stack([-B[u], nu - b1 * (u - v)]))
        rhs.append(-B[v] - b1 * (u - v))
        ids.extend((j, int(a), int(c)) for a, c in uv)
    A = np.vstack(blocks + [np.array([[0.0, 1.0]])])
    rhs = np.concatenate(rhs + [np.array([1.0])])
    rel = (GE,) * (len(rhs) - 1) + (LE,)
    return LinearProgram(("rho", "nu"), np.array([1.0, 0.0]), A, rel, rhs,
                         np.array([-np.inf, 0.0]), tuple(ids) + ("nu<=1",))


def const_design(bases: Sequence[BasisTable], n: int | None = None, full_grid: bool = False,
                 tol_feas: float = 1e-9) -> ConstTollDesign:
    """Optimal constant tolls tau_j = (1/nu* - 1) b_j(1) for the given bases."""
    if not bases:
        raise ValidationError("at least one basis is required")
    nn = common_n(bases)
    if n is not None and n != nn:
        raise ValidationError(f"bases are tabulated for n={nn}, requested n={n}")
    for b in bases:
        _check(b)
    lp = const_program(bases, full_grid)
    sol = solve(lp, tol_feas=tol_feas)
    if not sol.optimal:
        raise UnboundedPoa(f"constant-toll program is {sol.status.value}")
    rho, nu = float(sol.primal[0]), float(sol.primal[1])
    if nu <= 1e-12:
        raise DegenerateNu(f"nu* = {nu:.3e}: optimal nu must be positive")
    if rho <= 0:
        raise UnboundedPoa(f"rho* = {rho:.3e} <= 0")
    tau = tuple((1.0 / nu - 1.0) * b.values[0] for b in bases)
    sigma = tuple(nu * t for t in tau)
    return ConstTollDesign(rho, nu, tau, sigma, tuple(binding_rows(lp, sol.primal)))


def u_bar(d: int) -> int:
    """Floor of the positive root of u^(d+1) + 1 - (u+1)^d - u."""
    def g(u: float) -> float:
        return u ** (d + 1) + 1 - (u + 1) ** d - u

    lo, hi = 1.0, 2.0
    while g(hi) <= 0:
        lo, hi = hi, 2 * hi
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if g(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return math.floor(hi)


@dataclass(frozen=True)
class ClosedForm:
    d: int
    u_bar: int
    numerator: int
    denominator: int

    @property
    def poa(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)


def const_closed_form(d: int) -> ClosedForm:
    """Exact optimal constant-toll PoA for 3 <= d <= 6 from the two binding pairs (u_bar, 1), (u_bar+1, 1)."""
    if d not in (3, 4, 5, 6):
        raise ValidationError(f"closed form holds for 3 <= d <= 6, got d={d}")
    u = u_bar(d)
    num = u * (u + 1) ** (d + 1) - u ** (d + 1) * (u + (u + 2) ** d) + (u + 1) ** (2 * d + 1) - (u + 1) ** (d + 1)
    den = u * (u + 1) * ((u + 1) ** d - u ** d) + (u + 1) ** (d + 1) - u * (u + 2) ** d - 1
    return ClosedForm(d, u, num, den)


D2_POA = Fraction(16, 3)


def const_d2_closed_form(alpha: float, beta: float = 0.0, gamma: float = 0.0) -> float:
    """Optimal constant toll for alpha x^2 + beta x + gamma: 3 alpha."""
    if min(alpha, beta, gamma) < 0:
        raise ValidationError("coefficients must be non-negative")
    return 3.0 * alpha
