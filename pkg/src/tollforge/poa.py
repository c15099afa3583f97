"""Price of anarchy of a given local mechanism.

A mechanism is described per basis by its induced cost f_j = b_j + tau_j.
Both programs below maximise rho over (rho, nu >= 0); PoA = 1/rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .basis import BasisTable
from .errors import IncompatibleBases, LengthMismatch, NotMonotone, UnboundedPoa, ValidationError
from .lp import GE, LinearProgram, LpSolution, binding_rows, solve


@dataclass(frozen=True)
class InducedCost:
    basis_index: int
    n: int
    f: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.f)
        if len(vals) != self.n:
            raise LengthMismatch(f"f has {len(vals)} entries for n={self.n}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("f has non-finite entries")
        object.__setattr__(self, "f", vals)

    @classmethod
    def untolled(cls, b: BasisTable, basis_index: int = 0) -> "InducedCost":
        return cls(basis_index, b.n, b.values)

    @classmethod
    def from_tolls(cls, b: BasisTable, tau: Sequence[float], basis_index: int = 0) -> "InducedCost":
        tau = np.asarray(tau, dtype=float)
        if tau.shape != (b.n,):
            raise LengthMismatch(f"toll table has {tau.size} entries for n={b.n}")
        return cls(basis_index, b.n, tuple(b.array + tau))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.f)

    def padded(self) -> np.ndarray:
        """f(0..n+1) with f(0) = f(n+1) = 0."""
        out = np.zeros(self.n + 2)
        out[1:-1] = self.f
        return out

    def tau(self, b: BasisTable) -> np.ndarray:
        return self.array - b.array


class Triplet(NamedTuple):
    x: int
    y: int
    z: int


def in_triplet_set(t: tuple[int, int, int], n: int) -> bool:
    x, y, z = t
    s = x + y + z
    return min(x, y, z) >= 0 and 1 <= s <= n and (x * y * z == 0 or s == n)


@lru_cache(maxsize=64)
def _triplet_array(n: int) -> np.ndarray:
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    g = np.arange(n + 1)
    x, y, z = np.meshgrid(g, g, g, indexing="ij")
    x, y, z = x.ravel(), y.ravel(), z.ravel()
    s = x + y + z
    keep = (s >= 1) & (s <= n) & ((x * y * z == 0) | (s == n))
    out = np.column_stack([x[keep], y[keep], z[keep]])
    out.setflags(write=False)
    return out  # meshgrid 'ij' + ravel is already lexicographic


def triplet_set(n: int) -> list[Triplet]:
    """All (x, y, z) >= 0 with 1 <= x+y+z <= n and (xyz = 0 or x+y+z = n), lexicographic."""
    return [Triplet(*map(int, t)) for t in _triplet_array(n)]


@dataclass(frozen=True)
class PoaReport:
    rho: float
    nu: float | None
    poa: float
    binding: tuple = ()
    solution: LpSolution | None = field(default=None, repr=False, compare=False)
    lp: LinearProgram | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {"rho": self.rho, "nu": self.nu, "poa": self.poa,
                "binding": [list(map(int, b)) for b in self.binding]}


def _check_inputs(bases: Sequence[BasisTable], fs: Sequence[InducedCost], n: int | None) -> int:
    if len(bases) == 0:
        raise ValidationError("at least one basis is required")
    if len(bases) != len(fs):
        raise LengthMismatch(f"{len(bases)} bases but {len(fs)} induced costs")
    ns = {b.n for b in bases} | {f.n for f in fs}
    if n is not None:
        ns.add(int(n))
    if len(ns) != 1:
        raise IncompatibleBases(f"inconsistent n across bases/costs: {sorted(ns)}")
    return ns.pop()


def full_rows(b: BasisTable, f: InducedCost) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rho coefficient, nu coefficient, rhs) of every triplet row, ``>=`` form."""
    n = b.n
    T = _triplet_array(n)
    x, y, z = T[:, 0], T[:, 1], T[:, 2]
    B = b.load_cost()
    fp = f.padded()
    return -B[x + y], fp[x + y] * y - fp[x + y + 1] * z, -B[x + z]


def monotone_rows(b: BasisTable, f: InducedCost) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(rho coef, nu coef, rhs, (u, v) pairs) of the reduced program over {0..n}^2."""
    n = b.n
    g = np.arange(n + 1)
    u, v = (a.ravel() for a in np.meshgrid(g, g, indexing="ij"))
    B = b.load_cost()
    fp = f.padded()
    low = u + v <= n
    nu = np.where(low, fp[u] * u - fp[u + 1] * v, fp[u] * (n - v) - fp[u + 1] * (n - u))
    return -B[u], nu, -B[v], np.column_stack([u, v])


def _solve_rho_nu(blocks, ids, tol_feas: float) -> PoaReport:
    A = np.vstack([np.column_stack([r, c]) for r, c, _ in blocks])
    rhs = np.concatenate([h for _, _, h in blocks])
    lp = LinearProgram(("rho", "nu"), np.array([1.0, 0.0]), A, (GE,) * len(rhs), rhs,
                       np.array([-np.inf, 0.0]), tuple(ids))
    sol = solve(lp, tol_feas=tol_feas)
    if not sol.optimal:
        raise UnboundedPoa(f"PoA program is {sol.status.value}")
    rho, nu = float(sol.primal[0]), float(sol.primal[1])
    if rho <= 0:
        raise UnboundedPoa(f"rho* = {rho:.3e} <= 0: the mechanism has unbounded inefficiency")
    return PoaReport(rho, nu, 1.0 / rho, tuple(binding_rows(lp, sol.primal)), sol, lp)


def poa_full(bases: Sequence[BasisTable], fs: Sequence[InducedCost], n: int | None = None,
             tol_feas: float = 1e-9) -> PoaReport:
    """Exact PoA over all triplets of every basis; blocks share one (rho, nu)."""
    _check_inputs(bases, fs, n)
    blocks, ids = [], []
    for j, (b, f) in enumerate(zip(bases, fs)):
        blocks.append(full_rows(b, f))
        ids.extend((j, *map(int, t)) for t in _triplet_array(b.n))
    return _solve_rho_nu(blocks, ids, tol_feas)


def check_monotone(f: InducedCost, tol: float = 1e-12) -> None:
    arr = f.array
    scale = max(1.0, float(np.abs(arr).max()))
    d = np.diff(arr)
    if np.any(d < -tol * scale):
        x = int(np.argmax(d < -tol * scale)) + 1
        raise NotMonotone(f"f_{f.basis_index} decreases between x={x} and x={x + 1}")


def poa_monotone(bases: Sequence[BasisTable], fs: Sequence[InducedCost], n: int | None = None,
                 tol_feas: float = 1e-9) -> PoaReport:
    """PoA via the (u, v) program; valid only for nondecreasing f."""
    _check_inputs(bases, fs, n)
    for f in fs:
        check_monotone(f)
    blocks, ids = [], []
    for j, (b, f) in enumerate(zip(bases, fs)):
        r, c, h, uv = monotone_rows(b, f)
        blocks.append((r, c, h))
        ids.extend((j, int(u), int(v)) for u, v in uv)
    return _solve_rho_nu(blocks, ids, tol_feas)
