"""Dense revised simplex with dual-value extraction.

Every program in the package has few variables (at most ~100 toll values plus
rho and nu) and many inequality rows (up to ~20k triplet constraints).  Rather
than carrying a 20k-row basis, :func:`solve` runs a revised simplex on the
*dual* standard form

    minimize  h^T y   subject to  G^T y = c,  y >= 0

of the primal ``maximize c^T w  s.t.  G w <= h``.  The basis is then
``k x k`` with ``k`` the number of primal variables, each basic dual column is
a tight primal row, and the simplex multipliers of the dual are the primal
point.  A primal optimum returned here is therefore always a vertex: the
solution of ``k`` linearly independent tight rows.

Pivot rule: Dantzig pricing (most negative reduced cost, lowest index on
ties); the ratio test breaks ties toward the largest pivot.  After
``_DEGENERATE_SWITCH`` consecutive degenerate pivots the solver switches to
Bland's rule (lowest entering index, lowest leaving index) until the next
strictly improving pivot.  No randomisation is used, so identical inputs give
identical outputs.

Dual sign convention: ``duals[i]`` is the sensitivity of the optimal
objective to ``rhs[i]``.  For a maximisation this makes ``<=`` rows
non-negative, ``>=`` rows non-positive and ``=`` rows free, and strong
duality reads ``objective = duals @ rhs + bound_duals @ finite_lower_bounds``.
The non-negative multipliers of a block of ``>=`` rows are ``-duals``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import MalformedLp, NumericalFailure

LE, GE, EQ = "<=", ">=", "="
_RELATIONS = {LE: 1, GE: -1, EQ: 0, "≤": 1, "≥": -1}

_DEGENERATE_SWITCH = 50
_PRICE_TOL = 1e-10
_PIVOT_TOL = 1e-9


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``maximize objective @ w`` subject to ``A[i] @ w  relations[i]  rhs[i]``.

    ``lower_bounds[j] = -inf`` marks a free variable.  ``row_ids`` are optional
    hashable labels (e.g. ``(j, x, y, z)``) used to report binding rows.
    """

    var_names: tuple[str, ...]
    objective: np.ndarray
    A: np.ndarray
    relations: tuple[str, ...]
    rhs: np.ndarray
    lower_bounds: np.ndarray
    row_ids: tuple[Hashable, ...] | None = None

    def __post_init__(self) -> None:
        k = len(self.var_names)
        if len(set(self.var_names)) != k:
            raise MalformedLp("duplicate variable names")
        obj = np.asarray(self.objective, dtype=float)
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, k)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        lb = np.asarray(self.lower_bounds, dtype=float).reshape(-1)
        if obj.shape != (k,):
            raise MalformedLp(f"objective has {obj.shape} entries for {k} variables")
        if A.ndim != 2 or A.shape[1] != k:
            raise MalformedLp(f"constraint matrix shape {A.shape} does not match {k} variables")
        m = A.shape[0]
        if rhs.shape != (m,) or len(self.relations) != m:
            raise MalformedLp("rhs/relations length differs from number of constraints")
        if lb.shape != (k,):
            raise MalformedLp("one lower bound per variable required")
        if any(r not in _RELATIONS for r in self.relations):
            raise MalformedLp(f"unknown relation in {set(self.relations)}")
        if self.row_ids is not None and len(self.row_ids) != m:
            raise MalformedLp("row_ids length differs from number of constraints")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs)) and np.all(np.isfinite(obj))):
            raise MalformedLp("non-finite coefficient")
        if np.any(np.isnan(lb)) or np.any(lb == np.inf):
            raise MalformedLp("lower bounds must be finite or -inf")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "relations", tuple(self.relations))
        object.__setattr__(self, "var_names", tuple(self.var_names))

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def index(self, name: str) -> int:
        return self.var_names.index(name)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    primal: np.ndarray | None = None
    objective_value: float = float("nan")
    duals: np.ndarray | None = None
    bound_duals: np.ndarray | None = None
    iterations: int = 0
    var_names: tuple[str, ...] = field(default=(), repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, name: str) -> float:
        if self.primal is None:
            raise KeyError(f"no primal values (status {self.status.value})")
        return float(self.primal[self.var_names.index(name)])


class LpBuilder:
    """Row-at-a-time assembly of a :class:`LinearProgram`."""

    def __init__(self, var_names: Sequence[str], objective: dict[str, float],
                 lower_bounds: dict[str, float] | None = None):
        self.var_names = tuple(var_names)
        self._col = {v: i for i, v in enumerate(self.var_names)}
        self.objective = np.zeros(len(self.var_names))
        for name, coef in objective.items():
            self.objective[self._col[name]] = coef
        self.lower_bounds = np.full(len(self.var_names), -np.inf)
        for name, lb in (lower_bounds or {}).items():
            self.lower_bounds[self._col[name]] = lb
        self._rows: list[np.ndarray] = []
        self._rel: list[str] = []
        self._rhs: list[float] = []
        self._ids: list[Hashable] = []

    def col(self, name: str) -> int:
        return self._col[name]

    def add(self, coeffs: np.ndarray | dict[str, float], relation: str, rhs: float,
            row_id: Hashable = None) -> None:
        if isinstance(coeffs, dict):
            row = np.zeros(len(self.var_names))
            for name, c in coeffs.items():
                row[self._col[name]] += c
        else:
            row = np.asarray(coeffs, dtype=float)
        self._rows.append(row)
        self._rel.append(relation)
        self._rhs.append(float(rhs))
        self._ids.append(row_id)

    def add_block(self, A: np.ndarray, relation: str, rhs: np.ndarray,
                  row_ids: Sequence[Hashable]) -> None:
        A = np.asarray(A, dtype=float)
        self._rows.extend(A)
        self._rel.extend([relation] * A.shape[0])
        self._rhs.extend(np.asarray(rhs, dtype=float).tolist())
        self._ids.extend(row_ids)

    def build(self) -> LinearProgram:
        k = len(self.var_names)
        A = np.array(self._rows, dtype=float).reshape(len(self._rows), k)
        return LinearProgram(self.var_names, self.objective, A, tuple(self._rel),
                             np.array(self._rhs), self.lower_bounds, tuple(self._ids))


# ---------------------------------------------------------------------------
# core


@dataclass
class _Internal:
    G: np.ndarray          # (m', k) rows of  G w <= h
    h: np.ndarray
    origin: np.ndarray     # (m', 2) int: (source row or -1-j for bound j, sign)
    row_scale: np.ndarray  # y_unscaled = row_scale * y_scaled
    col_scale: np.ndarray  # w = col_scale * w_scaled
    c: np.ndarray


def _to_internal(lp: LinearProgram) -> _Internal:
    k = lp.n_vars
    blocks, hs, origin = [], [], []
    sign = np.array([_RELATIONS[r] for r in lp.relations], dtype=int)
    idx = np.arange(lp.n_rows)
    for s in (1, -1):
        sel = idx[(sign == s) | (sign == 0)]
        blocks.append(s * lp.A[sel])
        hs.append(s * lp.rhs[sel])
        origin.append(np.column_stack([sel, np.full(sel.size, s)]))
    bounded = np.flatnonzero(np.isfinite(lp.lower_bounds))
    if bounded.size:
        blocks.append(-np.eye(k)[bounded])
        hs.append(-lp.lower_bounds[bounded])
        origin.append(np.column_stack([-1 - bounded, np.full(bounded.size, -1)]))
    G = np.vstack(blocks) if blocks else np.zeros((0, k))
    h = np.concatenate(hs) if hs else np.zeros(0)
    origin_arr = np.vstack(origin) if origin else np.zeros((0, 2), dtype=int)

    # equilibrate: rows, columns, rows again
    def row_max(M):
        r = np.abs(M).max(axis=1) if M.shape[1] else np.zeros(M.shape[0])
        r[r == 0] = 1.0
        return r

    rs = 1.0 / row_max(G)
    G = G * rs[:, None]
    cmax = np.abs(G).max(axis=0) if G.shape[0] else np.ones(k)
    cmax[cmax == 0] = 1.0
    cs = 1.0 / cmax
    G = G * cs[None, :]
    rs2 = 1.0 / row_max(G)
    G = G * rs2[:, None]
    rs = rs * rs2
    h = h * rs
    return _Internal(G, h, origin_arr, rs, cs, lp.objective * cs)


class _Simplex:
    """Revised simplex on ``min cost @ y  s.t.  M y = b, y >= 0`` with artificials.

    The basis is at most ~100 x 100, so it is factorised from scratch on
    every iteration; pricing over the (many) columns dominates the cost anyway
    and this avoids error build-up from product-form updates.
    """

    def __init__(self, M: np.ndarray, b: np.ndarray, cost: np.ndarray, max_iter: int):
        self.k, self.m = M.shape
        self.flip = np.where(b < 0, -1.0, 1.0)
        self.M = M * self.flip[:, None]
        self.b = b * self.flip
        self.full = np.hstack([self.M, np.eye(self.k)])
        self.cost = cost
        self.basis = np.arange(self.m, self.m + self.k)
        self.xB = self.b.copy()
        self.max_iter = max_iter
        self.iterations = 0

    def _solve(self, transpose: bool, rhs: np.ndarray) -> np.ndarray:
        B = self.full[:, self.basis]
        try:
            out = np.linalg.solve(B.T if transpose else B, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        if not np.all(np.isfinite(out)):
            raise NumericalFailure("non-finite basis solve")
        return out

    def multipliers(self, costs_full: np.ndarray) -> np.ndarray:
        if self.k == 0:
            return np.zeros(0)
        return self._solve(True, costs_full[self.basis])

    def run(self, costs_full: np.ndarray) -> str:
        """Iterate to optimality; returns 'optimal' or 'unbounded'."""
        m = self.m
        degenerate_run = 0
        bland = False
        while True:
            if self.k == 0:
                return "optimal"
            if self.iterations >= self.max_iter:
                raise NumericalFailure(f"iteration limit {self.max_iter} reached")
            pi = self.multipliers(costs_full)
            reduced = costs_full[:m] - pi @ self.M
            reduced[self.basis[self.basis < m]] = 0.0
            cand = np.flatnonzero(reduced < -_PRICE_TOL)
            if cand.size == 0:
                self.xB = self._solve(False, self.b)
                return "optimal"
            q = int(cand[0]) if bland else int(cand[np.argmin(reduced[cand])])
            X = self._solve(False, np.column_stack([self.b, self.M[:, q]]))
            self.xB, d = X[:, 0], X[:, 1]
            xB = np.maximum(self.xB, 0.0)
            art_rows = self.basis >= m
            pos = d > _PIVOT_TOL
            # artificials stuck at zero must not become positive
            forced = art_rows & (np.abs(d) > _PIVOT_TOL) & (xB <= _PIVOT_TOL)
            if forced.any():
                rows = np.flatnonzero(forced)
                p = int(rows[np.argmax(np.abs(d[rows]))])
                theta = 0.0
            else:
                rows = np.flatnonzero(pos)
                if rows.size == 0:
                    return "unbounded"
                ratios = xB[rows] / d[rows]
                tmin = ratios.min()
                ties = rows[ratios <= tmin + 1e-12 * max(1.0, tmin)]
                if bland:
                    p = int(ties[np.argmin(self.basis[ties])])
                else:
                    p = int(ties[np.argmax(d[ties])])
                theta = float(xB[p] / d[p])
            self.basis[p] = q
            self.iterations += 1
            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= _DEGENERATE_SWITCH:
                    bland = True
            else:
                degenerate_run = 0
                bland = False

    def drive_out_artificials(self) -> None:
        m = self.m
        for p in range(self.k):
            if self.basis[p] < m:
                continue
            e = np.zeros(self.k)
            e[p] = 1.0
            row = self._solve(True, e) @ self.M
            row[self.basis[self.basis < m]] = 0.0
            amax = np.abs(row).max() if row.size else 0.0
            if amax <= 1e-9:
                continue  # redundant equality; the artificial stays at zero
            self.basis[p] = int(np.argmax(np.abs(row)))
            self.iterations += 1
        if self.k:
            self.xB = self._solve(False, self.b)


def _solve_internal(M: np.ndarray, b: np.ndarray, cost: np.ndarray, max_iter: int):
    k, m = M.shape
    sx = _Simplex(M, b, cost, max_iter)
    phase1 = np.concatenate([np.zeros(m), np.ones(k)])
    sx.run(phase1)
    infeas = float(sx.xB[sx.basis >= m].sum()) if k else 0.0
    if infeas > 1e-9 * (1.0 + np.abs(b).max(initial=0.0)):
        return "infeasible", sx
    sx.drive_out_artificials()
    phase2 = np.concatenate([cost, np.zeros(k)])
    status = sx.run(phase2)
    return status, sx


def solve(lp: LinearProgram, tol_feas: float = 1e-9, max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` and return a vertex solution with dual multipliers.

    Raises :class:`NumericalFailure` when the iteration cap is hit, the basis
    becomes singular, or the optimal point violates a row by more than
    ``tol_feas`` (relative to the row's magnitude at the solution).
    """
    internal = _to_internal(lp)
    G, h = internal.G, internal.h
    k = lp.n_vars
    m = G.shape[0]
    if max_iter is None:
        max_iter = 50 * (k + m) + 1000
    M = np.ascontiguousarray(G.T)

    status, sx = _solve_internal(M, internal.c, h, max_iter)
    if status == "infeasible":
        # dual infeasible: primal is unbounded if it has any feasible point
        fstatus, _ = _solve_internal(M, np.zeros(k), h, max_iter)
        st = Status.UNBOUNDED if fstatus == "optimal" else Status.INFEASIBLE
        return LpSolution(st, iterations=sx.iterations, var_names=lp.var_names)
    if status == "unbounded":
        return LpSolution(Status.INFEASIBLE, iterations=sx.iterations, var_names=lp.var_names)

    costs_full = np.concatenate([h, np.zeros(k)])
    pi = sx.multipliers(costs_full) if k else np.zeros(0)
    w = internal.col_scale * (sx.flip * pi)
    y = np.zeros(m)
    struct = sx.basis < m
    y[sx.basis[struct]] = np.maximum(sx.xB[struct], 0.0)
    y *= internal.row_scale

    duals = np.zeros(lp.n_rows)
    bound_duals = np.zeros(k)
    for (src, sgn), yi in zip(internal.origin, y):
        if yi == 0.0:
            continue
        if src >= 0:
            duals[src] += -yi if sgn < 0 else yi
        else:
            bound_duals[-1 - src] -= yi

    _check_feasible(lp, w, tol_feas)
    return LpSolution(Status.OPTIMAL, w, float(lp.objective @ w), duals, bound_duals,
                      sx.iterations, lp.var_names)


def row_violations(lp: LinearProgram, w: np.ndarray) -> np.ndarray:
    """Relative violation of every row (0 when satisfied).

    A row's violation is divided by ``max(1, |rhs|, max_j |A_ij w_j|)`` so that
    rows with coefficients of order 1e14 are judged on the same footing as
    rows of order 1.
    """
    terms = lp.A * w[None, :]
    lhs = terms.sum(axis=1)
    scale = np.maximum.reduce([np.ones_like(lhs), np.abs(lp.rhs), np.abs(terms).max(axis=1, initial=0.0)])
    sign = np.array([_RELATIONS[r] for r in lp.relations])
    diff = lhs - lp.rhs
    viol = np.where(sign > 0, np.maximum(diff, 0.0),
                    np.where(sign < 0, np.maximum(-diff, 0.0), np.abs(diff)))
    bviol = np.maximum(lp.lower_bounds - w, 0.0)
    return np.concatenate([viol / scale, bviol / np.maximum(1.0, np.abs(w))])


def _check_feasible(lp: LinearProgram, w: np.ndarray, tol_feas: float) -> None:
    if lp.n_rows == 0 and not np.isfinite(lp.lower_bounds).any():
        return
    worst = row_violations(lp, w).max(initial=0.0)
    if worst > tol_feas:
        raise NumericalFailure(f"optimal point violates a constraint by {worst:.3e} (relative)")


def binding_rows(lp: LinearProgram, w: np.ndarray, tol: float = 1e-9) -> list[Hashable]:
    """Identifiers of inequality rows whose relative slack is at most ``tol``."""
    terms = lp.A * w[None, :]
    lhs = terms.sum(axis=1)
    scale = np.maximum.reduce([np.ones_like(lhs), np.abs(lp.rhs), np.abs(terms).max(axis=1, initial=0.0)])
    slack = np.abs(lhs - lp.rhs) / scale
    ids = lp.row_ids if lp.row_ids is not None else tuple(range(lp.n_rows))
    return [ids[i] for i in np.flatnonzero(slack <= tol)]


def duality_gap(lp: LinearProgram, sol: LpSolution) -> tuple[float, float]:
    """(relative objective gap, dual residual) of an optimal solution.

    The dual objective is ``duals @ rhs + bound_duals @ lower_bounds``; the
    residual measures ``A^T duals + bound_duals - c`` against the largest
    stationarity term.
    """
    if not sol.optimal:
        raise ValueError("duality gap is defined for optimal solutions only")
    lb = np.where(np.isfinite(lp.lower_bounds), lp.lower_bounds, 0.0)
    dual_obj = float(sol.duals @ lp.rhs + sol.bound_duals @ lb)
    gap = abs(sol.objective_value - dual_obj) / max(1.0, abs(sol.objective_value))
    terms = np.abs(lp.A * sol.duals[:, None])
    resid = lp.A.T @ sol.duals + sol.bound_duals - lp.objective
    scale = max(1.0, float(terms.max(initial=0.0)), float(np.abs(lp.objective).max(initial=0.0)))
    return gap, float(np.abs(resid).max(initial=0.0)) / scale
