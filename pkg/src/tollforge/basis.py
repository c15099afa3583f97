"""Tabulated resource-cost bases b : {1..n} -> R>=0.

Only integer loads ever enter the programs, so a basis is stored as its table
of values.  The conventions b(0) = 0 and b(n+1) = 0 are applied by
:meth:`BasisTable.padded`, never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import BasisOverflow, IncompatibleBases, ValidationError

STRICT_TOL = 1e-12


@dataclass(frozen=True)
class BasisTable:
    name: str
    n: int
    values: tuple[float, ...]
    spec: dict | None = None  # the JSON spec it was built from, if any

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        vals = tuple(float(v) for v in self.values)
        if len(vals) != self.n:
            raise ValidationError(f"basis {self.name!r}: {len(vals)} values for n={self.n}")
        if not all(math.isfinite(v) for v in vals):
            raise BasisOverflow(f"basis {self.name!r} has non-finite values")
        if any(v < 0 for v in vals):
            raise ValidationError(f"basis {self.name!r} has negative values")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "n", int(self.n))

    def __hash__(self) -> int:
        return hash((self.name, self.n, self.values))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BasisTable):
            return NotImplemented
        return (self.name, self.n, self.values) == (other.name, other.n, other.values)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values)

    def padded(self) -> np.ndarray:
        """b(0..n+1) with b(0) = b(n+1) = 0."""
        out = np.zeros(self.n + 2)
        out[1:-1] = self.values
        return out

    def load_cost(self) -> np.ndarray:
        """x*b(x) for x = 0..n+1 (zero at both ends)."""
        return self.padded() * np.arange(self.n + 2)

    def __call__(self, x: int) -> float:
        if 1 <= x <= self.n:
            return self.values[x - 1]
        return 0.0

    def scaled(self, lam: float) -> "BasisTable":
        return BasisTable(f"{lam}*{self.name}", self.n, tuple(lam * v for v in self.values))

    def to_spec(self) -> dict:
        if self.spec is not None:
            return dict(self.spec)
        return {"name": self.name, "n": self.n, "kind": "table", "values": list(self.values)}


def monomial(d: int, n: int) -> BasisTable:
    """The basis x**d tabulated on 1..n."""
    if int(d) != d or d < 0:
        raise ValidationError(f"degree must be a non-negative integer, got {d!r}")
    d, n = int(d), int(n)
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    try:
        vals = tuple(float(x ** d) for x in range(1, n + 1))
    except OverflowError as exc:
        raise BasisOverflow(f"x^{d} overflows for x <= {n}; reduce n or d") from exc
    if not math.isfinite(vals[-1] * n):
        raise BasisOverflow(f"x^{d+1} overflows for x <= {n}; reduce n or d")
    return BasisTable(f"x^{d}", n, vals, {"name": f"x^{d}", "n": n, "kind": "monomial", "degree": d})


def from_function(name: str, n: int, fn: Callable[[int], float]) -> BasisTable:
    return BasisTable(name, n, tuple(float(fn(x)) for x in range(1, n + 1)))


def from_spec(spec: dict, n: int | None = None) -> BasisTable:
    """Build a basis from its JSON form; ``n`` overrides the spec's own ``n``."""
    kind = spec.get("kind")
    if kind == "monomial":
        nn = n if n is not None else spec.get("n")
        if nn is None:
            raise ValidationError("monomial spec needs 'n'")
        return monomial(spec["degree"], nn)
    if kind == "table":
        values = spec.get("values")
        if not isinstance(values, list):
            raise ValidationError("table spec needs a 'values' list")
        if n is not None and n != len(values):
            raise ValidationError(f"table has {len(values)} values but n={n} was requested")
        name = spec.get("name", "table")
        return BasisTable(name, len(values), tuple(values), {"name": name, "n": len(values),
                                                             "kind": "table", "values": list(values)})
    raise ValidationError(f"unknown basis kind {kind!r}")


class Flags(NamedTuple):
    is_nondecreasing: bool
    is_strictly_increasing: bool
    is_discrete_convex: bool
    is_xb_strictly_convex: bool
    is_positive: bool


def _magnitude(a: np.ndarray) -> float:
    m = float(np.abs(a).max()) if a.size else 0.0
    return m if m > 0 else 1.0


def classify(b: BasisTable) -> Flags:
    """Structural flags from finite differences, relative tolerance 1e-12.

    Differences of b use b(1..n) only; differences of x*b(x) start from
    0*b(0) = 0.  Tolerances are scaled by the table's magnitude so the flags
    do not change under positive rescaling.
    """
    v = b.array
    tol = STRICT_TOL * _magnitude(v)
    db = np.diff(v)
    xb = np.concatenate([[0.0], v * np.arange(1, b.n + 1)])
    dxb = np.diff(xb)
    tol_xb = STRICT_TOL * _magnitude(xb)
    return Flags(
        is_nondecreasing=bool(np.all(db >= -tol)),
        is_strictly_increasing=bool(np.all(db > tol)),
        is_discrete_convex=bool(np.all(np.diff(db) >= -tol)),
        is_xb_strictly_convex=bool(np.all(np.diff(dxb) > tol_xb)),
        is_positive=bool(np.all(v > 0)),
    )


def common_n(bases) -> int:
    ns = {b.n for b in bases}
    if len(ns) != 1:
        raise IncompatibleBases(f"bases have different n: {sorted(ns)}")
    return ns.pop()
