"""Marginal-cost tolls tau(x) = (x - 1)(b(x) - b(x - 1))."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .basis import BasisTable, classify
from .errors import HypothesisViolation
from .poa import InducedCost, PoaReport, poa_monotone


@dataclass(frozen=True, eq=False)
class MarginalToll:
    basis: BasisTable
    tau: np.ndarray

    @property
    def f(self) -> np.ndarray:
        return self.basis.array + self.tau

    def induced(self, basis_index: int = 0) -> InducedCost:
        return InducedCost(basis_index, self.basis.n, tuple(self.f))


def marginal_toll(b: BasisTable) -> MarginalToll:
    x = np.arange(1, b.n + 1)
    bp = b.padded()
    return MarginalToll(b, (x - 1) * (bp[1:-1] - bp[:-2]))


def marginal_poa(bases: Sequence[BasisTable], n: int | None = None, tol_feas: float = 1e-9) -> PoaReport:
    """PoA of marginal-cost tolls; needs x*b(x) convex so that f = b + tau is nondecreasing."""
    fs = []
    for j, b in enumerate(bases):
        xb = np.concatenate([[0.0], b.array * np.arange(1, b.n + 1)])
        if np.any(np.diff(xb, 2) < -1e-12 * max(1.0, float(np.abs(xb).max()))):
            raise HypothesisViolation(f"x*b(x) is not convex for basis {b.name!r}")
        fs.append(marginal_toll(b).induced(j))
    return poa_monotone(list(bases), fs, n, tol_feas)
