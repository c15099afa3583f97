"""Optimal local tolls for atomic congestion games, with price-of-anarchy evaluation."""

from .basis import BasisTable, classify, from_spec, monomial
from .consttoll import const_closed_form, const_design
from .design import Mechanism, OptimalDesign, design_full, design_mechanism, design_simplified
from .errors import NumericalError, TollforgeError, ValidationError
from .largen import sandwich
from .margcost import marginal_poa, marginal_toll
from .poa import InducedCost, poa_full, poa_monotone

__version__ = "0.1.0"
