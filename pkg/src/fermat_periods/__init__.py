"""Periods of the Fermat pencil at the Fermat point, their Hodge splits and Deligne periods."""

from .numerics import DEFAULT_DIGITS, PrecisionContext, QuadraticNumber
from .pf_transport import fermat_jets, psi_ode, derivative_ode
from .hodge import period_vectors, pairing
from .splitter import Charge, assemble_split, verify_charge
from .lfunc import l_value, load_form

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_DIGITS", "PrecisionContext", "QuadraticNumber", "fermat_jets", "psi_ode", "derivative_ode",
    "period_vectors", "pairing", "Charge", "assemble_split", "verify_charge", "l_value", "load_form",
]
