"""Fractional sub-Laplacians and heat operators on periodic grids."""

from ._core import (
    CapacityError,
    InputError,
    NumericalError,
    Operator,
    bessel_k,
    command_names,
    frac_H,
    frac_L,
    frac_L_matrix,
    neumann_constant,
    run,
    special_identities,
    trace_check,
)

__all__ = [
    "CapacityError",
    "InputError",
    "NumericalError",
    "Operator",
    "bessel_k",
    "command_names",
    "frac_H",
    "frac_L",
    "frac_L_matrix",
    "neumann_constant",
    "run",
    "special_identities",
    "trace_check",
]
