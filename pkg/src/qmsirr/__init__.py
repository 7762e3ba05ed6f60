"""Irreducibility of quantum Markov semigroups and their stochastic Schrodinger unravelings."""

from . import errors, generic, gksl, matkit, sse, structure
from ._backend import BACKEND
from .generic import DiagonalHamiltonian, RateMatrix, build_generic, chain_irreducible, verify_equivalences
from .gksl import LindbladModel, drift, evolve_state, minimalize, stratonovich_drift, superoperator
from .sse import TrajectoryConfig, simulate_ito, simulate_wong_zakai, totality_test, verify_representation
from .structure import (
    ALGEBRA_DELTA,
    ALGEBRA_GL,
    MONTE_CARLO,
    invariant_states,
    is_irreducible,
    larc_check,
    s_xi_span,
    support_projection,
)

__version__ = "0.1.0"

__all__ = [
    "ALGEBRA_DELTA",
    "ALGEBRA_GL",
    "BACKEND",
    "DiagonalHamiltonian",
    "LindbladModel",
    "MONTE_CARLO",
    "RateMatrix",
    "TrajectoryConfig",
    "build_generic",
    "chain_irreducible",
    "drift",
    "errors",
    "evolve_state",
    "generic",
    "gksl",
    "invariant_states",
    "is_irreducible",
    "larc_check",
    "matkit",
    "minimalize",
    "s_xi_span",
    "simulate_ito",
    "simulate_wong_zakai",
    "sse",
    "stratonovich_drift",
    "structure",
    "superoperator",
    "support_projection",
    "totality_test",
    "verify_equivalences",
    "verify_representation",
]
