"""Built-in example models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .generic import DiagonalHamiltonian, RateMatrix, build_generic
from .gksl import LindbladModel

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)

SO3_L = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], dtype=complex)
SO3_H = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)
SO3_G = np.array([[-0.5, 0, -1], [0, -0.5, 0], [1, 0, 0]], dtype=complex)

NONMINIMAL_Z = (1 + 1j) / np.sqrt(2)

CYCLE3_RATES = np.array([[0, 1, 0], [0, 0, 2], [3, 0, 0]], dtype=float)
CYCLE3_ENERGIES = np.array([1.0, 2.0, 3.0])


def pauli() -> LindbladModel:
    """``d = 2``: ``H = sigma_3``, ``L = i sigma_2`` (anti-selfadjoint noise, irreducible)."""
    return LindbladModel(SIGMA3, (1j * SIGMA2,))


def pure_hamiltonian() -> LindbladModel:
    """``H = sigma_3`` with no jump operators (reducible)."""
    return LindbladModel(SIGMA3, ())


def pure_hamiltonian_nonminimal(z: complex = NONMINIMAL_Z) -> LindbladModel:
    """The same generator written with the redundant jump operator ``L = z I``."""
    return LindbladModel(SIGMA3, (z * np.eye(2, dtype=complex),))


def so3() -> LindbladModel:
    """``d = 3`` model whose LARC algebra is so(3): irreducible, yet LARC fails at each ``e_k``."""
    return LindbladModel(SO3_H, (SO3_L,))


def cycle3_rates() -> tuple:
    return RateMatrix(CYCLE3_RATES), DiagonalHamiltonian(CYCLE3_ENERGIES)


def generic_cycle3() -> LindbladModel:
    return build_generic(*cycle3_rates())


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    build: Callable[[], LindbladModel]
    rates: Optional[Callable[[], tuple]] = None


CATALOG = {
    e.name: e
    for e in [
        CatalogEntry("pauli", "d=2, H = sigma_3, L = i sigma_2", pauli),
        CatalogEntry("pure-hamiltonian", "d=2, H = sigma_3, no jump operators", pure_hamiltonian),
        CatalogEntry("pure-hamiltonian-nonminimal", "d=2, H = sigma_3, L = z I (non-minimal)",
                     pure_hamiltonian_nonminimal),
        CatalogEntry("so3", "d=3, L and H generating so(3)", so3),
        CatalogEntry("generic-cycle-3", "generic model on the rate cycle 1->2->3->1, H = diag(1,2,3)",
                     generic_cycle3, cycle3_rates),
    ]
}


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"no built-in model named {name!r}; known: {sorted(CATALOG)}") from None
