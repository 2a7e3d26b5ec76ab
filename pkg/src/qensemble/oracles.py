"""State-preparation unitaries and synthetic oracles with a known good probability."""
from __future__ import annotations

import math

import numpy as np

from .exceptions import CapacityError, DomainError
from .grover import GoodStatePredicate, GroverIterate, QueryLedger
from .statevector import MAX_QUBITS, Unitary


def householder_preparation(target, name: str = "A") -> Unitary:
    """Real reflection mapping ``|0>`` onto the unit vector ``target``.

    The reflection ``I - 2 v v^T / (v^T v)`` with ``v = e0 - target`` is its
    own inverse and costs O(dim) per application.
    """
    psi = np.asarray(target, dtype=float)
    if not np.isclose(np.linalg.norm(psi), 1.0, atol=1e-12):
        raise DomainError("target vector must be normalized")
    n = psi.size.bit_length() - 1
    v = -psi.copy()
    v[0] += 1.0
    vv = float(v @ v)
    if vv < 1e-30:
        ident = lambda a: a  # noqa: E731
        return Unitary(ident, ident, range(n), name)
    scale = 2.0 / vv

    def reflect(arr):
        coeff = arr @ v
        arr -= scale * coeff[..., None] * v
        return arr

    return Unitary(reflect, reflect, range(n), name)


def uniform_preparation(n_qubits: int, size: int | None = None) -> Unitary:
    """Preparation of the uniform superposition over the first ``size`` indices."""
    dim = 1 << n_qubits
    size = dim if size is None else size
    if not 1 <= size <= dim:
        raise DomainError(f"size must be in [1, {dim}], got {size}")
    psi = np.zeros(dim)
    psi[:size] = 1.0 / math.sqrt(size)
    return householder_preparation(psi, name=f"uniform{size}")


def synthetic_iterate(p: float, n_qubits: int = 1, ledger: QueryLedger | None = None) -> GroverIterate:
    """Single-good-state oracle with good probability exactly ``p``.

    The good basis state is the last index; the remaining ``1 - p`` is spread
    evenly over all other indices so that every qubit takes part.
    """
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    dim = 1 << n_qubits
    psi = np.full(dim, math.sqrt((1.0 - p) / (dim - 1)))
    psi[-1] = math.sqrt(p)
    psi /= np.linalg.norm(psi)
    return GroverIterate(
        householder_preparation(psi, name=f"A(p={p:g})"),
        GoodStatePredicate.from_indices([dim - 1]),
        ledger,
    )
