"""Dense state-vector simulation of small multi-qubit registers.

Conventions
-----------
Qubit ``0`` is the least-significant bit of a basis index. A *register* is a
contiguous ``range`` of qubits; its integer value is read with its first qubit
as the least-significant bit, so ``range(2, 5)`` holds the value
``(index >> 2) & 0b111``.

Operations mutate the state in place and also return it, so they can be
chained. Every source of randomness is an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .exceptions import CapacityError, NumericError, RegisterError

MAX_QUBITS = 22
NORM_ATOL = 1e-9

RegisterLike = Union[range, int, Sequence[int]]


def as_register(register: RegisterLike | None, n_qubits: int) -> range:
    """Normalize ``register`` to a contiguous ``range`` inside ``n_qubits``.

    ``None`` means the full register, an int a single qubit and a
    ``(start, stop)`` pair a half-open range.
    """
    if register is None:
        reg = range(n_qubits)
    elif isinstance(register, range):
        reg = register
    elif isinstance(register, (int, np.integer)):
        reg = range(int(register), int(register) + 1)
    else:
        start, stop = register
        reg = range(int(start), int(stop))
    if reg.step != 1 or len(reg) == 0:
        raise RegisterError(f"register must be a non-empty contiguous range, got {reg}")
    if reg.start < 0 or reg.stop > n_qubits:
        raise RegisterError(f"register {reg} out of bounds for {n_qubits} qubits")
    return reg


class StateVector:
    """Normalized complex amplitudes over ``2**n_qubits`` basis states."""

    def __init__(self, amplitudes, *, normalize: bool = False):
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        n = int(amps.size).bit_length() - 1
        if amps.size < 2 or 1 << n != amps.size:
            raise RegisterError(f"amplitude count {amps.size} is not a power of two >= 2")
        if n > MAX_QUBITS:
            raise CapacityError(f"{n} qubits exceeds the maximum of {MAX_QUBITS}")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise NumericError("cannot normalize a zero vector")
            amps /= norm
        elif abs(norm - 1.0) > NORM_ATOL:
            raise NumericError(f"state is not normalized (norm {norm!r})")
        self.amplitudes = amps
        self.n_qubits = n

    def __len__(self) -> int:
        return self.amplitudes.size

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"

    def copy(self) -> "StateVector":
        new = StateVector.__new__(StateVector)
        new.amplitudes = self.amplitudes.copy()
        new.n_qubits = self.n_qubits
        return new

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self, register: RegisterLike | None = None) -> np.ndarray:
        """Marginal outcome distribution of ``register``."""
        reg = as_register(register, self.n_qubits)
        grouped, _ = _group(self.amplitudes, self.n_qubits, [reg])
        return np.sum(np.abs(grouped) ** 2, axis=0)

    def probability_of(self, mask: np.ndarray) -> float:
        """Total probability of the basis states selected by a boolean mask."""
        return float(np.sum(np.abs(self.amplitudes[mask]) ** 2))


@dataclass(frozen=True)
class MeasurementOutcome:
    basis_index: int
    register: range
    collapsed: bool


class Unitary:
    """A reversible transformation on a fixed span of qubits.

    ``forward`` and ``inverse`` act on arrays whose *last* axis has length
    ``2**len(qubits)``; leading axes are batch axes. They may modify the
    array in place but must return the result.
    """

    def __init__(
        self,
        forward: Callable[[np.ndarray], np.ndarray],
        inverse: Callable[[np.ndarray], np.ndarray],
        qubits: RegisterLike,
        name: str = "U",
    ):
        self.qubits = _span(qubits)
        self.forward = forward
        self.inverse = inverse
        self.name = name

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def __repr__(self) -> str:
        return f"Unitary({self.name!r}, qubits={self.qubits})"

    @classmethod
    def from_matrix(cls, matrix, qubits: RegisterLike | None = None, name: str = "U") -> "Unitary":
        mat = np.asarray(matrix, dtype=np.complex128)
        dim = mat.shape[0]
        n = dim.bit_length() - 1
        if mat.shape != (dim, dim) or 1 << n != dim:
            raise RegisterError(f"matrix shape {mat.shape} is not square with power-of-two size")
        if not np.allclose(mat.conj().T @ mat, np.eye(dim), atol=1e-10):
            raise NumericError("matrix is not unitary")
        fwd, inv = mat.T.copy(), mat.conj().copy()
        return cls(lambda a: a @ fwd, lambda a: a @ inv, qubits if qubits is not None else range(n), name)

    def on(self, qubits: RegisterLike) -> "Unitary":
        """The same transformation relocated to another qubit span."""
        if isinstance(qubits, (int, np.integer)):
            # an int here is the new starting qubit
            qubits = range(int(qubits), int(qubits) + self.n_qubits)
        new = Unitary(self.forward, self.inverse, qubits, self.name)
        if new.n_qubits != self.n_qubits:
            raise RegisterError(f"{self.name} spans {self.n_qubits} qubits, not {new.n_qubits}")
        return new

    def dagger(self) -> "Unitary":
        return Unitary(self.inverse, self.forward, self.qubits, self.name + "^-1")

    def matrix(self) -> np.ndarray:
        """Dense matrix, built column by column from ``forward``."""
        return self.forward(np.eye(self.dim, dtype=np.complex128)).T

    def apply(self, state: StateVector) -> StateVector:
        return _apply_local(state, self.qubits, self.forward)

    def apply_inverse(self, state: StateVector) -> StateVector:
        return _apply_local(state, self.qubits, self.inverse)


def _span(qubits: RegisterLike) -> range:
    # an int is a width starting at qubit 0
    if isinstance(qubits, (int, np.integer)):
        qubits = range(int(qubits))
    elif not isinstance(qubits, range):
        qubits = range(int(qubits[0]), int(qubits[1]))
    if qubits.step != 1 or len(qubits) == 0 or qubits.start < 0:
        raise RegisterError(f"invalid qubit span {qubits}")
    return qubits


def _group(amps: np.ndarray, n: int, registers: list[range]) -> tuple[np.ndarray, list[int]]:
    """View amplitudes as ``(rest, *registers)`` with one axis per register."""
    reg_axes = [list(range(n - r.stop, n - r.start)) for r in registers]
    used = {a for axes in reg_axes for a in axes}
    if len(used) != sum(len(r) for r in registers):
        raise RegisterError(f"registers overlap: {registers}")
    rest = [a for a in range(n) if a not in used]
    perm = rest + [a for axes in reg_axes for a in axes]
    shape = (1 << len(rest),) + tuple(1 << len(r) for r in registers)
    grouped = amps.reshape((2,) * n).transpose(perm).reshape(shape)
    return grouped, perm


def _ungroup(grouped: np.ndarray, n: int, perm: list[int]) -> np.ndarray:
    return np.ascontiguousarray(grouped.reshape((2,) * n).transpose(np.argsort(perm))).reshape(-1)


def _apply_local(state: StateVector, qubits: range, fn) -> StateVector:
    reg = as_register(qubits, state.n_qubits)
    if len(reg) == state.n_qubits:
        state.amplitudes = np.asarray(fn(state.amplitudes), dtype=np.complex128).reshape(-1)
        return state
    grouped, perm = _group(state.amplitudes, state.n_qubits, [reg])
    state.amplitudes = _ungroup(fn(np.array(grouped)), state.n_qubits, perm)
    return state


def prepare_zero(n_qubits: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    """Return ``|0...0>`` on ``n_qubits`` qubits."""
    if not 1 <= n_qubits <= max_qubits:
        raise CapacityError(f"n_qubits must be in [1, {max_qubits}], got {n_qubits}")
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps)


def qft_matrix(size: int, inverse: bool = False) -> np.ndarray:
    """Dense ``size`` x ``size`` Fourier matrix with entries ``exp(2 pi i x y / size) / sqrt(size)``."""
    k = np.arange(size)
    sign = -1.0 if inverse else 1.0
    return np.exp(sign * 2j * np.pi * np.outer(k, k) / size) / np.sqrt(size)


def _fourier(state: StateVector, register: RegisterLike, inverse: bool, method: str) -> StateVector:
    reg = as_register(register, state.n_qubits)
    size = 1 << len(reg)
    if method == "direct":
        mat = qft_matrix(size, inverse)
        # symmetric matrix, so row-vector product equals mat @ column
        fn = lambda a: a @ mat  # noqa: E731
    elif method == "fft":
        if inverse:
            fn = lambda a: np.fft.fft(a, axis=-1, norm="ortho")  # noqa: E731
        else:
            fn = lambda a: np.fft.ifft(a, axis=-1, norm="ortho")  # noqa: E731
    else:
        raise ValueError(f"unknown QFT method {method!r}")
    return _apply_local(state, reg, fn)


def apply_qft(state: StateVector, register: RegisterLike | None = None, method: str = "direct") -> StateVector:
    """Quantum Fourier transform over ``M = 2**len(register)`` points.

    ``method="direct"`` multiplies by the dense Fourier matrix;
    ``method="fft"`` uses numpy's butterfly FFT and agrees to rounding.
    """
    return _fourier(state, register, inverse=False, method=method)


def apply_inverse_qft(state: StateVector, register: RegisterLike | None = None, method: str = "direct") -> StateVector:
    return _fourier(state, register, inverse=True, method=method)


def apply_controlled_powers(state: StateVector, control: RegisterLike, target_op: Unitary) -> StateVector:
    """Apply ``target_op**j`` to the target span for each control value ``j``."""
    ctrl = as_register(control, state.n_qubits)
    tgt = as_register(target_op.qubits, state.n_qubits)
    if set(ctrl) & set(tgt):
        raise RegisterError(f"control {ctrl} overlaps target {tgt}")
    grouped, perm = _group(state.amplitudes, state.n_qubits, [ctrl, tgt])
    # axes: (rest, control, target) -> (control, rest, target)
    work = np.ascontiguousarray(grouped.transpose(1, 0, 2))
    for j in range(1, work.shape[0]):
        work[j:] = target_op.forward(work[j:])
    state.amplitudes = _ungroup(work.transpose(1, 0, 2), state.n_qubits, perm)
    return state


def measure(
    state: StateVector,
    register: RegisterLike | None = None,
    rng: np.random.Generator | None = None,
    collapse: bool = True,
) -> MeasurementOutcome:
    """Sample ``register`` under the Born rule, collapsing the state by default."""
    if rng is None:
        raise ValueError("measure requires an explicit numpy Generator")
    reg = as_register(register, state.n_qubits)
    grouped, perm = _group(state.amplitudes, state.n_qubits, [reg])
    probs = np.sum(np.abs(grouped) ** 2, axis=0)
    total = probs.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericError("cannot measure a zero-norm state")
    cdf = np.cumsum(probs / total)
    outcome = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    outcome = min(outcome, probs.size - 1)
    if collapse:
        kept = np.zeros_like(grouped)
        kept[:, outcome] = grouped[:, outcome] / np.sqrt(probs[outcome])
        state.amplitudes = _ungroup(kept, state.n_qubits, perm)
    return MeasurementOutcome(outcome, reg, collapse)
