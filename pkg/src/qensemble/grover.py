"""Reflections, the Grover iterate and fixed-schedule amplitude amplification.

The iterate is ``Q = -A S0 A^-1 S_chi``: ``S_chi`` flips the sign of good
basis states, ``S0`` flips the sign of ``|0>``. Starting from ``A|0>`` with
good probability ``p = sin^2(theta)``, ``j`` applications leave a good
amplitude of ``sin((2j + 1) theta)``.

Every application of ``A`` or ``A^-1`` is charged to a :class:`QueryLedger`,
which is the cost model used throughout the package.
"""
from __future__ import annotations

import math
import threading
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable

import numpy as np

from .exceptions import ConfigurationError, DomainError, RegisterError
from .statevector import StateVector, Unitary, as_register, measure, prepare_zero

STRATEGIES = ("threshold", "table", "optimal")


@dataclass(frozen=True)
class QueryCounts:
    """Immutable snapshot of ledger counters."""

    a_applications: int = 0
    a_inverse_applications: int = 0
    q_applications: int = 0
    oracle_evaluations: int = 0
    measurements: int = 0

    def __sub__(self, other: "QueryCounts") -> "QueryCounts":
        return QueryCounts(*(getattr(self, f.name) - getattr(other, f.name) for f in fields(self)))

    def __add__(self, other: "QueryCounts") -> "QueryCounts":
        return QueryCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def as_dict(self) -> dict:
        return asdict(self)


_COUNTERS = {f.name for f in fields(QueryCounts)}


class QueryLedger:
    """Thread-safe, monotone counters of oracle usage.

    Counters only ever grow; callers take :meth:`snapshot` before and after a
    run and subtract to get per-run costs.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._counts = QueryCounts()

    def charge(self, **increments: int) -> None:
        unknown = set(increments) - _COUNTERS
        if unknown:
            raise TypeError(f"unknown ledger counters: {sorted(unknown)}")
        for name, value in increments.items():
            if value < 0:
                raise ValueError(f"ledger counters are monotone, got {name}={value}")
        with self._lock:
            self._counts = QueryCounts(
                **{k: v + increments.get(k, 0) for k, v in asdict(self._counts).items()}
            )

    def snapshot(self) -> QueryCounts:
        with self._lock:
            return self._counts

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return getattr(self.snapshot(), name)

    def __repr__(self) -> str:
        return f"QueryLedger({self.snapshot()})"


class GoodStatePredicate:
    """Deterministic boolean function over basis indices (``chi``).

    The predicate is evaluated once per register size and cached as a mask,
    so the wrapped function must be pure.
    """

    def __init__(self, fn: Callable[[int], bool], name: str = "chi"):
        self._fn = fn
        self._masks: dict[int, np.ndarray] = {}
        self.name = name

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "GoodStatePredicate":
        marked = frozenset(int(i) for i in indices)
        return cls(lambda x: x in marked, name=f"marks{sorted(marked)}")

    @classmethod
    def from_mask(cls, mask) -> "GoodStatePredicate":
        mask = np.asarray(mask, dtype=bool).copy()
        pred = cls(lambda x: bool(mask[x]), name="mask")
        pred._masks[mask.size] = mask
        return pred

    def __call__(self, index: int) -> bool:
        return bool(self._fn(int(index)))

    def mask(self, dim: int) -> np.ndarray:
        cached = self._masks.get(dim)
        if cached is None:
            cached = np.fromiter((bool(self._fn(i)) for i in range(dim)), dtype=bool, count=dim)
            self._masks[dim] = cached
        return cached


def apply_sign_flip_good(
    state: StateVector,
    predicate: GoodStatePredicate,
    register=None,
    ledger: QueryLedger | None = None,
) -> StateVector:
    """``S_chi``: negate amplitudes of good basis states of ``register``."""
    reg = as_register(register, state.n_qubits)
    mask = predicate.mask(1 << len(reg))
    if len(reg) == state.n_qubits:
        state.amplitudes[mask] *= -1
    else:
        Unitary(lambda a: _flip(a, mask), lambda a: _flip(a, mask), reg).apply(state)
    if ledger is not None:
        ledger.charge(oracle_evaluations=len(state))
    return state


def apply_sign_flip_zero(state: StateVector, register=None) -> StateVector:
    """``S0``: negate the amplitude of ``|0>`` on ``register``."""
    reg = as_register(register, state.n_qubits)
    if len(reg) == state.n_qubits:
        state.amplitudes[0] *= -1
        return state
    return Unitary(_flip_zero, _flip_zero, reg).apply(state)


def _flip(arr: np.ndarray, mask: np.ndarray) -> np.ndarray:
    arr[..., mask] *= -1
    return arr


def _flip_zero(arr: np.ndarray) -> np.ndarray:
    arr[..., 0] *= -1
    return arr


class GroverIterate:
    """The operator ``Q`` built from a preparation ``A`` and a predicate ``chi``.

    ``preparation`` must act on qubits ``0 .. n-1``; use :meth:`as_unitary`
    and :meth:`Unitary.on` to place ``Q`` elsewhere in a larger register.
    """

    def __init__(self, preparation: Unitary, predicate: GoodStatePredicate, ledger: QueryLedger | None = None):
        if preparation.qubits.start != 0:
            raise RegisterError("preparation must act on qubits starting at 0")
        self.preparation = preparation
        self.predicate = predicate
        self.ledger = ledger if ledger is not None else QueryLedger()
        self._mask = predicate.mask(preparation.dim)

    @property
    def n_qubits(self) -> int:
        return self.preparation.n_qubits

    @property
    def dim(self) -> int:
        return self.preparation.dim

    def _forward(self, arr: np.ndarray) -> np.ndarray:
        arr[..., self._mask] *= -1
        arr = self.preparation.inverse(arr)
        arr[..., 0] *= -1
        arr = self.preparation.forward(arr)
        return np.negative(arr, out=arr)

    def _inverse(self, arr: np.ndarray) -> np.ndarray:
        # Q^-1 = -S_chi A S0 A^-1
        arr = self.preparation.inverse(arr)
        arr[..., 0] *= -1
        arr = self.preparation.forward(arr)
        arr[..., self._mask] *= -1
        return np.negative(arr, out=arr)

    def as_unitary(self) -> Unitary:
        """``Q`` as an uncharged :class:`Unitary`; callers account for its cost."""
        return Unitary(self._forward, self._inverse, self.preparation.qubits, name="Q")

    def charge_iterations(self, count: int) -> None:
        self.ledger.charge(
            a_applications=count,
            a_inverse_applications=count,
            q_applications=count,
            oracle_evaluations=count * self.dim,
        )

    def prepare(self) -> StateVector:
        """Return ``A|0>``, charging one application of ``A``."""
        state = prepare_zero(self.n_qubits)
        self.preparation.apply(state)
        self.ledger.charge(a_applications=1)
        return state

    def good_probability(self, state: StateVector) -> float:
        return state.probability_of(self._mask)

    def initial_good_probability(self) -> float:
        """Exact ``p`` of ``A|0>``; free of charge (simulation-side only)."""
        zero = np.zeros(self.dim, dtype=np.complex128)
        zero[0] = 1.0
        amps = self.preparation.forward(zero[None, :])[0]
        return float(np.sum(np.abs(amps[self._mask]) ** 2))

    def is_good(self, index: int) -> bool:
        self.ledger.charge(oracle_evaluations=1)
        return bool(self._mask[index])

    def damped(self, factor: float) -> "GroverIterate":
        """Iterate whose good probability is ``factor * p``.

        An ancilla (the new top qubit) is rotated to ``sqrt(factor)|0> +
        sqrt(1 - factor)|1>`` and a state counts as good only with the
        ancilla in ``|0>``. One application of the damped preparation is
        charged as one application of ``A``; the ledger is shared.
        """
        if not 0.0 < factor <= 1.0:
            raise DomainError(f"damping factor must lie in (0, 1], got {factor}")
        if factor == 1.0:
            return self
        dim = self.dim
        cos, sin = math.sqrt(factor), math.sqrt(1.0 - factor)
        prep = self.preparation

        def forward(arr):
            pair = prep.forward(arr.reshape(arr.shape[:-1] + (2, dim)).reshape(-1, dim))
            pair = pair.reshape(arr.shape[:-1] + (2, dim))
            low, high = pair[..., 0, :].copy(), pair[..., 1, :].copy()
            pair[..., 0, :] = cos * low - sin * high
            pair[..., 1, :] = sin * low + cos * high
            return pair.reshape(arr.shape)

        def inverse(arr):
            pair = arr.reshape(arr.shape[:-1] + (2, dim)).copy()
            low, high = pair[..., 0, :].copy(), pair[..., 1, :].copy()
            pair[..., 0, :] = cos * low + sin * high
            pair[..., 1, :] = -sin * low + cos * high
            pair = prep.inverse(pair.reshape(-1, dim))
            return pair.reshape(arr.shape)

        mask = np.concatenate([self._mask, np.zeros(dim, dtype=bool)])
        return GroverIterate(
            Unitary(forward, inverse, range(self.n_qubits + 1), name=f"{prep.name}(x)damp"),
            GoodStatePredicate.from_mask(mask),
            self.ledger,
        )


def apply_grover_iterate(state: StateVector, iterate: GroverIterate, register=None) -> StateVector:
    """Apply ``Q = -A S0 A^-1 S_chi`` (``S_chi`` first) and charge the ledger."""
    reg = as_register(register if register is not None else iterate.preparation.qubits, state.n_qubits)
    if len(reg) != iterate.n_qubits:
        raise RegisterError(f"iterate spans {iterate.n_qubits} qubits, register has {len(reg)}")
    iterate.as_unitary().on(reg).apply(state)
    iterate.charge_iterations(1)
    return state


def iteration_schedule(assumed_p: float, strategy: str = "threshold") -> tuple[int, float]:
    """Grover iteration count and damping factor for a probe at ``assumed_p``.

    ``"table"``
        ``ceil(sqrt(1 / q))`` iterations, the iteration ladder of the
        binary-search segment table.
    ``"optimal"``
        ``floor((pi / 4) / asin(sqrt(q)))``, the count that maximizes success
        when the true probability equals ``q``.
    ``"threshold"``
        Fewest iterations ``m`` with ``pi / (4 (2m + 1)) <= asin(sqrt(t))``,
        ``t = min(q, 1/2)``, plus damping so that the success probability is
        exactly 1/2 at ``p = t`` and increases monotonically in ``p`` up to
        about ``4t``. Probes at ``q >= 1/2`` reduce to a plain measurement.
    """
    if not 0.0 < assumed_p <= 1.0:
        raise DomainError(f"assumed probability must lie in (0, 1], got {assumed_p}")
    if strategy == "table":
        return math.ceil(math.sqrt(1.0 / assumed_p) - 1e-9), 1.0
    if strategy == "optimal":
        return int(math.floor((math.pi / 4) / math.asin(math.sqrt(assumed_p)) + 1e-9)), 1.0
    if strategy == "threshold":
        target = min(assumed_p, 0.5)
        theta = math.asin(math.sqrt(target))
        m = max(0, math.ceil((math.pi / (4 * theta) - 1) / 2 - 1e-9))
        factor = math.sin(math.pi / (4 * (2 * m + 1))) ** 2 / target
        return m, 1.0 if factor > 1.0 - 1e-12 else factor
    raise ConfigurationError(f"unknown amplification strategy {strategy!r}; choose from {STRATEGIES}")


@dataclass(frozen=True)
class ProbeResult:
    found: bool
    outcome: int
    iterations: int


def amplify_assuming(
    iterate: GroverIterate,
    assumed_p: float,
    rng: np.random.Generator,
    strategy: str = "threshold",
) -> ProbeResult:
    """Amplify as if the good probability were ``assumed_p``, measure once.

    Prepares ``A|0>`` (damped when the strategy asks for it), applies the
    scheduled number of iterates, measures the whole register and checks the
    outcome with ``chi``. With ``m`` iterations the ledger gains ``m + 1``
    applications of ``A`` and ``m`` of ``A^-1``.
    """
    return amplify_repeated(iterate, assumed_p, rng, strategy, shots=1)[0]


def amplify_repeated(
    iterate: GroverIterate,
    assumed_p: float,
    rng: np.random.Generator,
    strategy: str = "threshold",
    shots: int = 1,
) -> list[ProbeResult]:
    """``shots`` independent runs of :func:`amplify_assuming`.

    Every run starts from a fresh ``A|0>`` and evolves identically, so the
    pre-measurement state is simulated once and sampled ``shots`` times. The
    ledger is charged for all runs.
    """
    m, factor = iteration_schedule(assumed_p, strategy)
    work = iterate.damped(factor)
    state = work.prepare()
    if m:
        q = work.as_unitary()
        for _ in range(m):
            q.apply(state)
    work.ledger.charge(a_applications=shots - 1)
    work.charge_iterations(m * shots)
    results = []
    for _ in range(shots):
        outcome = measure(state, rng=rng, collapse=False).basis_index
        work.ledger.charge(measurements=1)
        results.append(ProbeResult(work.is_good(outcome), outcome, m))
    return results
