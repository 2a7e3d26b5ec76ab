"""Ensembles of binary classifiers and three ways to predict with them.

* :func:`classical_predict` evaluates all ``N`` classifiers and takes a hard
  majority vote (ties go to class 1).
* :func:`probabilistic_predict` evaluates one classifier chosen uniformly.
* :func:`quantum_predict` encodes all ``N`` class probabilities in one
  state, ``(1/sqrt N) sum_i |i> (g_i|0> + b_i|1>)`` with ``g_i^2 = p_i``,
  and decides from an amplitude estimate of the class-1 subspace.

Measuring the class qubit of that state yields class 1 with probability
``(1/N) sum_i p_i``; this is the quantity every quantum estimator targets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .estimators import EstimationResult, EstimatorConfig, Interval, estimate
from .exceptions import CapacityError, ConfigurationError, DomainError, TrainingError
from .grover import GoodStatePredicate, GroverIterate, QueryCounts, QueryLedger
from .oracles import householder_preparation
from .statevector import MAX_QUBITS, Unitary

CLASS_1, CLASS_2 = 1, 2
DECISION_THRESHOLD = 0.5


class Classifier:
    """A model returning the probability that an input belongs to class 1."""

    cost: float = 1.0

    def proba(self, x) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class FixedProbability(Classifier):
    """Classifier that ignores its input; used for raw ``p_i`` vectors."""

    p: float
    cost: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"probability must lie in [0, 1], got {self.p}")

    def proba(self, x) -> float:
        return self.p

    def to_dict(self) -> dict:
        return {"type": "fixed", "p": self.p}


@dataclass(frozen=True)
class DecisionStump(Classifier):
    """One-feature threshold rule with a class-1 frequency per leaf."""

    feature: int
    threshold: float
    left_p: float
    right_p: float
    cost: float = 1.0

    def proba(self, x) -> float:
        return self.left_p if x[self.feature] <= self.threshold else self.right_p

    def to_dict(self) -> dict:
        return {
            "type": "stump",
            "feature": self.feature,
            "threshold": self.threshold,
            "left_p": self.left_p,
            "right_p": self.right_p,
        }


@dataclass(frozen=True)
class EnsembleModel:
    classifiers: tuple[Classifier, ...]
    class_labels: tuple = (CLASS_1, CLASS_2)

    def __post_init__(self):
        if len(self.classifiers) == 0:
            raise ConfigurationError("an ensemble needs at least one classifier")
        object.__setattr__(self, "classifiers", tuple(self.classifiers))

    @classmethod
    def from_probabilities(cls, probabilities: Sequence[float]) -> "EnsembleModel":
        return cls(tuple(FixedProbability(float(p)) for p in probabilities))

    def __len__(self) -> int:
        return len(self.classifiers)

    @property
    def total_cost(self) -> float:
        return float(sum(c.cost for c in self.classifiers))

    def probabilities(self, x=None) -> np.ndarray:
        ps = np.array([c.proba(x) for c in self.classifiers], dtype=float)
        if np.any((ps < 0) | (ps > 1)):
            raise DomainError("classifier returned a probability outside [0, 1]")
        return ps

    def soft_mean(self, x=None) -> float:
        return float(self.probabilities(x).mean())


@dataclass
class PredictionReport:
    answer: object
    p_estimate: float
    method: str
    threshold_passed: bool
    classical_equivalent_cost: float
    interval: Interval | None = None
    queries: QueryCounts | None = None
    construction_evaluations: int = 0
    low_confidence: bool = False
    details: dict = field(default_factory=dict)

    @property
    def a_applications(self) -> int:
        return 0 if self.queries is None else self.queries.a_applications

    def as_dict(self) -> dict:
        return {
            "answer": self.answer,
            "p_estimate": self.p_estimate,
            "method": self.method,
            "threshold_passed": self.threshold_passed,
            "interval": None if self.interval is None else [self.interval.low, self.interval.high],
            "queries": None if self.queries is None else self.queries.as_dict(),
            "classical_equivalent_cost": self.classical_equivalent_cost,
            "construction_evaluations": self.construction_evaluations,
            "low_confidence": self.low_confidence,
            "details": self.details,
        }


def _decide(model: EnsembleModel, value: float):
    passed = value >= DECISION_THRESHOLD
    return (model.class_labels[0] if passed else model.class_labels[1]), passed


def classical_predict(model: EnsembleModel, x=None) -> PredictionReport:
    """Hard majority vote over all classifiers; ``k1 >= k2`` gives class 1."""
    ps = model.probabilities(x)
    k1 = int(np.count_nonzero(ps >= DECISION_THRESHOLD))
    k2 = len(ps) - k1
    answer = model.class_labels[0] if k1 >= k2 else model.class_labels[1]
    return PredictionReport(
        answer=answer,
        p_estimate=k1 / len(ps),
        method="classical",
        threshold_passed=k1 >= k2,
        classical_equivalent_cost=model.total_cost,
        details={"k1": k1, "k2": k2, "evaluations": len(ps)},
    )


def probabilistic_predict(model: EnsembleModel, x=None, rng=None) -> PredictionReport:
    """Evaluate a single uniformly chosen classifier and threshold its output."""
    rng = np.random.default_rng(rng)
    i = int(rng.integers(len(model)))
    clf = model.classifiers[i]
    p_i = float(clf.proba(x))
    answer, passed = _decide(model, p_i)
    return PredictionReport(
        answer=answer,
        p_estimate=p_i,
        method="probabilistic",
        threshold_passed=passed,
        classical_equivalent_cost=model.total_cost,
        details={"chosen": i, "cost": clf.cost},
    )


def index_qubits(n_classifiers: int) -> int:
    return max(0, math.ceil(math.log2(n_classifiers))) if n_classifiers > 1 else 0


def build_ensemble_oracle(model: EnsembleModel, x=None, pad: bool = True) -> tuple[Unitary, GoodStatePredicate]:
    """Preparation ``A`` and predicate ``chi`` for the ensemble's summary state.

    Qubit 0 is the class qubit (``|0>`` is class 1, the good state); qubits
    ``1..m`` index the classifiers. ``A`` prepares a uniform superposition
    over the first ``N`` indices and then rotates the class qubit of index
    ``i`` to ``sqrt(p_i)|0> + sqrt(1 - p_i)|1>``. Padding indices beyond
    ``N`` carry zero amplitude, so the good probability is exactly the mean
    of the ``p_i``. Every classifier is evaluated once here.
    """
    ps = model.probabilities(x)
    n = len(ps)
    m = index_qubits(n)
    if n != 1 << m and not pad:
        raise ConfigurationError(f"{n} classifiers is not a power of two and padding is disabled")
    if m + 1 > MAX_QUBITS:
        raise CapacityError(f"{n} classifiers need {m + 1} qubits, more than {MAX_QUBITS}")
    slots = 1 << m
    g = np.ones(slots)
    b = np.zeros(slots)
    g[:n] = np.sqrt(ps)
    b[:n] = np.sqrt(1.0 - ps)
    dim = 2 * slots

    if m:
        psi = np.zeros(slots)
        psi[:n] = 1.0 / math.sqrt(n)
        index_prep = householder_preparation(psi)
    else:
        index_prep = None

    def forward(arr):
        pairs = arr.reshape(arr.shape[:-1] + (slots, 2))
        if index_prep is not None:
            pairs = np.swapaxes(index_prep.forward(np.swapaxes(pairs, -1, -2).copy()), -1, -2)
        zero, one = pairs[..., 0].copy(), pairs[..., 1].copy()
        out = np.empty_like(pairs)
        out[..., 0] = g * zero - b * one
        out[..., 1] = b * zero + g * one
        return out.reshape(arr.shape)

    def inverse(arr):
        pairs = arr.reshape(arr.shape[:-1] + (slots, 2))
        zero, one = pairs[..., 0].copy(), pairs[..., 1].copy()
        out = np.empty_like(pairs)
        out[..., 0] = g * zero + b * one
        out[..., 1] = -b * zero + g * one
        if index_prep is not None:
            out = np.swapaxes(index_prep.inverse(np.swapaxes(out, -1, -2).copy()), -1, -2)
        return np.ascontiguousarray(out).reshape(arr.shape)

    mask = (np.arange(dim) & 1) == 0
    return Unitary(forward, inverse, range(m + 1), name=f"ensemble{n}"), GoodStatePredicate.from_mask(mask)


def quantum_predict(
    model: EnsembleModel,
    x=None,
    estimator: str = "binary_search",
    config: EstimatorConfig | None = None,
    rng=None,
    ledger: QueryLedger | None = None,
) -> PredictionReport:
    """Decide the class from an amplitude estimate of the class-1 subspace.

    The segment estimators stop as soon as their bracket lies on one side of
    1/2; for the binary search this is always after the first probe.
    """
    config = config or EstimatorConfig()
    prep, chi = build_ensemble_oracle(model, x)
    iterate = GroverIterate(prep, chi, ledger)
    key = estimator.replace("-", "_")
    kwargs = {"early_exit_at": DECISION_THRESHOLD} if key in ("doubling", "binary_search") else {}
    result: EstimationResult = estimate(key, iterate, config, rng, **kwargs)
    value = result.decision_value
    answer, passed = _decide(model, value)
    low = result.interval.low < DECISION_THRESHOLD < result.interval.high
    return PredictionReport(
        answer=answer,
        p_estimate=value,
        method=f"quantum-{key}",
        threshold_passed=passed,
        classical_equivalent_cost=model.total_cost,
        interval=result.interval,
        queries=result.queries,
        construction_evaluations=len(model),
        low_confidence=low or result.floor_hit,
        details={"estimate": result.point_estimate, "rounds": len(result.transcript)},
    )


def _gini(pos, size):
    size = np.maximum(size, 1)
    frac = pos / size
    return size * 2 * frac * (1 - frac)


def fit_stump(X: np.ndarray, positive: np.ndarray) -> DecisionStump:
    """Single-feature split with the lowest weighted Gini impurity.

    ``positive`` flags class-1 rows. Leaves report the class-1 frequency of
    the rows they receive. Without any impurity-reducing split the stump is
    constant (threshold ``inf``) and reports the overall frequency.
    """
    n, d = X.shape
    total_pos = int(positive.sum())
    best = (float(_gini(total_pos, n)) - 1e-12, 0, math.inf)
    sizes = np.arange(1, n)
    for feature in range(d):
        order = np.argsort(X[:, feature], kind="stable")
        vals = X[order, feature]
        pos_left = np.cumsum(positive[order])[:-1]
        impurity = _gini(pos_left, sizes) + _gini(total_pos - pos_left, n - sizes)
        impurity = np.where(vals[1:] > vals[:-1], impurity, np.inf)
        if impurity.size == 0:
            continue
        i = int(np.argmin(impurity))
        if impurity[i] < best[0]:
            best = (float(impurity[i]), feature, 0.5 * (vals[i] + vals[i + 1]))
    _, feature, threshold = best
    left = X[:, feature] <= threshold
    overall = total_pos / n
    left_p = float(positive[left].mean()) if left.any() else overall
    right_p = float(positive[~left].mean()) if (~left).any() else overall
    return DecisionStump(feature, float(threshold), left_p, right_p)


def train_stumps(
    X,
    y,
    n_stumps: int,
    rng=None,
    class_labels: tuple = (CLASS_1, CLASS_2),
    bootstrap: bool = True,
) -> EnsembleModel:
    """Bagged decision stumps: one stump per bootstrap resample of the rows."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y) or len(X) == 0:
        raise TrainingError("X must be a non-empty 2-d array with one label per row")
    if n_stumps < 1:
        raise TrainingError("n_stumps must be positive")
    present = set(np.unique(y).tolist())
    if not present <= set(class_labels):
        raise TrainingError(f"labels {sorted(present)} are not within {class_labels}")
    if len(present) < 2:
        raise TrainingError("training data contains a single class")
    rng = np.random.default_rng(rng)
    positive = y == class_labels[0]
    stumps = []
    for _ in range(n_stumps):
        idx = rng.integers(0, len(X), len(X)) if bootstrap else np.arange(len(X))
        stumps.append(fit_stump(X[idx], positive[idx]))
    return EnsembleModel(tuple(stumps), tuple(class_labels))
