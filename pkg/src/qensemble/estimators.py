"""Four estimators of the good-state probability of a Grover iterate.

``qsearch``
    Exponential search with a random iteration count per round; reports
    ``1 / j`` for the iteration count ``j`` that first hits a good state.
``est_amp``
    Phase estimation of ``Q`` with an ``M``-point Fourier register; reports
    ``sin^2(pi y / M)``.
``doubling_estimate``
    Probes assumed probabilities ``1, 1/2, 1/4, ...`` until a probe succeeds
    or the probe falls below ``epsilon``; returns a dyadic segment.
``binary_search_estimate``
    Bisects ``[0, 1]`` on probe outcomes and stops once the bisection point
    would need the same number of iterations as one of the borders.

All four return an :class:`EstimationResult` carrying the ledger delta of the
run and a per-round transcript.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import CapacityError, ConfigurationError
from .grover import STRATEGIES, GroverIterate, QueryCounts, amplify_repeated
from .statevector import (
    MAX_QUBITS,
    apply_controlled_powers,
    apply_inverse_qft,
    apply_qft,
    measure,
    prepare_zero,
)

ESTIMATORS = ("qsearch", "est_amp", "doubling", "binary_search")
STOP_RULES = ("midpoint", "endpoints")
BINARY_SEARCH_FLOOR = 0.01
# the "endpoints" rule never fires on a bracket straddling a ladder border
BINARY_SEARCH_MIN_WIDTH = 2.0**-12

# Segments the binary search can return for p >= 1/64 (table row with
# inverted endpoints corrected to [0.0234375, 0.03125)).
TABLE2_LADDER = (
    (0.5, 1.0),
    (0.25, 0.5),
    (0.125, 0.25),
    (0.0625, 0.125),
    (0.046875, 0.0625),
    (0.03125, 0.046875),
    (0.0234375, 0.03125),
    (0.015625, 0.0234375),
)


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    closed: bool = False  # whether ``high`` itself is included

    def __post_init__(self):
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise ValueError(f"invalid probability interval [{self.low}, {self.high}]")

    def __contains__(self, p: float) -> bool:
        return self.low <= p < self.high or (self.closed and p == self.high)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.low + self.high)

    def as_tuple(self) -> tuple[float, float]:
        return (self.low, self.high)

    def __str__(self) -> str:
        return f"[{self.low:g}, {self.high:g}{']' if self.closed else ')'}"


@dataclass(frozen=True)
class Round:
    index: int
    assumed: float  # assumed probability, or M for est_amp, or M for a qsearch round
    iterations: int
    outcomes: tuple[int, ...]
    good: bool | None


@dataclass(frozen=True)
class EstimationResult:
    method: str
    point_estimate: float
    interval: Interval
    queries: QueryCounts
    transcript: tuple[Round, ...] = ()
    floor_hit: bool = False
    segment: bool = True  # False when point_estimate is a genuine point estimate

    @property
    def amplitude_estimate(self) -> float:
        return math.sqrt(self.point_estimate)

    @property
    def decision_value(self) -> float:
        """Scalar used for thresholding: the midpoint for segment estimators."""
        return self.interval.midpoint if self.segment else self.point_estimate

    def count_estimate(self, population: int) -> int:
        """Rounded number of good elements in a population of that size."""
        return int(round(self.point_estimate * population))

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "point_estimate": self.point_estimate,
            "amplitude_estimate": self.amplitude_estimate,
            "interval": [self.interval.low, self.interval.high],
            "interval_closed": self.interval.closed,
            "floor_hit": self.floor_hit,
            "queries": self.queries.as_dict(),
            "rounds": [
                {**asdict(r), "outcomes": list(r.outcomes)} for r in self.transcript
            ],
        }


@dataclass
class EstimatorConfig:
    """Parameters shared by the estimators.

    ``trials_per_check`` probes are majority-voted per check; ``strategy``
    selects the iteration schedule of each probe (see
    :func:`qensemble.grover.iteration_schedule`). ``max_rounds=None`` lets
    QSearch stop once ``ceil(c**l)`` exceeds ``1 / sqrt(epsilon)``.
    ``qsearch_zero_start`` draws QSearch iteration counts from ``[0, M)``
    instead of ``[1, M]``; a zero-iteration success then reports 1.
    """

    qsearch_growth_c: float = 1.2
    epsilon: float = 1e-4
    est_amp_M: int = 16
    max_rounds: int | None = None
    trials_per_check: int = 15
    strategy: str = "threshold"
    stop_rule: str = "midpoint"
    qsearch_zero_start: bool = False

    def __post_init__(self):
        if not 1.0 < self.qsearch_growth_c < 2.0:
            raise ConfigurationError(f"growth factor c must lie in (1, 2), got {self.qsearch_growth_c}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        M = self.est_amp_M
        if M < 2 or M & (M - 1):
            raise ConfigurationError(f"M must be a power of two >= 2, got {M}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ConfigurationError("max_rounds must be positive")
        if self.trials_per_check < 1:
            raise ConfigurationError("trials_per_check must be positive")
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"strategy must be one of {STRATEGIES}")
        if self.stop_rule not in STOP_RULES:
            raise ConfigurationError(f"stop_rule must be one of {STOP_RULES}")

    def resolved_max_rounds(self) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        horizon = 1.0 / math.sqrt(self.epsilon)
        return math.ceil(math.log(horizon) / math.log(self.qsearch_growth_c)) + 1


def _probe(iterate: GroverIterate, q: float, rng, config: EstimatorConfig, index: int) -> Round:
    runs = amplify_repeated(iterate, q, rng, config.strategy, config.trials_per_check)
    hits = sum(r.found for r in runs)
    return Round(index, q, runs[0].iterations, tuple(r.outcome for r in runs), 2 * hits > len(runs))


def qsearch(iterate: GroverIterate, config: EstimatorConfig | None = None, rng=None) -> EstimationResult:
    """Exponential search; returns ``1 / j`` for the succeeding iteration count ``j``.

    A success on the initial, un-amplified measurement reports 1 with the
    interval ``[1/2, 1]``. Exhausting the rounds reports 0 on ``[0, epsilon)``.
    """
    config = config or EstimatorConfig()
    rng = np.random.default_rng(rng)
    before = iterate.ledger.snapshot()
    transcript = []

    def finish(point, interval, floor=False):
        return EstimationResult(
            "qsearch", point, interval, iterate.ledger.snapshot() - before,
            tuple(transcript), floor_hit=floor, segment=False,
        )

    state = iterate.prepare()
    outcome = measure(state, rng=rng).basis_index
    iterate.ledger.charge(measurements=1)
    good = iterate.is_good(outcome)
    transcript.append(Round(0, 1.0, 0, (outcome,), good))
    if good:
        return finish(1.0, Interval(0.5, 1.0, closed=True))

    q = iterate.as_unitary()
    c = config.qsearch_growth_c
    for level in range(1, config.resolved_max_rounds() + 1):
        M = math.ceil(c**level)
        j = int(rng.integers(0, M)) if config.qsearch_zero_start else int(rng.integers(1, M + 1))
        state = iterate.prepare()
        for _ in range(j):
            q.apply(state)
        if j:
            iterate.charge_iterations(j)
        outcome = measure(state, rng=rng).basis_index
        iterate.ledger.charge(measurements=1)
        good = iterate.is_good(outcome)
        transcript.append(Round(level, float(M), j, (outcome,), good))
        if good:
            return finish(1.0 / max(j, 1), Interval(0.0, 1.0, closed=True))
    return finish(0.0, Interval(0.0, config.epsilon), floor=True)


def est_amp_band(estimate: float, M: int, k: int = 1) -> float:
    """Half-width ``2 pi k sqrt(a (1 - a)) / M + k^2 pi^2 / M^2`` of the error band."""
    return 2 * math.pi * k * math.sqrt(estimate * (1 - estimate)) / M + (k * math.pi / M) ** 2


def est_amp(iterate: GroverIterate, M: int = 16, rng=None) -> EstimationResult:
    """Amplitude estimation through phase estimation of ``Q``.

    The target register holds ``A|0>``; an ``M``-point control register is
    Fourier transformed, drives ``Q**j``, is inverse transformed and measured
    as ``y``. The ledger is charged ``M - 1`` iterates (the largest control
    power) plus the initial preparation.
    """
    if M < 2 or M & (M - 1):
        raise ConfigurationError(f"M must be a power of two >= 2, got {M}")
    rng = np.random.default_rng(rng)
    m = M.bit_length() - 1
    n = iterate.n_qubits
    if n + m > MAX_QUBITS:
        raise CapacityError(f"{n} target + {m} control qubits exceeds {MAX_QUBITS}")
    before = iterate.ledger.snapshot()

    control = range(n, n + m)
    state = prepare_zero(n + m)
    iterate.preparation.apply(state)
    iterate.ledger.charge(a_applications=1)
    apply_qft(state, control)
    apply_controlled_powers(state, control, iterate.as_unitary())
    iterate.charge_iterations(M - 1)
    apply_inverse_qft(state, control)
    y = measure(state, control, rng=rng).basis_index
    iterate.ledger.charge(measurements=1)

    estimate = math.sin(math.pi * y / M) ** 2
    band = est_amp_band(estimate, M)
    interval = Interval(max(0.0, estimate - band), min(1.0, estimate + band), closed=True)
    return EstimationResult(
        "est_amp", estimate, interval, iterate.ledger.snapshot() - before,
        (Round(0, float(M), M - 1, (y,), None),), segment=False,
    )


def doubling_estimate(
    iterate: GroverIterate,
    config: EstimatorConfig | None = None,
    rng=None,
    early_exit_at: float | None = None,
) -> EstimationResult:
    """Probe ``q = 2**-j`` for ``j = 0, 1, ...`` until a probe succeeds.

    Success at ``j`` returns ``q`` on ``[q, 2q)``, with ``j <= 1`` mapped to
    ``[1/2, 1]``. Once ``q < epsilon`` the run stops on ``[0, q)`` with a
    floor hit. With ``early_exit_at=t`` the run also stops as soon as a failed
    probe at ``q <= t`` puts the whole remaining range below ``t``.
    """
    config = config or EstimatorConfig()
    rng = np.random.default_rng(rng)
    before = iterate.ledger.snapshot()
    transcript = []
    j = 0
    while True:
        q = 2.0**-j
        rnd = _probe(iterate, q, rng, config, j)
        transcript.append(rnd)
        if rnd.good:
            interval = Interval(0.5, 1.0, closed=True) if j <= 1 else Interval(q, 2 * q)
            return EstimationResult("doubling", q, interval, iterate.ledger.snapshot() - before, tuple(transcript))
        floor = q < config.epsilon
        if floor or (early_exit_at is not None and q <= early_exit_at):
            return EstimationResult(
                "doubling", 0.0, Interval(0.0, q), iterate.ledger.snapshot() - before,
                tuple(transcript), floor_hit=floor,
            )
        j += 1


def iteration_ladder(p: float) -> int:
    """``ceil(sqrt(1 / p))``: iterations a probe at ``p`` takes on the segment table."""
    return math.ceil(math.sqrt(1.0 / p) - 1e-9)


def _should_stop(left: float, right: float, rule: str) -> bool:
    if left <= 0.0:
        return False
    if rule == "endpoints":
        return iteration_ladder(left) == iteration_ladder(right)
    mid = iteration_ladder(0.5 * (left + right))
    return mid in (iteration_ladder(left), iteration_ladder(right))


def binary_search_estimate(
    iterate: GroverIterate,
    rng=None,
    config: EstimatorConfig | None = None,
    early_exit_at: float | None = None,
) -> EstimationResult:
    """Bisect ``[0, 1]`` on probe outcomes.

    The first probe at 1/2 either returns ``[1/2, 1]`` or fixes
    ``right = 1/2``. Afterwards a success moves ``left`` up and a failure
    moves ``right`` down. The default ``"midpoint"`` rule stops when the
    bisection point needs the same iteration count as a border; the
    ``"endpoints"`` rule stops when both borders need the same count, or
    once the bracket is narrower than ``2**-12``. Runs with ``left = 0`` stop
    once ``right < 0.01`` and report a floor hit.
    """
    config = config or EstimatorConfig()
    rng = np.random.default_rng(rng)
    before = iterate.ledger.snapshot()
    transcript = [_probe(iterate, 0.5, rng, config, 0)]

    def finish(interval, point, floor=False):
        return EstimationResult(
            "binary_search", point, interval, iterate.ledger.snapshot() - before,
            tuple(transcript), floor_hit=floor,
        )

    if transcript[0].good:
        return finish(Interval(0.5, 1.0, closed=True), 0.75)

    left, right = 0.0, 0.5
    while True:
        if early_exit_at is not None and (left >= early_exit_at or right <= early_exit_at):
            break
        if _should_stop(left, right, config.stop_rule) or right < BINARY_SEARCH_FLOOR:
            break
        if right - left < BINARY_SEARCH_MIN_WIDTH:
            break
        q = 0.5 * (left + right)
        rnd = _probe(iterate, q, rng, config, len(transcript))
        transcript.append(rnd)
        if rnd.good:
            left = q
        else:
            right = q
    floor = left == 0.0 and right < BINARY_SEARCH_FLOOR
    return finish(Interval(left, right), 0.5 * (left + right) if left > 0 else 0.0, floor)


def estimate(name: str, iterate: GroverIterate, config: EstimatorConfig | None = None, rng=None, **kwargs) -> EstimationResult:
    """Dispatch to an estimator by name (``-`` and ``_`` are interchangeable)."""
    config = config or EstimatorConfig()
    key = name.replace("-", "_")
    if key == "qsearch":
        return qsearch(iterate, config, rng)
    if key == "est_amp":
        return est_amp(iterate, config.est_amp_M, rng)
    if key == "doubling":
        return doubling_estimate(iterate, config, rng, **kwargs)
    if key == "binary_search":
        return binary_search_estimate(iterate, rng, config, **kwargs)
    raise ConfigurationError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
