"""Simulated amplitude amplification and estimation for ensemble voting."""

__version__ = "0.1.0"

from .classifier import QuantumVotingClassifier
from .ensemble import (
    DecisionStump,
    EnsembleModel,
    FixedProbability,
    PredictionReport,
    build_ensemble_oracle,
    classical_predict,
    probabilistic_predict,
    quantum_predict,
    train_stumps,
)
from .estimators import (
    EstimationResult,
    EstimatorConfig,
    Interval,
    binary_search_estimate,
    doubling_estimate,
    est_amp,
    estimate,
    qsearch,
)
from .exceptions import (
    CapacityError,
    ConfigurationError,
    DomainError,
    IngestionError,
    NumericError,
    QEnsembleError,
    RegisterError,
    TrainingError,
)
from .grover import (
    GoodStatePredicate,
    GroverIterate,
    QueryCounts,
    QueryLedger,
    amplify_assuming,
    apply_grover_iterate,
    apply_sign_flip_good,
    apply_sign_flip_zero,
)
from .oracles import householder_preparation, synthetic_iterate, uniform_preparation
from .statevector import (
    MeasurementOutcome,
    StateVector,
    Unitary,
    apply_controlled_powers,
    apply_inverse_qft,
    apply_qft,
    measure,
    prepare_zero,
)

import types as _types

__all__ = sorted(
    name for name, value in globals().items()
    if not name.startswith("_") and not isinstance(value, _types.ModuleType)
)
