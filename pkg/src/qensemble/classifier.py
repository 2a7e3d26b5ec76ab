"""scikit-learn compatible front end for bagged stumps with quantum prediction."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .ensemble import (
    CLASS_1,
    CLASS_2,
    EnsembleModel,
    PredictionReport,
    classical_predict,
    probabilistic_predict,
    quantum_predict,
    train_stumps,
)
from .estimators import ESTIMATORS, EstimatorConfig
from .exceptions import ConfigurationError, TrainingError

METHODS = ("quantum", "classical", "probabilistic")


class QuantumVotingClassifier(ClassifierMixin, BaseEstimator):
    """Bagged decision stumps whose vote is read out by amplitude estimation.

    Parameters
    ----------
    n_stumps : int
        Ensemble size ``N``.
    method : {"quantum", "classical", "probabilistic"}
        Prediction rule used by :meth:`predict`.
    estimator : str
        Amplitude estimator for ``method="quantum"``.
    trials_per_check, epsilon, growth_c, est_amp_M, strategy :
        Forwarded to :class:`~qensemble.estimators.EstimatorConfig`.
    random_state : int or None
        Seeds both bootstrap sampling and prediction randomness.

    Labels must be two distinct values; the smaller one plays the role of
    class 1 (the good state).
    """

    def __init__(
        self,
        n_stumps: int = 16,
        method: str = "quantum",
        estimator: str = "binary_search",
        trials_per_check: int = 15,
        epsilon: float = 1e-4,
        growth_c: float = 1.2,
        est_amp_M: int = 16,
        strategy: str = "threshold",
        random_state=None,
    ):
        self.n_stumps = n_stumps
        self.method = method
        self.estimator = estimator
        self.trials_per_check = trials_per_check
        self.epsilon = epsilon
        self.growth_c = growth_c
        self.est_amp_M = est_amp_M
        self.strategy = strategy
        self.random_state = random_state

    def _config(self) -> EstimatorConfig:
        return EstimatorConfig(
            qsearch_growth_c=self.growth_c,
            epsilon=self.epsilon,
            est_amp_M=self.est_amp_M,
            trials_per_check=self.trials_per_check,
            strategy=self.strategy,
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}")
        if self.estimator.replace("-", "_") not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")
        self._config()
        classes = np.unique(y)
        if len(classes) != 2:
            raise TrainingError(f"expected exactly two classes, got {len(classes)}")
        self.classes_ = classes
        self.n_features_in_ = X.shape[1]
        seq = np.random.SeedSequence(self.random_state)
        train_seed, self._predict_seed = seq.spawn(2)
        self.model_: EnsembleModel = train_stumps(
            X, y, self.n_stumps, np.random.default_rng(train_seed), class_labels=tuple(classes)
        )
        return self

    def _checked(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Exact soft mean ``(1/N) sum p_i`` per row, as ``[P(class 1), P(class 2)]``."""
        X = self._checked(X)
        p1 = np.array([self.model_.soft_mean(x) for x in X])
        return np.column_stack([p1, 1.0 - p1])

    def predict_reports(self, X) -> list[PredictionReport]:
        X = self._checked(X)
        rng = np.random.default_rng(self._predict_seed)
        if self.method == "classical":
            return [classical_predict(self.model_, x) for x in X]
        if self.method == "probabilistic":
            return [probabilistic_predict(self.model_, x, rng) for x in X]
        config = self._config()
        return [quantum_predict(self.model_, x, self.estimator, config, rng) for x in X]

    def predict(self, X) -> np.ndarray:
        return np.array([r.answer for r in self.predict_reports(X)])


__all__ = ["QuantumVotingClassifier", "METHODS", "CLASS_1", "CLASS_2"]
