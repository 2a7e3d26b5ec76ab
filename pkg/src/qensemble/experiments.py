"""Reproducible estimator sweeps and predictor comparisons.

Randomness
----------
Every run draws from ``numpy.random.default_rng(SeedSequence([seed, i, rep]))``
where ``i`` is the grid (or input-row) index and ``rep`` the repetition, so
runs are independent of each other and of the order they execute in. In a
comparison, that sequence is split into one stream for the probabilistic
predictor and one for the quantum predictor. Stumps trained by the harness
use ``SeedSequence([seed])``.

Reports
-------
A report is ``{"version", "kind", "config", "runs", "aggregates"}``. Run
records are flat dicts (CSV export writes them verbatim) and aggregates are
a pure function of the runs, which :meth:`Report.check` verifies.
"""
from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import (
    DECISION_THRESHOLD,
    DecisionStump,
    EnsembleModel,
    classical_predict,
    probabilistic_predict,
    quantum_predict,
    train_stumps,
)
from .estimators import ESTIMATORS, EstimatorConfig, estimate
from .exceptions import ConfigurationError, IngestionError
from .io import ingest_dataset, load_model
from .oracles import synthetic_iterate

KINDS = ("sweep", "compare")
AGREEMENT_MARGIN = 0.05
DYADIC_GRID = tuple(2.0**-k for k in range(1, 11))


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's run records."""

    kind: str = "sweep"
    seed: int = 0
    estimator: str = "binary_search"
    c: float = 1.2
    epsilon: float = 1e-4
    M: int = 16
    max_rounds: int | None = None
    trials_per_check: int = 15
    strategy: str = "threshold"
    stop_rule: str = "midpoint"
    qubits: int = 1
    grid: tuple[float, ...] = DYADIC_GRID
    reps: int = 1
    model: str | None = None
    probabilities: tuple[float, ...] | None = None
    dataset: str | None = None
    n_stumps: int = 16
    rows: tuple[int, ...] | None = None

    def __post_init__(self):
        self.estimator = self.estimator.replace("-", "_")
        self.grid = tuple(float(p) for p in self.grid)
        if self.probabilities is not None:
            self.probabilities = tuple(float(p) for p in self.probabilities)
        if self.rows is not None:
            self.rows = tuple(int(r) for r in self.rows)
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if self.reps < 1:
            raise ConfigurationError("reps must be positive")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")
        if self.n_stumps < 1:
            raise ConfigurationError("n_stumps must be positive")
        if self.kind == "sweep":
            if not self.grid:
                raise ConfigurationError("sweep grid is empty")
            bad = [p for p in self.grid if not 0.0 <= p <= 1.0]
            if bad:
                raise ConfigurationError(f"grid values outside [0, 1]: {bad}")
        self.estimator_config()

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            qsearch_growth_c=self.c,
            epsilon=self.epsilon,
            est_amp_M=self.M,
            max_rounds=self.max_rounds,
            trials_per_check=self.trials_per_check,
            strategy=self.strategy,
            stop_rule=self.stop_rule,
        )

    def as_dict(self) -> dict:
        doc = asdict(self)
        for key in ("grid", "probabilities", "rows"):
            if doc[key] is not None:
                doc[key] = list(doc[key])
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        return cls(**doc)


def run_rng(seed: int, index: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index, rep]))


@dataclass
class Report:
    kind: str
    config: dict
    runs: list[dict]
    aggregates: dict = field(default_factory=dict)
    version: str = __version__

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = aggregate(self.kind, self.runs)

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "kind": self.kind,
            "config": self.config,
            "runs": self.runs,
            "aggregates": self.aggregates,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def runs_json(self) -> str:
        """Canonical serialization of the run records alone."""
        return json.dumps(self.runs, sort_keys=True)

    def to_csv(self) -> str:
        return runs_to_csv(self.runs)

    def check(self) -> None:
        """Raise unless the stored aggregates equal those recomputed from runs."""
        expected = _roundtrip(aggregate(self.kind, self.runs))
        if _roundtrip(self.aggregates) != expected:
            diff = sorted(
                k for k in set(expected) | set(self.aggregates)
                if _roundtrip(self.aggregates.get(k)) != expected.get(k)
            )
            raise IngestionError(f"report aggregates disagree with run records: {diff}")

    def write(self, path, fmt: str = "json") -> None:
        text = self.to_json() if fmt == "json" else self.to_csv()
        Path(path).write_text(text)

    @classmethod
    def from_dict(cls, doc: dict, source: str = "<report>") -> "Report":
        missing = [k for k in ("version", "kind", "config", "runs", "aggregates") if k not in doc]
        if missing:
            raise IngestionError(f"{source}: report is missing {missing}")
        if doc["kind"] not in KINDS:
            raise IngestionError(f"{source}: unknown report kind {doc['kind']!r}")
        report = cls(doc["kind"], doc["config"], list(doc["runs"]), dict(doc["aggregates"]), doc["version"])
        report.check()
        return report

    @classmethod
    def load(cls, path) -> "Report":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise IngestionError(f"{path}: cannot read ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(doc, dict):
            raise IngestionError(f"{path}: report must be a JSON object")
        return cls.from_dict(doc, str(path))


def _roundtrip(obj):
    return json.loads(json.dumps(obj, sort_keys=True))


def runs_to_csv(runs: list[dict]) -> str:
    columns = sorted({k for r in runs for k in r})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in runs:
        writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    return buf.getvalue()


# --- aggregation -------------------------------------------------------------


def _stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "p50": float(np.percentile(arr, 50)),
        "p90": float(np.percentile(arr, 90)),
        "max": float(arr.max()),
    }


def _rate(flags) -> float:
    flags = list(flags)
    return sum(bool(f) for f in flags) / len(flags) if flags else 0.0


def aggregate(kind: str, runs: list[dict]) -> dict:
    if kind == "sweep":
        return aggregate_sweep(runs)
    if kind == "compare":
        return aggregate_comparison(runs)
    raise ConfigurationError(f"unknown report kind {kind!r}")


def aggregate_sweep(runs: list[dict]) -> dict:
    """Per-``p`` query statistics, interval coverage and segment histograms."""
    by_p: dict[float, list[dict]] = {}
    for r in runs:
        by_p.setdefault(r["p"], []).append(r)
    per_p = []
    for p in sorted(by_p, reverse=True):
        group = by_p[p]
        segments = Counter(r["segment"] for r in group)
        # most frequent first, ties broken by label for determinism
        ranked = sorted(segments.items(), key=lambda kv: (-kv[1], kv[0]))
        per_p.append({
            "p": p,
            "runs": len(group),
            "a_applications": _stats([r["a_applications"] for r in group]),
            "q_applications": _stats([r["q_applications"] for r in group]),
            "coverage": _rate(r["covers_p"] for r in group),
            "floor_rate": _rate(r["floor_hit"] for r in group),
            "segment_counts": dict(ranked),
            "modal_segment": ranked[0][0],
            "modal_fraction": ranked[0][1] / len(group),
        })
    return {"runs": len(runs), "per_p": per_p}


def aggregate_comparison(runs: list[dict]) -> dict:
    """Agreement rates and the quantum-to-classical cost ratio."""
    if not runs:
        return {"runs": 0}
    margin = [r for r in runs if abs(r["soft_mean"] - DECISION_THRESHOLD) >= AGREEMENT_MARGIN]
    labelled = [r for r in runs if r.get("label") is not None]
    out = {
        "runs": len(runs),
        "agreement_quantum_classical": _rate(r["quantum_answer"] == r["classical_answer"] for r in runs),
        "agreement_probabilistic_classical": _rate(
            r["probabilistic_answer"] == r["classical_answer"] for r in runs
        ),
        "margin": AGREEMENT_MARGIN,
        "margin_runs": len(margin),
        "agreement_quantum_classical_at_margin": _rate(
            r["quantum_answer"] == r["classical_answer"] for r in margin
        ),
        "quantum_a_applications": _stats([r["quantum_a_applications"] for r in runs]),
        "classical_evaluations": _stats([r["classical_evaluations"] for r in runs]),
        "cost_ratio": float(np.mean([r["quantum_a_applications"] / r["n_classifiers"] for r in runs])),
        "low_confidence_rate": _rate(r["low_confidence"] for r in runs),
    }
    if labelled:
        for method in ("classical", "probabilistic", "quantum"):
            out[f"accuracy_{method}"] = _rate(r[f"{method}_answer"] == r["label"] for r in labelled)
    return out


# --- runners -----------------------------------------------------------------


def _segment_label(low: float, high: float, closed: bool) -> str:
    return f"[{low!r}, {high!r}{']' if closed else ')'}"


def run_estimator_sweep(config: ExperimentConfig) -> Report:
    """Run the configured estimator ``reps`` times on a synthetic oracle per grid value."""
    if config.kind != "sweep":
        raise ConfigurationError("run_estimator_sweep needs kind='sweep'")
    est_config = config.estimator_config()
    runs = []
    for i, p in enumerate(config.grid):
        for rep in range(config.reps):
            iterate = synthetic_iterate(p, config.qubits)
            result = estimate(config.estimator, iterate, est_config, run_rng(config.seed, i, rep))
            interval = result.interval
            q = result.queries
            runs.append({
                "index": i,
                "p": p,
                "rep": rep,
                "estimator": config.estimator,
                "point_estimate": result.point_estimate,
                "amplitude_estimate": result.amplitude_estimate,
                "interval_low": interval.low,
                "interval_high": interval.high,
                "interval_closed": interval.closed,
                "segment": _segment_label(interval.low, interval.high, interval.closed),
                "covers_p": p in interval,
                "floor_hit": result.floor_hit,
                "rounds": len(result.transcript),
                "failed_rounds": sum(r.good is False for r in result.transcript),
                "max_iterations": max(r.iterations for r in result.transcript),
                **q.as_dict(),
            })
    return Report("sweep", config.as_dict(), runs)


def resolve_model(config: ExperimentConfig):
    """Model plus the rows to predict on (``None`` rows for a raw ``p`` vector)."""
    dataset = ingest_dataset(config.dataset) if config.dataset else None
    if config.probabilities is not None:
        model = EnsembleModel.from_probabilities(config.probabilities)
    elif config.model:
        model = load_model(config.model)
    elif dataset is not None:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed]))
        model = train_stumps(dataset.X, dataset.y, config.n_stumps, rng)
    else:
        raise ConfigurationError("a comparison needs --model, --dataset or a probability vector")
    if dataset is None:
        if any(isinstance(c, DecisionStump) for c in model.classifiers):
            raise ConfigurationError("a stump model needs --dataset to supply feature rows")
        return model, [(0, None, None)]
    indices = range(len(dataset)) if config.rows is None else config.rows
    rows = []
    for r in indices:
        if not 0 <= r < len(dataset):
            raise ConfigurationError(f"row {r} outside dataset of {len(dataset)} rows")
        rows.append((r, dataset.X[r], int(dataset.y[r])))
    return model, rows


def _answer(value):
    return value.item() if isinstance(value, np.generic) else value


def run_prediction_comparison(config: ExperimentConfig) -> Report:
    """Classical, probabilistic and quantum predictions for each input row."""
    if config.kind != "compare":
        raise ConfigurationError("run_prediction_comparison needs kind='compare'")
    model, rows = resolve_model(config)
    est_config = config.estimator_config()
    n = len(model)
    runs = []
    for row, x, label in rows:
        ps = model.probabilities(x)
        classical = classical_predict(model, x)
        for rep in range(config.reps):
            seq = np.random.SeedSequence([config.seed, row, rep])
            prob_seed, quantum_seed = seq.spawn(2)
            prob = probabilistic_predict(model, x, np.random.default_rng(prob_seed))
            quantum = quantum_predict(model, x, config.estimator, est_config, np.random.default_rng(quantum_seed))
            runs.append({
                "row": row,
                "rep": rep,
                "label": label,
                "n_classifiers": n,
                "soft_mean": float(ps.mean()),
                "classical_answer": _answer(classical.answer),
                "classical_p": classical.p_estimate,
                "classical_evaluations": classical.details["evaluations"],
                "probabilistic_answer": _answer(prob.answer),
                "probabilistic_p": prob.p_estimate,
                "quantum_answer": _answer(quantum.answer),
                "quantum_p": quantum.p_estimate,
                "quantum_interval_low": quantum.interval.low,
                "quantum_interval_high": quantum.interval.high,
                "quantum_a_applications": quantum.queries.a_applications,
                "quantum_a_inverse_applications": quantum.queries.a_inverse_applications,
                "quantum_measurements": quantum.queries.measurements,
                "construction_evaluations": quantum.construction_evaluations,
                "low_confidence": quantum.low_confidence,
            })
    return Report("compare", config.as_dict(), runs)


def run_experiment(config: ExperimentConfig) -> Report:
    if config.kind == "sweep":
        return run_estimator_sweep(config)
    return run_prediction_comparison(config)
