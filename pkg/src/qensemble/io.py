"""Dataset ingestion and model (de)serialization."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ensemble import DecisionStump, EnsembleModel, FixedProbability
from .exceptions import DomainError, IngestionError

MODEL_FORMAT_VERSION = 1
LABELS = (1, 2)


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.y)


def ingest_dataset(path) -> Dataset:
    """Read a CSV with a header row; the last column is a label in {1, 2}.

    Errors name the 1-based file line and the column header.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IngestionError(f"{path}: cannot read ({exc.strerror})") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise IngestionError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise IngestionError(f"{path}: need at least one feature column and a label column")

    features, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise IngestionError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        values = []
        for col, cell in zip(header, row):
            cell = cell.strip()
            if cell == "":
                raise IngestionError(f"{path}:{lineno}: missing value in column {col!r}")
            try:
                value = float(cell)
            except ValueError:
                raise IngestionError(f"{path}:{lineno}: non-numeric value {cell!r} in column {col!r}") from None
            if not math.isfinite(value):
                raise IngestionError(f"{path}:{lineno}: non-finite value {cell!r} in column {col!r}")
            values.append(value)
        label = values.pop()
        if label not in LABELS:
            raise IngestionError(f"{path}:{lineno}: label {row[-1].strip()!r} in column {header[-1]!r} is not 1 or 2")
        features.append(values)
        labels.append(int(label))
    if not labels:
        raise IngestionError(f"{path}: no data rows")
    return Dataset(np.array(features, dtype=float), np.array(labels, dtype=int), tuple(header[:-1]))


def model_to_dict(model: EnsembleModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "class_labels": [_plain(c) for c in model.class_labels],
        "classifiers": [c.to_dict() for c in model.classifiers],
    }


def _plain(value):
    return value.item() if isinstance(value, np.generic) else value


def model_from_dict(doc: dict, source: str = "<model>") -> EnsembleModel:
    """Inverse of :func:`model_to_dict`.

    A bare ``{"probabilities": [...]}`` document is also accepted.
    """
    if not isinstance(doc, dict):
        raise IngestionError(f"{source}: model document must be a JSON object")
    try:
        if "probabilities" in doc and "classifiers" not in doc:
            return EnsembleModel.from_probabilities([float(p) for p in doc["probabilities"]])
        if doc.get("version") != MODEL_FORMAT_VERSION:
            raise IngestionError(f"{source}: unsupported model version {doc.get('version')!r}")
        items = []
        for i, entry in enumerate(doc["classifiers"]):
            kind = entry.get("type")
            if kind == "fixed":
                items.append(FixedProbability(float(entry["p"])))
            elif kind == "stump":
                items.append(DecisionStump(
                    int(entry["feature"]), float(entry["threshold"]),
                    float(entry["left_p"]), float(entry["right_p"]),
                ))
            else:
                raise IngestionError(f"{source}: classifier {i} has unknown type {kind!r}")
        labels = tuple(doc.get("class_labels", LABELS))
        return EnsembleModel(tuple(items), labels)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, IngestionError):
            raise
        raise IngestionError(f"{source}: malformed model ({exc})") from exc


def save_model(model: EnsembleModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n")


def load_model(path) -> EnsembleModel:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise IngestionError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    return model_from_dict(doc, str(path))


def parse_probabilities(text: str) -> EnsembleModel:
    """Model from a comma-separated ``p_i`` list such as ``"0.9,0.1,0.3"``."""
    try:
        ps = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise IngestionError(f"cannot parse probability list {text!r}") from exc
    if not ps:
        raise IngestionError("probability list is empty")
    try:
        return EnsembleModel.from_probabilities(ps)
    except DomainError as exc:
        raise IngestionError(str(exc)) from exc
