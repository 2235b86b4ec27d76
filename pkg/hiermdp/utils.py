# hiermdp/utils.py
# Utility functions
# - Deterministic tie-breaking argmax
# - Artifact writers (JSON documents, CSV tables)
# - Small numeric helpers

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, Iterable, Sequence

import numpy as np
from pydantic import BaseModel

from hiermdp.config import TIE_TOLERANCE

logger = logging.getLogger(__name__)


def argmax_first(values: np.ndarray, axis: int = 0, tol: float = TIE_TOLERANCE) -> np.ndarray:
    """
    Index of the first entry along `axis` within `tol` of the maximum

    Candidates are assumed to be listed in their tie-breaking order, so the
    smallest index wins among (numerically) equal values.

    Args:
        values: Candidate values; -inf marks infeasible candidates
        axis: Axis holding the candidates
        tol: Absolute tie tolerance

    Returns:
        Integer array with `axis` removed
    """
    best = np.max(values, axis=axis, keepdims=True)
    return np.argmax(values >= best - tol, axis=axis)


def sup_norm(a: np.ndarray, b: np.ndarray | None = None) -> float:
    """Sup-norm of a, or of a - b"""
    diff = np.asarray(a, dtype=float) if b is None else np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.size == 0:
        return 0.0
    return float(np.max(np.abs(diff)))


def format_vector(values: Iterable[float], digits: int = 4) -> str:
    """Render a vector as [v0, v1, ...] with fixed precision"""
    return "[" + ", ".join(f"{float(v):.{digits}f}" for v in values) + "]"


def write_json(path: Path, document: BaseModel) -> Path:
    """
    Write a pydantic document as UTF-8 JSON

    Args:
        path: Target file (parent directories are created)
        document: Any pydantic model

    Returns:
        The written path
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("[Artifacts] Wrote %s", path)
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV table with a fixed column order"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    logger.info("[Artifacts] Wrote %s", path)
    return path


def stream_csv_file(path: Path) -> Iterator[Dict[str, str]]:
    """
    Stream a CSV artifact row by row

    Yields:
        Dict for each row with CSV headers as keys
    """
    with open(path, "r", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            yield row
