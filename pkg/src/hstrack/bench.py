"""Center-error precision curves."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hypercube import BoundingBox

__all__ = [
    "DEFAULT_THRESHOLDS",
    "PrecisionCurve",
    "center_error",
    "center_errors",
    "precision_curve",
    "mean_precision",
    "write_curve",
]

DEFAULT_THRESHOLDS = tuple(float(t) for t in range(1, 51))


@dataclass(frozen=True)
class PrecisionCurve:
    thresholds: tuple[float, ...]
    precision: tuple[float, ...]
    n_frames: int

    def at(self, threshold: float) -> float:
        for t, p in zip(self.thresholds, self.precision):
            if t == threshold:
                return p
        raise KeyError(f"threshold {threshold} not on the curve's grid")


def center_error(pred: BoundingBox, truth: BoundingBox) -> float:
    (px, py), (tx, ty) = pred.center(), truth.center()
    return math.hypot(px - tx, py - ty)


def center_errors(preds: Sequence[BoundingBox], truths: Sequence[BoundingBox]) -> np.ndarray:
    if len(preds) != len(truths):
        raise ValueError(f"{len(preds)} predictions for {len(truths)} ground-truth boxes")
    if not preds:
        raise ValueError("cannot evaluate an empty sequence")
    return np.array([center_error(p, t) for p, t in zip(preds, truths)])


def precision_curve(
    preds: Sequence[BoundingBox],
    truths: Sequence[BoundingBox],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    include_first: bool = True,
) -> PrecisionCurve:
    """Fraction of frames whose center error is at most each threshold.

    ``include_first=False`` drops frame 0, where the tracker is handed the
    ground truth.
    """
    if not include_first:
        preds, truths = preds[1:], truths[1:]
    errors = center_errors(preds, truths)
    thresholds = tuple(float(t) for t in thresholds)
    precision = tuple(float(np.count_nonzero(errors <= t)) / len(errors) for t in thresholds)
    return PrecisionCurve(thresholds, precision, len(errors))


def mean_precision(curves: Sequence[PrecisionCurve]) -> PrecisionCurve:
    """Per-threshold mean of several curves sharing one grid."""
    if not curves:
        raise ValueError("no curves to average")
    grid = curves[0].thresholds
    for c in curves[1:]:
        if c.thresholds != grid:
            raise ValueError("curves use different threshold grids")
    stacked = np.array([c.precision for c in curves])
    return PrecisionCurve(
        grid,
        tuple(float(v) for v in stacked.mean(axis=0)),
        sum(c.n_frames for c in curves),
    )


def write_curve(path, curve: PrecisionCurve) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold", "precision"])
        for t, p in zip(curve.thresholds, curve.precision):
            writer.writerow([f"{t:g}", f"{p:.6f}"])
