"""Detection-level expected calibration error and reliability histograms.

Localization quality enters through the match criterion: a detection is
"correct" when it matches a ground truth of the same class at or above the
IoU threshold. Binning is over confidence only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .evaluation import GroundTruth, ScoredBox
from .geometry import iou


@dataclass(frozen=True)
class MatchedDetection:
    """A detection's confidence and whether it was matched correctly."""

    confidence: float
    correct: bool

    def __post_init__(self) -> None:
        if not (0.0 < self.confidence <= 1.0):
            raise ValueError(f"confidence must be in (0, 1], got {self.confidence}")


@dataclass(frozen=True)
class CalibrationBin:
    lower: float
    upper: float
    count: int
    mean_confidence: float | None
    accuracy: float | None


@dataclass(frozen=True)
class CalibrationReport:
    ece: float
    bins: tuple[CalibrationBin, ...]
    total: int


class CalibrationAccumulator:
    """Mergeable per-bin tallies; bins partition (0, 1] with equal width."""

    def __init__(self, n_bins: int = 10) -> None:
        if n_bins < 1:
            raise ValueError(f"n_bins must be >= 1, got {n_bins}")
        self.n_bins = n_bins
        self.counts = [0] * n_bins
        self.conf_sums = [0.0] * n_bins
        self.correct_sums = [0] * n_bins

    def add(self, confidence: float, correct: bool) -> None:
        if not (0.0 < confidence <= 1.0):
            raise ValueError(f"confidence must be in (0, 1], got {confidence}")
        idx = min(self.n_bins - 1, max(0, math.ceil(confidence * self.n_bins) - 1))
        self.counts[idx] += 1
        self.conf_sums[idx] += confidence
        self.correct_sums[idx] += int(correct)

    def merge(self, other: "CalibrationAccumulator") -> None:
        if other.n_bins != self.n_bins:
            raise ValueError("cannot merge accumulators with different binning")
        for i in range(self.n_bins):
            self.counts[i] += other.counts[i]
            self.conf_sums[i] += other.conf_sums[i]
            self.correct_sums[i] += other.correct_sums[i]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def report(self) -> CalibrationReport:
        total = self.total
        if total == 0:
            raise ValueError("cannot compute calibration of an empty set")
        bins = []
        gap_terms = []
        for i in range(self.n_bins):
            lo = i / self.n_bins
            hi = (i + 1) / self.n_bins
            n = self.counts[i]
            if n == 0:
                bins.append(CalibrationBin(lo, hi, 0, None, None))
                continue
            mean_conf = self.conf_sums[i] / n
            acc = self.correct_sums[i] / n
            bins.append(CalibrationBin(lo, hi, n, mean_conf, acc))
            gap_terms.append(n / total * abs(acc - mean_conf))
        return CalibrationReport(
            ece=math.fsum(gap_terms), bins=tuple(bins), total=total
        )


def match_for_calibration(
    dets: Sequence[ScoredBox],
    gts: Sequence[GroundTruth],
    iou_match: float = 0.5,
) -> list[MatchedDetection]:
    """Greedy one-to-one matching in descending confidence for one image."""
    order = sorted(
        range(len(dets)),
        key=lambda i: (
            -dets[i].score,
            dets[i].box.as_tuple(),
            dets[i].class_id,
        ),
    )
    taken = [False] * len(gts)
    out: list[MatchedDetection | None] = [None] * len(dets)
    for i in order:
        det = dets[i]
        best_j = -1
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if taken[j] or gt.class_id != det.class_id:
                continue
            v = iou(det.box, gt.box)
            if v < iou_match:
                continue
            if best_j < 0 or v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            taken[best_j] = True
        out[i] = MatchedDetection(det.score, best_j >= 0)
    return [m for m in out if m is not None]


def ece(matched: Sequence[MatchedDetection], n_bins: int = 10) -> CalibrationReport:
    """Expected calibration error over equal-width confidence bins on (0, 1]."""
    if not matched:
        raise ValueError("cannot compute calibration of an empty set")
    acc = CalibrationAccumulator(n_bins)
    for m in matched:
        acc.add(m.confidence, m.correct)
    return acc.report()


def ece_of_subset(
    matched: Sequence[MatchedDetection],
    selector: Callable[[MatchedDetection], bool] | Sequence[bool],
    n_bins: int = 10,
) -> tuple[float, float | None]:
    """ECE of the full set and of a selected subset.

    ``selector`` is a predicate or a parallel boolean mask. An empty subset
    reports None, not zero.
    """
    if callable(selector):
        mask = [bool(selector(m)) for m in matched]
    else:
        mask = [bool(s) for s in selector]
        if len(mask) != len(matched):
            raise ValueError("selector mask length does not match detections")
    full = ece(matched, n_bins).ece
    subset = [m for m, keep in zip(matched, mask) if keep]
    if not subset:
        return full, None
    return full, ece(subset, n_bins).ece
