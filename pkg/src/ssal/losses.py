"""Scalar evaluators for the detector, self-training, and adversarial loss
formulas. No gradients; these exist for testing and reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .geometry import Box, iou


@dataclass(frozen=True)
class LocationPrediction:
    """Per-location prediction with optional supervision target.

    ``class_probs`` holds probabilities for classes 1..C; positives carry a
    target class and box. For negatives the model's implied probability of
    "no object" is 1 - max(class_probs).
    """

    class_probs: tuple[float, ...]
    box: Box
    is_positive: bool = False
    target_class: int | None = None
    target_box: Box | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_probs", tuple(self.class_probs))
        if not self.class_probs:
            raise ValueError("class_probs must be non-empty")
        for p in self.class_probs:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"class probability out of [0, 1]: {p}")
        if self.is_positive:
            if self.target_class is None or not (
                1 <= self.target_class <= len(self.class_probs)
            ):
                raise ValueError("positive location needs a valid target_class")
            if self.target_box is None:
                raise ValueError("positive location needs a target_box")

    def p_true(self) -> float:
        """Probability assigned to the true outcome at this location."""
        if self.is_positive:
            return self.class_probs[self.target_class - 1]
        return 1.0 - max(self.class_probs)


@dataclass(frozen=True)
class DomainMap:
    """Discriminator output grid with its domain label (1 = source)."""

    grid: tuple[tuple[float, ...], ...]
    domain_label: int

    def __post_init__(self) -> None:
        grid = tuple(tuple(row) for row in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid or not grid[0]:
            raise ValueError("grid must be non-empty")
        width = len(grid[0])
        for row in grid:
            if len(row) != width:
                raise ValueError("grid rows must have equal length")
            for v in row:
                if not (0.0 < v < 1.0):
                    raise ValueError(f"grid entry out of (0, 1): {v}")
        if self.domain_label not in (0, 1):
            raise ValueError(f"domain_label must be 0 or 1, got {self.domain_label}")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.grid), len(self.grid[0])


def focal_loss(p_t: float, alpha: float = 0.25, gamma_f: float = 2.0) -> float:
    """Focal term -alpha * (1 - p_t)^gamma_f * ln(p_t) for p_t in (0, 1)."""
    if not (0.0 < p_t < 1.0):
        raise ValueError(f"p_t must be in (0, 1), got {p_t}")
    return -alpha * (1.0 - p_t) ** gamma_f * math.log(p_t)


def iou_loss(pred: Box, target: Box) -> float:
    """-ln(IoU) of two overlapping boxes; disjoint boxes are an error since
    the loss would be infinite."""
    v = iou(pred, target)
    if v <= 0.0:
        raise ValueError("boxes do not overlap: IoU loss is infinite")
    return -math.log(v)


def _positive_terms(preds: Sequence[LocationPrediction],
                    alpha: float, gamma_f: float) -> tuple[float, float, int]:
    cls_sum = 0.0
    box_sum = 0.0
    n_pos = 0
    for loc in preds:
        if loc.is_positive:
            n_pos += 1
            cls_sum += focal_loss(loc.p_true(), alpha, gamma_f)
            box_sum += iou_loss(loc.box, loc.target_box)
    return cls_sum, box_sum, n_pos


def detection_loss(
    preds: Sequence[LocationPrediction],
    alpha: float = 0.25,
    gamma_f: float = 2.0,
) -> float:
    """Detector loss: classification over all locations plus box regression
    over positives, both normalized by the positive count."""
    pos_cls, box_sum, n_pos = _positive_terms(preds, alpha, gamma_f)
    if n_pos == 0:
        raise ValueError("detection loss undefined without positive locations")
    cls_sum = pos_cls + math.fsum(
        focal_loss(loc.p_true(), alpha, gamma_f)
        for loc in preds
        if not loc.is_positive
    )
    return (cls_sum + box_sum) / n_pos


def pseudo_label_loss(
    preds: Sequence[LocationPrediction],
    alpha: float = 0.25,
    gamma_f: float = 2.0,
) -> float:
    """Self-training loss: both terms carry the pseudo-label indicator, so
    only labelled locations contribute."""
    cls_sum, box_sum, n_pos = _positive_terms(preds, alpha, gamma_f)
    if n_pos == 0:
        raise ValueError("pseudo-label loss undefined without labelled locations")
    return (cls_sum + box_sum) / n_pos


def _bce(m: DomainMap) -> float:
    q = m.domain_label
    return -math.fsum(
        q * math.log(v) + (1 - q) * math.log(1.0 - v)
        for row in m.grid
        for v in row
    )


def domain_adv_loss(src: DomainMap, tgt: DomainMap) -> float:
    """Binary cross-entropy of the domain discriminator over both maps,
    each scored against its own domain label (source convention q = 1)."""
    if src.shape != tgt.shape:
        raise ValueError(f"shape mismatch: {src.shape} vs {tgt.shape}")
    return _bce(src) + _bce(tgt)
